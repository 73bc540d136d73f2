"""Prototype selection: subsets of the training data kept as the reference set.

Covers condensing (Hart's CNN), Wilson editing (ENN), their hybrid,
criterion-driven random editing, exhaustive criterion search and an exact
minimal-consistent-subset oracle.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .core import EUCLIDEAN, Dataset, Metric
from .errors import CapacityError, EmptyResultError, InfeasibleError, InvalidInputError
from .nn import ReferenceSet, knn_vote, nearest_labels
from .splits import fold_assignment

logger = logging.getLogger(__name__)

DEFAULT_CAP = 2 ** 20
_J_DECIMALS = 12


def check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise InvalidInputError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


@dataclass(frozen=True)
class EditingParams:
    """Knobs for editing and criterion-driven selection.

    Attributes:
        lam: trade-off between error and retained fraction, in [0, 1].
        T: number of random candidate subsets (random editing).
        k: neighbourhood size for Wilson editing.
        seed: 64-bit seed.
        cv_folds: folds for exhaustive search; ``None`` means leave-one-out.
    """

    lam: float = 0.5
    T: int = 100
    k: int = 3
    seed: int = 0
    cv_folds: int | None = None

    def __post_init__(self):
        if not 0 <= self.lam <= 1:
            raise InvalidInputError(f"lambda must be in [0, 1], got {self.lam}")
        if self.T < 1:
            raise InvalidInputError(f"T must be >= 1, got {self.T}")
        if self.k < 1:
            raise InvalidInputError(f"k must be >= 1, got {self.k}")
        if self.cv_folds is not None and self.cv_folds < 2:
            raise InvalidInputError(f"cv_folds must be >= 2, got {self.cv_folds}")
        check_seed(self.seed)


def criterion_j(error: float, size: int, N: int, lam: float) -> float:
    """``lam * error + (1 - lam) * size / N``."""
    if not 0 <= lam <= 1:
        raise InvalidInputError(f"lambda must be in [0, 1], got {lam}")
    if N < 1 or size < 0 or size > N:
        raise InvalidInputError(f"need 0 <= size <= N and N >= 1, got size={size}, N={N}")
    return lam * error + (1 - lam) * size / N


# -- condensing -------------------------------------------------------------

def cnn_store(dist: np.ndarray, labels: np.ndarray, rng: np.random.Generator) -> list[int]:
    """Hart's condensing on a precomputed distance matrix.

    Returns STORE in insertion order. STORE is updated immediately, so a
    point added mid-pass already takes part in the next check.
    """
    N = len(labels)
    grabbag = rng.permutation(N)
    store = [int(grabbag[0])]
    grabbag = [int(i) for i in grabbag[1:]]
    moved = True
    while moved and grabbag:
        moved = False
        order = [grabbag[i] for i in rng.permutation(len(grabbag))]
        for g in order:
            d = dist[g, store]
            pred = labels[store][d == d.min()].min()
            if pred != labels[g]:
                store.append(g)
                grabbag.remove(g)
                moved = True
    return store


def cnn(dataset: Dataset, seed: int = 0, metric: Metric = EUCLIDEAN) -> ReferenceSet:
    dataset.require_labelled()
    rng = np.random.default_rng(check_seed(seed))
    store = cnn_store(metric.pairwise(dataset.features, dataset.features), dataset.labels, rng)
    return ReferenceSet.select(dataset, sorted(store))


# -- editing ----------------------------------------------------------------

def enn_marks(dataset: Dataset, k: int = 3, metric: Metric = EUCLIDEAN) -> np.ndarray:
    """Boolean deletion marks: True where the k nearest other points outvote the label."""
    dataset.require_labelled()
    N = dataset.N
    if N <= k:
        raise InvalidInputError(f"Wilson editing needs N > k, got N={N}, k={k}")
    dist = metric.pairwise(dataset.features, dataset.features)
    np.fill_diagonal(dist, np.inf)
    c = dataset.n_categories
    votes = np.array([knn_vote(dist[i], dataset.labels, k, c) for i in range(N)])
    return votes != dataset.labels


def enn(dataset: Dataset, k: int = 3, metric: Metric = EUCLIDEAN) -> ReferenceSet:
    """Wilson editing: mark every point first, then delete all marked points."""
    marks = enn_marks(dataset, k, metric)
    keep = np.flatnonzero(~marks)
    if keep.size == 0:
        raise EmptyResultError(f"Wilson editing with k={k} marked every point for deletion")
    return ReferenceSet.select(dataset, keep)


def hybrid_enn_cnn(dataset: Dataset, k: int = 3, seed: int = 0,
                   metric: Metric = EUCLIDEAN) -> ReferenceSet:
    """Border cleaning (ENN) followed by redundancy reduction (CNN)."""
    edited = enn(dataset, k, metric)
    kept = np.asarray(edited.source_indices)
    condensed = cnn(dataset.subset(kept), seed, metric)
    return ReferenceSet.select(dataset, sorted(int(kept[i]) for i in condensed.source_indices))


# -- criterion-driven search ------------------------------------------------

@dataclass(frozen=True)
class Candidate:
    indices: tuple[int, ...]
    error: float
    J: float


def random_editing_candidates(train: Dataset, validation: Dataset, params: EditingParams,
                              metric: Metric = EUCLIDEAN) -> list[Candidate]:
    """The T scored candidates drawn by random editing, in draw order."""
    train.require_labelled()
    validation = validation.labelled()
    if validation.N == 0:
        raise InvalidInputError("random editing needs a non-empty validation set")
    if train.categories != validation.categories:
        raise InvalidInputError("train and validation sets use different categories")
    rng = np.random.default_rng(params.seed)
    N = train.N
    dist = metric.pairwise(validation.features, train.features)
    out = []
    for t in range(params.T):
        size = int(rng.integers(1, N + 1))
        idx = np.sort(rng.choice(N, size=size, replace=False))
        pred = nearest_labels(dist[:, idx], train.labels[idx])
        err = float(np.mean(pred != validation.labels))
        cand = Candidate(tuple(int(i) for i in idx), err, criterion_j(err, size, N, params.lam))
        logger.debug("random editing candidate %d: |S|=%d E=%.6f J=%.6f", t, size, err, cand.J)
        out.append(cand)
    return out


def random_editing(train: Dataset, validation: Dataset, params: EditingParams,
                   metric: Metric = EUCLIDEAN) -> ReferenceSet:
    """Best of T random subsets by the criterion J; earliest wins ties."""
    cands = random_editing_candidates(train, validation, params, metric)
    best = min(range(len(cands)), key=lambda i: (round(cands[i].J, _J_DECIMALS), i))
    return ReferenceSet.select(train, cands[best].indices)


def _mask_batches(N, batch=4096):
    bits = np.arange(N, dtype=np.int64)
    total = 2 ** N
    for start in range(1, total, batch):
        codes = np.arange(start, min(start + batch, total), dtype=np.int64)
        yield ((codes[:, None] >> bits[None, :]) & 1).astype(bool)


def cv_errors(masks: np.ndarray, dist: np.ndarray, labels: np.ndarray,
              fold: np.ndarray) -> np.ndarray:
    """Cross-validated 1-NN error counts for a batch of subset masks.

    Each point is classified by the members of the subset that lie outside
    its own fold; a point with no such member counts as an error.
    """
    allowed = fold[:, None] != fold[None, :]
    ref = masks[:, None, :] & allowed[None, :, :]
    d = np.where(ref, dist[None, :, :], np.inf)
    dmin = d.min(axis=2, keepdims=True)
    big = np.iinfo(np.int64).max
    tied = np.where(ref & (d == dmin), labels[None, None, :], big)
    pred = tied.min(axis=2)
    return (pred != labels[None, :]).sum(axis=1)


def exhaustive_select(dataset: Dataset, params: EditingParams = EditingParams(),
                      metric: Metric = EUCLIDEAN, cap: int = DEFAULT_CAP) -> ReferenceSet:
    """Exhaustive search over every non-empty subset for the minimum of J.

    E(S) is the cross-validated 1-NN error of S. Ties go to the smaller
    subset, then the lower error, then enumeration order (subset bitmask
    with bit i standing for point i).
    """
    dataset.require_labelled()
    N = dataset.N
    if 2 ** N > cap:
        raise CapacityError(2 ** N, cap, "subsets")
    if N == 1:
        return ReferenceSet.select(dataset, [0])
    folds = N if params.cv_folds is None else params.cv_folds
    fold, _ = fold_assignment(dataset.labels, folds, params.seed)
    dist = metric.pairwise(dataset.features, dataset.features)
    errors, sizes = [], []
    for masks in _mask_batches(N):
        errors.append(cv_errors(masks, dist, dataset.labels, fold))
        sizes.append(masks.sum(axis=1))
    errors = np.concatenate(errors)
    sizes = np.concatenate(sizes)
    J = np.round(params.lam * errors / N + (1 - params.lam) * sizes / N, _J_DECIMALS)
    order = np.arange(len(J))
    best = int(np.lexsort((order, errors, sizes, J))[0])
    code = best + 1
    return ReferenceSet.select(dataset, [i for i in range(N) if code >> i & 1])


def minimal_consistent_oracle(dataset: Dataset, cap: int = DEFAULT_CAP,
                              metric: Metric = EUCLIDEAN) -> ReferenceSet:
    """Smallest consistent subset by size-ordered exhaustive search.

    Subsets of equal size are tried in lexicographic order of their sorted
    indices; the first consistent one is returned.
    """
    dataset.require_labelled()
    N = dataset.N
    if 2 ** N > cap:
        raise CapacityError(2 ** N, cap, "subsets")
    dist = metric.pairwise(dataset.features, dataset.features)
    labels = dataset.labels
    if np.any(nearest_labels(dist, labels) != labels):
        raise InfeasibleError("no consistent subset exists: coincident points carry different labels")
    for size in range(1, N + 1):
        combos_iter = itertools.combinations(range(N), size)
        while True:
            chunk = list(itertools.islice(combos_iter, 8192))
            if not chunk:
                break
            combos = np.array(chunk, dtype=np.int64)
            d = dist[:, combos].transpose(1, 0, 2)
            dmin = d.min(axis=2, keepdims=True)
            ref_labels = labels[combos][:, None, :]
            pred = np.where(d == dmin, ref_labels, np.iinfo(np.int64).max).min(axis=2)
            ok = np.flatnonzero(np.all(pred == labels[None, :], axis=1))
            if ok.size:
                return ReferenceSet.select(dataset, chunk[int(ok[0])])
    raise InfeasibleError("no consistent subset found")  # unreachable when X itself is consistent
