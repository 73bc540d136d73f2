"""Categorisation models from cognitive psychology as reference-set builders.

Each model returns a ``ReferenceSet`` that the nearest-neighbour rule in
``refsel.nn`` can use directly, so psychological models and machine
learning selection methods run through the same evaluation code:

    =============================  ==================================
    model                          machine-learning counterpart
    =============================  ==================================
    pure exemplar                  1-NN on all of X
    pure prototype                 nearest mean classifier
    RMC                            incremental clustering, post-supervised
    REX                            k-means, post-supervised
    SUSTAIN                        CNN / LVQ hybrid
    VAM                            exhaustive within-category partitioning
    Rex Leopold I                  exhaustive criterion search, lambda = 1
    =============================  ==================================
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .core import EUCLIDEAN, Dataset, Metric, SimilarityParams, similarity
from .errors import CapacityError, InvalidInputError
from .nn import ReferenceSet, nearest_labels, training_accuracy
from .replacement import (ClusteringParams, _majority, _require_real_metric,
                          cluster_post_supervised, nearest_mean_prototypes)
from .selection import DEFAULT_CAP, EditingParams, check_seed, exhaustive_select

VAM_DEFAULT_CAP = 10 ** 6


@dataclass(frozen=True)
class RmcParams:
    """``seed=None`` presents stimuli in dataset order; an integer shuffles them."""

    coupling: float = 0.5
    label_weight: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        if not 0 < self.coupling < 1:
            raise InvalidInputError(f"coupling must be in (0, 1), got {self.coupling}")
        if not self.label_weight >= 0:
            raise InvalidInputError(f"label_weight must be non-negative, got {self.label_weight}")
        if self.seed is not None:
            check_seed(self.seed)


@dataclass(frozen=True)
class SustainParams:
    learning_rate: float = 0.1
    epochs: int = 10
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if not 0 < self.learning_rate <= 1:
            raise InvalidInputError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.epochs < 1:
            raise InvalidInputError(f"epochs must be >= 1, got {self.epochs}")
        check_seed(self.seed)


def pure_exemplar(dataset: Dataset) -> ReferenceSet:
    dataset.require_labelled()
    return ReferenceSet.select(dataset, range(dataset.N))


def pure_prototype(dataset: Dataset) -> ReferenceSet:
    return nearest_mean_prototypes(dataset)


def rex(dataset: Dataset, params: ClusteringParams = ClusteringParams(),
        metric: Metric = EUCLIDEAN) -> ReferenceSet:
    return cluster_post_supervised(dataset, params, metric)


def rex_leopold_i(dataset: Dataset, cv_folds: int | None = None, cap: int = DEFAULT_CAP,
                  metric: Metric = EUCLIDEAN, seed: int = 0) -> ReferenceSet:
    """Exhaustive subset search scored by cross-validated accuracy alone."""
    return exhaustive_select(dataset, EditingParams(lam=1.0, seed=seed, cv_folds=cv_folds),
                             metric, cap)


# -- RMC --------------------------------------------------------------------

def rmc(dataset: Dataset, params: RmcParams = RmcParams(), metric: Metric = EUCLIDEAN,
        order: Sequence[int] | None = None) -> ReferenceSet:
    """Incremental similarity-threshold clustering with labels as an extra attribute.

    Each stimulus is extended with a one-hot label block scaled by
    ``label_weight``. It joins the most similar cluster mean
    (``exp(-distance)``) unless that similarity falls below ``coupling``, in
    which case it opens a new cluster. Prototypes are the cluster means with
    the label block dropped, labelled by member majority.

    Args:
        order: explicit presentation order; overrides ``params.seed``.
    """
    dataset.require_labelled()
    _require_real_metric(metric, "RMC")
    N, n, c = dataset.N, dataset.n_features, dataset.n_categories
    onehot = np.zeros((N, c))
    onehot[np.arange(N), dataset.labels] = params.label_weight
    aug = np.hstack([dataset.features, onehot])
    aug_metric = metric.extended(c)
    if order is None:
        order = (range(N) if params.seed is None
                 else np.random.default_rng(params.seed).permutation(N))
    order = [int(i) for i in order]
    if sorted(order) != list(range(N)):
        raise InvalidInputError("order must be a permutation of the dataset indices")

    sums: list[np.ndarray] = []
    counts: list[int] = []
    members: list[list[int]] = []
    unit = SimilarityParams(1.0)
    for i in order:
        x = aug[i]
        if sums:
            means = np.array(sums) / np.array(counts)[:, None]
            sims = similarity(aug_metric.pairwise(x[None, :], means)[0], unit)
            best = int(np.argmax(sims))
            if sims[best] >= params.coupling:
                sums[best] = sums[best] + x
                counts[best] += 1
                members[best].append(i)
                continue
        sums.append(x.copy())
        counts.append(1)
        members.append([i])

    protos = np.array([s[:n] / k for s, k in zip(sums, counts)])
    labels = [_majority(dataset.labels[m], c) for m in members]
    return ReferenceSet.generated(protos, labels, dataset.categories)


# -- SUSTAIN ----------------------------------------------------------------

def sustain_trace(dataset: Dataset, params: SustainParams = SustainParams(),
                  metric: Metric = EUCLIDEAN) -> tuple[ReferenceSet, list[int]]:
    """Run supervised SUSTAIN and also return the cluster count after each step."""
    dataset.require_labelled()
    _require_real_metric(metric, "SUSTAIN")
    rng = np.random.default_rng(params.seed)
    centres: list[np.ndarray] = []
    labels: list[int] = []
    history = []
    for _ in range(params.epochs):
        order = rng.permutation(dataset.N) if params.shuffle else np.arange(dataset.N)
        for i in order:
            x, y = dataset.features[i], int(dataset.labels[i])
            if centres:
                C = np.array(centres)
                d = metric.pairwise(x[None, :], C)
                lab = np.array(labels)
                pred = int(nearest_labels(d, lab)[0])
                if pred == y:
                    tied = np.flatnonzero((d[0] == d[0].min()) & (lab == pred))
                    w = int(tied[0])
                    centres[w] = centres[w] + params.learning_rate * (x - centres[w])
                    history.append(len(centres))
                    continue
            centres.append(x.astype(float).copy())
            labels.append(y)
            history.append(len(centres))
    return ReferenceSet.generated(np.array(centres), labels, dataset.categories), history


def sustain(dataset: Dataset, params: SustainParams = SustainParams(),
            metric: Metric = EUCLIDEAN) -> ReferenceSet:
    """Error-driven clustering: a misclassified stimulus opens a new cluster,
    a correctly classified one pulls the winning centre toward itself."""
    return sustain_trace(dataset, params, metric)[0]


# -- VAM --------------------------------------------------------------------

def bell_number(n: int) -> int:
    """Bell number via the Bell triangle."""
    if n < 0:
        raise InvalidInputError("n must be non-negative")
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def set_partitions(items: Sequence) -> Iterator[tuple[tuple, ...]]:
    """All set partitions of ``items``, in lexicographic order of their
    restricted growth strings: one block first, all singletons last."""
    items = list(items)
    n = len(items)
    if n == 0:
        yield ()
        return
    growth = [0] * n

    def rec(i, top):
        if i == n:
            blocks = [[] for _ in range(top + 1)]
            for item, b in zip(items, growth):
                blocks[b].append(item)
            yield tuple(tuple(b) for b in blocks)
            return
        for v in range(top + 2):
            growth[i] = v
            yield from rec(i + 1, max(top, v))

    yield from rec(1, 0)


Partition = tuple[tuple[tuple[int, ...], ...], ...]
Criterion = Callable[[Dataset, Partition, ReferenceSet, Metric], float]


@dataclass(frozen=True)
class PartitionRecord:
    """One VAM representation.

    ``partition[c]`` lists the blocks of dataset indices for category ``c``;
    ``refset`` holds one centroid per block in the same order.
    """

    partition: Partition
    refset: ReferenceSet
    score: float

    @property
    def n_blocks(self) -> int:
        return sum(len(blocks) for blocks in self.partition)

    def is_pure_prototype(self) -> bool:
        return all(len(blocks) == 1 for blocks in self.partition)

    def is_pure_exemplar(self) -> bool:
        return all(len(b) == 1 for blocks in self.partition for b in blocks)


def partition_refset(dataset: Dataset, partition: Partition) -> ReferenceSet:
    feats, labels = [], []
    for ci, blocks in enumerate(partition):
        for block in blocks:
            feats.append(dataset.features[list(block)].mean(axis=0))
            labels.append(ci)
    return ReferenceSet.generated(np.array(feats), labels, dataset.categories)


def loo_partition_accuracy(dataset: Dataset, partition: Partition, refset: ReferenceSet,
                           metric: Metric = EUCLIDEAN) -> float:
    """Leave-one-out 1-NN accuracy of a partition representation.

    The held-out stimulus is removed from its block and that block's centroid
    is recomputed from the remaining members; a block left empty disappears.
    """
    X = dataset.features
    N = dataset.N
    block_of = np.empty(N, dtype=np.int64)
    sizes, sums = [], []
    b = 0
    for blocks in partition:
        for block in blocks:
            block_of[list(block)] = b
            sizes.append(len(block))
            sums.append(X[list(block)].sum(axis=0))
            b += 1
    sizes = np.array(sizes)
    sums = np.array(sums)
    D = metric.pairwise(X, refset.features)
    own_size = sizes[block_of]
    rows = np.arange(N)
    loo_d = np.full(N, np.inf)
    multi = own_size > 1
    if np.any(multi):
        loo_c = (sums[block_of[multi]] - X[multi]) / (own_size[multi] - 1)[:, None]
        loo_d[multi] = np.diagonal(metric.pairwise(X[multi], loo_c))
    D[rows, block_of] = loo_d
    pred = nearest_labels(D, refset.labels)
    pred[np.isinf(D.min(axis=1))] = -1
    return float(np.mean(pred == dataset.labels))


def resubstitution_accuracy(dataset: Dataset, partition: Partition, refset: ReferenceSet,
                            metric: Metric = EUCLIDEAN) -> float:
    """1-NN accuracy of the full representation on the stimuli that built it."""
    return training_accuracy(refset, dataset, metric)


def vam_count(dataset: Dataset) -> int:
    return math.prod(bell_number(int(n)) for n in dataset.category_counts())


def vam_enumerate(dataset: Dataset, metric: Metric = EUCLIDEAN,
                  criterion: Criterion | None = None,
                  cap: int = VAM_DEFAULT_CAP) -> list[PartitionRecord]:
    """Score every within-category partitioning of the training stimuli.

    Records follow the Cartesian product of per-category partitions (first
    category varying slowest). The default criterion is
    ``loo_partition_accuracy``.
    """
    dataset.require_labelled()
    _require_real_metric(metric, "VAM")
    total = vam_count(dataset)
    if total > cap:
        raise CapacityError(total, cap, "partitions")
    criterion = criterion or loo_partition_accuracy
    per_category = [list(set_partitions(np.flatnonzero(dataset.labels == ci).tolist()))
                    for ci in range(dataset.n_categories)]
    records = []
    for partition in itertools.product(*per_category):
        refset = partition_refset(dataset, partition)
        records.append(PartitionRecord(partition, refset,
                                       float(criterion(dataset, partition, refset, metric))))
    return records


def vam_best(dataset: Dataset, metric: Metric = EUCLIDEAN, criterion: Criterion | None = None,
             cap: int = VAM_DEFAULT_CAP) -> PartitionRecord:
    """Highest-scoring record; ties go to fewer blocks, then enumeration order."""
    records = vam_enumerate(dataset, metric, criterion, cap)
    best = min(range(len(records)),
               key=lambda i: (-records[i].score, records[i].n_blocks, i))
    return records[best]
