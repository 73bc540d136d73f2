"""Prototype generation: reference points that need not belong to X.

Centroid-based methods (nearest mean, k-means pre/post-supervised), a
spherical Gaussian mixture fitted by EM, and LVQ1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import EUCLIDEAN, Dataset, Metric
from .errors import InvalidInputError, NumericError
from .nn import ReferenceSet
from .selection import check_seed


@dataclass(frozen=True)
class ClusteringParams:
    k: int = 2
    max_iter: int = 100
    tol: float = 1e-6
    seed: int = 0
    variance_floor: float = 1e-6

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInputError(f"k must be >= 1, got {self.k}")
        if self.max_iter < 1:
            raise InvalidInputError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.tol > 0:
            raise InvalidInputError(f"tol must be positive, got {self.tol}")
        if not self.variance_floor > 0:
            raise InvalidInputError(f"variance_floor must be positive, got {self.variance_floor}")
        check_seed(self.seed)


@dataclass(frozen=True)
class LvqParams:
    prototypes_per_category: int = 1
    alpha0: float = 0.3
    epochs: int = 30
    seed: int = 0

    def __post_init__(self):
        # alpha0 == 0 is accepted as the no-op schedule
        if not 0 <= self.alpha0 <= 1:
            raise InvalidInputError(f"alpha0 must be in [0, 1], got {self.alpha0}")
        if self.epochs < 1 or self.prototypes_per_category < 1:
            raise InvalidInputError("epochs and prototypes_per_category must be >= 1")
        check_seed(self.seed)


def _category_rng(seed, category_index):
    return np.random.default_rng([seed, category_index])


# -- k-means ----------------------------------------------------------------

@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    objective_history: list[float] = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False


def _require_real_metric(metric, what):
    if metric.kind == "hamming":
        raise InvalidInputError(
            f"{what} produces non-binary points; use euclidean or minkowski instead of hamming")


def _assign(X, C, metric):
    D = metric.pairwise(X, C)
    a = np.argmin(D, axis=1)
    return a, D[np.arange(len(X)), a]


def _kmeans(X, k, params, metric, rng) -> KMeansResult:
    _require_real_metric(metric, "k-means")
    distinct = np.unique(X, axis=0)
    if k > len(distinct):
        raise InvalidInputError(f"k={k} exceeds the {len(distinct)} distinct points")
    C = distinct[rng.choice(len(distinct), size=k, replace=False)].copy()
    history = []
    converged = False
    it = 0
    for it in range(1, params.max_iter + 1):
        a, d = _assign(X, C, metric)
        history.append(float(np.sum(d ** 2)))
        counts = np.bincount(a, minlength=k)
        for j in np.flatnonzero(counts == 0):
            eligible = counts[a] >= 2
            far = int(np.argmax(np.where(eligible, d, -1.0)))
            counts[a[far]] -= 1
            counts[j] = 1
            a[far] = j
            d[far] = 0.0
            C[j] = X[far]
        new_C = np.array([X[a == j].mean(axis=0) for j in range(k)])
        shift = float(np.max(np.linalg.norm(new_C - C, axis=1)))
        C = new_C
        if shift < params.tol:
            converged = True
            break
    a, d = _assign(X, C, metric)
    history.append(float(np.sum(d ** 2)))
    return KMeansResult(C, a, history, it, converged)


def kmeans(points, params: ClusteringParams = ClusteringParams(),
           metric: Metric = EUCLIDEAN) -> KMeansResult:
    """Lloyd's algorithm from a seeded sample of distinct points.

    Assignment ties go to the lowest centroid index. An empty cluster is
    re-seeded at the point farthest from its assigned centroid (taken from a
    cluster with at least two members). Stops when no centroid moves by
    ``tol`` or more, or after ``max_iter`` iterations.

    ``objective_history`` holds the sum of squared distances after every
    assignment step, including a final one against the returned centroids.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    return _kmeans(X, params.k, params, metric, np.random.default_rng(params.seed))


def _majority(labels, n_categories):
    return int(np.argmax(np.bincount(labels, minlength=n_categories)))


def _label_groups(dataset, centroids, assignments, metric):
    """Majority label of each group; empty groups take their nearest point's label."""
    out = []
    for j, c in enumerate(centroids):
        members = dataset.labels[assignments == j]
        if members.size:
            out.append(_majority(members, dataset.n_categories))
        else:
            d = metric.pairwise(c[None, :], dataset.features)[0]
            out.append(int(dataset.labels[int(np.argmin(d))]))
    return np.array(out, dtype=np.int64)


def nearest_mean_prototypes(dataset: Dataset) -> ReferenceSet:
    """One centroid per category, in category order."""
    dataset.require_labelled()
    protos = []
    for ci, name in enumerate(dataset.categories):
        members = dataset.features[dataset.labels == ci]
        if members.shape[0] == 0:
            raise InvalidInputError(f"category {name!r} has no points")
        protos.append(members.mean(axis=0))
    return ReferenceSet.generated(np.array(protos), np.arange(dataset.n_categories),
                                  dataset.categories)


def cluster_pre_supervised(dataset: Dataset, k_per_category: int,
                           params: ClusteringParams = ClusteringParams(),
                           metric: Metric = EUCLIDEAN) -> ReferenceSet:
    """k-means within each category; centroids inherit the category label."""
    dataset.require_labelled()
    feats, labels = [], []
    for ci, name in enumerate(dataset.categories):
        members = dataset.features[dataset.labels == ci]
        if members.shape[0] == 0:
            raise InvalidInputError(f"category {name!r} has no points")
        try:
            res = _kmeans(members, k_per_category, params, metric, _category_rng(params.seed, ci))
        except InvalidInputError as e:
            raise InvalidInputError(f"category {name!r}: {e}") from e
        feats.append(res.centroids)
        labels.extend([ci] * k_per_category)
    return ReferenceSet.generated(np.vstack(feats), labels, dataset.categories)


def cluster_post_supervised(dataset: Dataset, params: ClusteringParams = ClusteringParams(),
                            metric: Metric = EUCLIDEAN) -> ReferenceSet:
    """k-means on all points, then each centroid takes its members' majority label."""
    dataset.require_labelled()
    res = kmeans(dataset.features, params, metric)
    labels = _label_groups(dataset, res.centroids, res.assignments, metric)
    return ReferenceSet.generated(res.centroids, labels, dataset.categories)


# -- Gaussian mixture -------------------------------------------------------

@dataclass
class GmmResult:
    means: np.ndarray
    variances: np.ndarray
    weights: np.ndarray
    responsibilities: np.ndarray
    loglik_history: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def hard_assignments(self) -> np.ndarray:
        return np.argmax(self.responsibilities, axis=1)


def _log_joint(X, means, variances, weights):
    n = X.shape[1]
    sq = ((X[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    with np.errstate(divide="ignore"):
        log_w = np.log(weights)
    return log_w[None, :] - 0.5 * n * np.log(2 * math.pi * variances)[None, :] \
        - sq / (2 * variances[None, :])


def _logsumexp(a):
    m = a.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(a - m).sum(axis=1, keepdims=True)))[:, 0]


def _fit_gmm(X, params, rng) -> GmmResult:
    N, n = X.shape
    k = params.k
    km = _kmeans(X, k, params, EUCLIDEAN, rng)
    means = km.centroids.copy()
    counts = np.bincount(km.assignments, minlength=k)
    overall = float(((X - X.mean(axis=0)) ** 2).sum() / (n * N))
    variances = np.empty(k)
    for j in range(k):
        members = X[km.assignments == j]
        v = ((members - means[j]) ** 2).sum() / (n * len(members)) if len(members) else overall
        variances[j] = max(v, params.variance_floor)
    weights = np.maximum(counts, 1) / np.maximum(counts, 1).sum()

    history = []
    converged = False
    for it in range(params.max_iter + 1):
        logp = _log_joint(X, means, variances, weights)
        lse = _logsumexp(logp)
        ll = float(lse.sum())
        if not math.isfinite(ll):
            raise NumericError("Gaussian mixture log-likelihood is not finite")
        history.append(ll)
        resp = np.exp(logp - lse[:, None])
        if len(history) >= 2 and history[-1] - history[-2] < params.tol:
            converged = True
            break
        if it == params.max_iter:
            break
        Nk = resp.sum(axis=0)
        live = Nk > 0
        means[live] = (resp.T @ X)[live] / Nk[live, None]
        sq = ((X[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
        var_new = np.where(live, (resp * sq).sum(axis=0) / (n * np.where(live, Nk, 1.0)), variances)
        variances = np.maximum(var_new, params.variance_floor)
        weights = Nk / N
    return GmmResult(means, variances, weights, resp, history, converged)


def fit_spherical_gmm(points, params: ClusteringParams = ClusteringParams()) -> GmmResult:
    """EM for a k-component spherical Gaussian mixture.

    Initialised from k-means. Variances are floored at ``variance_floor``.
    ``loglik_history`` records the log-likelihood before every M-step and
    once more for the returned parameters; EM stops when the improvement
    drops below ``tol``.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    return _fit_gmm(X, params, np.random.default_rng(params.seed))


GMM_MODES = ("pre_supervised", "post_supervised")


def gmm_mmc(dataset: Dataset, params: ClusteringParams = ClusteringParams(),
            mode: str = "post_supervised") -> ReferenceSet:
    """Mixture-model prototypes: component means as the reference set.

    ``pre_supervised`` fits ``params.k`` components per category;
    ``post_supervised`` fits ``params.k`` components to all points and
    labels each by the majority category among points it wins outright.
    """
    dataset.require_labelled()
    if mode not in GMM_MODES:
        raise InvalidInputError(f"mode must be one of {GMM_MODES}, got {mode!r}")
    if mode == "post_supervised":
        res = fit_spherical_gmm(dataset.features, params)
        labels = _label_groups(dataset, res.means, res.hard_assignments, EUCLIDEAN)
        return ReferenceSet.generated(res.means, labels, dataset.categories)
    feats, labels = [], []
    for ci, name in enumerate(dataset.categories):
        members = dataset.features[dataset.labels == ci]
        try:
            res = _fit_gmm(members, params, _category_rng(params.seed, ci))
        except InvalidInputError as e:
            raise InvalidInputError(f"category {name!r}: {e}") from e
        feats.append(res.means)
        labels.extend([ci] * params.k)
    return ReferenceSet.generated(np.vstack(feats), labels, dataset.categories)


# -- LVQ --------------------------------------------------------------------

def lvq1(dataset: Dataset, init: ReferenceSet | None = None, params: LvqParams = LvqParams(),
         metric: Metric = EUCLIDEAN) -> ReferenceSet:
    """LVQ1 with a learning rate decaying linearly from ``alpha0`` to zero.

    The winning prototype moves toward a stimulus of its own category and
    away from one of another category. ``init`` defaults to per-category
    k-means with ``prototypes_per_category`` centroids.
    """
    dataset.require_labelled()
    _require_real_metric(metric, "LVQ")
    if init is None:
        init = cluster_pre_supervised(
            dataset, params.prototypes_per_category,
            ClusteringParams(k=params.prototypes_per_category, seed=params.seed), metric)
    if init.provenance == "selected":
        init.check_against(dataset)
    if init.categories != dataset.categories:
        raise InvalidInputError("initial prototypes use different categories")
    protos = init.features.copy()
    plabels = init.labels
    rng = np.random.default_rng(params.seed)
    N = dataset.N
    total = params.epochs * N
    t = 0
    for _ in range(params.epochs):
        for i in rng.permutation(N):
            alpha = params.alpha0 * (1.0 - t / total)
            x = dataset.features[i]
            d = metric.pairwise(x[None, :], protos)[0]
            tied = np.flatnonzero(d == d.min())
            w = int(tied[np.argmin(plabels[tied])])
            if plabels[w] == dataset.labels[i]:
                protos[w] += alpha * (x - protos[w])
            else:
                protos[w] -= alpha * (x - protos[w])
            t += 1
    return ReferenceSet.generated(protos, plabels, dataset.categories)
