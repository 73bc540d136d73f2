"""Points, datasets, metrics and similarity.

Datasets store features as an ``(N, n)`` float array and labels as an
``(N,)`` integer array indexing into an ordered tuple of category names.
Unlabelled points (transfer stimuli) carry label ``-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError

UNLABELLED = -1

METRIC_KINDS = ("euclidean", "hamming", "minkowski")


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _check_finite(features):
    if not np.all(np.isfinite(features)):
        raise InvalidInputError("features must be finite (no NaN or infinity)")


@dataclass(frozen=True)
class LabeledPoint:
    features: tuple[float, ...]
    label: str | None = None

    def __post_init__(self):
        feats = tuple(float(v) for v in self.features)
        if not all(math.isfinite(v) for v in feats):
            raise InvalidInputError("features must be finite (no NaN or infinity)")
        object.__setattr__(self, "features", feats)


@dataclass(frozen=True, eq=False)
class Dataset:
    """A labelled sample ``X`` of ``N`` stimuli in ``n`` dimensions.

    Attributes:
        features: ``(N, n)`` array of stimulus coordinates.
        labels: ``(N,)`` integer array; ``-1`` marks an unlabelled stimulus.
        categories: ordered category names. The order is used for all
            tie-breaking.
        feature_names: column names used when writing CSV.
    """

    features: np.ndarray
    labels: np.ndarray
    categories: tuple[str, ...]
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim != 2:
            raise InvalidInputError(f"features must be 2-D, got shape {features.shape}")
        N, n = features.shape
        if N < 1:
            raise InvalidInputError("a dataset needs at least one point")
        if n < 1:
            raise InvalidInputError("a dataset needs at least one feature")
        _check_finite(features)
        labels = np.asarray(self.labels)
        if labels.shape != (N,):
            raise InvalidInputError(f"expected {N} labels, got shape {labels.shape}")
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            raise InvalidInputError("labels must be integer category indices")
        labels = labels.astype(np.int64)
        categories = tuple(str(c) for c in self.categories)
        if len(categories) < 1:
            raise InvalidInputError("a dataset needs at least one category")
        if len(set(categories)) != len(categories):
            raise InvalidInputError(f"duplicate category names in {categories}")
        if np.any((labels < UNLABELLED) | (labels >= len(categories))):
            raise InvalidInputError("label index outside the category set")
        names = tuple(self.feature_names) or tuple(f"x{i}" for i in range(n))
        if len(names) != n:
            raise InvalidInputError(f"expected {n} feature names, got {len(names)}")
        labels.setflags(write=False)
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "categories", categories)
        object.__setattr__(self, "feature_names", names)

    @classmethod
    def from_points(cls, points: Sequence[LabeledPoint], categories=None):
        """Build a dataset from ``LabeledPoint`` objects.

        When ``categories`` is omitted the category order is the order of
        first appearance.
        """
        points = list(points)
        if not points:
            raise InvalidInputError("a dataset needs at least one point")
        if categories is None:
            categories = []
            for p in points:
                if p.label is not None and p.label not in categories:
                    categories.append(p.label)
        categories = tuple(categories)
        index = {c: i for i, c in enumerate(categories)}
        dims = {len(p.features) for p in points}
        if len(dims) != 1:
            raise InvalidInputError(f"points have mixed dimensionality {sorted(dims)}")
        labels = []
        for p in points:
            if p.label is None:
                labels.append(UNLABELLED)
            elif p.label not in index:
                raise InvalidInputError(f"label {p.label!r} is not in {categories}")
            else:
                labels.append(index[p.label])
        return cls(np.array([p.features for p in points]), np.array(labels, dtype=np.int64),
                   categories)

    @property
    def N(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    @property
    def points(self) -> list[LabeledPoint]:
        return [LabeledPoint(tuple(x), None if y == UNLABELLED else self.categories[y])
                for x, y in zip(self.features, self.labels)]

    @property
    def is_fully_labelled(self) -> bool:
        return bool(np.all(self.labels != UNLABELLED))

    def require_labelled(self):
        if not self.is_fully_labelled:
            raise InvalidInputError("operation needs every point to be labelled")

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.categories, self.feature_names)

    def labelled(self) -> "Dataset":
        """The labelled points only, in their original order."""
        return self.subset(np.flatnonzero(self.labels != UNLABELLED))

    def category_counts(self) -> np.ndarray:
        lab = self.labels[self.labels != UNLABELLED]
        return np.bincount(lab, minlength=self.n_categories)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.categories == other.categories
                and self.feature_names == other.feature_names
                and self.features.shape == other.features.shape
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels))

    __hash__ = None

    def __repr__(self):
        return (f"Dataset(N={self.N}, n={self.n_features}, "
                f"categories={self.categories})")


@dataclass(frozen=True)
class Metric:
    """Distance over R^n: euclidean, hamming or weighted Minkowski.

    Weights multiply each coordinate's contribution before aggregation, so
    weighted euclidean is ``sqrt(sum w_i d_i^2)`` and weighted hamming is
    ``sum w_i [a_i != b_i]``.
    """

    kind: str = "euclidean"
    p: float = 2.0
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise InvalidInputError(f"unknown metric {self.kind!r}; expected one of {METRIC_KINDS}")
        if self.kind == "minkowski" and not self.p >= 1:
            raise InvalidInputError(f"minkowski p must be >= 1, got {self.p}")
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if any(not math.isfinite(v) or v < 0 for v in w):
                raise InvalidInputError("metric weights must be finite and non-negative")
            if not any(v > 0 for v in w):
                raise InvalidInputError("metric weights need at least one positive entry")
            object.__setattr__(self, "weights", w)

    def _weight_vector(self, n):
        if self.weights is None:
            return None
        if len(self.weights) != n:
            raise InvalidInputError(
                f"metric has {len(self.weights)} weights but points have {n} dimensions")
        return np.asarray(self.weights)

    def extended(self, extra: int) -> "Metric":
        """The same metric on ``n + extra`` dimensions, extra weights set to one."""
        if self.weights is None:
            return self
        return Metric(self.kind, self.p, self.weights + (1.0,) * extra)

    def pairwise(self, A, B) -> np.ndarray:
        """Distance matrix between the rows of ``A`` and the rows of ``B``."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        if A.shape[1] != B.shape[1]:
            raise InvalidInputError(
                f"dimensionality mismatch: {A.shape[1]} vs {B.shape[1]}")
        w = self._weight_vector(A.shape[1])
        diff = A[:, None, :] - B[None, :, :]
        if self.kind == "hamming":
            for M in (A, B):
                if not np.all((M == 0.0) | (M == 1.0)):
                    raise InvalidInputError("hamming distance needs 0/1 coordinates")
            terms = (diff != 0).astype(float)
            return terms.sum(axis=-1) if w is None else terms @ w
        if self.kind == "euclidean":
            sq = diff * diff
            return np.sqrt(sq.sum(axis=-1) if w is None else sq @ w)
        terms = np.abs(diff) ** self.p
        total = terms.sum(axis=-1) if w is None else terms @ w
        return total ** (1.0 / self.p)


EUCLIDEAN = Metric()


@dataclass(frozen=True)
class SimilarityParams:
    gamma: float = 1.0

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise InvalidInputError(f"gamma must be a positive finite real, got {self.gamma}")


def distance(metric: Metric, a: Iterable[float], b: Iterable[float]) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise InvalidInputError(f"dimensionality mismatch: {a.size} vs {b.size}")
    return float(metric.pairwise(a[None, :], b[None, :])[0, 0])


def similarity(d, params: SimilarityParams = SimilarityParams()):
    """Exponential-decay similarity ``exp(-gamma * d)``; accepts scalars or arrays."""
    d_arr = np.asarray(d, dtype=float)
    if np.any(d_arr < 0):
        raise InvalidInputError("distance must be non-negative")
    out = np.exp(-params.gamma * d_arr)
    return float(out) if out.ndim == 0 else out
