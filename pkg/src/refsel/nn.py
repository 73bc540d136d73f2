"""Nearest-neighbour classification over a reference set.

Tie rules are deterministic everywhere: among equally distant reference
points the lowest category index wins (then the lowest position). k-NN
ranks neighbours by the same key, so k=1 agrees with 1-NN, and a tied
vote goes to the lowest category index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import EUCLIDEAN, UNLABELLED, Dataset, LabeledPoint, Metric, SimilarityParams
from .errors import InvalidInputError, InvalidStateError, ParseError

PROVENANCES = ("selected", "generated", "mixed")
FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class ReferenceSet:
    """The reference set ``S`` used by the nearest-neighbour rule.

    ``source_indices`` index into the dataset the set was selected from and
    are present exactly when ``provenance == "selected"``.
    """

    features: np.ndarray
    labels: np.ndarray
    categories: tuple[str, ...]
    provenance: str = "generated"
    source_indices: tuple[int, ...] | None = None

    def __post_init__(self):
        features = np.array(self.features, dtype=float, copy=True)
        if features.ndim != 2 or features.shape[0] == 0:
            raise InvalidInputError("a reference set needs at least one point")
        if not np.all(np.isfinite(features)):
            raise InvalidInputError("reference points must be finite")
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        if labels.shape != (features.shape[0],):
            raise InvalidInputError("one label per reference point is required")
        categories = tuple(str(c) for c in self.categories)
        if np.any((labels < 0) | (labels >= len(categories))):
            raise InvalidInputError("every reference point needs a label in the category set")
        if self.provenance not in PROVENANCES:
            raise InvalidInputError(f"provenance must be one of {PROVENANCES}")
        src = self.source_indices
        if self.provenance == "selected":
            if src is None or len(src) != features.shape[0]:
                raise InvalidInputError("selected reference sets need one source index per point")
            src = tuple(int(i) for i in src)
        elif src is not None:
            src = tuple(int(i) for i in src)
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "categories", categories)
        object.__setattr__(self, "source_indices", src)

    @classmethod
    def select(cls, dataset: Dataset, indices) -> "ReferenceSet":
        idx = [int(i) for i in indices]
        if not idx:
            raise InvalidInputError("a reference set needs at least one point")
        labels = dataset.labels[idx]
        if np.any(labels == UNLABELLED):
            raise InvalidInputError("cannot select unlabelled points into a reference set")
        return cls(dataset.features[idx], labels, dataset.categories, "selected", tuple(idx))

    @classmethod
    def generated(cls, features, labels, categories) -> "ReferenceSet":
        return cls(np.asarray(features, dtype=float), labels, tuple(categories), "generated")

    def __len__(self):
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def points(self) -> list[LabeledPoint]:
        return [LabeledPoint(tuple(x), self.categories[y]) for x, y in zip(self.features, self.labels)]

    def check_against(self, dataset: Dataset):
        """Raise unless this set is compatible with ``dataset`` (and, when
        selected, matches the dataset points at its source indices)."""
        if self.categories != dataset.categories:
            raise InvalidInputError(
                f"category mismatch: reference set {self.categories} vs dataset {dataset.categories}")
        if self.n_features != dataset.n_features:
            raise InvalidInputError(
                f"dimensionality mismatch: {self.n_features} vs {dataset.n_features}")
        if self.provenance == "selected":
            idx = np.asarray(self.source_indices)
            if np.any(idx < 0) or np.any(idx >= dataset.N):
                raise InvalidInputError("source index outside the dataset")
            if not (np.array_equal(dataset.features[idx], self.features)
                    and np.array_equal(dataset.labels[idx], self.labels)):
                raise InvalidInputError("selected points differ from the dataset at their source indices")

    def __eq__(self, other):
        if not isinstance(other, ReferenceSet):
            return NotImplemented
        return to_json(self) == to_json(other)

    __hash__ = None

    def __repr__(self):
        return f"ReferenceSet(size={len(self)}, provenance={self.provenance!r})"


# -- classification ---------------------------------------------------------

def nearest_labels(dist: np.ndarray, ref_labels: np.ndarray) -> np.ndarray:
    """1-NN decisions from a ``(queries, refs)`` distance matrix."""
    dist = np.atleast_2d(dist)
    dmin = dist.min(axis=1, keepdims=True)
    tied = np.where(dist == dmin, ref_labels[None, :], np.iinfo(np.int64).max)
    return tied.min(axis=1)


def knn_vote(dist_row: np.ndarray, ref_labels: np.ndarray, k: int, n_categories: int) -> int:
    order = np.lexsort((np.arange(len(dist_row)), ref_labels, dist_row))[:k]
    votes = np.bincount(ref_labels[order], minlength=n_categories)
    return int(np.argmax(votes))


def _query_matrix(refset, query):
    q = np.atleast_2d(np.asarray(query, dtype=float))
    if q.shape[1] != refset.n_features:
        raise InvalidInputError(
            f"query has {q.shape[1]} dimensions, reference set has {refset.n_features}")
    return q


def predict_1nn(refset: ReferenceSet, metric: Metric, queries) -> np.ndarray:
    """Category indices assigned by 1-NN to each row of ``queries``."""
    if len(refset) == 0:
        raise InvalidStateError("empty reference set")
    Q = _query_matrix(refset, queries)
    return nearest_labels(metric.pairwise(Q, refset.features), refset.labels)


def classify_1nn(refset: ReferenceSet, metric: Metric, query) -> str:
    return refset.categories[int(predict_1nn(refset, metric, query)[0])]


def classify_knn(refset: ReferenceSet, metric: Metric, query, k: int = 1) -> str:
    if k < 1 or k > len(refset):
        raise InvalidInputError(f"k must be in 1..{len(refset)}, got {k}")
    Q = _query_matrix(refset, query)
    d = metric.pairwise(Q, refset.features)[0]
    return refset.categories[knn_vote(d, refset.labels, k, len(refset.categories))]


def training_accuracy(refset: ReferenceSet, dataset: Dataset, metric: Metric = EUCLIDEAN) -> float:
    """Fraction of the labelled points of ``dataset`` that 1-NN on ``refset`` gets right."""
    if refset.categories != dataset.categories:
        raise InvalidInputError("reference set and dataset use different categories")
    data = dataset.labelled()
    pred = predict_1nn(refset, metric, data.features)
    return float(np.mean(pred == data.labels))


def is_consistent(refset: ReferenceSet, dataset: Dataset, metric: Metric = EUCLIDEAN) -> bool:
    return training_accuracy(refset, dataset, metric) == 1.0


def proportions_from_distances(dist: np.ndarray, ref_labels, n_categories, params) -> np.ndarray:
    """Summed-similarity ratio per category for each row of ``dist``.

    Distances are shifted by their row minimum before exponentiation; the
    ratio is unchanged and large ``gamma`` no longer underflows to 0/0.
    """
    dist = np.atleast_2d(dist)
    sims = np.exp(-params.gamma * (dist - dist.min(axis=1, keepdims=True)))
    onehot = np.zeros((len(ref_labels), n_categories))
    onehot[np.arange(len(ref_labels)), ref_labels] = 1.0
    per_cat = sims @ onehot
    return per_cat / per_cat.sum(axis=1, keepdims=True)


def predict_proportions(refset: ReferenceSet, metric: Metric, params: SimilarityParams,
                        query) -> np.ndarray:
    """Predicted response proportions, one entry per category in order.

    A 2-D ``query`` gives one row per query.
    """
    if len(refset) == 0:
        raise InvalidStateError("empty reference set")
    Q = _query_matrix(refset, query)
    P = proportions_from_distances(metric.pairwise(Q, refset.features), refset.labels,
                                   len(refset.categories), params)
    return P[0] if np.ndim(query) == 1 else P


# -- serialization ----------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def to_json(refset: ReferenceSet) -> str:
    """Canonical JSON: sorted keys, floats with 17 significant digits."""
    points = []
    for x, y in zip(refset.features, refset.labels):
        feats = "[" + ", ".join(_fmt(v) for v in x) + "]"
        points.append('{"features": ' + feats + ', "label": '
                      + json.dumps(refset.categories[y]) + "}")
    src = "null" if refset.source_indices is None else json.dumps(list(refset.source_indices))
    fields = {
        "categories": json.dumps(list(refset.categories)),
        "n_features": str(refset.n_features),
        "points": "[\n    " + ",\n    ".join(points) + "\n  ]",
        "provenance": json.dumps(refset.provenance),
        "source_indices": src,
        "version": str(FORMAT_VERSION),
    }
    body = ",\n".join(f'  "{k}": {v}' for k, v in sorted(fields.items()))
    return "{\n" + body + "\n}\n"


def from_json(text: str, path=None) -> ReferenceSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", path, e.lineno) from e
    try:
        if doc["version"] != FORMAT_VERSION:
            raise ParseError(f"unsupported reference-set version {doc['version']}", path)
        categories = tuple(doc["categories"])
        index = {c: i for i, c in enumerate(categories)}
        feats = [[float(v) for v in p["features"]] for p in doc["points"]]
        labels = [index[p["label"]] for p in doc["points"]]
        if any(len(f) != doc["n_features"] for f in feats):
            raise ParseError("point dimensionality disagrees with n_features", path)
        return ReferenceSet(np.array(feats, dtype=float).reshape(len(feats), doc["n_features"]),
                            labels, categories, doc["provenance"], doc["source_indices"])
    except (KeyError, TypeError) as e:
        raise ParseError(f"malformed reference set: {e!r}", path) from e
    except InvalidInputError as e:
        raise ParseError(str(e), path) from e


def save_refset(refset: ReferenceSet, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(to_json(refset))


def load_refset(path) -> ReferenceSet:
    with open(path, encoding="utf-8") as fh:
        return from_json(fh.read(), path)
