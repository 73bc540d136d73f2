"""Named reference-set builders with their parameter defaults.

Every builder has the signature ``build(train, params, metric, seed)`` and
returns a ``ReferenceSet`` fitted on ``train`` only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from .core import Dataset, Metric
from .errors import ConfigError, InvalidInputError
from .nn import ReferenceSet
from .psych import (RmcParams, SustainParams, VAM_DEFAULT_CAP, pure_exemplar, pure_prototype,
                    rex, rex_leopold_i, rmc, sustain, vam_best)
from .replacement import (ClusteringParams, LvqParams, cluster_post_supervised,
                          cluster_pre_supervised, gmm_mmc, lvq1, nearest_mean_prototypes)
from .selection import (DEFAULT_CAP, EditingParams, cnn, enn, exhaustive_select,
                        hybrid_enn_cnn, random_editing)
from .splits import holdout_split


@dataclass(frozen=True)
class MethodInfo:
    name: str
    family: str
    build: Callable[[Dataset, dict, Metric, int], ReferenceSet]
    defaults: dict
    summary: str


def _clustering(p, seed):
    return ClusteringParams(k=p["k"], max_iter=p["max_iter"], tol=p["tol"], seed=seed,
                            variance_floor=p.get("variance_floor", 1e-6))


def _random(train, p, metric, seed):
    ep = EditingParams(lam=p["lambda"], T=p["T"], seed=seed)
    frac = p["validation"]
    if frac == "train":
        return random_editing(train, train, ep, metric)
    fit_idx, val_idx = holdout_split(train.N, float(frac), seed)
    picked = random_editing(train.subset(fit_idx), train.subset(val_idx), ep, metric)
    return ReferenceSet.select(train, [int(fit_idx[i]) for i in picked.source_indices])


_CLUSTER_DEFAULTS = {"k": 2, "max_iter": 100, "tol": 1e-6}

_REGISTRY = [
    MethodInfo("cnn", "select", lambda d, p, m, s: cnn(d, s, m), {},
               "Hart's condensed nearest neighbour"),
    MethodInfo("enn", "select", lambda d, p, m, s: enn(d, p["k"], m), {"k": 3},
               "Wilson editing"),
    MethodInfo("hybrid", "select", lambda d, p, m, s: hybrid_enn_cnn(d, p["k"], s, m), {"k": 3},
               "Wilson editing followed by CNN"),
    MethodInfo("random", "select", _random, {"lambda": 0.5, "T": 100, "validation": "train"},
               "random editing: best of T random subsets by J"),
    MethodInfo("exhaustive", "select",
               lambda d, p, m, s: exhaustive_select(
                   d, EditingParams(lam=p["lambda"], seed=s, cv_folds=p["cv_folds"]), m, p["cap"]),
               {"lambda": 0.5, "cv_folds": None, "cap": DEFAULT_CAP},
               "exhaustive subset search minimising J with cross-validated error"),
    MethodInfo("kmeans-pre", "generate",
               lambda d, p, m, s: cluster_pre_supervised(d, p["k"], _clustering(p, s), m),
               dict(_CLUSTER_DEFAULTS), "k-means within each category (k per category)"),
    MethodInfo("kmeans-post", "generate",
               lambda d, p, m, s: cluster_post_supervised(d, _clustering(p, s), m),
               dict(_CLUSTER_DEFAULTS), "k-means on all points, majority labels"),
    MethodInfo("gmm", "generate",
               lambda d, p, m, s: gmm_mmc(d, _clustering(p, s), p["mode"]),
               dict(_CLUSTER_DEFAULTS, mode="post_supervised", variance_floor=1e-6),
               "spherical Gaussian mixture (MMC)"),
    MethodInfo("lvq", "generate",
               lambda d, p, m, s: lvq1(d, None, LvqParams(p["prototypes_per_category"],
                                                          p["alpha0"], p["epochs"], s), m),
               {"prototypes_per_category": 1, "alpha0": 0.3, "epochs": 30}, "LVQ1"),
    MethodInfo("nearest-mean", "generate", lambda d, p, m, s: nearest_mean_prototypes(d), {},
               "one centroid per category"),
    MethodInfo("rmc", "psych",
               lambda d, p, m, s: rmc(d, RmcParams(p["coupling"], p["label_weight"],
                                                   s if p["shuffle"] else None), m),
               {"coupling": 0.5, "label_weight": 1.0, "shuffle": False},
               "rational model: incremental threshold clustering"),
    MethodInfo("rex", "psych", lambda d, p, m, s: rex(d, _clustering(p, s), m),
               dict(_CLUSTER_DEFAULTS), "reduced exemplar model (k-means post-supervised)"),
    MethodInfo("sustain", "psych",
               lambda d, p, m, s: sustain(d, SustainParams(p["learning_rate"], p["epochs"], s), m),
               {"learning_rate": 0.1, "epochs": 10}, "supervised SUSTAIN"),
    MethodInfo("vam", "psych", lambda d, p, m, s: vam_best(d, m, None, p["cap"]).refset,
               {"cap": VAM_DEFAULT_CAP}, "varying abstraction model (best partition)"),
    MethodInfo("rex-leopold-1", "psych",
               lambda d, p, m, s: rex_leopold_i(d, p["cv_folds"], p["cap"], m, s),
               {"cv_folds": None, "cap": DEFAULT_CAP},
               "Rex Leopold I: exhaustive search, accuracy only"),
    MethodInfo("pure-exemplar", "psych", lambda d, p, m, s: pure_exemplar(d), {},
               "all training stimuli"),
    MethodInfo("pure-prototype", "psych", lambda d, p, m, s: pure_prototype(d), {},
               "category centroids"),
]

METHODS: dict[str, MethodInfo] = {m.name: m for m in _REGISTRY}

# Methods paired in the ML/psychology correspondence table.
CORRESPONDENCE_METHODS = ("cnn", "enn", "hybrid", "random", "kmeans-pre", "kmeans-post", "lvq",
                          "rmc", "gmm", "rex", "sustain", "vam", "rex-leopold-1")


def method_names(family: str | None = None) -> list[str]:
    return [m.name for m in _REGISTRY if family is None or m.family == family]


def get_method(name: str) -> MethodInfo:
    key = name.replace("_", "-")
    if key not in METHODS:
        raise ConfigError(f"unknown method {name!r}; valid names: {', '.join(METHODS)}")
    return METHODS[key]


def resolve_params(name: str, params: dict[str, Any] | None) -> dict[str, Any]:
    info = get_method(name)
    params = dict(params or {})
    params.pop("seed", None)
    unknown = set(params) - set(info.defaults)
    if unknown:
        raise ConfigError(f"method {info.name!r} does not take {sorted(unknown)}; "
                          f"parameters: {sorted(info.defaults) or 'none'}")
    return {**info.defaults, **params}


def build(name: str, train: Dataset, params: dict | None, metric: Metric, seed: int = 0) -> ReferenceSet:
    """Fit method ``name`` on ``train``. A ``seed`` entry in params overrides ``seed``."""
    info = get_method(name)
    if params and "seed" in params:
        seed = int(params["seed"])
    resolved = resolve_params(name, params)
    try:
        return info.build(train, resolved, metric, seed)
    except (KeyError, TypeError) as e:
        raise InvalidInputError(f"bad parameters for {info.name!r}: {e}") from e
