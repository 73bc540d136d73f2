"""Evaluation protocols, fit-to-proportions scoring and benchmark runs."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import methods as _methods
from .core import EUCLIDEAN, Dataset, Metric, SimilarityParams
from .data import ProportionsTable, gen_5_4, gen_gaussian, load_csv, load_proportions
from .errors import ConfigError, EvaluationError, InvalidInputError, RefselError
from .nn import ReferenceSet, predict_1nn, predict_proportions, to_json
from .selection import check_seed, criterion_j
from .splits import holdout_split, kfold_splits

PROB_FLOOR = 1e-12
PROTOCOL_KINDS = ("resubstitution", "holdout", "kfold", "loo")


@dataclass(frozen=True)
class Protocol:
    kind: str = "kfold"
    holdout_fraction: float = 0.5
    folds: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PROTOCOL_KINDS:
            raise InvalidInputError(f"protocol must be one of {PROTOCOL_KINDS}, got {self.kind!r}")
        if not 0 < self.holdout_fraction < 1:
            raise InvalidInputError(f"holdout_fraction must be in (0, 1), got {self.holdout_fraction}")
        if self.folds < 2:
            raise InvalidInputError(f"folds must be >= 2, got {self.folds}")
        check_seed(self.seed)

    def splits(self, dataset: Dataset):
        """``([(train_idx, test_idx), ...], stratified)`` for a labelled dataset."""
        N = dataset.N
        if self.kind == "resubstitution":
            idx = np.arange(N)
            return [(idx, idx)], False
        if self.kind == "holdout":
            return [holdout_split(N, self.holdout_fraction, self.seed)], False
        if self.kind == "loo":
            if N < 2:
                raise InvalidInputError("leave-one-out needs N >= 2")
            return kfold_splits(dataset.labels, N, self.seed)
        if self.folds > N:
            raise InvalidInputError(f"{self.folds} folds requested for {N} points")
        return kfold_splits(dataset.labels, self.folds, self.seed)

    def to_dict(self):
        d = {"kind": self.kind, "seed": self.seed}
        if self.kind == "holdout":
            d["holdout_fraction"] = self.holdout_fraction
        if self.kind == "kfold":
            d["folds"] = self.folds
        return d


@dataclass
class EvaluationReport:
    """Outcome of evaluating one method on one dataset.

    Accuracies and the reduction rate are means over folds; ``criterion_j``
    equals ``lam * (1 - generalisation_accuracy) + (1 - lam) * reduction_rate``.
    Under resubstitution the generalisation figure is goodness of fit on the
    training sample, flagged by ``goodness_of_fit``.
    """

    method: str
    params: dict
    protocol: dict
    metric: dict
    lam: float
    seed: int
    N: int
    training_accuracy: float
    generalisation_accuracy: float
    fold_accuracies: list[float]
    reference_sizes: list[int]
    training_sizes: list[int]
    reduction_rate: float
    criterion_j: float
    stratified: bool
    goodness_of_fit: bool
    wall_time: float = 0.0
    fit: dict | None = None

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("wall_time")
        return d

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True, indent=2) + "\n"


def metric_to_dict(metric: Metric) -> dict:
    d = {"kind": metric.kind}
    if metric.kind == "minkowski":
        d["p"] = metric.p
    if metric.weights is not None:
        d["weights"] = list(metric.weights)
    return d


def metric_from_dict(d: dict | str | None) -> Metric:
    if d is None:
        return EUCLIDEAN
    if isinstance(d, str):
        return Metric(d)
    unknown = set(d) - {"kind", "p", "weights"}
    if unknown:
        raise ConfigError(f"unknown metric fields {sorted(unknown)}")
    return Metric(d.get("kind", "euclidean"), float(d.get("p", 2.0)), d.get("weights"))


# -- fit to proportions -----------------------------------------------------

def fit_score(refset: ReferenceSet, metric: Metric, params: SimilarityParams,
              table: ProportionsTable) -> tuple[float, float]:
    """Sum of squared errors and multinomial log-likelihood against ``table``.

    Predicted probabilities are floored at ``PROB_FLOOR`` before the log.
    """
    if tuple(refset.categories) != tuple(table.categories):
        raise InvalidInputError(
            f"category mismatch: reference set {refset.categories} vs table {table.categories}")
    if table.stimuli.shape[1] != refset.n_features:
        raise InvalidInputError("table stimuli and reference set differ in dimensionality")
    P = predict_proportions(refset, metric, params, table.stimuli)
    sse = float(np.sum((P - table.proportions) ** 2))
    loglik = float(np.sum(table.counts * np.log(np.maximum(P, PROB_FLOOR))))
    return sse, loglik


def fit_gamma(refset: ReferenceSet, metric: Metric, table: ProportionsTable,
              grid: Sequence[float] = tuple(np.logspace(-2, 2, 41))):
    """Grid search for the similarity sensitivity minimising SSE.

    Returns:
        (best gamma, sse, loglik); the earliest grid value wins ties.
    """
    best = None
    for g in grid:
        sse, ll = fit_score(refset, metric, SimilarityParams(float(g)), table)
        if best is None or sse < best[1]:
            best = (float(g), sse, ll)
    if best is None:
        raise InvalidInputError("empty gamma grid")
    return best


# -- evaluation -------------------------------------------------------------

def evaluate(method: str, dataset: Dataset, protocol: Protocol = Protocol(),
             metric: Metric = EUCLIDEAN, lam: float = 0.5, params: dict | None = None,
             seed: int = 0, table: ProportionsTable | None = None,
             gamma: float = 1.0) -> EvaluationReport:
    """Fit ``method`` on each training split and score 1-NN on the held-out part.

    Unlabelled points are dropped first. With ``table`` the method is also
    fitted on the whole dataset and scored against the response
    proportions. A failing fold aborts with an ``EvaluationError`` naming
    the fold.
    """
    info = _methods.get_method(method)
    resolved = _methods.resolve_params(info.name, params)
    if params and "seed" in params:
        seed = int(params["seed"])
    if not 0 <= lam <= 1:
        raise InvalidInputError(f"lambda must be in [0, 1], got {lam}")
    data = dataset.labelled()
    splits, stratified = protocol.splits(data)
    start = time.perf_counter()
    train_acc, gen_acc, sizes, ntrain = [], [], [], []
    for f, (tr, te) in enumerate(splits):
        train = data.subset(tr)
        try:
            S = _methods.build(info.name, train, resolved, metric, seed)
        except RefselError as e:
            raise EvaluationError(f"{info.name} failed on fold {f} of {len(splits)}: {e}") from e
        train_acc.append(float(np.mean(predict_1nn(S, metric, train.features) == train.labels)))
        gen_acc.append(float(np.mean(predict_1nn(S, metric, data.features[te]) == data.labels[te])))
        sizes.append(len(S))
        ntrain.append(train.N)
    fold_j = [criterion_j(1 - a, s, n, lam) for a, s, n in zip(gen_acc, sizes, ntrain)]
    fit = None
    if table is not None:
        S = _methods.build(info.name, data, resolved, metric, seed)
        sse, ll = fit_score(S, metric, SimilarityParams(gamma), table)
        fit = {"gamma": gamma, "sse": sse, "loglik": ll, "prob_floor": PROB_FLOOR}
    return EvaluationReport(
        method=info.name, params=resolved, protocol=protocol.to_dict(),
        metric=metric_to_dict(metric), lam=lam, seed=seed, N=data.N,
        training_accuracy=float(np.mean(train_acc)),
        generalisation_accuracy=float(np.mean(gen_acc)),
        fold_accuracies=gen_acc, reference_sizes=sizes, training_sizes=ntrain,
        reduction_rate=float(np.mean([s / n for s, n in zip(sizes, ntrain)])),
        criterion_j=float(np.mean(fold_j)), stratified=stratified,
        goodness_of_fit=protocol.kind == "resubstitution",
        wall_time=time.perf_counter() - start, fit=fit)


# -- benchmark --------------------------------------------------------------

SUMMARY_COLUMNS = ("cell", "dataset", "method", "params", "protocol", "status", "N",
                   "training_accuracy", "generalisation_accuracy", "reduction_rate",
                   "criterion_j", "lambda", "seed", "fit_sse", "fit_loglik", "error")


@dataclass
class BenchmarkConfig:
    datasets: list[dict]
    methods: list[dict]
    protocol: Protocol = field(default_factory=Protocol)
    metric: Metric = EUCLIDEAN
    lam: float = 0.5
    seed: int = 0
    gamma: float = 1.0
    reference_sets: bool = True
    timing: bool = False
    base_dir: Path = Path(".")


def load_config(source) -> BenchmarkConfig:
    """Parse a benchmark config from a path or an already-loaded dict."""
    base = Path(".")
    if isinstance(source, (str, os.PathLike)):
        base = Path(source).resolve().parent
        try:
            with open(source, encoding="utf-8") as fh:
                source = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {source}: {e}") from e
    if not isinstance(source, dict):
        raise ConfigError("config must be a JSON object")
    known = {"datasets", "methods", "protocol", "metric", "lambda", "seed", "gamma", "output"}
    unknown = set(source) - known
    if unknown:
        raise ConfigError(f"unknown config fields {sorted(unknown)}")
    datasets = source.get("datasets") or []
    methods = source.get("methods") or []
    if not datasets or not methods:
        raise ConfigError("config needs non-empty 'datasets' and 'methods'")
    names = set()
    for d in datasets:
        if "name" not in d:
            raise ConfigError(f"dataset entry without a name: {d}")
        if d["name"] in names:
            raise ConfigError(f"duplicate dataset name {d['name']!r}")
        names.add(d["name"])
    norm_methods = []
    for m in methods:
        m = {"name": m} if isinstance(m, str) else dict(m)
        info = _methods.get_method(m.get("name", ""))
        _methods.resolve_params(info.name, m.get("params"))
        norm_methods.append({"name": info.name, "params": dict(m.get("params") or {})})
    out = source.get("output") or {}
    seed = check_seed(source.get("seed", 0))
    proto = dict(source.get("protocol") or {})
    proto.setdefault("seed", seed)
    try:
        protocol = Protocol(**proto)
    except TypeError as e:
        raise ConfigError(f"bad protocol: {e}") from e
    return BenchmarkConfig(datasets=list(datasets), methods=norm_methods, protocol=protocol,
                           metric=metric_from_dict(source.get("metric")),
                           lam=float(source.get("lambda", 0.5)), seed=seed,
                           gamma=float(source.get("gamma", 1.0)),
                           reference_sets=bool(out.get("reference_sets", True)),
                           timing=bool(out.get("timing", False)), base_dir=base)


def materialise_dataset(entry: dict, base_dir: Path = Path(".")) -> Dataset:
    """Build or load the dataset described by a config entry."""
    src = entry.get("source", "csv" if "path" in entry else None)
    if src == "csv":
        return load_csv(base_dir / entry["path"])
    if src == "5-4":
        return gen_5_4().training
    if src == "gaussian":
        try:
            data, _ = gen_gaussian(entry["counts"], entry["means"], entry.get("sigmas", 1.0),
                                   entry.get("noise_rate", 0.0), entry.get("seed", 0))
        except KeyError as e:
            raise ConfigError(f"gaussian dataset {entry['name']!r} misses field {e}") from e
        return data
    raise ConfigError(f"dataset {entry.get('name')!r}: source must be 'csv', '5-4' or 'gaussian'")


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return format(v, ".17g") if isinstance(v, float) else str(v)


def _run_cell(job):
    """Evaluate one (dataset, method) cell and write its files. Never raises."""
    cell, dname, data, method, cfg, out_dir, table = job
    row = {"cell": cell, "dataset": dname, "method": method["name"],
           "params": json.dumps(method["params"], sort_keys=True),
           "protocol": json.dumps(cfg.protocol.to_dict(), sort_keys=True),
           "lambda": cfg.lam, "seed": cfg.seed, "N": data.labelled().N}
    try:
        rep = evaluate(method["name"], data, cfg.protocol, cfg.metric, cfg.lam,
                       method["params"], cfg.seed, table, cfg.gamma)
        doc = {"cell": cell, "dataset": dname, "status": "ok", "report": rep.to_dict(cfg.timing)}
        row.update(status="ok", training_accuracy=rep.training_accuracy,
                   generalisation_accuracy=rep.generalisation_accuracy,
                   reduction_rate=rep.reduction_rate, criterion_j=rep.criterion_j)
        if rep.fit:
            row.update(fit_sse=rep.fit["sse"], fit_loglik=rep.fit["loglik"])
        if cfg.reference_sets:
            S = _methods.build(method["name"], data.labelled(), method["params"], cfg.metric, cfg.seed)
            _atomic_write(out_dir / "refsets" / f"{cell}.json", to_json(S))
    except RefselError as e:
        doc = {"cell": cell, "dataset": dname, "status": "failed", "method": method["name"],
               "error": str(e)}
        row.update(status="failed", error=str(e))
    _atomic_write(out_dir / "cells" / f"{cell}.json", json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return row


def benchmark(config, output_dir, jobs: int = 1) -> list[Path]:
    """Run every (dataset x method) cell of ``config``.

    Writes ``cells/<cell>.json`` per cell, ``refsets/<cell>.json`` when
    enabled, and ``summary.csv`` with one row per cell in config order.
    Failed cells are recorded and the run continues. Output bytes depend
    only on the config, never on ``jobs``.

    Returns:
        paths of every file written, summary first.
    """
    cfg = config if isinstance(config, BenchmarkConfig) else load_config(config)
    out_dir = Path(output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    work = []
    for d in cfg.datasets:
        data = materialise_dataset(d, cfg.base_dir)
        table = load_proportions(cfg.base_dir / d["proportions"]) if d.get("proportions") else None
        for m in cfg.methods:
            cell = f"{len(work):03d}_{d['name']}_{m['name']}"
            work.append((cell, d["name"], data, m, cfg, out_dir, table))
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell, work))
    else:
        rows = [_run_cell(job) for job in work]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in SUMMARY_COLUMNS])
    summary = out_dir / "summary.csv"
    _atomic_write(summary, buf.getvalue())
    paths = [summary] + [out_dir / "cells" / f"{job[0]}.json" for job in work]
    if cfg.reference_sets:
        paths += [out_dir / "refsets" / f"{r['cell']}.json" for r in rows if r["status"] == "ok"]
    return paths
