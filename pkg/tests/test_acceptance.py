"""Acceptance suite: one test per criterion, each logging a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or
``python3 tests/test_acceptance.py``; the lines are repeated in the pytest
terminal summary.
"""

import json
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

import oracles
from refsel.cli import main as cli_main
from refsel.core import EUCLIDEAN, Dataset, SimilarityParams
from refsel.data import ProportionsTable, gen_5_4, gen_gaussian
from refsel.harness import Protocol, evaluate, fit_score
from refsel.nn import ReferenceSet, is_consistent, predict_proportions, to_json
from refsel.psych import (RmcParams, pure_prototype, rex, rex_leopold_i, rmc, vam_enumerate)
from refsel.replacement import (ClusteringParams, _fit_gmm, _kmeans, cluster_post_supervised,
                                cluster_pre_supervised, nearest_mean_prototypes)
from refsel.selection import EditingParams, cnn, enn, exhaustive_select, minimal_consistent_oracle
from refsel.methods import CORRESPONDENCE_METHODS

from conftest import ACCEPTANCE_LINES

FIXTURES = Path(__file__).parent / "fixtures"


@contextmanager
def criterion(n, title):
    info = {"detail": ""}
    start = time.perf_counter()
    try:
        yield info
    except BaseException as e:
        line = f"criterion {n:2d} FAIL  {title}: {type(e).__name__}: {e}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        raise
    line = f"criterion {n:2d} PASS  {title} ({time.perf_counter() - start:.2f}s) {info['detail']}"
    ACCEPTANCE_LINES.append(line.rstrip())
    print(line)


def test_01_cnn_consistency():
    with criterion(1, "CNN output is consistent over 100 seeds") as info:
        start = time.perf_counter()
        bad = []
        for seed in range(100):
            data, _ = gen_gaussian((30, 30), [(0, 0), (3, 3)], 1.0, 0.0, seed)
            S = cnn(data, seed)
            if not is_consistent(S, data):
                bad.append(seed)
        elapsed = time.perf_counter() - start
        assert not bad, f"inconsistent for seeds {bad}"
        assert elapsed < 5, f"took {elapsed:.2f}s"
        info["detail"] = "100/100 consistent"


def _random_dataset(seed):
    rng = np.random.default_rng(seed)
    X = np.round(rng.uniform(0, 10, (10, 2)), 3)
    y = rng.integers(0, 2, 10)
    y[0], y[1] = 0, 1
    return Dataset(X, y, ("A", "B"))


def test_02_oracle_bound():
    with criterion(2, "minimal consistent oracle <= CNN on 30 datasets") as info:
        start = time.perf_counter()
        strict = 0
        for seed in range(30):
            data = _random_dataset(seed)
            o, c = minimal_consistent_oracle(data), cnn(data, seed)
            assert len(o) <= len(c), f"seed {seed}: oracle {len(o)} > cnn {len(c)}"
            assert is_consistent(o, data)
            strict += len(o) < len(c)
        assert strict >= 1

        fx = json.loads((FIXTURES / "oracle_strict.json").read_text())
        labels = np.array([0 if v == "A" else 1 for v in fx["labels"]])
        data = Dataset(np.array(fx["features"]), labels, ("A", "B"))
        o, c = minimal_consistent_oracle(data), cnn(data, fx["cnn_seed"])
        assert list(o.source_indices) == fx["oracle_indices"]
        assert list(c.source_indices) == fx["cnn_indices"]
        assert len(o) < len(c)
        pts, labs = data.features.tolist(), labels.tolist()
        assert oracles.min_consistent_size(pts, labs) == len(o)
        elapsed = time.perf_counter() - start
        assert elapsed < 30
        info["detail"] = f"strict in {strict}/30; archived fixture {len(o)} < {len(c)}"


def test_03_enn_noise_removal():
    with criterion(3, "ENN removes flipped points, keeps clean ones") as info:
        flip_rates, clean_rates = [], []
        for seed in range(20):
            data, flipped = gen_gaussian((50, 50), [(0, 0), (4, 4)], 1.0, 0.1, seed)
            kept = set(enn(data, 3).source_indices)
            removed = set(range(data.N)) - kept
            f = set(flipped)
            flip_rates.append(len(removed & f) / len(f))
            clean_rates.append(len(removed - f) / (data.N - len(f)))
        fr, cr = float(np.mean(flip_rates)), float(np.mean(clean_rates))
        assert fr >= 0.5, f"flipped removal {fr:.3f} below hard floor 0.5"
        assert cr <= 0.35, f"clean removal {cr:.3f} above hard ceiling 0.35"
        soft = "met" if fr >= 0.7 and cr <= 0.2 else "missed"
        info["detail"] = f"flipped removed {fr:.3f}, clean removed {cr:.3f}; soft 70/20 targets {soft}"


def test_04_editing_generalisation():
    with criterion(4, "ENN editing does not hurt held-out accuracy") as info:
        start = time.perf_counter()
        edited, plain = [], []
        for seed in range(20):
            data, _ = gen_gaussian((50, 50), [(0, 0), (4, 4)], 1.0, 0.1, seed)
            proto = Protocol("holdout", holdout_fraction=0.5, seed=seed)
            edited.append(evaluate("enn", data, proto, seed=seed).generalisation_accuracy)
            plain.append(evaluate("pure-exemplar", data, proto, seed=seed).generalisation_accuracy)
        e, p = np.array(edited), np.array(plain)
        wins = int(np.sum(e > p))
        assert e.mean() >= p.mean() - 0.01
        assert wins >= 12, f"strictly better in only {wins}/20 seeds"
        assert time.perf_counter() - start < 10
        info["detail"] = f"mean {e.mean():.3f} vs {p.mean():.3f}; better in {wins}/20"


def test_05_correspondence_identities():
    with criterion(5, "psych models serialise identically to their counterparts") as info:
        s = gen_5_4().training
        blobs, _ = gen_gaussian((8, 6), [(0, 0), (3, 1)], 0.8, 0.0, 4)
        checks = 0
        for data in (s, blobs):
            for seed in (0, 1, 7):
                for k in (1, 2, 3):
                    p = ClusteringParams(k=k, seed=seed)
                    assert to_json(rex(data, p)) == to_json(cluster_post_supervised(data, p))
                    checks += 1
                assert to_json(rex_leopold_i(data, None, seed=seed)) == to_json(
                    exhaustive_select(data, EditingParams(lam=1.0, seed=seed)))
                assert to_json(rex_leopold_i(data, 3, seed=seed)) == to_json(
                    exhaustive_select(data, EditingParams(lam=1.0, seed=seed, cv_folds=3)))
                assert to_json(cluster_pre_supervised(data, 1, ClusteringParams(k=1, seed=seed))) \
                    == to_json(nearest_mean_prototypes(data))
                checks += 3
            assert to_json(pure_prototype(data)) == to_json(nearest_mean_prototypes(data))
            checks += 1
        info["detail"] = f"{checks} byte-identical pairs"


def test_06_vam_count():
    with criterion(6, "VAM enumerates Bell(5) x Bell(4) partitions of the 5-4 set") as info:
        B = oracles.bell_numbers(5)
        start = time.perf_counter()
        records = vam_enumerate(gen_5_4().training)
        elapsed = time.perf_counter() - start
        assert len(records) == B[5] * B[4] == 780
        assert sum(r.is_pure_prototype() for r in records) == 1
        assert sum(r.is_pure_exemplar() for r in records) == 1
        assert len({r.partition for r in records}) == 780
        assert elapsed < 10
        info["detail"] = f"{len(records)} records in {elapsed:.2f}s"


def test_07_rmc_boundaries():
    with criterion(7, "RMC coupling extremes") as info:
        rng = np.random.default_rng(11)
        X = rng.uniform(0, 1, (10, 2))
        data = Dataset(X, np.array([0, 1] * 5), ("A", "B"))
        assert len(np.unique(X, axis=0)) == 10
        assert len(rmc(data, RmcParams(coupling=1 - 1e-6))) == 10
        S = rmc(data, RmcParams(coupling=1e-9))
        assert len(S) == 1
        assert np.max(np.abs(S.features[0] - X.mean(axis=0))) <= 1e-9
        info["detail"] = "|S|=10 at 1-1e-6, |S|=1 at 1e-9"


def test_08_five_four_constraints():
    with criterion(8, "gen_5_4 passes an independent constraint checker") as info:
        s = gen_5_4()
        labels = [s.training.categories[i] for i in s.training.labels]
        problems = oracles.check_5_4(s.training.features.tolist(), labels, s.transfer.tolist())
        assert not problems, problems
        info["detail"] = "all constraints hold (B mode relaxed to include 0)"


def test_09_monotonicity():
    with criterion(9, "k-means objective and EM log-likelihood are monotone") as info:
        steps = 0
        for seed in range(20):
            data, _ = gen_gaussian((40, 40, 40), [(0, 0), (3, 0), (0, 3)], 1.0, 0.0, seed)
            rng = np.random.default_rng(seed)
            km = _kmeans(data.features, 4, ClusteringParams(k=4, seed=seed, tol=1e-12), EUCLIDEAN, rng)
            obj = np.array(km.objective_history)
            assert np.all(np.diff(obj) <= 1e-9), f"k-means seed {seed}"
            gm = _fit_gmm(data.features, ClusteringParams(k=3, seed=seed, tol=1e-12, max_iter=200),
                          np.random.default_rng(seed))
            ll = np.array(gm.loglik_history)
            assert np.all(np.diff(ll) >= -1e-9), f"EM seed {seed}"
            steps += len(obj) + len(ll)
        info["detail"] = f"{steps} iterations checked"


def _bench_config(tmp_path):
    cfg = {
        "datasets": [{"name": "five-four", "source": "5-4"},
                     {"name": "blobs", "source": "gaussian", "counts": [5, 5],
                      "means": [[0, 0], [3, 3]], "sigmas": 1.0, "seed": 3}],
        "methods": list(CORRESPONDENCE_METHODS),
        "protocol": {"kind": "kfold", "folds": 3},
        "lambda": 0.5, "seed": 5,
    }
    path = tmp_path / "bench.json"
    path.write_text(json.dumps(cfg))
    return path


def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_10_bench_determinism(tmp_path, capsys):
    with criterion(10, "bench output is byte-identical across runs and job counts") as info:
        cfg = _bench_config(tmp_path)
        runs = {}
        for name, jobs in (("a", "1"), ("b", "1"), ("c", "4")):
            assert cli_main(["bench", "--config", str(cfg), "--jobs", jobs,
                             "--output", str(tmp_path / name)]) == 0
            runs[name] = _tree(tmp_path / name)
        summary = runs["a"]["summary.csv"].decode()
        rows = summary.strip().splitlines()[1:]
        assert len(rows) == 2 * len(CORRESPONDENCE_METHODS) == 26
        assert all(",ok," in r for r in rows), [r for r in rows if ",ok," not in r]
        assert runs["a"]["summary.csv"] == runs["b"]["summary.csv"] == runs["c"]["summary.csv"]
        assert runs["a"] == runs["b"] == runs["c"]
        info["detail"] = f"26 cells, {len(runs['a'])} files identical"


def test_11_proportions():
    with criterion(11, "predicted proportions normalise; self-fit has zero SSE") as info:
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(10_000):
            c = int(rng.integers(1, 5))
            n = int(rng.integers(1, 4))
            size = int(rng.integers(1, 8))
            labels = rng.integers(0, c, size)
            S = ReferenceSet.generated(rng.normal(0, 3, (size, n)), labels,
                                       tuple(f"c{i}" for i in range(c)))
            gamma = float(rng.choice([0.01, 1.0, 10.0, 100.0]))
            p = predict_proportions(S, EUCLIDEAN, SimilarityParams(gamma), rng.normal(0, 5, n))
            assert np.all(p >= 0)
            worst = max(worst, abs(p.sum() - 1))
        assert worst <= 1e-9

        S = gen_5_4().training
        ref = nearest_mean_prototypes(S)
        stim = np.array(list(np.ndindex(2, 2, 2, 2)), dtype=float)
        P = predict_proportions(ref, EUCLIDEAN, SimilarityParams(1.5), stim)
        # counts are integers, so Q matches P to within 1/M per entry
        M = 10 ** 12
        counts = np.round(P * M).astype(np.int64)
        counts[:, -1] = M - counts[:, :-1].sum(axis=1)
        table = ProportionsTable(stim, counts, ref.categories)
        assert np.max(np.abs(table.proportions - P)) <= 1e-9
        sse, _ = fit_score(ref, EUCLIDEAN, SimilarityParams(1.5), table)
        assert sse <= 1e-18

        # an exactly representable case: every stimulus equidistant from A and B
        ref = ReferenceSet.generated([[0.0, 0.0], [2.0, 0.0]], [0, 1], ("A", "B"))
        stim = np.array([[1.0, y] for y in (-3.0, -0.5, 0.0, 2.0, 7.0)])
        table = ProportionsTable(stim, [[5, 5]] * 5, ("A", "B"))
        exact, _ = fit_score(ref, EUCLIDEAN, SimilarityParams(1.0), table)
        assert exact == 0.0
        info["detail"] = f"max |sum-1| = {worst:.1e}; self-fit sse = {sse:.1e}, exact case {exact}"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
