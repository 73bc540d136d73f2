import json
import subprocess
import sys

import pytest

from refsel.cli import main
from refsel.core import EUCLIDEAN, Metric
from refsel.data import (ProportionsTable, gen_5_4, gen_gaussian, load_csv, save_csv,
                         save_proportions)
from refsel.harness import Protocol, evaluate
from refsel.methods import build, method_names
from refsel.nn import is_consistent, load_refset, to_json


@pytest.fixture
def five_four(tmp_path):
    path = tmp_path / "d.csv"
    assert main(["dataset", "gen-5-4", "--output", str(path)]) == 0
    return path


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_select_cnn_is_consistent(tmp_path, five_four, capsys):
    ref = tmp_path / "s.json"
    assert main(["select", "cnn", "--input", str(five_four), "--seed", "7", "-o", str(ref)]) == 0
    code, out, _ = run(["eval", "--input", str(five_four), "--refset", str(ref)], capsys)
    assert code == 0
    assert json.loads(out)["consistent"] is True
    train = load_csv(five_four).labelled()
    assert is_consistent(load_refset(ref), train)


def test_select_twice_is_byte_identical(tmp_path, five_four):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["select", "cnn", "-i", str(five_four), "--seed", "3", "-o", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_unknown_method_is_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["select", "bogus", "--input", "x.csv"])
    code = info.value.code
    err = capsys.readouterr().err
    assert code == 1
    for name in method_names("select"):
        assert name in err


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as info:
        main(["dataset", "gen-5-4", "--frobnicate"])
    assert info.value.code == 1


def test_runtime_error_exit_2(tmp_path, capsys):
    code, _, err = run(["select", "cnn", "--input", str(tmp_path / "missing.csv")], capsys)
    assert code == 2 and "missing.csv" in err


def test_bench_requires_output(tmp_path, capsys):
    (tmp_path / "c.json").write_text("{}")
    code, _, err = run(["bench", "--config", str(tmp_path / "c.json")], capsys)
    assert code == 1 and "--output" in err


@pytest.mark.parametrize("family,names", [("select", method_names("select")),
                                          ("generate", method_names("generate")),
                                          ("psych", method_names("psych"))])
def test_cli_matches_library(tmp_path, five_four, family, names):
    data = load_csv(five_four).labelled()
    for name in names:
        out = tmp_path / f"{name}.json"
        assert main([family, name, "-i", str(five_four), "--seed", "2", "-o", str(out)]) == 0, name
        assert out.read_text() == to_json(build(name, data, None, EUCLIDEAN, 2)), name


def test_cli_params_forwarded(tmp_path, five_four):
    data = load_csv(five_four).labelled()
    out = tmp_path / "k.json"
    assert main(["generate", "kmeans-pre", "-i", str(five_four), "-k", "2", "-o", str(out)]) == 0
    assert out.read_text() == to_json(build("kmeans-pre", data, {"k": 2}, EUCLIDEAN, 0))
    assert main(["psych", "rmc", "-i", str(five_four), "--coupling", "0.2", "-o", str(out)]) == 0
    assert out.read_text() == to_json(build("rmc", data, {"coupling": 0.2}, EUCLIDEAN, 0))


def test_select_with_hamming_and_report(tmp_path, five_four):
    out, rep = tmp_path / "s.json", tmp_path / "r.csv"
    assert main(["select", "enn", "-i", str(five_four), "--metric", "hamming", "-k", "1",
                 "-o", str(out), "--report", str(rep), "--format", "csv"]) == 0
    data = load_csv(five_four).labelled()
    assert out.read_text() == to_json(build("enn", data, {"k": 1}, Metric("hamming"), 0))
    header, row = rep.read_text().splitlines()
    assert "reduction_rate" in header.split(",")


def test_eval_method_matches_library(tmp_path, capsys):
    data, _ = gen_gaussian((10, 10), [(0, 0), (3, 3)], 1.0, 0.1, 4)
    path = tmp_path / "g.csv"
    save_csv(data, path)
    code, out, _ = run(["eval", "-i", str(path), "--method", "enn", "--protocol", "kfold",
                        "--folds", "4", "--seed", "5"], capsys)
    assert code == 0
    lib = evaluate("enn", load_csv(path), Protocol("kfold", folds=4, seed=5), seed=5)
    assert json.loads(out) == json.loads(lib.to_json(timing=False))


def test_fit_command(tmp_path, five_four, capsys):
    ref = tmp_path / "p.json"
    assert main(["psych", "pure-prototype", "-i", str(five_four), "-o", str(ref)]) == 0
    q = tmp_path / "q.csv"
    s = gen_5_4().training
    save_proportions(ProportionsTable(s.features, [[4, 1]] * 9, ("A", "B")), q,
                     s.feature_names)
    code, out, _ = run(["fit", "--refset", str(ref), "--proportions", str(q),
                        "--gamma-grid", "0.5,1,2"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["gamma"] in (0.5, 1.0, 2.0) and doc["sse"] >= 0 and doc["rows"] == 9


def test_dataset_gaussian_flipped(tmp_path):
    d, f = tmp_path / "g.csv", tmp_path / "f.txt"
    assert main(["dataset", "gaussian", "--counts", "30,30", "--noise-rate", "0.1", "--seed", "2",
                 "-o", str(d), "--flipped-output", str(f)]) == 0
    lib, flipped = gen_gaussian((30, 30), [(0, 0), (3, 3)], 1.0, 0.1, 2)
    assert load_csv(d, lib.categories) == lib
    assert [int(v) for v in f.read_text().split()] == flipped.tolist()


def test_dataset_to_stdout(capsys):
    code, out, _ = run(["dataset", "gen-5-4", "--training-only"], capsys)
    assert code == 0 and out.splitlines()[0] == "f1,f2,f3,f4,label"
    assert len(out.splitlines()) == 10


@pytest.mark.parametrize("sub,needle", [("select", "default: 0.5"), ("select", "default: 3"),
                                        ("eval", "default: 1.0"), ("generate", "default: 2"),
                                        ("psych", "default: 0.5"), ("bench", "--jobs")])
def test_help_documents_defaults(capsys, sub, needle):
    with pytest.raises(SystemExit) as info:
        main([sub, "--help"])
    assert info.value.code == 0
    help_text = " ".join(capsys.readouterr().out.split())
    assert needle in help_text and "--seed" in help_text


def test_module_entry_point(tmp_path):
    out = tmp_path / "d.csv"
    proc = subprocess.run([sys.executable, "-m", "refsel", "dataset", "gen-5-4", "-o", str(out)],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert load_csv(out).N == 16
