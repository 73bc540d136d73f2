"""Command-line interface: ``refsel <subcommand> ...``.

Exit status is 0 on success, 1 on a usage error and 2 on a runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import methods
from .core import Metric, SimilarityParams, METRIC_KINDS
from .data import dataset_to_csv, gen_5_4, gen_gaussian, load_csv, load_proportions, save_csv
from .errors import RefselError
from .harness import (PROTOCOL_KINDS, Protocol, benchmark, evaluate, fit_gamma, fit_score,
                      metric_to_dict)
from .nn import load_refset, predict_proportions, to_json, training_accuracy
from .selection import EditingParams, random_editing

SELECT = methods.method_names("select")
GENERATE = methods.method_names("generate")
PSYCH = methods.method_names("psych")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _matrix(text):
    return [_floats(row) for row in text.split(";")]


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    g.add_argument("--metric", choices=METRIC_KINDS, default="euclidean",
                   help="distance (default: euclidean)")
    g.add_argument("--p", type=float, default=2.0, help="minkowski exponent (default: 2)")
    g.add_argument("--weights", type=_floats, default=None,
                   help="per-dimension weights, comma separated (default: all ones)")
    g.add_argument("--output", "-o", default=None, help="output path (default: stdout)")
    g.add_argument("--format", choices=("json", "csv"), default="json",
                   help="report format (default: json)")
    return p


def _report_opt(p):
    p.add_argument("--report", default=None, help="also write a summary report here")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = Parser(prog="refsel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND",
                                parser_class=Parser)

    p = sub.add_parser("dataset", parents=[common], help="generate a dataset CSV")
    p.add_argument("kind", choices=("gen-5-4", "gaussian"))
    p.add_argument("--training-only", action="store_true",
                   help="gen-5-4: omit the unlabelled transfer stimuli")
    p.add_argument("--counts", type=_ints, default=[30, 30], help="gaussian: points per category (default: 30,30)")
    p.add_argument("--means", type=_matrix, default=[[0.0, 0.0], [3.0, 3.0]],
                   help="gaussian: category means, rows separated by ';' (default: 0,0;3,3)")
    p.add_argument("--sigmas", type=_floats, default=[1.0], help="gaussian: per-category std dev (default: 1.0)")
    p.add_argument("--noise-rate", type=float, default=0.0, help="gaussian: label-flip fraction (default: 0.0)")
    p.add_argument("--flipped-output", default=None,
                   help="gaussian: write flipped indices (one per line) here")

    p = sub.add_parser("select", parents=[common], help="prototype selection")
    p.add_argument("method", choices=SELECT)
    p.add_argument("--input", "-i", required=True, help="dataset CSV")
    p.add_argument("--validation", default=None,
                   help="random: validation CSV (default: the input itself)")
    p.add_argument("-k", dest="k", type=int, default=None, help="enn/hybrid neighbourhood (default: 3)")
    p.add_argument("--lambda", dest="lambda", type=float, default=None,
                   help="random/exhaustive error-size trade-off (default: 0.5)")
    p.add_argument("-T", dest="T", type=int, default=None, help="random: candidate subsets (default: 100)")
    p.add_argument("--cv-folds", dest="cv_folds", type=int, default=None,
                   help="exhaustive: folds (default: leave-one-out)")
    p.add_argument("--cap", type=int, default=None, help="exhaustive: subset cap (default: 2^20)")
    _report_opt(p)

    p = sub.add_parser("generate", parents=[common], help="prototype generation")
    p.add_argument("method", choices=GENERATE)
    p.add_argument("--input", "-i", required=True, help="dataset CSV")
    p.add_argument("-k", dest="k", type=int, default=None,
                   help="clusters (per category for kmeans-pre; default: 2)")
    p.add_argument("--max-iter", dest="max_iter", type=int, default=None, help="default: 100")
    p.add_argument("--tol", type=float, default=None, help="convergence threshold (default: 1e-6)")
    p.add_argument("--variance-floor", dest="variance_floor", type=float, default=None,
                   help="gmm: variance floor (default: 1e-6)")
    p.add_argument("--mode", choices=("pre_supervised", "post_supervised"), default=None,
                   help="gmm: component/category relation (default: post_supervised)")
    p.add_argument("--prototypes-per-category", dest="prototypes_per_category", type=int,
                   default=None, help="lvq (default: 1)")
    p.add_argument("--alpha0", type=float, default=None, help="lvq: initial rate (default: 0.3)")
    p.add_argument("--epochs", type=int, default=None, help="lvq (default: 30)")
    _report_opt(p)

    p = sub.add_parser("psych", parents=[common], help="psychological categorisation models")
    p.add_argument("method", choices=PSYCH)
    p.add_argument("--input", "-i", required=True, help="dataset CSV")
    p.add_argument("--coupling", type=float, default=None, help="rmc (default: 0.5)")
    p.add_argument("--label-weight", dest="label_weight", type=float, default=None,
                   help="rmc (default: 1.0)")
    p.add_argument("--shuffle", action="store_const", const=True, default=None,
                   help="rmc: shuffle presentation order with --seed")
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None,
                   help="sustain (default: 0.1)")
    p.add_argument("--epochs", type=int, default=None, help="sustain (default: 10)")
    p.add_argument("-k", dest="k", type=int, default=None, help="rex clusters (default: 2)")
    p.add_argument("--cv-folds", dest="cv_folds", type=int, default=None,
                   help="rex-leopold-1 folds (default: leave-one-out)")
    p.add_argument("--cap", type=int, default=None,
                   help="vam (default: 10^6) / rex-leopold-1 (default: 2^20) search cap")
    _report_opt(p)

    p = sub.add_parser("eval", parents=[common], help="evaluate a method or a stored reference set")
    p.add_argument("--input", "-i", required=True, help="dataset CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--refset", help="score this reference-set file on the input")
    src.add_argument("--method", choices=list(methods.METHODS), help="fit and evaluate this method")
    p.add_argument("--params", type=json.loads, default=None, help="method parameters as JSON")
    p.add_argument("--protocol", choices=PROTOCOL_KINDS, default="kfold", help="default: kfold")
    p.add_argument("--folds", type=int, default=5, help="kfold folds (default: 5)")
    p.add_argument("--holdout-fraction", type=float, default=0.5, help="default: 0.5")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5, help="J trade-off (default: 0.5)")
    p.add_argument("--proportions", default=None, help="proportions CSV for fit scores")
    p.add_argument("--gamma", type=float, default=1.0, help="similarity sensitivity (default: 1.0)")

    p = sub.add_parser("fit", parents=[common], help="score a reference set against proportions")
    p.add_argument("--refset", required=True)
    p.add_argument("--proportions", required=True)
    p.add_argument("--gamma", type=float, default=1.0, help="similarity sensitivity (default: 1.0)")
    p.add_argument("--gamma-grid", type=_floats, default=None,
                   help="search these gamma values instead of using --gamma")

    p = sub.add_parser("bench", parents=[common], help="run a benchmark config")
    p.add_argument("--config", required=True, help="benchmark JSON config")
    p.add_argument("--jobs", type=int, default=1, help="parallel cells (default: 1)")
    return parser


def _metric(args):
    return Metric(args.metric, args.p, tuple(args.weights) if args.weights else None)


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, sort_keys=True, indent=2) + "\n"
    flat = {k: (json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v)
            for k, v in report.items()}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = sorted(flat)
    w.writerow(keys)
    w.writerow(["" if flat[k] is None else flat[k] for k in keys])
    return buf.getvalue()


def _method_params(args, name):
    info = methods.get_method(name)
    return {k: getattr(args, k) for k in info.defaults if getattr(args, k, None) is not None}


def _cmd_dataset(args):
    if args.kind == "gen-5-4":
        s = gen_5_4()
        data = s.training if args.training_only else s.as_dataset()
    else:
        sig = args.sigmas[0] if len(args.sigmas) == 1 else args.sigmas
        data, flipped = gen_gaussian(args.counts, args.means, sig, args.noise_rate, args.seed)
        if args.flipped_output:
            _emit("".join(f"{i}\n" for i in flipped), args.flipped_output)
    if args.output is None:
        sys.stdout.write(dataset_to_csv(data))
    else:
        save_csv(data, args.output)
    return 0


def _cmd_build(args):
    data = load_csv(args.input).labelled()
    metric = _metric(args)
    params = _method_params(args, args.method)
    if args.command == "select" and args.method == "random" and args.validation:
        p = methods.resolve_params("random", params)
        val = load_csv(args.validation, data.categories).labelled()
        S = random_editing(data, val, EditingParams(lam=p["lambda"], T=p["T"], seed=args.seed), metric)
    else:
        S = methods.build(args.method, data, params, metric, args.seed)
    _emit(to_json(S), args.output)
    if args.report:
        acc = training_accuracy(S, data, metric)
        report = {"method": args.method, "params": methods.resolve_params(args.method, params),
                  "seed": args.seed, "metric": metric_to_dict(metric), "N": data.N,
                  "size": len(S), "reduction_rate": len(S) / data.N,
                  "training_accuracy": acc, "consistent": acc == 1.0,
                  "provenance": S.provenance}
        _emit(_render(report, args.format), args.report)
    return 0


def _cmd_eval(args):
    data = load_csv(args.input)
    metric = _metric(args)
    if args.refset:
        S = load_refset(args.refset)
        data = load_csv(args.input, S.categories).labelled()
        acc = training_accuracy(S, data, metric)
        report = {"refset": args.refset, "N": data.N, "size": len(S),
                  "reduction_rate": len(S) / data.N, "training_accuracy": acc,
                  "consistent": acc == 1.0, "metric": metric_to_dict(metric)}
        if args.proportions:
            table = load_proportions(args.proportions)
            sse, ll = fit_score(S, metric, SimilarityParams(args.gamma), table)
            report["fit"] = {"gamma": args.gamma, "sse": sse, "loglik": ll}
    else:
        table = load_proportions(args.proportions) if args.proportions else None
        proto = Protocol(args.protocol, args.holdout_fraction, args.folds, args.seed)
        rep = evaluate(args.method, data, proto, metric, args.lam, args.params, args.seed,
                       table, args.gamma)
        report = rep.to_dict(timing=False)
    _emit(_render(report, args.format), args.output)
    return 0


def _cmd_fit(args):
    S = load_refset(args.refset)
    table = load_proportions(args.proportions)
    metric = _metric(args)
    if args.gamma_grid:
        gamma, sse, ll = fit_gamma(S, metric, table, args.gamma_grid)
    else:
        gamma = args.gamma
        sse, ll = fit_score(S, metric, SimilarityParams(gamma), table)
    P = predict_proportions(S, metric, SimilarityParams(gamma), table.stimuli)
    report = {"refset": args.refset, "proportions": args.proportions, "gamma": gamma,
              "sse": sse, "loglik": ll, "rows": len(table),
              "predicted": P.tolist(), "observed": table.proportions.tolist()}
    _emit(_render(report, args.format), args.output)
    return 0


def _cmd_bench(args):
    if args.output is None:
        raise UsageError("bench needs --output DIR")
    paths = benchmark(args.config, args.output, args.jobs)
    sys.stdout.write(f"wrote {len(paths)} files; summary: {paths[0]}\n")
    return 0


COMMANDS = {"dataset": _cmd_dataset, "select": _cmd_build, "generate": _cmd_build,
            "psych": _cmd_build, "eval": _cmd_eval, "fit": _cmd_fit, "bench": _cmd_bench}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"refsel: error: {e}\n")
        return 1
    except (RefselError, OSError) as e:
        sys.stderr.write(f"refsel {args.command}: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
