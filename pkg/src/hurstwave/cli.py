"""Command-line entry point: ``hurstwave <subcommand> ...``.

Exit status is 0 on success, 1 on a usage error and 2 when the input data or
files are unusable.
"""

import argparse
import csv
import json
import sys
from dataclasses import replace

import numpy as np

from .aggregation.mlp import (
    PRESETS,
    config_to_dict,
    hyperparam_search,
    mlp_forward,
    mlp_train,
    model_load,
    model_save,
)
from .errors import HurstError
from ._kernels import VALID
from .estimators import METHODS, REASONS, canonical_method
from .fbm import SignalSpec, read_signal, synthesize, write_binary, write_csv
from .filters import FILTER_NAMES, check_decorrelation, make_filter
from .harness import (
    ExperimentConfig,
    build_training_matrix,
    evaluate_metrics,
    pairmap_run,
    read_results,
    run_sweep,
    write_metrics,
    write_results,
)
from .pipeline import AGGREGATES, STANDARD_AGGREGATE, aggregate, pair_table, prepare, standard_estimate
from .wavelet import detrend_endpoints, dwt, level_energies, write_decomposition

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _noise(text):
    if text == "estimate":
        return None
    if text.startswith("fixed:"):
        try:
            v = float(text[6:])
        except ValueError:
            v = -1.0
        if v >= 0:
            return v
    raise argparse.ArgumentTypeError(f"expected 'estimate' or 'fixed:SIGMA_EPS_SQ', got {text!r}")


def _method(text):
    try:
        return canonical_method(text)
    except HurstError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser():
    p = _Parser(prog="hurstwave", description="Wavelet level-pair Hurst exponent estimation.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="synthesize fBm plus white noise")
    s.add_argument("--length", type=int, required=True)
    s.add_argument("--hurst", type=float, required=True)
    s.add_argument("--sigma-x", type=float, default=1.0)
    s.add_argument("--noise", type=float, default=0.0, help="noise standard deviation")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--format", choices=("csv", "binary"), default=None, help="default: by extension (.bin = binary)")
    s.add_argument("--out", required=True)

    d = sub.add_parser("dwt", help="decompose a signal; write coefficients and per-level energies")
    d.add_argument("--input", required=True)
    d.add_argument("--filter", default="sym6", choices=FILTER_NAMES)
    d.add_argument("--j0", type=int, default=0)
    d.add_argument("--detrend", action="store_true", help="remove the endpoint line first")
    d.add_argument("--out", required=True, help="binary coefficient container")
    d.add_argument("--energies", help="energy CSV path (default: stdout)")

    e = sub.add_parser("estimate", help="estimate H for one signal (JSON on stdout)")
    e.add_argument("--input", required=True)
    e.add_argument("--method", type=_method, default="nc_alphee", help=f"one of {', '.join(METHODS)}")
    e.add_argument("--filter", default="sym6", choices=FILTER_NAMES)
    e.add_argument("--jmin", type=int, default=3)
    e.add_argument("--jmax", type=int, default=13)
    e.add_argument("--aggregate", action="append", choices=AGGREGATES,
                   help="repeatable; default wmean and wmedian")
    e.add_argument("--noise", type=_noise, default=None, metavar="estimate|fixed:V",
                   help="noise variance used by NC-ALPHEE (default: estimated from the finest level)")
    e.add_argument("--model", help="model file for the nn aggregate")
    e.add_argument("--no-detrend", action="store_true", help="skip the endpoint line removal")

    m = sub.add_parser("simulate", help="run a Monte Carlo sweep")
    m.add_argument("--config", required=True)
    m.add_argument("--out", required=True)
    m.add_argument("--metrics", help="also write per-cell metrics")
    m.add_argument("--seed", type=int, help="override base_seed")
    m.add_argument("--workers", type=int)

    t = sub.add_parser("train", help="train the NN aggregator at one noise level")
    t.add_argument("--config", required=True)
    t.add_argument("--sigma-eps", type=float, required=True)
    t.add_argument("--out", required=True, help="model JSON path")
    t.add_argument("--report", help="training report CSV")
    t.add_argument("--trials", type=int, default=20, help="random-search trials")
    t.add_argument("--preset", choices=sorted(PRESETS), help="train a fixed configuration instead of searching")
    t.add_argument("--replicates", type=int, help="rows per H (default: config replicates)")
    t.add_argument("--seed", type=int, help="override base_seed and the training seed")
    t.add_argument("--workers", type=int)

    v = sub.add_parser("evaluate", help="summarize a results CSV")
    v.add_argument("--results", required=True)
    v.add_argument("--out", required=True)

    q = sub.add_parser("pairmap", help="count pair estimates inside the 2-sd band of an aggregate")
    q.add_argument("--config", required=True)
    q.add_argument("--hurst", type=float, required=True)
    q.add_argument("--sigma-eps", type=float, default=0.0)
    q.add_argument("--method", type=_method, default="nc_alphee")
    q.add_argument("--aggregate", choices=AGGREGATES, default="wmedian")
    q.add_argument("--seed", type=int)
    q.add_argument("--workers", type=int)
    q.add_argument("--out", required=True)
    return p


def _load_config(args):
    cfg = ExperimentConfig.from_json(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(base_seed=args.seed)
    return cfg


def cmd_synth(args):
    sig = synthesize(SignalSpec(args.length, args.hurst, args.sigma_x, args.noise, args.seed))
    fmt = args.format or ("binary" if args.out.endswith(".bin") else "csv")
    (write_binary if fmt == "binary" else write_csv)(sig, args.out)


def _finite(v):
    return v if np.isfinite(v) else None


def cmd_dwt(args):
    sig = read_signal(args.input)
    if args.detrend:
        sig = detrend_endpoints(sig)
    decomp = dwt(sig, make_filter(args.filter), args.j0)
    write_decomposition(decomp, args.out)
    rows = [(en.level, en.count, repr(en.mean_sq), repr(en.log2_energy)) for en in level_energies(decomp)]
    fh = open(args.energies, "w", newline="") if args.energies else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("level", "count", "mean_sq", "log2_energy"))
        w.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_estimate(args):
    sig = read_signal(args.input)
    filt = make_filter(args.filter)
    check_decorrelation(filt, 0.5)
    aggs = tuple(args.aggregate or ("wmean", "wmedian"))
    model = model_load(args.model) if args.model else None
    if "nn" in aggs and model is None:
        raise UsageError("the nn aggregate needs --model")
    prep = prepare(sig, filt, not args.no_detrend)
    doc = {"method": args.method, "filter": filt.name, "levels": [args.jmin, args.jmax]}
    if args.method == "standard":
        res = {STANDARD_AGGREGATE: standard_estimate(prep, args.jmin, args.jmax)}
        pairs = []
    else:
        table = pair_table(prep, args.method, args.jmin, args.jmax, args.noise)
        doc["sigma_eps_sq"] = prep.sigma_eps_sq if args.noise is None else args.noise
        res = {kind: aggregate(table, kind, model) for kind in aggs}
        pairs = [
            {"j1": a, "j2": b, "h_hat": _finite(float(h)), "variance": _finite(float(v)),
             "valid": int(c) == VALID, "reason": None if int(c) == VALID else REASONS[int(c)]}
            for (a, b), h, v, c in zip(table.pair_ids, table.h_hat, table.variance, table.code)
        ]
    doc["pairs"] = pairs
    doc["aggregates"] = {k: {"h_hat": _finite(r.h_hat), "valid_pairs": r.valid, "excluded_pairs": r.excluded}
                         for k, r in res.items()}
    json.dump(doc, sys.stdout, indent=1)
    sys.stdout.write("\n")


def cmd_simulate(args):
    cfg = _load_config(args)
    records = run_sweep(cfg, args.workers)
    write_results(records, args.out)
    if args.metrics:
        write_metrics(evaluate_metrics(records), args.metrics)


def cmd_train(args):
    cfg = _load_config(args)
    data = build_training_matrix(cfg, args.sigma_eps, replicates=args.replicates, workers=args.workers)
    seed = cfg.base_seed
    if args.preset:
        tc = replace(PRESETS[args.preset], seed=seed)
        model, report = mlp_train(data.features, data.targets, tc, data.pair_order, data.sigma_eps)
    else:
        if args.trials < 1:
            raise UsageError("--trials must be at least 1")
        result = hyperparam_search(data.features, data.targets, args.trials, seed, pair_order=data.pair_order,
                                   noise_level=data.sigma_eps)
        tc, model, report = result.config, result.model, result.report
    model_save(model, args.out)
    if args.report:
        report.write_csv(args.report)
    test = report.test_index
    wm_mse = float(np.mean((data.wmean[test] - data.targets[test]) ** 2))
    nn_pred = mlp_forward(model, data.features[test])
    json.dump({"config": config_to_dict(tc), "cv_mse": report.cv_mse, "test_mse": report.test_mse,
               "epoch_budget": report.epoch_budget, "wmean_test_mse": wm_mse,
               "nn_test_mean_abs_err": float(np.mean(np.abs(nn_pred - data.targets[test])))},
              sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_evaluate(args):
    write_metrics(evaluate_metrics(read_results(args.results)), args.out)


def cmd_pairmap(args):
    cfg = _load_config(args)
    pm = pairmap_run(cfg, args.hurst, args.sigma_eps, args.method, args.aggregate, args.workers)
    pm.write_csv(args.out)


COMMANDS = {
    "synth": cmd_synth,
    "dwt": cmd_dwt,
    "estimate": cmd_estimate,
    "simulate": cmd_simulate,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "pairmap": cmd_pairmap,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    except (HurstError, OSError, ValueError) as exc:
        print(f"hurstwave: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
