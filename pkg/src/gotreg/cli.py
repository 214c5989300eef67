"""Command-line interface: ``gotreg {fit,predict,loo,simulate,convert-hmd,convert-ghcnd}``.

Exit codes: 0 success, 2 usage, 3 ingestion, 4 geometry, 5 numeric.
Errors are reported on stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np

from . import __version__
from .converters import convert_ghcnd, convert_hmd
from .dataio import load_dataset, load_manifest, write_plot_data, write_points
from .errors import GotError, IngestionError
from .harness import (
    GeneratorSpec,
    Scenario,
    alpha_recovery,
    format_value,
    loo_evaluate,
    method_comparison,
    order_recovery,
    prediction_gap,
    round_floats,
)
from .regression import FitConfig, GotModel, fit, predict

EXIT_USAGE = 2

SIM_SPACES = {
    "wasserstein": lambda grid: {"kind": "wasserstein", "dim": grid or 200, "support": [-10.0, 10.0]},
    "euclidean": lambda grid: {"kind": "euclidean", "dim": 2},
    "spd": lambda grid: {"kind": "spd", "dim": 2},
    "sphere": lambda grid: {"kind": "sphere", "dim": 3},
}


def fmt(x):
    return format_value(float(x))


def _write_json(path, data):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(round_floats(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fit_config(args, **overrides):
    kwargs = {"seed": args.seed}
    if args.alpha_bound is not None:
        kwargs["alpha_bound"] = args.alpha_bound
        grid = tuple(g for g in FitConfig().grid if abs(g) <= args.alpha_bound)
        kwargs["grid"] = grid or (0.0,)
    if getattr(args, "max_starts", None) is not None:
        kwargs["max_starts"] = args.max_starts
    kwargs.update(overrides)
    return FitConfig(**kwargs)


def _output_dir(args):
    os.makedirs(args.output_dir, exist_ok=True)
    return args.output_dir


# ---------------------------------------------------------------------------
# commands


def cmd_fit(args):
    manifest = load_manifest(args.manifest)
    space = manifest.build_space(args.grid_size)
    data = load_dataset(manifest, space)
    model = fit(data.X, data.Y, space, _fit_config(args))
    model.diagnostics["predictor_names"] = data.predictor_names
    out = os.path.join(_output_dir(args), "model.json")
    model.save(out)
    names = [data.predictor_names[j] for j in model.ordering]
    print("ordering: " + " ".join(names))
    print("alpha: " + " ".join(fmt(a) for a in model.alpha))
    print("training_loss: " + fmt(model.training_loss))
    print("model: " + out)
    return 0


def cmd_predict(args):
    try:
        model = GotModel.load(args.model)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise IngestionError(f"cannot read model {args.model}: {exc}") from exc
    manifest = load_manifest(args.manifest, require_response=False)
    space = model.space
    if manifest.descriptor(space.point_dim if space.kind == "wasserstein" else None) != space.descriptor:
        raise IngestionError("input manifest space does not match the model space")
    data = load_dataset(manifest, space)
    pred = predict(model, data.X)
    out_dir = _output_dir(args)
    pred_path = os.path.join(out_dir, "predictions.csv")
    plot_path = os.path.join(out_dir, "plot_data.csv")
    fmt_name = write_points(pred_path, space, data.ids, pred, manifest.id_column)
    write_plot_data(plot_path, space, data.ids, pred)
    print(f"predictions: {pred_path} ({fmt_name}, {len(data.ids)} rows)")
    print(f"plot_data: {plot_path}")
    if data.Y is not None:
        err = space.distance(data.Y, pred)
        print("mean_error: " + fmt(np.mean(err)))
    return 0


def cmd_loo(args):
    manifest = load_manifest(args.manifest)
    space = manifest.build_space(args.grid_size)
    data = load_dataset(manifest, space)
    methods = ["got", "nw"] if args.method == "both" else [args.method]
    config = _fit_config(args)
    results = {}
    for method in methods:
        res = loo_evaluate(
            space, data.X, data.Y, method, config, nw_predictor=args.nw_predictor, threads=args.threads
        )
        results[method] = res
        print(f"{method}_loo_error: {fmt(res.mean_error)}" + (f" ({len(res.failures)} failed folds)" if res.failures else ""))
    out_dir = _output_dir(args)
    report = {
        "manifest": os.path.basename(args.manifest),
        "space": space.descriptor.to_dict(),
        "fit_config": config.to_dict(),
        "nw_predictor": args.nw_predictor,
        "methods": {
            m: {
                "mean_error": r.mean_error,
                "errors": [None if np.isnan(e) else float(e) for e in r.errors],
                "failures": {data.ids[i]: msg for i, msg in r.failures.items()},
            }
            for m, r in results.items()
        },
        "library_version": __version__,
    }
    _write_json(os.path.join(out_dir, "loo.json"), report)
    with open(os.path.join(out_dir, "loo.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(["id"] + methods) + "\n")
        for i, key in enumerate(data.ids):
            fh.write(",".join([key] + [fmt(results[m].errors[i]) for m in methods]) + "\n")
    return 0


def cmd_simulate(args):
    alpha = tuple(args.alpha)
    if any(abs(a) > (args.alpha_bound or 2.0) for a in alpha):
        raise ValueError("|alpha*| must not exceed the coefficient bound")
    scenario = Scenario(
        space=SIM_SPACES[args.space](args.grid_size),
        alpha_star=alpha,
        ordering_star=tuple(range(len(alpha))),
        sigma=args.sigma,
        generator=GeneratorSpec(),
        fit=_fit_config(args, max_starts=args.max_starts),
    )
    if args.experiment == "order":
        report = order_recovery(scenario, args.n, args.replications, args.seed, args.threads)
        print("recovery_rate: " + fmt(report.summary["recovery_rate"]))
    elif args.experiment == "gap":
        sizes = tuple(args.sizes)
        report = prediction_gap(scenario, sizes, args.replications, args.seed, args.test_size, args.threads)
        for n in sizes:
            s = report.summary[f"n{n}"]
            print(f"delta n={n}: q25 {fmt(s['q25_delta'])} median {fmt(s['median_delta'])} q75 {fmt(s['q75_delta'])}")
    elif args.experiment == "compare":
        report = method_comparison(scenario, args.n, args.replications, args.seed, args.nw_predictor, args.threads)
        s = report.summary
        print(f"got_wins: {s['got_wins']} of {s['replications']}")
        print("median_got_loo: " + fmt(s["median_got_loo"]) + " median_nw_loo: " + fmt(s["median_nw_loo"]))
    else:
        report = alpha_recovery(scenario, args.n, args.seed)
        print("alpha: " + " ".join(fmt(a) for a in report.records[0]["alpha"]))
        print("max_abs_error: " + fmt(report.summary["max_abs_error"]))
    paths = report.write(_output_dir(args))
    print("report: " + " ".join(paths))
    return 0


def cmd_convert_hmd(args):
    count = convert_hmd(args.input, args.year, args.output, args.grid_size or 200)
    print(f"wrote {count} distributions to {args.output}")
    return 0


def cmd_convert_ghcnd(args):
    count = convert_ghcnd(args.input, args.year, args.months, args.output)
    print(f"wrote samples of {count} stations to {args.output}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _common(p, threads=False):
    p.add_argument("--alpha-bound", type=float, default=None, help="coefficient box half-width (default 2)")
    p.add_argument("--grid-size", type=int, default=None, help="quantile grid size for wasserstein data")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", default=".")
    if threads:
        p.add_argument("--threads", type=int, default=1, help="worker processes")


def build_parser():
    parser = argparse.ArgumentParser(prog="gotreg", description="Geodesic optimal transport regression")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model and write model.json")
    p.add_argument("--manifest", required=True)
    _common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict responses for new predictors")
    p.add_argument("--model", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--output-dir", default=".")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("loo", help="leave-one-out prediction errors")
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", choices=("got", "nw", "both"), default="both")
    p.add_argument("--nw-predictor", type=int, default=0, help="predictor index used by Nadaraya-Watson")
    p.add_argument("--max-starts", type=int, default=None, help="multi-start cap of the coefficient search (default 64)")
    _common(p, threads=True)
    p.set_defaults(func=cmd_loo)

    p = sub.add_parser("simulate", help="Monte Carlo experiments on synthetic GOT data")
    p.add_argument("--experiment", choices=("order", "gap", "compare", "alpha"), default="order")
    p.add_argument("--space", choices=sorted(SIM_SPACES), default="wasserstein")
    p.add_argument("--alpha", type=float, nargs="+", default=[0.8, 0.3], help="generating coefficients")
    p.add_argument("--sigma", type=float, default=0.05, help="perturbation amplitude")
    p.add_argument("--n", type=int, default=500, help="sample size (order/compare/alpha)")
    p.add_argument("--sizes", type=int, nargs="+", default=[50, 500], help="sample sizes (gap)")
    p.add_argument("--replications", type=int, default=100)
    p.add_argument("--test-size", type=int, default=1000)
    p.add_argument("--nw-predictor", type=int, default=0)
    p.add_argument("--max-starts", type=int, default=4, help="multi-start cap of the coefficient search")
    _common(p, threads=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("convert-hmd", help="HMD life tables -> quantiles CSV")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--grid-size", type=int, default=200)
    p.set_defaults(func=cmd_convert_hmd)

    p = sub.add_parser("convert-ghcnd", help="GHCN-Daily CSV -> (tmin, tmax) pairs CSV")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--year", type=int, required=True)
    p.add_argument("--months", type=int, nargs="+", default=[6, 7, 8, 9])
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_convert_ghcnd)
    return parser


def _fail(exc, code):
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args)
    except GotError as exc:
        return _fail(exc, exc.exit_code)
    except ValueError as exc:
        return _fail(exc, EXIT_USAGE)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
