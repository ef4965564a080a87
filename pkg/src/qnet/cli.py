"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime or
resource error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys
from pathlib import Path

from . import experiments
from .config import ConfigError, RunConfig, load_config
from .dynamics import ResourceError
from .outputs import OutputLockedError, write_outputs, write_sweep_outputs
from .predictor import PredictionParams, fit_kq, predicted_period

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3
DEFAULT_OUT = "qnet-out"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _float_list(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty value list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qnet", description="Semiclassical integrate-and-fire lattice simulator")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, with_seed=True):
        p.add_argument("--config", required=True, help="TOML run configuration")
        if with_seed:
            p.add_argument("--seed", type=int, help="override the configured seed")
        p.add_argument("--out", help="output directory (default: $QNET_OUT, config, ./qnet-out)")

    p = sub.add_parser("simulate", help="run the experiment described by a config file")
    common(p)

    p = sub.add_parser("sweep", help="sweep pulse strength or width")
    p.add_argument("--param", required=True, choices=["v", "width"])
    p.add_argument("--values", required=True, type=_float_list)
    p.add_argument("--runs", type=int, help="runs per value (default: config)")
    common(p)

    p = sub.add_parser("predict", help="power-law period for given parameters")
    for name in ("--v0", "--v", "--width", "--k", "--q"):
        p.add_argument(name, required=True, type=float)

    p = sub.add_parser("fit", help="fit k and q to measured periods")
    p.add_argument("--data", required=True, help="CSV with columns v0,v,width,period")

    p = sub.add_parser("input-exp", help="input-pattern memory experiment")
    p.add_argument("--pattern", required=True, choices=[x.value for x in experiments.InputPattern])
    p.add_argument("--runs", type=int, default=None, help="number of runs (default 100)")
    common(p)
    return parser


def _out_dir(args, cfg: RunConfig) -> Path:
    if args.out:
        return Path(args.out)
    if cfg.output.dir:
        return Path(cfg.output.dir)
    return Path(os.environ.get("QNET_OUT", DEFAULT_OUT))


_KIND_FOR_COMMAND = {"sweep": "sweep", "input-exp": "input"}


def _load(args) -> RunConfig:
    cfg = load_config(args.config, _KIND_FOR_COMMAND.get(args.command))
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, dynamics=dataclasses.replace(cfg.dynamics, seed=args.seed))
    return cfg


def _run_config(cfg: RunConfig, out: Path) -> list[Path]:
    exp = cfg.experiment
    formats = cfg.output.formats
    if exp.kind == "sweep":
        results = experiments.sweep(
            exp.values, exp.sweep_param, cfg.dynamics, cfg.lattice, exp.runs,
            k=exp.k, q=exp.q, workers=exp.workers,
        )
        return write_sweep_outputs(results, exp.sweep_param.value, out, formats, cfg)
    if exp.kind == "input":
        result = experiments.input_experiment(
            exp.pattern, cfg.dynamics, cfg.lattice, exp.runs,
            bin_width=exp.bin_width, epsilon=exp.epsilon, workers=exp.workers,
        )
        return write_outputs(result, out, formats, cfg)
    result = experiments.single_run_diagnostics(cfg.dynamics, cfg.lattice, exp.tracked_node)
    if exp.k is not None:
        p = cfg.dynamics
        result.prediction_params = PredictionParams(exp.k, exp.q, p.v0, p.v, p.width)
        result.prediction = predicted_period(result.prediction_params)
    return write_outputs(result, out, formats, cfg)


def _read_fit_data(path) -> list[tuple[float, float, float, float]]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                values = tuple(float(x) for x in row)
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ValueError(f"{path}:{lineno}: not numeric: {row}")
            if len(values) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 columns v0,v,width,period")
            rows.append(values)
    return rows


def _dispatch(args) -> int:
    if args.command == "predict":
        tau = predicted_period(PredictionParams(args.k, args.q, args.v0, args.v, args.width))
        print(f"{tau:.6g}")
        return EXIT_OK
    if args.command == "fit":
        fit = fit_kq(_read_fit_data(args.data))
        print(f"k = {fit.k:.6g}")
        print(f"q = {fit.q:.6g}")
        print(f"rms_log_residual = {fit.rms:.4g}")
        for r in fit.relative_residuals:
            print(f"relative_residual {r:+.4f}")
        return EXIT_OK

    cfg = _load(args)
    exp = cfg.experiment
    if args.command == "sweep":
        exp = dataclasses.replace(
            exp, kind="sweep", sweep_param=args.param, values=tuple(args.values),
            runs=args.runs if args.runs is not None else exp.runs,
        )
    elif args.command == "input-exp":
        runs = args.runs if args.runs is not None else 100
        exp = dataclasses.replace(exp, kind="input", pattern=args.pattern, runs=runs)
    cfg = dataclasses.replace(cfg, experiment=exp)
    for path in _run_config(cfg, _out_dir(args, cfg)):
        print(path)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return _dispatch(args)
    except (ResourceError, OutputLockedError, OSError) as exc:
        print(f"qnet: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ConfigError, ValueError) as exc:
        print(f"qnet: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
