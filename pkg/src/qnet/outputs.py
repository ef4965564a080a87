"""Serialization of experiment results to CSV, whitespace .dat and JSON.

Floats are written with 9 significant digits using Python's locale-free
formatting. Every file is written to a temporary sibling and renamed into
place, so a failed write leaves no partial file behind. A lock file keeps
two writers out of the same directory.
"""

from __future__ import annotations

import json
import math
import os
import subprocess
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .config import RunConfig, config_to_dict
from .experiments import ExperimentResult
from .predictor import fit_kq

LOCK_NAME = ".qnet.lock"


class OutputLockedError(RuntimeError):
    pass


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".9g")


def _json_float(x):
    if x is None:
        return None
    x = float(x)
    if not math.isfinite(x):
        return None
    return float(fmt(x))


def git_describe() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here, capture_output=True, text=True, timeout=5, check=True,
        )
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@contextmanager
def output_lock(directory: Path):
    directory.mkdir(parents=True, exist_ok=True)
    lock = directory / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise OutputLockedError(f"{directory} is locked by another writer ({lock})") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _table(header: Sequence[str], rows: Iterable[Sequence], kind: str) -> str:
    if kind == "csv":
        lines = [",".join(header)]
        lines += [",".join(fmt(x) for x in row) for row in rows]
    else:
        lines = ["# " + " ".join(header)]
        lines += [" ".join(fmt(x) for x in row) for row in rows]
    return "\n".join(lines) + "\n"


def _tables(result: ExperimentResult) -> dict[str, tuple[list[str], list]]:
    log = result.log
    if log is not None and len(log):
        rows, cols = np.divmod(log.nodes, log.spec.cols)
        spikes = list(zip(log.times.tolist(), rows.tolist(), cols.tolist()))
    else:
        spikes = []
    cumulative = [] if result.cumulative is None else result.cumulative.tolist()
    if result.rates is None:
        rates = []
    else:
        r = result.rates
        rates = list(zip(r.starts.tolist(), r.mean.tolist(), r.stderr.tolist()))
    tables = {
        "spikes": (["t", "row", "col"], spikes),
        "cumulative": (["t", "count"], cumulative),
        "rates": (["bin_start", "mean_rate", "stderr"], rates),
    }
    if result.tracked_cumulative is not None:
        tables["tracked_cumulative"] = (["t", "count"], result.tracked_cumulative.tolist())
    return tables


def _config_echo(result: ExperimentResult, config: RunConfig | None) -> dict:
    if config is not None:
        echo = config_to_dict(config)
        # the run's own parameters win: sweeps substitute one value per point
        echo["dynamics"] = result.params.to_dict()
        return echo
    return {
        "lattice": {
            "rows": result.spec.rows,
            "cols": result.spec.cols,
            "boundary": result.spec.boundary.value,
        },
        "dynamics": result.params.to_dict(),
    }


def summary_dict(result: ExperimentResult, config: RunConfig | None = None) -> dict:
    period = result.period
    out = {
        "label": result.label,
        "config": _config_echo(result, config),
        "seed": result.params.seed,
        "pattern": None if result.pattern is None else result.pattern.value,
        "period": {
            "mean": _json_float(period.mean_period) if period else None,
            "std_error": _json_float(period.std_error) if period else None,
            "n_intervals": period.n_intervals if period else 0,
        },
        "per_run_periods": [_json_float(x) for x in result.per_run_periods],
        "prediction": _json_float(result.prediction),
        "prediction_params": None,
        "fits": {
            name: {
                "slope": _json_float(f.slope),
                "intercept": _json_float(f.intercept),
                "r_squared": _json_float(f.r_squared),
            }
            for name, f in sorted(result.fits.items())
        },
        "stats": {name: _json_float(value) for name, value in sorted(result.stats.items())},
        "tool_version": __version__,
        "git_describe": git_describe(),
    }
    if result.prediction_params is not None:
        p = result.prediction_params
        out["prediction_params"] = {
            "k": _json_float(p.k), "q": _json_float(p.q), "v0": _json_float(p.v0),
            "v": _json_float(p.v), "width": _json_float(p.width),
        }
    return out


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_result_files(result, directory: Path, formats, config) -> list[Path]:
    written = []
    for name, (header, rows) in _tables(result).items():
        for kind in ("csv", "dat"):
            if kind in formats:
                path = directory / f"{name}.{kind}"
                _atomic_write(path, _table(header, rows, kind))
                written.append(path)
    if "json" in formats:
        path = directory / "summary.json"
        _atomic_write(path, _dump_json(summary_dict(result, config)))
        written.append(path)
    return written


def write_outputs(
    result: ExperimentResult,
    directory,
    formats: Iterable[str] = ("csv", "dat", "json"),
    config: RunConfig | None = None,
) -> list[Path]:
    """Write one result's files into `directory`; return the paths written."""
    directory = Path(directory)
    formats = set(formats)
    with output_lock(directory):
        return _write_result_files(result, directory, formats, config)


def _point_dirname(result: ExperimentResult, which: str) -> str:
    return f"{which}={fmt(getattr(result.params, which))}"


def write_sweep_outputs(
    results: Sequence[ExperimentResult],
    which: str,
    directory,
    formats: Iterable[str] = ("csv", "dat", "json"),
    config: RunConfig | None = None,
) -> list[Path]:
    """Per-point subdirectories plus a top-level summary.json of the sweep."""
    directory = Path(directory)
    formats = set(formats)
    written = []
    with output_lock(directory):
        for result in results:
            sub = directory / _point_dirname(result, which)
            sub.mkdir(parents=True, exist_ok=True)
            written += _write_result_files(result, sub, formats, config)
        rows = [
            (getattr(r.params, which), r.prediction, r.period.mean_period, r.period.std_error)
            for r in results
        ]
        header = [which, "predicted", "simulated", "stderr"]
        for kind in ("csv", "dat"):
            if kind in formats:
                path = directory / f"sweep.{kind}"
                _atomic_write(path, _table(header, rows, kind))
                written.append(path)
        if "json" in formats:
            summary = {
                "sweep_param": which,
                "points": [
                    {
                        which: _json_float(x),
                        "predicted": _json_float(pred),
                        "simulated": _json_float(sim),
                        "std_error": _json_float(err),
                    }
                    for x, pred, sim, err in rows
                ],
                "prediction_params": summary_dict(results[0], config)["prediction_params"],
                "fit": _sweep_fit(results),
                "seed": results[0].params.seed,
                "config": _config_echo(results[0], config),
                "tool_version": __version__,
                "git_describe": git_describe(),
            }
            path = directory / "summary.json"
            _atomic_write(path, _dump_json(summary))
            written.append(path)
    return written


def _sweep_fit(results):
    obs = [(r.params.v0, r.params.v, r.params.width, r.period.mean_period) for r in results]
    try:
        fit = fit_kq(obs)
    except ValueError:
        return None
    return {
        "k": _json_float(fit.k),
        "q": _json_float(fit.q),
        "log_residuals": [_json_float(x) for x in fit.residuals],
        "max_relative_residual": _json_float(np.max(np.abs(fit.relative_residuals))),
    }
