"""Experiment drivers: parameter sweeps, input-pattern memory runs and
single-run diagnostics.

Run ``i`` of an experiment labelled ``label`` draws from the random stream
``(seed, crc32(label), i)``, so results never depend on which other
experiments were run or on the order runs were scheduled in.
"""

from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from . import analytics
from .analytics import LinearFit, RateSeries
from .dynamics import SimParams, SpikeLog, run, run_stream
from .lattice import Boundary, LatticeSpec, boundary_walk
from .predictor import (
    PeriodEstimate,
    PredictionParams,
    calibrate_k,
    k_from_rate,
    predicted_period,
)

DEFAULT_Q = 1.4
SWEEP_LATTICE = LatticeSpec(40, 40, Boundary.PERIODIC)
INPUT_LATTICE = LatticeSpec(40, 40, Boundary.OPEN)


class SweepParam(str, Enum):
    PULSE_STRENGTH = "v"
    PULSE_WIDTH = "width"


class InputPattern(str, Enum):
    ALL_PERIPHERAL_ONE = "all-one"
    PERIPHERAL_ALTERNATING = "alternating"
    PERIPHERAL_RANDOM = "random"
    ALL_ZERO = "all-zero"


def initial_amplitudes(
    pattern: InputPattern, spec: LatticeSpec, a_init: float, rng: np.random.Generator | None = None
) -> np.ndarray:
    pattern = InputPattern(pattern)
    amp = np.zeros(spec.size)
    if pattern is InputPattern.ALL_ZERO:
        return amp
    walk = [spec.index(node) for node in boundary_walk(spec)]
    if pattern is InputPattern.ALL_PERIPHERAL_ONE:
        amp[walk] = a_init
    elif pattern is InputPattern.PERIPHERAL_ALTERNATING:
        amp[walk[::2]] = a_init
    else:
        if rng is None:
            raise ValueError("random pattern needs a random stream")
        amp[walk] = rng.uniform(0.0, a_init, size=len(walk))
    return amp


def experiment_id(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


@dataclass
class ExperimentResult:
    label: str
    params: SimParams
    spec: LatticeSpec
    pattern: InputPattern | None = None
    per_run_periods: list[float] = field(default_factory=list)
    period: PeriodEstimate | None = None
    rates: RateSeries | None = None
    cumulative: np.ndarray | None = None
    tracked_cumulative: np.ndarray | None = None
    prediction: float | None = None
    prediction_params: PredictionParams | None = None
    fits: dict[str, LinearFit] = field(default_factory=dict)
    stats: dict[str, float] = field(default_factory=dict)
    log: SpikeLog | None = None


def run_batch(params, spec, label, runs, pattern=None, workers=1) -> list[SpikeLog]:
    """Run `runs` independent simulations on the streams of experiment `label`."""
    exp = experiment_id(label)

    def one(i):
        rng = run_stream(params.seed, i, exp)
        initial = None
        if pattern is not None:
            initial = initial_amplitudes(pattern, spec, params.a_init, rng)
        return run(params, spec, initial, run_id=i, rng=rng)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(one, range(runs)))
    return [one(i) for i in range(runs)]


def pooled_period(logs: Sequence[SpikeLog]) -> PeriodEstimate:
    isi = np.concatenate([analytics.interspike_intervals(log) for log in logs])
    if len(isi) == 0:
        raise analytics.InsufficientDataError(
            f"no inter-spike intervals after burn-in across {len(logs)} runs"
        )
    stderr = float(isi.std(ddof=1) / np.sqrt(len(isi))) if len(isi) > 1 else 0.0
    return PeriodEstimate(float(isi.mean()), stderr, int(len(isi)))


def _run_period(log):
    try:
        return analytics.mean_period(log).mean_period
    except analytics.InsufficientDataError:
        return float("nan")


def sweep(
    values: Sequence[float],
    which: SweepParam | str,
    base: SimParams,
    spec: LatticeSpec = SWEEP_LATTICE,
    runs_per_value: int = 20,
    *,
    k: float | None = None,
    q: float = DEFAULT_Q,
    workers: int = 1,
) -> list[ExperimentResult]:
    """Measure the mean period at each value of `which`.

    Each point carries the power-law prediction. Without an explicit `k`,
    k is calibrated on the first point's measured period at the given `q`.
    """
    which = SweepParam(which)
    if len(values) == 0:
        raise ValueError("sweep needs at least one value")
    if runs_per_value < 1:
        raise ValueError("runs_per_value must be at least 1")
    points = []
    for value in values:
        if not value > 0:
            raise ValueError(f"sweep value {which.value}={value!r} must be positive")
        try:
            points.append(replace(base, **{which.value: float(value)}))
        except ValueError as exc:
            raise ValueError(f"sweep value {which.value}={value!r}: {exc}") from None

    results = []
    for value, params in zip(values, points):
        label = f"sweep:{which.value}={float(value)!r}"
        logs = run_batch(params, spec, label, runs_per_value, workers=workers)
        result = ExperimentResult(label, params, spec)
        result.per_run_periods = [_run_period(log) for log in logs]
        result.period = pooled_period(logs)
        result.cumulative = analytics.cumulative_counts(logs[0])
        result.log = logs[0]
        results.append(result)

    if k is None:
        first = results[0].params
        k = calibrate_k(results[0].period, q, first.v0, first.v, first.width)
    for result in results:
        p = result.params
        result.prediction_params = PredictionParams(k, q, p.v0, p.v, p.width)
        result.prediction = predicted_period(result.prediction_params)
    return results


def rate_period(params: SimParams) -> float:
    """Power-law period implied by the microscopic rate constant (q = 1)."""
    return predicted_period(
        PredictionParams(k_from_rate(params.k_rate), 1.0, params.v0, params.v, params.width)
    )


def input_experiment(
    pattern: InputPattern | str,
    base: SimParams,
    spec: LatticeSpec = INPUT_LATTICE,
    runs: int = 100,
    *,
    bin_width: float | None = None,
    epsilon: float = 0.05,
    workers: int = 1,
) -> ExperimentResult:
    """Average the firing-rate transient for one input pattern over `runs` runs.

    The default bin is a tenth of the rate-implied period so the first bin
    isolates the initially excited nodes.
    """
    pattern = InputPattern(pattern)
    if runs < 1:
        raise ValueError("runs must be at least 1")
    if pattern is not InputPattern.ALL_ZERO and (spec.rows < 2 or spec.cols < 2):
        raise ValueError("peripheral input patterns need at least a 2x2 lattice")
    if bin_width is None:
        bin_width = rate_period(base) / 10.0
    label = f"input:{pattern.value}"
    logs = run_batch(base, spec, label, runs, pattern=pattern, workers=workers)
    result = ExperimentResult(label, base, spec, pattern=pattern)
    result.per_run_periods = [_run_period(log) for log in logs]
    try:
        result.period = pooled_period(logs)
    except analytics.InsufficientDataError:
        result.period = None
    result.rates = analytics.rate_timeseries(logs, bin_width)
    result.cumulative = analytics.cumulative_counts(logs[0])
    result.log = logs[0]
    if base.v0 + base.v > 0:
        result.prediction = rate_period(base)
    plateau = analytics.plateau_mean(result.rates)
    result.stats = {
        "first_bin_rate": float(result.rates.mean[0]),
        "plateau_rate": plateau,
        "memory_decay_time": analytics.memory_decay_time(result.rates, epsilon),
        "epsilon": epsilon,
    }
    return result


def single_run_diagnostics(
    base: SimParams,
    spec: LatticeSpec = SWEEP_LATTICE,
    tracked_node: tuple[int, int] | None = None,
    *,
    run_id: int = 0,
) -> ExperimentResult:
    """One run with raster data and linear fits of the cumulative counts.

    The tracked node defaults to the lattice centre.
    """
    if tracked_node is None:
        tracked_node = (spec.rows // 2, spec.cols // 2)
    spec.index(tracked_node)
    label = "single"
    log = run(base, spec, run_id=run_id, rng=run_stream(base.seed, run_id, experiment_id(label)))
    result = ExperimentResult(label, base, spec, log=log)
    pooled = analytics.cumulative_counts(log)
    node = analytics.cumulative_counts(log, tracked_node)
    result.cumulative = pooled
    result.stats["tracked_node"] = spec.index(tracked_node)
    for name, series in (("pooled", pooled), ("tracked", node)):
        tail = analytics.post_burn_in(series, base.burn_in)
        if len(tail) >= 3:
            result.fits[name] = analytics.linear_fit(tail)
    try:
        result.period = analytics.mean_period(log)
        result.per_run_periods = [result.period.mean_period]
    except analytics.InsufficientDataError:
        result.per_run_periods = [float("nan")]
    result.tracked_cumulative = node
    return result
