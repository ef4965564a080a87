"""Spike-train statistics for simulated lattices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dynamics import SpikeLog
from .predictor import PeriodEstimate


class InsufficientDataError(ValueError):
    pass


def _intervals(times: np.ndarray, nodes: np.ndarray, burn_in: float) -> np.ndarray:
    order = np.lexsort((times, nodes))
    t, n = times[order], nodes[order]
    same = (n[1:] == n[:-1]) & (t[:-1] > burn_in)
    return np.diff(t)[same]


def interspike_intervals(log: SpikeLog, burn_in: float | None = None) -> np.ndarray:
    """Pooled consecutive intervals per neuron with both spikes after `burn_in`."""
    if burn_in is None:
        burn_in = log.params.burn_in
    return _intervals(log.times, log.nodes, burn_in)


def mean_period(log: SpikeLog, burn_in: float | None = None) -> PeriodEstimate:
    """Pooled mean inter-spike interval.

    Raises InsufficientDataError when no neuron has two spikes after the
    burn-in window.
    """
    isi = interspike_intervals(log, burn_in)
    if len(isi) == 0:
        raise InsufficientDataError(
            f"no inter-spike interval after burn-in: {len(log)} events in total, "
            f"{int(np.sum(log.times > (log.params.burn_in if burn_in is None else burn_in)))} "
            "after burn-in"
        )
    std_error = float(isi.std(ddof=1) / np.sqrt(len(isi))) if len(isi) > 1 else 0.0
    return PeriodEstimate(float(isi.mean()), std_error, int(len(isi)))


def cumulative_counts(log: SpikeLog, node: tuple[int, int] | None = None) -> np.ndarray:
    """(n, 2) array of (time, cumulative count), starting at (0, 0)."""
    times = log.times
    if node is not None:
        times = times[log.nodes == log.spec.index(node)]
    times = np.sort(times, kind="stable")
    counts = np.arange(1, len(times) + 1, dtype=np.float64)
    return np.column_stack([np.concatenate([[0.0], times]), np.concatenate([[0.0], counts])])


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def linear_fit(series) -> LinearFit:
    """Ordinary least squares. R^2 is 0 by convention when y has no variance."""
    xy = np.asarray(series, dtype=np.float64)
    if xy.ndim != 2 or xy.shape[1] != 2 or len(xy) < 3:
        raise ValueError("linear_fit needs at least 3 (x, y) points")
    x, y = xy[:, 0], xy[:, 1]
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0:
        raise ValueError("linear_fit needs x values that are not all equal")
    dy = y - y.mean()
    slope = float(dx @ dy) / sxx
    intercept = float(y.mean() - slope * x.mean())
    syy = float(dy @ dy)
    if syy == 0:
        return LinearFit(slope, intercept, 0.0)
    resid = dy - slope * dx
    r2 = 1.0 - float(resid @ resid) / syy
    return LinearFit(slope, intercept, min(max(r2, 0.0), 1.0))


def post_burn_in(series: np.ndarray, burn_in: float) -> np.ndarray:
    return series[series[:, 0] > burn_in]


@dataclass
class RateSeries:
    bin_width: float
    starts: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    t_end: float | None = None

    @property
    def complete(self) -> np.ndarray:
        """Mask of bins lying entirely inside the simulated time."""
        if self.t_end is None:
            return np.ones(len(self.starts), dtype=bool)
        return self.starts + self.bin_width <= self.t_end * (1 + 1e-12)

    @property
    def bins(self) -> list[tuple[float, float, float]]:
        return list(zip(self.starts.tolist(), self.mean.tolist(), self.stderr.tolist()))

    def __len__(self):
        return len(self.starts)


def _binned(log: SpikeLog, bin_width: float, n_bins: int) -> np.ndarray:
    idx = np.floor(log.times / bin_width).astype(np.int64)
    # an event exactly at t_total belongs to the last bin
    idx = np.clip(idx, 0, n_bins - 1)
    return np.bincount(idx, minlength=n_bins)[:n_bins].astype(np.float64) / log.spec.size


def rate_timeseries(logs: Sequence[SpikeLog], bin_width: float) -> RateSeries:
    """Firings per neuron per bin, averaged over runs with across-run standard error."""
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    if len(logs) == 0:
        raise ValueError("need at least one spike log")
    ref = logs[0]
    for log in logs[1:]:
        if _comparable(log.params) != _comparable(ref.params) or log.spec != ref.spec:
            raise ValueError(f"run {log.run_id} has parameters that differ from run {ref.run_id}")
    t_total = ref.params.t_total
    n_bins = max(int(np.ceil(t_total / bin_width - 1e-9)), 1)
    per_run = np.stack([_binned(log, bin_width, n_bins) for log in logs])
    mean = per_run.mean(axis=0)
    if len(logs) > 1:
        stderr = per_run.std(axis=0, ddof=1) / np.sqrt(len(logs))
    else:
        stderr = np.zeros(n_bins)
    return RateSeries(bin_width, np.arange(n_bins) * bin_width, mean, stderr, t_total)


def _comparable(params):
    # runs of one experiment share everything except their random stream
    d = params.to_dict()
    d.pop("seed")
    return d


def plateau_mean(series: RateSeries, tail_bins: int | None = None) -> float:
    """Mean of the last `tail_bins` complete bins (default: last quarter, at least 10)."""
    mean = series.mean[series.complete]
    return float(mean[-_tail_size(len(mean), tail_bins):].mean())


def _tail_size(n: int, tail_bins: int | None) -> int:
    tail = max(10, n // 4) if tail_bins is None else tail_bins
    if tail < 10 or n < tail:
        raise ValueError(f"need a tail of at least 10 bins, series has {n} bins")
    return tail


def memory_decay_time(series: RateSeries, epsilon: float = 0.05, tail_bins: int | None = None) -> float:
    """Earliest bin start after which every bin stays within `epsilon` of the plateau.

    Only complete bins take part. Returns 0 when the first bin already
    qualifies and the series end when the last bin still does not.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    plateau = plateau_mean(series, tail_bins)
    keep = series.complete
    mean, starts = series.mean[keep], series.starts[keep]
    outside = np.abs(mean - plateau) > epsilon * abs(plateau)
    if plateau == 0:
        outside = mean != 0
    if not outside.any():
        return 0.0
    last = int(np.flatnonzero(outside)[-1])
    if last + 1 >= len(mean):
        return float(starts[-1] + series.bin_width)
    return float(starts[last + 1])
