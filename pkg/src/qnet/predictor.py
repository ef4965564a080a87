"""Analytic period laws for the lattice and their calibration.

The central law is the power law

    1/tau = k * (v0 + 4 q v / width) ** (2/3)

together with the cubic it reduces from (q = 1, k = kp ** (1/3)), the
small-signal form, and the classical integrate-and-fire period for
comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import gamma

NEIGHBORS = 4


@dataclass(frozen=True)
class PredictionParams:
    k: float
    q: float
    v0: float
    v: float
    width: float

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be positive")
        if not self.q > 0:
            raise ValueError("q must be positive")
        if self.v0 < 0 or self.v < 0:
            raise ValueError("v0 and v must be non-negative")
        if not self.width > 0:
            raise ValueError("width must be positive")
        if not drive(self.v0, self.v, self.width, self.q) > 0:
            raise ValueError("v0 + 4*q*v/width must be positive")


@dataclass(frozen=True)
class PeriodEstimate:
    mean_period: float
    std_error: float
    n_intervals: int


def drive(v0: float, v: float, width: float, q: float = 1.0) -> float:
    return v0 + NEIGHBORS * q * v / width


def classical_period(coupling: float, current: float) -> float:
    """Phase-locked period (1 - A) / I of the classical network."""
    if not current > 0:
        raise ValueError("external current I must be positive")
    if coupling > 1:
        raise ValueError("coupling A > 1 would give a negative period")
    return (1.0 - coupling) / current


def perturbative_period(kp: float, v0_integral: float, neighbor_integral: float) -> float:
    if v0_integral == 0:
        raise ValueError("background integral must be nonzero")
    return kp * (1.0 - neighbor_integral**2) / v0_integral**2


def _cubic_coefficient(kp, v0, v, width):
    if not kp > 0:
        raise ValueError("kp must be positive")
    if not width > 0:
        raise ValueError("width must be positive")
    a = drive(v0, v, width)
    if not a > 0:
        raise ValueError("v0 + 4*v/width must be positive")
    return kp * a * a


def solve_period_cubic(kp: float, v0: float, v: float, width: float) -> float:
    """Positive root of 1/tau = kp * (v0 tau + 4 v tau / width)**2, closed form."""
    c = _cubic_coefficient(kp, v0, v, width)
    return c ** (-1.0 / 3.0)


def solve_period_cubic_bracketed(kp: float, v0: float, v: float, width: float) -> float:
    """Same root found by bracketing on g(tau) = c tau**3 - 1."""
    c = _cubic_coefficient(kp, v0, v, width)

    def g(tau):
        return c * tau**3 - 1.0

    hi = 1.0
    while g(hi) < 0:
        hi *= 2.0
    lo = hi / 2.0
    while g(lo) > 0:
        lo /= 2.0
    return brentq(g, lo, hi, xtol=lo * 1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def predicted_period(p: PredictionParams) -> float:
    return 1.0 / (p.k * drive(p.v0, p.v, p.width, p.q) ** (2.0 / 3.0))


def calibrate_k(observed: PeriodEstimate | float, q: float, v0: float, v: float, width: float) -> float:
    """Normalization k that makes the power law hit `observed` exactly."""
    tau = observed.mean_period if isinstance(observed, PeriodEstimate) else float(observed)
    if not tau > 0:
        raise ValueError("observed period must be positive")
    a = drive(v0, v, width, q)
    if not (a > 0 and width > 0):
        raise ValueError("degenerate coefficient v0 + 4*q*v/width")
    return 1.0 / (tau * a ** (2.0 / 3.0))


def k_from_rate(k_rate: float) -> float:
    """Power-law normalization implied by a microscopic rate constant.

    A neuron whose amplitude grows linearly as ``a*s`` fires with hazard
    ``k_rate*(a*s)**2``; its mean waiting time is
    ``Gamma(4/3) * (3 / (k_rate * a**2)) ** (1/3)``, i.e. the power law with
    q = 1 and the k returned here.
    """
    if not k_rate > 0:
        raise ValueError("k_rate must be positive")
    return k_rate ** (1.0 / 3.0) / (gamma(4.0 / 3.0) * 3.0 ** (1.0 / 3.0))


def rate_from_k(k: float) -> float:
    if not k > 0:
        raise ValueError("k must be positive")
    return 3.0 * (k * gamma(4.0 / 3.0)) ** 3


@dataclass(frozen=True)
class KQFit:
    k: float
    q: float
    residuals: np.ndarray  # log(tau_pred / tau_obs) per point

    @property
    def relative_residuals(self) -> np.ndarray:
        # (pred - obs) / obs
        return np.expm1(self.residuals)

    @property
    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.residuals**2)))


def fit_kq(observations: Sequence[Sequence[float]], q_bounds=(1e-4, 1e4)) -> KQFit:
    """Least-squares fit of (k, q) in log space.

    `observations` holds (v0, v, width, period) rows. For a given q the
    optimal ln k is the mean residual, so only q needs a 1-D search.
    """
    obs = np.asarray(observations, dtype=np.float64)
    if obs.ndim != 2 or obs.shape[1] != 4:
        raise ValueError("observations must be rows of (v0, v, width, period)")
    if len(obs) < 2:
        raise ValueError(f"need at least 2 observations, got {len(obs)}")
    v0, v, width, tau = obs.T
    if np.any(tau <= 0) or np.any(width <= 0) or np.any(v0 < 0) or np.any(v < 0):
        raise ValueError("periods and widths must be positive, v0 and v non-negative")
    if np.all(v == 0):
        raise ValueError("q is unidentifiable when every observation has v = 0")
    log_rate = -np.log(tau)

    def offsets(log_q):
        return log_rate - (2.0 / 3.0) * np.log(v0 + NEIGHBORS * np.exp(log_q) * v / width)

    def cost(log_q):
        r = offsets(log_q)
        return float(np.sum((r - r.mean()) ** 2))

    lo, hi = math.log(q_bounds[0]), math.log(q_bounds[1])
    grid = np.linspace(lo, hi, 401)
    costs = [cost(g) for g in grid]
    i = int(np.argmin(costs))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    best = minimize_scalar(cost, bounds=(a, b), method="bounded", options={"xatol": 1e-12})
    log_q = best.x if best.fun <= costs[i] else grid[i]
    log_k = float(offsets(log_q).mean())
    residuals = offsets(log_q) - log_k  # log(tau_pred) - log(tau_obs)
    return KQFit(k=math.exp(log_k), q=math.exp(log_q), residuals=residuals)
