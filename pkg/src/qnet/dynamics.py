"""Time-stepped stochastic dynamics of the semiclassical lattice.

Each neuron integrates the potential it sees since its last firing,

    A(t) = v0 * (t - last_reset) + sum_pulses (v / width) * overlap + initial_amp,

and fires during a step of length ``dt`` with probability
``1 - exp(-k_rate * A**2 * dt)``. A firing resets the integral, erases the
initial-state amplitude and starts a rectangular pulse of height
``v / width`` lasting ``width`` on each neighbor.

The engine integrates ``A`` incrementally, one step at a time, inside a
numba kernel. ``accumulate_amplitude`` evaluates the same quantity from an
explicit pulse list and is what the tests compare against.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Iterable, Sequence

import numba
import numpy as np

from .lattice import LatticeSpec

DEFAULT_STEP_BUDGET = 50_000_000
_CHUNK_STEPS = 512


class PulseMode(str, Enum):
    # a new firing restarts the source's pulse; the old one is cut short
    RESTART = "restart"
    # every firing emits an independent pulse; pulses from one source add up
    STACK = "stack"


@dataclass(frozen=True)
class SimParams:
    v0: float = 1.0
    v: float = 0.2
    width: float = 0.2
    k_rate: float = 1900.0
    dt: float = 1e-4
    t_total: float = 1.0
    burn_in: float | None = None
    a_init: float = 1.0
    seed: int = 0
    pulse_mode: PulseMode = PulseMode.RESTART
    step_budget: int = DEFAULT_STEP_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "pulse_mode", PulseMode(self.pulse_mode))
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", 0.2 * self.t_total)
        for name in ("v0", "v", "width", "k_rate", "dt", "t_total", "burn_in", "a_init"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise ValueError(f"{name} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        for name in ("seed", "step_budget"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ValueError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.v0 < 0:
            raise ValueError("v0 must be non-negative")
        if self.v < 0:
            raise ValueError("v must be non-negative")
        if self.width <= 0:
            raise ValueError("width must be positive")
        if self.k_rate <= 0:
            raise ValueError("k_rate must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.dt >= self.width:
            raise ValueError("dt must be smaller than width")
        if self.t_total < 0:
            raise ValueError("t_total must be non-negative")
        if self.burn_in < 0 or (self.t_total > 0 and self.burn_in >= self.t_total):
            raise ValueError("burn_in must satisfy 0 <= burn_in < t_total")
        if self.a_init < 0:
            raise ValueError("a_init must be non-negative")
        if self.step_budget < 1:
            raise ValueError("step_budget must be positive")

    @property
    def n_steps(self) -> int:
        # tolerate t_total/dt landing a hair below an integer
        return int(math.floor(self.t_total / self.dt + 1e-9))

    def pulse_steps(self) -> tuple[int, float]:
        """Split `width` into whole steps and a fractional remainder (time units)."""
        ratio = self.width / self.dt
        n_full = round(ratio)
        if abs(ratio - n_full) > 1e-9 * max(1.0, ratio):
            n_full = math.floor(ratio)
        remainder = max(self.width - n_full * self.dt, 0.0)
        if remainder < 1e-12 * self.width:
            remainder = 0.0
        return int(n_full), remainder

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pulse_mode"] = self.pulse_mode.value
        return out


@dataclass(frozen=True)
class NeuronState:
    last_reset: float = 0.0
    initial_amp: float = 0.0


@dataclass(frozen=True)
class Pulse:
    """Rectangular pulse emitted by `source` at `start`.

    `end` defaults to ``start + width``; a restarted pulse ends early, at
    the start of its replacement.
    """

    source: int
    start: float
    end: float | None = None

    def stop(self, width: float) -> float:
        return self.start + width if self.end is None else min(self.end, self.start + width)


def accumulate_amplitude(
    neuron: NeuronState, pulses: Iterable[Pulse], params: SimParams, t: float
) -> float:
    if t < neuron.last_reset:
        raise ValueError(f"t={t} precedes last_reset={neuron.last_reset}")
    amp = params.v0 * (t - neuron.last_reset) + neuron.initial_amp
    height = params.v / params.width
    for pulse in pulses:
        lo = max(pulse.start, neuron.last_reset)
        hi = min(pulse.stop(params.width), t)
        if hi > lo:
            amp += height * (hi - lo)
    return amp


def firing_probability(amp, params: SimParams):
    """Per-step firing probability; works on scalars and arrays."""
    return -np.expm1(-params.k_rate * np.square(amp) * params.dt)


@dataclass
class SpikeLog:
    times: np.ndarray
    nodes: np.ndarray
    run_id: int
    params: SimParams
    spec: LatticeSpec

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.nodes = np.asarray(self.nodes, dtype=np.int64)
        if self.times.shape != self.nodes.shape:
            raise ValueError("times and nodes must have the same length")

    def __len__(self):
        return len(self.times)

    @property
    def events(self) -> list[tuple[float, tuple[int, int]]]:
        return [(float(t), self.spec.coords(n)) for t, n in zip(self.times, self.nodes)]


@dataclass
class LatticeState:
    """Mutable per-run state. Arrays are indexed by flat node index."""

    amp: np.ndarray
    initial_amp: np.ndarray
    last_reset_step: np.ndarray
    pulse_start_step: np.ndarray
    ring: np.ndarray
    full_count: np.ndarray
    step_index: int = 0

    @classmethod
    def fresh(cls, spec: LatticeSpec, params: SimParams, initial=None) -> "LatticeState":
        n = spec.size
        init = np.zeros(n) if initial is None else np.asarray(initial, dtype=np.float64).ravel()
        if init.shape != (n,):
            raise ValueError(f"initial amplitudes must have {n} entries, got {init.shape}")
        if np.any(init < 0) or not np.all(np.isfinite(init)):
            raise ValueError("initial amplitudes must be finite and non-negative")
        n_full, _ = params.pulse_steps()
        ring_len = n_full + 1 if params.pulse_mode is PulseMode.STACK else 1
        return cls(
            amp=init.copy(),
            initial_amp=init.copy(),
            last_reset_step=np.zeros(n, dtype=np.int64),
            pulse_start_step=np.full(n, np.iinfo(np.int64).min // 2, dtype=np.int64),
            ring=np.zeros((ring_len, n), dtype=np.uint8),
            full_count=np.zeros(n, dtype=np.int64),
        )

    def time(self, params: SimParams) -> float:
        return self.step_index * params.dt

    def neuron(self, index: int, params: SimParams) -> NeuronState:
        return NeuronState(self.last_reset_step[index] * params.dt, float(self.initial_amp[index]))


@numba.njit(cache=True, nogil=True)
def _advance(
    amp, initial_amp, last_reset_step, pulse_start_step, ring, full_count,
    neigh, draws, step0, v0, v, width, k_rate, dt, n_full, remainder, stack,
    out_steps, out_nodes,
):
    n = amp.shape[0]
    n_ring = ring.shape[0]
    height = v / width
    fired = np.zeros(n, dtype=np.bool_)
    weight = np.zeros(n)
    n_events = 0
    for c in range(draws.shape[0]):
        m = step0 + c
        # firing decisions from step-start amplitudes
        for i in range(n):
            a = amp[i]
            fired[i] = draws[c, i] < -math.expm1(-k_rate * a * a * dt)
        # pulse time each source contributes inside [m*dt, (m+1)*dt)
        if stack:
            slot_now = m % n_ring
            slot_old = (m - n_full) % n_ring
            for j in range(n):
                full_count[j] += ring[slot_now, j]
                partial = 0
                if m - n_full >= 0:
                    partial = ring[slot_old, j]
                    full_count[j] -= partial
                weight[j] = full_count[j] * dt + partial * remainder
        else:
            for j in range(n):
                lag = m - pulse_start_step[j]
                if 0 <= lag < n_full:
                    weight[j] = dt
                elif lag == n_full:
                    weight[j] = remainder
                else:
                    weight[j] = 0.0
        for i in range(n):
            if fired[i]:
                amp[i] = 0.0
                initial_amp[i] = 0.0
                last_reset_step[i] = m + 1
                out_steps[n_events] = m + 1
                out_nodes[n_events] = i
                n_events += 1
            else:
                drive = 0.0
                for q in range(neigh.shape[1]):
                    j = neigh[i, q]
                    if j >= 0:
                        drive += weight[j]
                amp[i] += v0 * dt + height * drive
        # register pulses starting at (m+1)*dt
        if stack:
            slot_next = (m + 1) % n_ring
            for i in range(n):
                ring[slot_next, i] = 1 if fired[i] else 0
        else:
            for i in range(n):
                if fired[i]:
                    pulse_start_step[i] = m + 1
    return n_events


def _advance_state(state: LatticeState, params: SimParams, spec: LatticeSpec, draws: np.ndarray):
    n_full, remainder = params.pulse_steps()
    cap = draws.shape[0] * draws.shape[1]
    out_steps = np.empty(cap, dtype=np.int64)
    out_nodes = np.empty(cap, dtype=np.int64)
    n_events = _advance(
        state.amp, state.initial_amp, state.last_reset_step, state.pulse_start_step,
        state.ring, state.full_count, spec.neighbor_table, draws, state.step_index,
        params.v0, params.v, params.width, params.k_rate, params.dt, n_full, remainder,
        params.pulse_mode is PulseMode.STACK, out_steps, out_nodes,
    )
    state.step_index += draws.shape[0]
    return out_steps[:n_events].copy(), out_nodes[:n_events].copy()


def step(state: LatticeState, params: SimParams, spec: LatticeSpec, rng: np.random.Generator):
    """Advance one step in place; return (event_time, fired flat indices)."""
    draws = rng.random((1, spec.size))
    steps, nodes = _advance_state(state, params, spec, draws)
    return state.step_index * params.dt, nodes


def run_stream(seed: int, run_id: int = 0, experiment: int = 0) -> np.random.Generator:
    """Independent random stream for run `run_id` of experiment `experiment`."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, experiment, run_id])))


def run(
    params: SimParams,
    spec: LatticeSpec,
    initial: Sequence[float] | np.ndarray | None = None,
    *,
    run_id: int = 0,
    experiment: int = 0,
    rng: np.random.Generator | None = None,
) -> SpikeLog:
    """Simulate from t=0 to t_total and return the full spike log."""
    n_steps = params.n_steps
    if n_steps > params.step_budget:
        raise ResourceError(
            f"{n_steps} steps requested (t_total={params.t_total}, dt={params.dt}) "
            f"exceeds the step budget of {params.step_budget}"
        )
    if rng is None:
        rng = run_stream(params.seed, run_id, experiment)
    state = LatticeState.fresh(spec, params, initial)
    chunks_t, chunks_n = [], []
    done = 0
    while done < n_steps:
        count = min(_CHUNK_STEPS, n_steps - done)
        steps, nodes = _advance_state(state, params, spec, rng.random((count, spec.size)))
        chunks_t.append(steps * params.dt)
        chunks_n.append(nodes)
        done += count
    times = np.concatenate(chunks_t) if chunks_t else np.empty(0)
    nodes = np.concatenate(chunks_n) if chunks_n else np.empty(0, dtype=np.int64)
    return SpikeLog(times, nodes, run_id, params, spec)


class ResourceError(RuntimeError):
    """A run would exceed its configured step budget."""


__all__ = [
    "PulseMode", "SimParams", "NeuronState", "Pulse", "SpikeLog", "LatticeState",
    "accumulate_amplitude", "firing_probability", "step", "run", "run_stream",
    "ResourceError",
]
