"""TOML run configuration.

Sections mirror the package modules::

    [lattice]     rows, cols, boundary
    [dynamics]    v0, v, width, k_rate, dt, t_total, burn_in, a_init, seed,
                  pulse_mode, step_budget
    [experiment]  kind, pattern, sweep_param, values, runs, tracked_node,
                  k, q, bin_width, epsilon, workers
    [output]      dir, formats

Every key is optional. Unknown sections or keys are errors. The lattice
boundary defaults to ``open`` for input experiments and ``periodic``
otherwise.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field

import tomli
import tomli_w

from .dynamics import PulseMode, SimParams
from .experiments import DEFAULT_Q, InputPattern, SweepParam
from .lattice import Boundary, LatticeSpec

KINDS = ("single", "sweep", "input")
FORMATS = ("csv", "dat", "json")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "single"
    pattern: InputPattern = InputPattern.ALL_PERIPHERAL_ONE
    sweep_param: SweepParam = SweepParam.PULSE_STRENGTH
    values: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 1.0, 10.0)
    runs: int = 20
    tracked_node: tuple[int, int] | None = None  # lattice centre when unset
    k: float | None = None
    q: float = DEFAULT_Q
    bin_width: float | None = None
    epsilon: float = 0.05
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "pattern", InputPattern(self.pattern))
        object.__setattr__(self, "sweep_param", SweepParam(self.sweep_param))
        object.__setattr__(self, "values", tuple(float(x) for x in self.values))
        if self.tracked_node is not None:
            object.__setattr__(self, "tracked_node", tuple(int(x) for x in self.tracked_node))
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {', '.join(KINDS)}")
        if not self.values:
            raise ValueError("values must not be empty")
        if any(not x > 0 for x in self.values):
            raise ValueError("values must be positive")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.tracked_node is not None and len(self.tracked_node) != 2:
            raise ValueError("tracked_node must be [row, col]")
        if self.k is not None and not self.k > 0:
            raise ValueError("k must be positive")
        if not self.q > 0:
            raise ValueError("q must be positive")
        if self.bin_width is not None and not self.bin_width > 0:
            raise ValueError("bin_width must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class OutputConfig:
    dir: str | None = None
    formats: tuple[str, ...] = FORMATS

    def __post_init__(self):
        object.__setattr__(self, "formats", tuple(self.formats))
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ValueError(f"formats must be drawn from {', '.join(FORMATS)}, got {bad}")


@dataclass(frozen=True)
class RunConfig:
    lattice: LatticeSpec = field(default_factory=LatticeSpec)
    dynamics: SimParams = field(default_factory=SimParams)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        if self.experiment.tracked_node is None:
            centre = (self.lattice.rows // 2, self.lattice.cols // 2)
            object.__setattr__(
                self, "experiment", dataclasses.replace(self.experiment, tracked_node=centre)
            )
        row, col = self.experiment.tracked_node
        if not (0 <= row < self.lattice.rows and 0 <= col < self.lattice.cols):
            raise ValueError("tracked_node must lie inside the lattice")


_SECTIONS = {
    "lattice": LatticeSpec,
    "dynamics": SimParams,
    "experiment": ExperimentConfig,
    "output": OutputConfig,
}

# which keys a semantic message refers to, for line lookup
_MESSAGE_KEY = re.compile(r"^([a-z_0-9]+)\b")


def _line_of(text: str, section: str, key: str | None) -> int | None:
    current = None
    section_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[\s*([A-Za-z0-9_\-]+)\s*\]", line)
        if m:
            current = m.group(1)
            if current == section:
                section_line = lineno
            continue
        if current == section and key is not None and re.match(rf"^{re.escape(key)}\s*=", line):
            return lineno
    return section_line


def _build(cls, section: str, table, text: str, extra: dict | None = None):
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table", _line_of(text, section, None))
    names = {f.name for f in dataclasses.fields(cls)}
    for key in table:
        if key not in names:
            raise ConfigError(f"unknown key '{key}' in [{section}]", _line_of(text, section, key))
    kwargs = dict(extra or {})
    kwargs.update(table)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        message = str(exc)
        m = _MESSAGE_KEY.match(message)
        key = m.group(1) if m and m.group(1) in table else None
        if key is None:
            key = next((k for k in table if k in message), None)
        raise ConfigError(message, _line_of(text, section, key)) from None


def parse_config(text: str, kind: str | None = None) -> RunConfig:
    """Parse and validate a TOML document; `kind` overrides [experiment] kind."""
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"syntax error: {exc}", getattr(exc, "lineno", None)) from None
    for section in doc:
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]", _line_of(text, section, None))

    experiment_table = dict(doc.get("experiment", {}))
    if kind is not None:
        experiment_table["kind"] = kind
    experiment = _build(ExperimentConfig, "experiment", experiment_table, text)
    lattice_table = dict(doc.get("lattice", {}))
    default_boundary = Boundary.OPEN if experiment.kind == "input" else Boundary.PERIODIC
    lattice = _build(LatticeSpec, "lattice", lattice_table, text, {"boundary": default_boundary})
    dynamics = _build(SimParams, "dynamics", doc.get("dynamics", {}), text)
    output = _build(OutputConfig, "output", doc.get("output", {}), text)
    try:
        return RunConfig(lattice, dynamics, experiment, output)
    except ValueError as exc:
        raise ConfigError(str(exc), _line_of(text, "experiment", "tracked_node")) from None


def config_to_dict(cfg: RunConfig) -> dict:
    def clean(obj):
        out = {}
        for f in dataclasses.fields(obj):
            value = getattr(obj, f.name)
            if value is None:
                continue
            if isinstance(value, (Boundary, PulseMode, InputPattern, SweepParam)):
                value = value.value
            elif isinstance(value, tuple):
                value = list(value)
            out[f.name] = value
        return out

    return {name: clean(getattr(cfg, name)) for name in _SECTIONS}


def serialize_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def load_config(path, kind: str | None = None) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), kind)
