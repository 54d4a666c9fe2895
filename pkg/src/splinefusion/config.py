"""Scenario configuration: nested blocks loaded from and saved to YAML.

Every key is optional; omitted keys take the tapered-cantilever defaults.
Unknown keys and invalid values raise ConfigError naming the offending field.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError

DEFAULT_LENGTH = 1.65


def collocated_positions(length: float = DEFAULT_LENGTH, count: int = 8):
    """``count`` equally spaced stations over (0, L]; shared by both sensor types."""
    xs = [length * i / count for i in range(1, count + 1)]
    return xs, list(xs)


def noncollocated_positions(length: float = DEFAULT_LENGTH, count: int = 8):
    """Accelerometers at odd and gauges at even multiples of L / (2 * count)."""
    step = length / (2 * count)
    accel = [step * (2 * i - 1) for i in range(1, count + 1)]
    strain = [step * 2 * i for i in range(1, count + 1)]
    return accel, strain


_DEFAULT_ACCEL, _DEFAULT_STRAIN = collocated_positions()


@dataclass
class GeometryBlock:
    length: float = DEFAULT_LENGTH
    width: float = 0.02
    h1: float = 0.010
    h2: float = 0.001
    youngs_modulus: float = 2.1e11
    density: float = 7850.0
    n_elements: int = 110


@dataclass
class DampingBlock:
    zeta1: float = 3.0
    zeta2: float = 4.0


@dataclass
class ExcitationBlock:
    type: str = "chirp"
    f0: float = 3.0
    f1: float = 15.0
    amplitude: float = 0.1
    position: float = DEFAULT_LENGTH
    duration: float = 40.0


@dataclass
class SamplingBlock:
    dt: float = 0.005
    seed: int = 0
    noise_accel_percent: float = 5.0
    noise_strain_percent: float = 5.0


@dataclass
class SensorsBlock:
    accel_positions: list = field(default_factory=lambda: list(_DEFAULT_ACCEL))
    strain_positions: list = field(default_factory=lambda: list(_DEFAULT_STRAIN))
    # None -> half the local section depth (surface-mounted gauges)
    strain_depths: list | None = None
    bc_displacement: list = field(default_factory=lambda: [0.0])
    bc_slope: list = field(default_factory=lambda: [0.0])
    bc_displacement_values: list | None = None
    bc_slope_values: list | None = None


@dataclass
class BasisBlock:
    degree: int = 3
    n_internal_knots: int | None = 5
    # when set, overrides n_internal_knots
    m: int | None = None

    @property
    def count(self) -> int:
        if self.m is not None:
            return int(self.m)
        return int(self.n_internal_knots) + int(self.degree) - 1


@dataclass
class FilterBlock:
    # explicit per-channel standard deviations; None -> fraction x channel RMS
    q_acc: list | None = None
    r_strain: list | None = None
    q_acc_fraction: float = 0.2
    r_strain_fraction: float = 0.01
    theta0_scale: float = 1e-2
    bc_variance_floor: float = 1e-16


@dataclass
class QueryBlock:
    positions: list | None = None
    grid_count: int = 111


_BLOCKS = {
    "geometry": GeometryBlock,
    "damping": DampingBlock,
    "excitation": ExcitationBlock,
    "sampling": SamplingBlock,
    "sensors": SensorsBlock,
    "basis": BasisBlock,
    "filter": FilterBlock,
    "query": QueryBlock,
}


@dataclass
class ScenarioConfig:
    geometry: GeometryBlock = field(default_factory=GeometryBlock)
    damping: DampingBlock = field(default_factory=DampingBlock)
    excitation: ExcitationBlock = field(default_factory=ExcitationBlock)
    sampling: SamplingBlock = field(default_factory=SamplingBlock)
    sensors: SensorsBlock = field(default_factory=SensorsBlock)
    basis: BasisBlock = field(default_factory=BasisBlock)
    filter: FilterBlock = field(default_factory=FilterBlock)
    query: QueryBlock = field(default_factory=QueryBlock)

    def __post_init__(self):
        validate(self)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data) -> "ScenarioConfig":
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("top level must be a mapping of blocks")
        blocks = {}
        for name, value in data.items():
            if name not in _BLOCKS:
                raise ConfigError(f"unknown block (expected one of {sorted(_BLOCKS)})", name)
            blocks[name] = _build_block(name, _BLOCKS[name], value)
        return cls(**blocks)

    def query_positions(self) -> np.ndarray:
        if self.query.positions is not None:
            return np.asarray(self.query.positions, dtype=float)
        return np.linspace(0.0, self.geometry.length, int(self.query.grid_count))

    def strain_depths(self) -> np.ndarray:
        s = self.sensors
        if s.strain_depths is not None:
            return np.asarray(s.strain_depths, dtype=float)
        g = self.geometry
        x = np.asarray(s.strain_positions, dtype=float)
        return 0.5 * (g.h1 + (g.h2 - g.h1) * x / g.length)

    def digest(self) -> str:
        return config_hash(self)

    def replace(self, **overrides) -> "ScenarioConfig":
        """Copy with dotted-key overrides, e.g. ``replace(**{"basis.m": 6})``."""
        data = self.to_dict()
        for key, value in overrides.items():
            block, _, name = key.partition(".")
            if block not in data or name not in data[block]:
                raise ConfigError("unknown field", key)
            data[block][name] = value
        return ScenarioConfig.from_dict(data)


def _build_block(name, cls, value):
    if value is None:
        return cls()
    if not isinstance(value, dict):
        raise ConfigError("block must be a mapping", name)
    known = {f.name for f in fields(cls)}
    for key in value:
        if key not in known:
            raise ConfigError(f"unknown key (expected one of {sorted(known)})", f"{name}.{key}")
    return cls(**value)


def _number(value, where, positive=False, integer=False, allow_zero=True):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", where)
    if not np.isfinite(value):
        raise ConfigError("must be finite", where)
    if integer and int(value) != value:
        raise ConfigError(f"expected an integer, got {value!r}", where)
    if positive and not (value > 0 or (allow_zero and value == 0)):
        raise ConfigError(f"must be {'non-negative' if allow_zero else 'positive'}, got {value!r}", where)


def _number_list(values, where, lo=None, hi=None, positive=False):
    if not isinstance(values, (list, tuple)):
        raise ConfigError("expected a list of numbers", where)
    for i, v in enumerate(values):
        _number(v, f"{where}[{i}]")
        if positive and not v > 0:
            raise ConfigError(f"must be positive, got {v!r}", f"{where}[{i}]")
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise ConfigError(f"position {v!r} outside the beam [0, {hi}]", f"{where}[{i}]")


def validate(cfg: ScenarioConfig) -> None:
    g = cfg.geometry
    for name in ("length", "width", "h1", "h2", "youngs_modulus", "density"):
        _number(getattr(g, name), f"geometry.{name}", positive=True, allow_zero=False)
    _number(g.n_elements, "geometry.n_elements", integer=True)
    if g.n_elements < 2:
        raise ConfigError("need at least 2 elements", "geometry.n_elements")
    L = g.length

    for name in ("zeta1", "zeta2"):
        _number(getattr(cfg.damping, name), f"damping.{name}", positive=True)

    e = cfg.excitation
    if e.type != "chirp":
        raise ConfigError(f"only 'chirp' excitation is supported, got {e.type!r}", "excitation.type")
    for name in ("f0", "f1", "duration"):
        _number(getattr(e, name), f"excitation.{name}", positive=True, allow_zero=False)
    if e.f1 < e.f0:
        raise ConfigError("must be >= f0", "excitation.f1")
    _number(e.amplitude, "excitation.amplitude")
    _number(e.position, "excitation.position")
    if not 0 <= e.position <= L:
        raise ConfigError(f"load position outside the beam [0, {L}]", "excitation.position")

    s = cfg.sampling
    _number(s.dt, "sampling.dt", positive=True, allow_zero=False)
    _number(s.seed, "sampling.seed", integer=True, positive=True)
    _number(s.noise_accel_percent, "sampling.noise_accel_percent", positive=True)
    _number(s.noise_strain_percent, "sampling.noise_strain_percent", positive=True)
    if s.dt > e.duration:
        raise ConfigError("longer than the excitation duration", "sampling.dt")

    sn = cfg.sensors
    _number_list(sn.accel_positions, "sensors.accel_positions", 0.0, L)
    _number_list(sn.strain_positions, "sensors.strain_positions", 0.0, L)
    _number_list(sn.bc_displacement, "sensors.bc_displacement", 0.0, L)
    _number_list(sn.bc_slope, "sensors.bc_slope", 0.0, L)
    if sn.strain_depths is not None:
        _number_list(sn.strain_depths, "sensors.strain_depths", positive=True)
        if len(sn.strain_depths) != len(sn.strain_positions):
            raise ConfigError("needs one depth per strain gauge", "sensors.strain_depths")
    for vals, pos in (("bc_displacement_values", "bc_displacement"),
                      ("bc_slope_values", "bc_slope")):
        v = getattr(sn, vals)
        if v is not None:
            _number_list(v, f"sensors.{vals}")
            if len(v) != len(getattr(sn, pos)):
                raise ConfigError(f"needs one value per sensors.{pos} entry", f"sensors.{vals}")

    b = cfg.basis
    _number(b.degree, "basis.degree", integer=True, positive=True)
    if b.degree < 2:
        raise ConfigError("strain rows need second derivatives: degree >= 2", "basis.degree")
    if b.m is not None:
        _number(b.m, "basis.m", integer=True)
        if b.m < b.degree + 1:
            raise ConfigError(f"need m >= degree + 1 = {b.degree + 1}", "basis.m")
    elif b.n_internal_knots is None:
        raise ConfigError("set either basis.m or basis.n_internal_knots", "basis.n_internal_knots")
    else:
        _number(b.n_internal_knots, "basis.n_internal_knots", integer=True)
        if b.n_internal_knots < 2:
            raise ConfigError("need at least 2 knots", "basis.n_internal_knots")
    m = b.count
    p, q = len(sn.accel_positions), len(sn.strain_positions)
    if p < m or q < m:
        raise ConfigError(
            f"under-determined: need at least m={m} accelerometers and gauges, got p={p}, q={q}",
            "sensors",
        )

    f = cfg.filter
    for name, n in (("q_acc", p), ("r_strain", q)):
        v = getattr(f, name)
        if v is not None:
            _number_list(v, f"filter.{name}")
            if len(v) != n or min(v) < 0:
                raise ConfigError(f"needs {n} non-negative entries", f"filter.{name}")
    _number(f.q_acc_fraction, "filter.q_acc_fraction", positive=True)
    _number(f.r_strain_fraction, "filter.r_strain_fraction", positive=True)
    _number(f.theta0_scale, "filter.theta0_scale", positive=True, allow_zero=False)
    _number(f.bc_variance_floor, "filter.bc_variance_floor", positive=True, allow_zero=False)

    qb = cfg.query
    if qb.positions is not None:
        _number_list(qb.positions, "query.positions", 0.0, L)
    else:
        _number(qb.grid_count, "query.grid_count", integer=True)
        if qb.grid_count < 2:
            raise ConfigError("need at least 2 grid points", "query.grid_count")


def config_hash(cfg: ScenarioConfig) -> str:
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 reads "1e-2" (no dot) as a string; accept plain scientific notation
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*)?(?:\.[0-9_]*)?[eE][-+]?[0-9]+$""", re.X),
    list("-+0123456789."),
)


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", str(path)) from exc
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else str(path)
        raise ConfigError(f"YAML parse error: {getattr(exc, 'problem', exc)}", where) from exc
    try:
        return ScenarioConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(str(exc), str(path)) from exc


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def save_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(dump_config(cfg))
