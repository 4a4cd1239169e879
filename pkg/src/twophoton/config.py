"""Plain ``key = value`` run configurations.

One assignment per line, ``#`` starts a comment, list values are comma
separated.  Every rate in a scan configuration is given in units of ``g``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

SWEEP_VARIABLES = ("g2d_kappa", "kappa_d", "gd")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration file."""


def parse_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load(path: str | Path) -> dict[str, str]:
    return parse_text(Path(path).read_text())


def _floats(value: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"not a number list: {value!r}") from exc
    if not vals or not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"need finite numbers, got {value!r}")
    return vals


def _float(value: str) -> float:
    vals = _floats(value)
    if len(vals) != 1:
        raise ConfigError(f"expected a single number, got {value!r}")
    return vals[0]


def _bool(value: str) -> bool:
    low = value.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def _build(cls, raw: dict[str, str], ignore=("verb",)):
    kinds = {f.name: f.type for f in fields(cls)}
    unknown = set(raw) - set(kinds) - set(ignore)
    if unknown:
        raise ConfigError(f"unknown keys for {cls.__name__}: {sorted(unknown)}")
    kwargs = {}
    for key, value in raw.items():
        if key in ignore:
            continue
        kind = kinds[key]
        if "tuple" in kind:
            kwargs[key] = _floats(value)
        elif "bool" in kind:
            kwargs[key] = _bool(value)
        elif "int" in kind:
            kwargs[key] = int(_float(value))
        elif "float" in kind:
            kwargs[key] = None if value.lower() == "none" else _float(value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


@dataclass(frozen=True)
class ScanConfig:
    """A family of curves swept along one dimensionless pulse-length variable."""

    kappa_g: tuple[float, ...] = (5.0,)
    q_g: tuple[float, ...] = (0.0,)
    gamma_g: tuple[float, ...] = (0.0,)
    detuning_g: tuple[float, ...] = (0.0,)
    sweep: str = "g2d_kappa"
    sweep_min: float = 0.05
    sweep_max: float = 5.0
    points: int = 41
    spacing: str = "log"
    tolerance: float = 1e-6
    error_estimate: bool = True
    margin: float = 5.0

    def __post_init__(self):
        if self.sweep not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep must be one of {SWEEP_VARIABLES}")
        if self.spacing not in ("log", "lin"):
            raise ConfigError("spacing must be 'log' or 'lin'")
        if not 0 < self.sweep_min <= self.sweep_max:
            raise ConfigError("need 0 < sweep_min <= sweep_max")
        if self.points < 1:
            raise ConfigError("points must be >= 1")
        if any(k <= 0 for k in self.kappa_g) or any(gm < 0 for gm in self.gamma_g):
            raise ConfigError("kappa_g must be > 0 and gamma_g >= 0")

    def sweep_values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([self.sweep_min])
        if self.spacing == "log":
            return np.geomspace(self.sweep_min, self.sweep_max, self.points)
        return np.linspace(self.sweep_min, self.sweep_max, self.points)

    def curves(self):
        """Fixed-parameter combinations, in file order."""
        for kg in self.kappa_g:
            for qg in self.q_g:
                for gg in self.gamma_g:
                    for dg in self.detuning_g:
                        yield kg, qg, gg, dg


def pulse_length(sweep: str, value: float, kappa_g: float) -> float:
    """Pulse length ``d`` (units of 1/g) from a dimensionless sweep value."""
    if sweep == "g2d_kappa":
        return value * kappa_g
    if sweep == "kappa_d":
        return value / kappa_g
    if sweep == "gd":
        return value
    raise ConfigError(f"unknown sweep variable {sweep!r}")


@dataclass(frozen=True)
class PointConfig:
    """A single parameter point in absolute units (any consistent rate unit)."""

    g: float = 1.0
    kappa: float = 5.0
    gamma: float = 0.0
    omega_a: float = 0.0
    omega_c: float = 0.0
    q: float = 0.0
    d: float | None = None
    g2d_kappa: float | None = None
    kappa_d: float | None = None
    margin: float = 5.0
    #: length per time unit; reports d as a physical length when set (e.g. c in m/s)
    light_speed: float | None = None
    #: only every n-th grid point is written to two-photon CSVs
    csv_stride: int = 4
    # oracle settings
    band: float = 5.0
    ringdown: float = 8.0
    ring_margin: float = 1.1
    compensate: bool = True
    tolerance_one: float = 0.02
    tolerance_two: float = 0.05
    tolerance_beta: float = 0.05

    def __post_init__(self):
        given = [v for v in (self.d, self.g2d_kappa, self.kappa_d) if v is not None]
        if len(given) != 1:
            raise ConfigError("give exactly one of d, g2d_kappa, kappa_d")

    @property
    def pulse_d(self) -> float:
        if self.d is not None:
            return self.d
        if self.g2d_kappa is not None:
            return self.g2d_kappa * self.kappa / self.g**2
        return self.kappa_d / self.kappa


@dataclass(frozen=True)
class PulseSweepConfig:
    """Overlap of Gaussians with the optimum pulse over a (q, d) grid, rates in units of g."""

    kappa_g: float = 10.0
    gamma_g: float = 0.0
    t: float = 100.0
    q_min: float = -2.0
    q_max: float = 2.0
    q_points: int = 41
    d_min: float = 0.25
    d_max: float = 32.0
    d_points: int = 57
    samples: int = 4001
    refine: bool = True

    def q_values(self):
        return np.linspace(self.q_min, self.q_max, self.q_points)

    def d_values(self):
        return np.geomspace(self.d_min, self.d_max, self.d_points)


def scan_config(raw: dict[str, str]) -> ScanConfig:
    return _build(ScanConfig, raw)


def point_config(raw: dict[str, str]) -> PointConfig:
    return _build(PointConfig, raw)


def pulse_config(raw: dict[str, str]) -> PulseSweepConfig:
    return _build(PulseSweepConfig, raw)


@dataclass
class Table:
    """Column names plus rows of numbers, rendered as deterministic CSV."""

    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(format_number(v) for v in row))
        return "\n".join(lines) + "\n"

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows], dtype=float)


def format_number(v) -> str:
    """17 significant digits in scientific notation; integers stay integers."""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.16e}"


def read_table(text: str) -> Table:
    lines = text.strip("\n").split("\n")
    cols = lines[0].split(",")
    rows = [[float(x) for x in line.split(",")] for line in lines[1:]]
    return Table(cols, rows)
