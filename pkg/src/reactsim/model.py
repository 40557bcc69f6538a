"""Driven double-well model: parameters, position grid and diagonal operator tables.

Everything downstream works in atomic units (e = hbar = 1).  Times are given in
femtoseconds on the model and converted with :func:`fs_to_au` where needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

#: atomic unit of time in femtoseconds (CODATA 2018)
AU_TIME_FS = 0.02418884326585747
#: bohr radius in angstrom (CODATA 2018)
BOHR_ANGSTROM = 0.529177210903
PROTON_MASS = 1836.15267343


def fs_to_au(t):
    """Convert a time (or array of times) from femtoseconds to atomic units."""
    return t / AU_TIME_FS


@dataclass(frozen=True)
class ReactionModel:
    """Parameters of the laser-driven double-well reaction.

    Energies in hartree, lengths in bohr, times in femtoseconds, field in
    atomic units.  The defaults describe the 8-point malonaldehyde model.
    """

    barrier_height: float = 0.00625
    asymmetry: float = 0.000257
    well_position: float = 1.0
    mass: float = PROTON_MASS
    charge: float = 1.0
    field_amplitude: float = 1.0e-3
    ramp_up_end: float = 5.0
    ramp_down_start: float = 32.5
    total_time: float = 37.5
    step_count: int = 25
    wall_scale: float = 30.0
    grid_extent: float = 0.8 / BOHR_ANGSTROM

    def __post_init__(self):
        if not self.barrier_height > 0:
            raise ValueError("barrier_height must be positive")
        if not self.well_position > 0:
            raise ValueError("well_position must be positive")
        if not 0 < self.ramp_up_end < self.ramp_down_start < self.total_time:
            raise ValueError("need 0 < ramp_up_end < ramp_down_start < total_time")
        if int(self.step_count) != self.step_count or self.step_count < 1:
            raise ValueError("step_count must be a positive integer")
        if not self.mass > 0 or not self.grid_extent > 0:
            raise ValueError("mass and grid_extent must be positive")
        object.__setattr__(self, "step_count", int(self.step_count))

    @property
    def time_step_fs(self) -> float:
        return self.total_time / self.step_count

    @property
    def time_step_au(self) -> float:
        return fs_to_au(self.total_time) / self.step_count

    def with_(self, **changes) -> "ReactionModel":
        return replace(self, **changes)


@dataclass(frozen=True)
class Grid:
    point_count: int
    spacing: float
    positions: np.ndarray = field(repr=False, compare=False)

    @property
    def qubit_count(self) -> int:
        return self.point_count.bit_length() - 1

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.point_count == other.point_count
            and self.spacing == other.spacing
        )

    def __hash__(self):
        return hash((self.point_count, self.spacing))


def _check_power_of_two(n: int) -> int:
    if n < 2 or n & (n - 1):
        raise ValueError(f"grid size must be a power of two >= 2, got {n}")
    return n.bit_length() - 1


def make_grid(model: ReactionModel, qubits: int = 3) -> Grid:
    """Uniform grid of ``2**qubits`` points spanning ``[-grid_extent, grid_extent]``."""
    n = 2**qubits
    _check_power_of_two(n)
    dq = 2.0 * model.grid_extent / (n - 1)
    q = dq * (np.arange(n) - (n - 1) / 2.0)
    q.setflags(write=False)
    return Grid(point_count=n, spacing=dq, positions=q)


@dataclass(frozen=True)
class DiagonalOperator:
    """Diagonal of an operator in the position or momentum representation."""

    values: np.ndarray
    representation: str = "position"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or not np.all(np.isfinite(v)):
            raise ValueError("diagonal must be a finite 1-d array")
        if self.representation not in ("position", "momentum"):
            raise ValueError(f"unknown representation {self.representation!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


def potential_at(model: ReactionModel, q):
    """Double-well potential energy (hartree) at position ``q`` (bohr), no wall scaling."""
    q0 = model.well_position
    d = model.asymmetry
    # (q - q0)^2 (q + q0)^2 written as (q^2 - q0^2)^2 so the quartic part is exactly even
    return d / (2 * q0) * (q - q0) + (model.barrier_height - d / 2) / q0**4 * (q * q - q0 * q0) ** 2


def build_potential_diag(model: ReactionModel, grid: Grid) -> DiagonalOperator:
    v = potential_at(model, grid.positions).astype(float)
    v[0] *= model.wall_scale
    v[-1] *= model.wall_scale
    return DiagonalOperator(v, "position")


def momentum_values(grid: Grid) -> np.ndarray:
    """Momenta in discrete-transform ordering: index k maps to 2*pi*kappa/(N*dq)."""
    n = grid.point_count
    _check_power_of_two(n)
    k = np.arange(n)
    kappa = np.where(k <= n // 2, k, k - n)
    return 2 * np.pi * kappa / (n * grid.spacing)


def build_kinetic_diag(model: ReactionModel, grid: Grid) -> DiagonalOperator:
    p = momentum_values(grid)
    return DiagonalOperator(p**2 / (2 * model.mass), "momentum")


def build_position_diag(grid: Grid) -> DiagonalOperator:
    return DiagonalOperator(grid.positions, "position")


def fit_mass(target_kinetic, grid: Grid) -> float:
    """Least-squares mass reproducing a tabulated kinetic diagonal.

    ``target_kinetic`` is compared by magnitude, so a stray sign in a reference
    table does not spoil the fit.  The model ``T = p**2 / (2 m)`` is linear in
    ``1/m``, which gives a closed form.
    """
    t = np.abs(np.asarray(target_kinetic, dtype=float))
    a = momentum_values(grid) ** 2 / 2
    if t.shape != a.shape:
        raise ValueError("target table does not match the grid size")
    inv_m = float(a @ t) / float(a @ a)
    return 1.0 / inv_m


def field_at(model: ReactionModel, t: float) -> float:
    """Laser field (a.u.) at time ``t`` (fs): sin^2 ramp, plateau, sin^2 ramp."""
    s1, s2, tf = model.ramp_up_end, model.ramp_down_start, model.total_time
    if not 0 <= t <= tf * (1 + 1e-12):
        raise ValueError(f"time {t} fs outside [0, {tf}]")
    e0 = model.field_amplitude
    if t <= s1:
        return e0 * math.sin(math.pi * t / (2 * s1)) ** 2
    if t < s2:
        return e0
    return e0 * math.sin(math.pi * (tf - t) / (2 * (tf - s2))) ** 2


def field_midpoint_table(model: ReactionModel) -> np.ndarray:
    """Field at the midpoint of each of the ``step_count`` steps."""
    dt = model.time_step_fs
    return np.array([field_at(model, (m - 0.5) * dt) for m in range(1, model.step_count + 1)])


# ---------------------------------------------------------------------------
# configuration files

_MODEL_FIELDS = {f.name: f for f in fields(ReactionModel)}


def parse_key_values(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        out[key] = value
    return out


def model_from_mapping(values: dict[str, str]) -> ReactionModel:
    kwargs = {}
    for key, value in values.items():
        name = key.removeprefix("model.")
        if name not in _MODEL_FIELDS:
            raise ValueError(f"unknown model parameter {key!r}")
        kwargs[name] = int(value) if name == "step_count" else float(value)
    return ReactionModel(**kwargs)


def load_model(path: str | Path) -> ReactionModel:
    """Read a model from a key-value file; an empty file gives the defaults."""
    return model_from_mapping(parse_key_values(Path(path).read_text()))
