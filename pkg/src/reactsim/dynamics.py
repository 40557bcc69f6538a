"""Grid-based reference dynamics with the symmetric split-operator propagator.

The momentum transform convention is fixed here and shared with the circuit
route: ``F[j, k] = exp(+2j*pi*j*k/N) / sqrt(N)`` takes position amplitudes to
momentum amplitudes in the ordering of :func:`reactsim.model.build_kinetic_diag`.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .model import (
    Grid,
    ReactionModel,
    build_kinetic_diag,
    build_potential_diag,
    field_midpoint_table,
    make_grid,
)


def dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def to_momentum(amplitudes: np.ndarray) -> np.ndarray:
    """Apply ``F`` (unitary, inverse-FFT sign convention)."""
    return np.fft.ifft(amplitudes, norm="ortho")


def to_position(amplitudes: np.ndarray) -> np.ndarray:
    """Apply ``F^dagger``."""
    return np.fft.fft(amplitudes, norm="ortho")


@dataclass(frozen=True)
class Wavefunction:
    amplitudes: np.ndarray
    grid: Grid
    representation: str = "position"

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        if a.shape != (self.grid.point_count,):
            raise ValueError(f"expected {self.grid.point_count} amplitudes, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def left_probability(self) -> float:
        return float(self.probabilities()[self.grid.positions < 0].sum())

    def right_probability(self) -> float:
        return float(self.probabilities()[self.grid.positions > 0].sum())


@dataclass(frozen=True)
class EigenPair:
    energy: float
    state: Wavefunction


@dataclass(frozen=True)
class Snapshot:
    step_index: int
    time: float  # fs
    reactant_overlap: float
    product_overlap: float


def bare_hamiltonian_matrix(model: ReactionModel, grid: Grid) -> np.ndarray:
    """Dense ``T + V`` in the position representation."""
    t = build_kinetic_diag(model, grid).values
    v = build_potential_diag(model, grid).values
    f = dft_matrix(grid.point_count)
    h = f.conj().T @ (t[:, None] * f) + np.diag(v)
    return (h + h.conj().T) / 2


def fix_phase(vec: np.ndarray) -> np.ndarray:
    """Rotate the global phase so the largest-magnitude entry is real and positive."""
    k = int(np.argmax(np.abs(vec)))
    return vec * (abs(vec[k]) / vec[k])


def lowest_eigenpairs(model: ReactionModel, grid: Grid, count: int = 2) -> list[EigenPair]:
    if not 1 <= count <= grid.point_count:
        raise ValueError(f"count must be in [1, {grid.point_count}]")
    w, v = np.linalg.eigh(bare_hamiltonian_matrix(model, grid))
    if count > 1 and w[1] - w[0] < 1e-12:
        raise ValueError(f"lowest eigenvalues are degenerate (gap {w[1] - w[0]:.3e})")
    return [EigenPair(float(w[k]), Wavefunction(fix_phase(v[:, k]), grid)) for k in range(count)]


def overlap(psi: Wavefunction, phi: Wavefunction) -> float:
    """Population ``|<phi|psi>|**2``."""
    if psi.grid != phi.grid or psi.representation != phi.representation:
        raise ValueError("states live on different grids or representations")
    return float(abs(np.vdot(phi.amplitudes, psi.amplitudes)) ** 2)


@dataclass(frozen=True)
class StepPhases:
    """Diagonal phase factors of one propagation step."""

    potential_half: np.ndarray
    field_half: np.ndarray
    kinetic: np.ndarray

    @classmethod
    def build(cls, model, grid, field_value, dt):
        v = build_potential_diag(model, grid).values
        t = build_kinetic_diag(model, grid).values
        q = grid.positions
        return cls(
            potential_half=np.exp(-0.5j * v * dt),
            field_half=np.exp(0.5j * model.charge * field_value * q * dt),
            kinetic=np.exp(-1j * t * dt),
        )

    def apply(self, amplitudes, adjoint=False):
        outer = self.potential_half * self.field_half
        kin = self.kinetic
        if adjoint:
            outer, kin = outer.conj(), kin.conj()
        a = outer * amplitudes
        a = to_position(kin * to_momentum(a))
        return outer * a


def split_apply(model, grid, amplitudes, field_value, dt, adjoint=False):
    """One symmetric split step at constant field ``field_value`` and step ``dt`` (a.u.)."""
    return StepPhases.build(model, grid, field_value, dt).apply(amplitudes, adjoint)


def split_step(psi: Wavefunction, model: ReactionModel, step_index: int, adjoint: bool = False) -> Wavefunction:
    """Advance ``psi`` over step ``step_index`` (1-based) with the midpoint field.

    With ``adjoint=True`` the inverse of that step is applied instead.
    """
    if psi.representation != "position":
        raise ValueError("split_step expects a position-representation state")
    if not 1 <= step_index <= model.step_count:
        raise ValueError(f"step_index must be in [1, {model.step_count}]")
    eps = field_midpoint_table(model)[step_index - 1]
    out = split_apply(model, psi.grid, psi.amplitudes, eps, model.time_step_au, adjoint)
    return Wavefunction(out, psi.grid)


def propagate(
    model: ReactionModel,
    grid: Grid,
    psi0: Wavefunction,
    references: tuple[Wavefunction, Wavefunction] | None = None,
) -> tuple[list[Snapshot], Wavefunction]:
    """Run all ``step_count`` steps, recording overlaps with the reactant and product states."""
    if abs(psi0.norm - 1) > 1e-9:
        raise ValueError(f"initial state not normalized (norm {psi0.norm})")
    if references is None:
        phi0, phi1 = (p.state for p in lowest_eigenpairs(model, grid, 2))
    else:
        phi0, phi1 = references
    eps = field_midpoint_table(model)
    dt = model.time_step_au
    amps = psi0.amplitudes
    snaps = [Snapshot(0, 0.0, overlap(psi0, phi0), overlap(psi0, phi1))]
    for m in range(1, model.step_count + 1):
        amps = split_apply(model, grid, amps, eps[m - 1], dt)
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > 1e-9:
            raise FloatingPointError(f"norm drifted to {norm} at step {m}")
        psi = Wavefunction(amps, grid)
        snaps.append(Snapshot(m, m * model.time_step_fs, overlap(psi, phi0), overlap(psi, phi1)))
    return snaps, Wavefunction(amps, grid)


def run_reaction(model: ReactionModel, qubits: int = 3):
    """Propagate from the reactant state on a ``2**qubits`` grid."""
    grid = make_grid(model, qubits)
    phi0, phi1 = (p.state for p in lowest_eigenpairs(model, grid, 2))
    return propagate(model, grid, phi0, (phi0, phi1))


def exact_reference(model: ReactionModel, grid: Grid) -> list[Snapshot]:
    """Same propagation on a fine grid (64 points or more)."""
    if grid.point_count < 64:
        raise ValueError("reference grid needs at least 64 points")
    phi0, phi1 = (p.state for p in lowest_eigenpairs(model, grid, 2))
    snaps, _ = propagate(model, grid, phi0, (phi0, phi1))
    return snaps


# ---------------------------------------------------------------------------
# export

SNAPSHOT_FIELDS = ("step", "time_fs", "reactant", "product")


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def snapshots_to_csv(snaps) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SNAPSHOT_FIELDS)
    for s in snaps:
        w.writerow([s.step_index, _fmt(s.time), _fmt(s.reactant_overlap), _fmt(s.product_overlap)])
    return buf.getvalue()


def snapshots_to_json(snaps) -> str:
    records = [
        {
            "step": s.step_index,
            "time_fs": float(_fmt(s.time)),
            "reactant": float(_fmt(s.reactant_overlap)),
            "product": float(_fmt(s.product_overlap)),
        }
        for s in snaps
    ]
    return json.dumps(records, indent=1) + "\n"


def snapshots_from_csv(text: str) -> list[Snapshot]:
    rows = csv.DictReader(io.StringIO(text))
    if tuple(rows.fieldnames or ()) != SNAPSHOT_FIELDS:
        raise ValueError(f"unexpected header {rows.fieldnames}")
    return [
        Snapshot(int(r["step"]), float(r["time_fs"]), float(r["reactant"]), float(r["product"]))
        for r in rows
    ]
