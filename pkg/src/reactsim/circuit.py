"""Gate-level route: a small gate set, the QFT network and the per-step loop.

Qubit 0 is the most significant bit of a basis index.  Diagonal phase gates
carry their phase angles, so ``DIAG`` on targets ``(0, 1, 2)`` with angles
``a`` acts as ``diag(exp(1j * a))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .encoding import expand_diagonal, single_z_words
from .model import (
    DiagonalOperator,
    Grid,
    ReactionModel,
    build_kinetic_diag,
    build_position_diag,
    build_potential_diag,
    field_midpoint_table,
)

_SQ2 = 1 / math.sqrt(2)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) * _SQ2
PHASE_S = np.diag([1, 1j])
PHASE_T = np.diag([1, np.exp(1j * math.pi / 4)])
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)

KINDS = ("H", "S", "T", "PHASE", "SWAP", "DIAG")


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple
    controls: tuple = ()
    params: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        arity = {"SWAP": 2}.get(self.kind, 1)
        if self.kind == "DIAG":
            if len(self.params) != 2 ** len(self.targets):
                raise ValueError("DIAG needs 2**len(targets) phase angles")
        elif len(self.targets) != arity:
            raise ValueError(f"{self.kind} acts on {arity} qubit(s)")
        if self.kind == "PHASE" and len(self.params) != 1:
            raise ValueError("PHASE needs one angle")
        if len(set(self.targets + self.controls)) != len(self.targets) + len(self.controls):
            raise ValueError("targets and controls must be distinct")

    @property
    def qubits(self) -> tuple:
        return self.controls + self.targets

    @property
    def is_diagonal(self) -> bool:
        return self.kind in ("S", "T", "PHASE", "DIAG")

    def matrix(self) -> np.ndarray:
        """Matrix on the target qubits only (controls excluded)."""
        if self.kind == "H":
            return HADAMARD.copy()
        if self.kind == "S":
            return PHASE_S.copy()
        if self.kind == "T":
            return PHASE_T.copy()
        if self.kind == "PHASE":
            return np.diag([1, np.exp(1j * self.params[0])])
        if self.kind == "SWAP":
            return SWAP.copy()
        return np.diag(np.exp(1j * np.array(self.params)))

    def full_matrix(self) -> np.ndarray:
        """Matrix on ``controls + targets`` with the controls as leading qubits."""
        u = self.matrix()
        nc = len(self.controls)
        if not nc:
            return u
        dim = 2**nc * u.shape[0]
        out = np.eye(dim, dtype=complex)
        out[-u.shape[0]:, -u.shape[0]:] = u
        return out

    def adjoint(self) -> "Gate":
        if self.kind in ("H", "SWAP"):
            return self
        if self.kind == "S":
            return Gate("PHASE", self.targets, self.controls, (-math.pi / 2,))
        if self.kind == "T":
            return Gate("PHASE", self.targets, self.controls, (-math.pi / 4,))
        return Gate(self.kind, self.targets, self.controls, tuple(-p for p in self.params))

    def to_line(self) -> str:
        parts = [self.kind, ",".join(map(str, self.targets))]
        if self.controls:
            parts.append("c=" + ",".join(map(str, self.controls)))
        if self.params:
            parts.append("p=" + ",".join(repr(p) for p in self.params))
        return " ".join(parts)

    @classmethod
    def from_line(cls, line: str) -> "Gate":
        tokens = line.split()
        if len(tokens) < 2:
            raise ValueError(f"malformed gate line {line!r}")
        kind, targets = tokens[0], tuple(int(t) for t in tokens[1].split(","))
        controls, params = (), ()
        for tok in tokens[2:]:
            key, _, val = tok.partition("=")
            if key == "c":
                controls = tuple(int(c) for c in val.split(","))
            elif key == "p":
                params = tuple(float(p) for p in val.split(","))
            else:
                raise ValueError(f"unknown field {tok!r} in {line!r}")
        return cls(kind, targets, controls, params)


@dataclass(frozen=True)
class Circuit:
    qubit_count: int
    gates: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(not 0 <= q < self.qubit_count for q in g.qubits):
                raise ValueError(f"gate {g.to_line()!r} addresses a qubit outside 0..{self.qubit_count - 1}")

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.qubit_count != self.qubit_count:
            raise ValueError("qubit counts differ")
        return Circuit(self.qubit_count, self.gates + other.gates)

    def __len__(self):
        return len(self.gates)

    def adjoint(self) -> "Circuit":
        return Circuit(self.qubit_count, tuple(g.adjoint() for g in reversed(self.gates)))

    def to_text(self) -> str:
        header = f"QUBITS {self.qubit_count}"
        return "\n".join([header] + [g.to_line() for g in self.gates]) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Circuit":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not lines or not lines[0].startswith("QUBITS"):
            raise ValueError("circuit text must start with 'QUBITS n'")
        n = int(lines[0].split()[1])
        return cls(n, tuple(Gate.from_line(ln) for ln in lines[1:]))


# ---------------------------------------------------------------------------
# statevector engine


def apply_gate(psi: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    """Apply ``gate`` to a tensor of shape ``(2,)*n + batch`` and return a new tensor.

    Cost is linear in the tensor size for every gate kind.
    """
    out = psi.copy()
    sel = [slice(None)] * psi.ndim
    for c in gate.controls:
        sel[c] = 1
    sel = tuple(sel)
    sub = out[sel]
    remaining = [q for q in range(n) if q not in gate.controls]
    axes = [remaining.index(t) for t in gate.targets]
    k = len(axes)
    moved = np.moveaxis(sub, axes, range(k))
    if gate.is_diagonal:
        phases = np.diag(gate.matrix()).reshape((2,) * k + (1,) * (moved.ndim - k))
        moved = moved * phases
    else:
        u = gate.matrix().reshape((2,) * (2 * k))
        moved = np.tensordot(u, moved, axes=(list(range(k, 2 * k)), list(range(k))))
    out[sel] = np.moveaxis(moved, range(k), axes)
    return out


def run_circuit(circuit: Circuit, state: np.ndarray) -> np.ndarray:
    n = circuit.qubit_count
    state = np.asarray(state, dtype=complex)
    if state.shape != (2**n,):
        raise ValueError(f"state of shape {state.shape} does not match {n} qubits")
    psi = state.reshape((2,) * n)
    for g in circuit.gates:
        psi = apply_gate(psi, g, n)
    return psi.reshape(2**n)


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense unitary; column ``k`` is the circuit applied to basis state ``k``."""
    n = circuit.qubit_count
    if n > 10:
        raise ValueError("dense unitaries are limited to 10 qubits")
    dim = 2**n
    psi = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for g in circuit.gates:
        psi = apply_gate(psi, g, n)
    return psi.reshape(dim, dim)


# ---------------------------------------------------------------------------
# networks


def qft_circuit(n: int) -> Circuit:
    """QFT whose unitary is ``F[j, k] = exp(2j*pi*j*k/2**n) / sqrt(2**n)``.

    Hadamard plus controlled-phase ladder per qubit, then a SWAP reversal.
    Controlled pi/2 and pi/4 phases are written as controlled S and T.
    """
    if n < 1:
        raise ValueError("need at least one qubit")
    gates = []
    for j in range(n):
        gates.append(Gate("H", (j,)))
        for k in range(j + 1, n):
            d = k - j
            if d == 1:
                gates.append(Gate("S", (j,), (k,)))
            elif d == 2:
                gates.append(Gate("T", (j,), (k,)))
            else:
                gates.append(Gate("PHASE", (j,), (k,), (math.pi / 2**d,)))
    for j in range(n // 2):
        gates.append(Gate("SWAP", (j, n - 1 - j)))
    return Circuit(n, tuple(gates))


def diagonal_phase_circuit(diag, scale: float) -> Gate:
    """Gate ``diag(exp(-1j * scale * values))`` over all qubits."""
    values = np.asarray(diag.values if isinstance(diag, DiagonalOperator) else diag, dtype=float)
    n = len(values).bit_length() - 1
    if 1 << n != len(values):
        raise ValueError("diagonal length must be a power of two")
    return Gate("DIAG", tuple(range(n)), (), tuple(-scale * values))


def z_phase_factors(diag, scale: float, tol: float = 1e-12) -> list[Gate]:
    """Factor ``exp(-1j*scale*D)`` for an operator linear in the sigma_z's.

    Works when the expansion of ``D`` has only single-z words (e.g. the
    position operator on a uniform grid); returns one single-qubit DIAG per
    qubit, with any identity component folded into the first one.
    """
    exp = expand_diagonal(diag)
    n = exp.qubit_count
    allowed = set(single_z_words(n)) | {"i" * n}
    extra = {w: c for w, c in exp.nonzero(tol).items() if w not in allowed}
    if extra:
        raise ValueError(f"operator has multi-qubit terms {sorted(extra)}")
    const = exp.coefficient("i" * n)
    gates = []
    for j, word in enumerate(single_z_words(n)):
        g = exp.coefficient(word)
        c = const if j == 0 else 0.0
        gates.append(Gate("DIAG", (j,), (), (-scale * (c + g), -scale * (c - g))))
    return gates


def step_circuit(model: ReactionModel, grid: Grid, m: int, factor_field: bool = False) -> Circuit:
    """Gates for step ``m``: V/2, E/2, QFT^dagger, T, QFT, E/2, V/2 (state order)."""
    if not 1 <= m <= model.step_count:
        raise ValueError(f"step index must be in [1, {model.step_count}]")
    n = grid.qubit_count
    dt = model.time_step_au
    eps = field_midpoint_table(model)[m - 1]
    v = build_potential_diag(model, grid)
    t = build_kinetic_diag(model, grid)
    q = build_position_diag(grid)
    field_scale = -model.charge * eps * dt / 2
    if factor_field:
        e_gates = z_phase_factors(q, field_scale)
    else:
        e_gates = [diagonal_phase_circuit(q, field_scale)]
    v_gate = diagonal_phase_circuit(v, dt / 2)
    qft = qft_circuit(n)
    gates = [v_gate, *e_gates, *qft.adjoint().gates, diagonal_phase_circuit(t, dt), *qft.gates, *e_gates, v_gate]
    return Circuit(n, tuple(gates))


def evolution_circuit(model: ReactionModel, grid: Grid, j: int, factor_field: bool = False) -> Circuit:
    """Network for ``U(t_j, 0)``: steps 1..j in order."""
    c = Circuit(grid.qubit_count)
    for m in range(1, j + 1):
        c = c + step_circuit(model, grid, m, factor_field)
    return c
