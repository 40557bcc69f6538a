"""NMR control layer: spin Hamiltonians, GRAPE pulse synthesis and readout.

Frequencies and control amplitudes are in Hz, times in seconds; Hamiltonians
are returned in rad/s.  Spin ``j`` is qubit ``j`` (qubit 0 most significant).
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

#: scalar couplings (Hz) of the F/C/H spins in diethyl fluoromalonate
DEFAULT_COUPLINGS = {(0, 1): -194.4, (0, 2): 47.6, (1, 2): 160.7}


def spin_operator(axis: str, spin: int, n: int) -> np.ndarray:
    """``I_axis`` (= sigma/2) on ``spin`` embedded in ``n`` spins."""
    out = np.ones((1, 1), dtype=complex)
    for j in range(n):
        out = np.kron(out, _PAULI[axis] / 2 if j == spin else np.eye(2))
    return out


@dataclass(frozen=True)
class SpinSystem:
    spin_count: int = 3
    offsets: tuple = (0.0, 0.0, 0.0)
    couplings: dict = field(default_factory=lambda: dict(DEFAULT_COUPLINGS))
    channels: tuple = ((0, "x"), (0, "y"), (1, "x"), (1, "y"), (2, "x"), (2, "y"))

    def __post_init__(self):
        if len(self.offsets) != self.spin_count:
            raise ValueError("need one offset per spin")
        for (j, k) in self.couplings:
            if not (0 <= j < k < self.spin_count):
                raise ValueError(f"bad coupling pair {(j, k)}")
        for spin, axis in self.channels:
            if axis not in ("x", "y") or not 0 <= spin < self.spin_count:
                raise ValueError(f"bad channel {(spin, axis)}")

    @classmethod
    def single_spin(cls, offset: float = 0.0) -> "SpinSystem":
        return cls(1, (offset,), {}, ((0, "x"), (0, "y")))

    @property
    def dim(self) -> int:
        return 2**self.spin_count

    def internal_hamiltonian(self) -> np.ndarray:
        n = self.spin_count
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for j, nu in enumerate(self.offsets):
            h += TWO_PI * nu * spin_operator("z", j, n)
        for (j, k), coupling in self.couplings.items():
            h += TWO_PI * coupling * spin_operator("z", j, n) @ spin_operator("z", k, n)
        return h

    def control_hamiltonians(self) -> np.ndarray:
        """Stack of ``2*pi*I_axis^spin``, one per channel (amplitude 1 Hz)."""
        return np.array([TWO_PI * spin_operator(a, s, self.spin_count) for s, a in self.channels])


@dataclass(frozen=True)
class ControlPulse:
    amplitudes: np.ndarray  # (segments, channels), Hz
    duration: float  # s

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=float)
        if a.ndim != 2 or a.shape[0] == 0:
            raise ValueError("amplitudes must be a non-empty (segments, channels) array")
        if not np.all(np.isfinite(a)):
            raise ValueError("amplitudes must be finite")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)

    @property
    def segment_count(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def segment_duration(self) -> float:
        return self.duration / self.segment_count

    def to_csv(self, system: SpinSystem) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["segment", "channel", "axis", "amplitude_hz"])
        for j, row in enumerate(self.amplitudes):
            for (spin, axis), u in zip(system.channels, row):
                w.writerow([j, spin, axis, f"{u:.12g}"])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, system: SpinSystem, duration: float) -> "ControlPulse":
        rows = list(csv.DictReader(io.StringIO(text)))
        nseg = 1 + max(int(r["segment"]) for r in rows)
        index = {ch: i for i, ch in enumerate(system.channels)}
        amps = np.zeros((nseg, len(system.channels)))
        for r in rows:
            amps[int(r["segment"]), index[(int(r["channel"]), r["axis"])]] = float(r["amplitude_hz"])
        return cls(amps, duration)


def _check_channels(system: SpinSystem, pulse: ControlPulse):
    if pulse.amplitudes.shape[1] != len(system.channels):
        raise ValueError(
            f"pulse has {pulse.amplitudes.shape[1]} channels, system has {len(system.channels)}"
        )


def _segment_hamiltonians(system, amplitudes, scale=1.0):
    hc = system.control_hamiltonians()
    return system.internal_hamiltonian()[None] + scale * np.einsum("jk,kab->jab", amplitudes, hc)


def segment_propagators(system: SpinSystem, pulse: ControlPulse, scale: float = 1.0) -> np.ndarray:
    _check_channels(system, pulse)
    h = _segment_hamiltonians(system, pulse.amplitudes, scale)
    w, v = np.linalg.eigh(h)
    phase = np.exp(-1j * pulse.segment_duration * w)
    return np.einsum("jab,jb,jcb->jac", v, phase, v.conj())


def pulse_propagator(system: SpinSystem, pulse: ControlPulse, scale: float = 1.0) -> np.ndarray:
    """Total propagator ``U_N ... U_2 U_1`` of a piecewise-constant pulse."""
    u = np.eye(system.dim, dtype=complex)
    for seg in segment_propagators(system, pulse, scale):
        u = seg @ u
    return u


def gate_fidelity(target: np.ndarray, actual: np.ndarray) -> float:
    """Phase-insensitive gate fidelity ``|Tr(target^dagger actual) / d|**2``."""
    target = np.asarray(target)
    actual = np.asarray(actual)
    if target.shape != actual.shape or target.ndim != 2 or target.shape[0] != target.shape[1]:
        raise ValueError(f"shape mismatch {target.shape} vs {actual.shape}")
    d = target.shape[0]
    return float(abs(np.vdot(target, actual) / d) ** 2)


def _normalize_ensemble(ensemble):
    if ensemble is None:
        return [(1.0, 1.0)]
    items = list(ensemble.items()) if isinstance(ensemble, dict) else [tuple(e) for e in ensemble]
    if not items:
        raise ValueError("empty ensemble")
    total = sum(w for _, w in items)
    if abs(total - 1) > 1e-9:
        raise ValueError(f"ensemble weights sum to {total}, expected 1")
    return [(float(s), float(w)) for s, w in items]


def ensemble_fidelity(system, pulse, target, ensemble) -> float:
    """Weighted mean fidelity over global control-amplitude scale factors."""
    return sum(w * gate_fidelity(target, pulse_propagator(system, pulse, s)) for s, w in _normalize_ensemble(ensemble))


def fidelity_and_gradient(system, amplitudes, duration, target, scale=1.0, exact=True):
    """Fidelity of a pulse and its gradient with respect to every amplitude.

    ``exact`` differentiates each segment exponential through its eigenbasis;
    otherwise the first-order approximation ``dU = -i dt H_k U`` is used.
    """
    amplitudes = np.asarray(amplitudes, dtype=float)
    nseg, nch = amplitudes.shape
    dt = duration / nseg
    d = system.dim
    hc = scale * system.control_hamiltonians()
    h = _segment_hamiltonians(system, amplitudes, scale)
    w, v = np.linalg.eigh(h)
    phase = np.exp(-1j * dt * w)
    us = np.einsum("jab,jb,jcb->jac", v, phase, v.conj())

    fwd = np.empty((nseg + 1, d, d), dtype=complex)
    fwd[0] = np.eye(d)
    for j in range(nseg):
        fwd[j + 1] = us[j] @ fwd[j]
    bwd = np.empty((nseg, d, d), dtype=complex)
    b = target.conj().T
    for j in range(nseg - 1, -1, -1):
        bwd[j] = b
        b = b @ us[j]
    g = np.trace(target.conj().T @ fwd[nseg])
    fid = abs(g / d) ** 2

    m = fwd[:-1] @ bwd  # X_{j-1} B_j
    if exact:
        dw = w[:, :, None] - w[:, None, :]
        dp = phase[:, :, None] - phase[:, None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            gmat = np.where(np.abs(dw) * dt > 1e-10, dp / (-1j * dt * dw), phase[:, :, None])
        vh = v.conj().transpose(0, 2, 1)
        m_eig = vh @ m @ v  # W^dag M W
        a = vh[:, None] @ hc[None] @ v[:, None]  # W^dag H_k W
        dg = -1j * dt * np.einsum("jkad,jad->jk", a, gmat * m_eig.transpose(0, 2, 1))
    else:
        dg = -1j * dt * np.einsum("jkbc,jcb->jk", hc[None] @ us[:, None], m)
    grad = 2 * np.real(np.conj(g) * dg) / d**2
    return float(fid), grad


def _ensemble_value_and_grad(system, amplitudes, duration, target, ensemble, exact):
    fid = 0.0
    grad = np.zeros_like(amplitudes)
    for s, wt in ensemble:
        f, gr = fidelity_and_gradient(system, amplitudes, duration, target, s, exact)
        fid += wt * f
        grad += wt * gr
    return fid, grad


@dataclass(frozen=True)
class GrapeConfig:
    segment_count: int = 100
    duration: float = 1e-3  # s
    iteration_cap: int = 500
    fidelity_goal: float = 0.999
    amplitude_cap: float = 5000.0  # Hz
    step_policy: str = "lbfgs"  # or "backtracking"
    exact_gradient: bool = True
    ensemble: tuple = ((1.0, 1.0),)
    initial_amplitude: float = 50.0  # Hz, spread of the random start
    seed: int = 1234

    def __post_init__(self):
        if self.segment_count < 1:
            raise ValueError("segment_count must be positive")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.step_policy not in ("lbfgs", "backtracking"):
            raise ValueError(f"unknown step policy {self.step_policy!r}")


@dataclass(frozen=True)
class GrapeResult:
    pulse: ControlPulse
    fidelity: float
    trace: tuple  # fidelity per accepted iteration, starting with the initial guess
    converged: bool

    def trace_csv(self) -> str:
        return "iteration,fidelity\n" + "".join(f"{i},{f:.12g}\n" for i, f in enumerate(self.trace))


def grape_optimize(system: SpinSystem, target: np.ndarray, config: GrapeConfig = GrapeConfig(), initial=None) -> GrapeResult:
    """Optimize piecewise-constant amplitudes so the pulse realizes ``target``.

    ``initial`` may be a (segments, channels) array; otherwise small random
    amplitudes drawn from ``config.seed`` are used.
    """
    target = np.asarray(target, dtype=complex)
    if target.shape != (system.dim, system.dim):
        raise ValueError(f"target shape {target.shape} does not match {system.dim}-dim system")
    if not np.allclose(target.conj().T @ target, np.eye(system.dim), atol=1e-8):
        raise ValueError("target is not unitary")
    ensemble = _normalize_ensemble(config.ensemble)
    shape = (config.segment_count, len(system.channels))
    if initial is None:
        rng = np.random.default_rng(config.seed)
        x0 = config.initial_amplitude * rng.standard_normal(shape)
    else:
        x0 = np.array(initial, dtype=float)
        if x0.shape != shape:
            raise ValueError(f"initial amplitudes have shape {x0.shape}, expected {shape}")
    cap = config.amplitude_cap
    x0 = np.clip(x0, -cap, cap)

    def value(x):
        f, g = _ensemble_value_and_grad(system, x.reshape(shape), config.duration, target, ensemble, config.exact_gradient)
        return f, g.ravel()

    if config.step_policy == "lbfgs":
        x, trace = _run_lbfgs(value, x0.ravel(), cap, config)
    else:
        x, trace = _run_backtracking(value, x0.ravel(), cap, config)
    pulse = ControlPulse(x.reshape(shape), config.duration)
    fid = trace[-1]
    logger.debug("grape %s: fidelity %.6f after %d iterations", config.step_policy, fid, len(trace) - 1)
    return GrapeResult(pulse, fid, tuple(trace), fid >= config.fidelity_goal)


class _Converged(Exception):
    pass


def _run_lbfgs(value, x0, cap, config):
    f0, _ = value(x0)
    trace = [f0]
    best = {"x": x0, "f": f0}
    if f0 >= config.fidelity_goal:
        return x0, trace
    scale = cap  # optimize in units of the amplitude cap for conditioning

    def fun(y):
        x = y * scale
        f, g = value(x)
        if f > best["f"]:
            best.update(x=x.copy(), f=f)
        return 1.0 - f, -g * scale

    def callback(y):
        trace.append(best["f"])
        if best["f"] >= config.fidelity_goal:
            raise _Converged

    try:
        minimize(
            fun, x0 / scale, jac=True, method="L-BFGS-B",
            bounds=[(-1.0, 1.0)] * len(x0), callback=callback,
            options={"maxiter": config.iteration_cap, "ftol": 0.0, "gtol": 1e-12, "maxcor": 30},
        )
    except _Converged:
        pass
    if trace[-1] != best["f"]:
        trace.append(best["f"])
    return best["x"], trace


def _run_backtracking(value, x0, cap, config):
    """Projected gradient ascent with an Armijo backtracking line search."""
    x = x0
    f, g = value(x)
    trace = [f]
    step = 1.0 / max(np.abs(g).max(), 1e-300) * cap * 0.1
    for _ in range(config.iteration_cap):
        if f >= config.fidelity_goal:
            break
        gg = float(g @ g)
        if gg == 0:
            break
        while True:
            x_new = np.clip(x + step * g, -cap, cap)
            f_new, g_new = value(x_new)
            if f_new >= f + 1e-4 * float(g @ (x_new - x)):
                break
            step *= 0.5
            if step < 1e-300:
                return x, trace
        x, f, g = x_new, f_new, g_new
        trace.append(f)
        step *= 2.0
    return x, trace


# ---------------------------------------------------------------------------
# states and measurement


@dataclass(frozen=True)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if not np.allclose(m, m.conj().T, atol=1e-12):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > 1e-12:
            raise ValueError(f"trace is {np.trace(m).real}, expected 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def pure(cls, state) -> "DensityMatrix":
        s = np.asarray(state, dtype=complex)
        s = s / np.linalg.norm(s)
        return cls(np.outer(s, s.conj()))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.matrix)).copy()

    def expectation(self, observable) -> float:
        return float(np.real(np.trace(self.matrix @ observable)))

    def conjugated(self, u) -> "DensityMatrix":
        m = u @ self.matrix @ u.conj().T
        return DensityMatrix((m + m.conj().T) / 2)


def pseudo_pure(state, polarization: float) -> DensityMatrix:
    """``(1 - eps) I / d + eps |state><state|``."""
    if not 0 < polarization <= 1:
        raise ValueError("polarization must be in (0, 1]")
    pure = DensityMatrix.pure(state).matrix
    d = pure.shape[0]
    return DensityMatrix((1 - polarization) / d * np.eye(d) + polarization * pure)


def density_fidelity(rho1, rho2) -> float:
    """Normalized overlap ``Tr(r1 r2) / sqrt(Tr(r1^2) Tr(r2^2))``."""
    a = rho1.matrix if isinstance(rho1, DensityMatrix) else np.asarray(rho1)
    b = rho2.matrix if isinstance(rho2, DensityMatrix) else np.asarray(rho2)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    pa = np.real(np.trace(a @ a))
    pb = np.real(np.trace(b @ b))
    if pa <= 0 or pb <= 0:
        raise ZeroDivisionError("zero-purity input")
    return float(np.real(np.trace(a @ b)) / np.sqrt(pa * pb))


def diagonalizing_rotation(rho: DensityMatrix) -> np.ndarray:
    """Unitary ``R`` with ``R rho R^dagger`` diagonal, eigenvalues ascending.

    For a pure state ``|phi><phi|`` the eigenbasis of the zero block is
    arbitrary, so ``R`` is fixed as the Householder reflection sending
    ``|phi>`` to the last basis state (up to phase).  That choice is smooth
    in ``phi`` and does not depend on eigensolver round-off.  Mixed states
    use the eigenvectors, ties kept in solver order.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    m = (m + m.conj().T) / 2
    d = m.shape[0]
    if abs(np.real(np.trace(m @ m)) - 1) < 1e-12:
        w, v = np.linalg.eigh(m)
        phi = v[:, -1]
        alpha = phi[-1] / abs(phi[-1]) if abs(phi[-1]) > 0 else 1.0
        u = phi.copy()
        u[-1] += alpha
        return np.eye(d) - 2 * np.outer(u, u.conj()) / np.vdot(u, u).real
    w, v = np.linalg.eigh(m)
    order = np.argsort(w, kind="stable")
    return v[:, order].conj().T


# 1-based (i, j) index pairs of the four peaks on the middle (carbon) qubit
PEAK_PAIRS = ((5, 7), (6, 8), (1, 3), (2, 4))


def permute_qubits(rho: DensityMatrix, order) -> DensityMatrix:
    """Relabel qubits: new qubit ``k`` is old qubit ``order[k]``."""
    n = rho.dim.bit_length() - 1
    t = rho.matrix.reshape((2,) * (2 * n))
    t = t.transpose(list(order) + [n + o for o in order])
    return DensityMatrix(t.reshape(rho.dim, rho.dim))


@dataclass(frozen=True)
class Readout:
    populations: np.ndarray
    peak_differences: tuple


def population_readout(rho: DensityMatrix, qubit_order=None) -> Readout:
    """Populations plus the four carbon-channel peak differences.

    ``qubit_order`` optionally permutes the qubits first (e.g. to mimic
    swapping another spin's state onto the readout spin).
    """
    if rho.dim != 8:
        raise ValueError("peak readout is defined for 3 qubits")
    if qubit_order is not None:
        rho = permute_qubits(rho, qubit_order)
    p = rho.populations()
    diffs = tuple(float(p[i - 1] - p[j - 1]) for i, j in PEAK_PAIRS)
    return Readout(p, diffs)


def measure_overlap_via_populations(psi, phi) -> float:
    """``|<phi|psi>|**2`` from populations after rotating into the eigenbasis of ``|phi><phi|``."""
    rho0 = DensityMatrix.pure(phi)
    r = diagonalizing_rotation(rho0)
    ref = rho0.conjugated(r).populations()
    p = DensityMatrix.pure(psi).conjugated(r).populations()
    return float(p @ ref)
