"""Qubit encoding of grid states and Pauli-z expansions of diagonal operators.

Bit convention: qubit 0 is the most significant bit of the grid index and
``|0>`` is the +1 eigenstate of sigma_z.  A word such as ``"zii"`` names the
operator ``sigma_z (x) 1 (x) 1``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .dynamics import Wavefunction
from .model import DiagonalOperator, Grid


def _qubits_for(length: int) -> int:
    n = length.bit_length() - 1
    if length < 1 or 1 << n != length:
        raise ValueError(f"length {length} is not a power of two")
    return n


def walsh_hadamard(values: np.ndarray) -> np.ndarray:
    """Unnormalized fast Walsh-Hadamard transform along the last axis.

    Output index bits are read with the same MSB-first convention as the
    input, a set bit meaning sigma_z on that qubit.
    """
    values = np.asarray(values)
    n = _qubits_for(values.shape[-1])
    lead = values.shape[:-1]
    a = values.reshape(lead + (2,) * n)
    for ax in range(len(lead), len(lead) + n):
        lo = np.take(a, 0, axis=ax)
        hi = np.take(a, 1, axis=ax)
        a = np.stack([lo + hi, lo - hi], axis=ax)
    return a.reshape(values.shape)


def word_for_index(index: int, n: int) -> str:
    return "".join("z" if index >> (n - 1 - j) & 1 else "i" for j in range(n))


def index_for_word(word: str) -> int:
    if set(word) - {"z", "i"}:
        raise ValueError(f"word {word!r} may only contain 'z' and 'i'")
    return int(word.replace("z", "1").replace("i", "0"), 2)


@dataclass(frozen=True)
class PauliZExpansion:
    qubit_count: int
    coefficients: dict  # word -> real coefficient; missing words are zero

    def __post_init__(self):
        for w in self.coefficients:
            if len(w) != self.qubit_count:
                raise ValueError(f"word {w!r} has wrong length for {self.qubit_count} qubits")
            index_for_word(w)

    def coefficient(self, word: str) -> float:
        return self.coefficients.get(word, 0.0)

    def as_vector(self) -> np.ndarray:
        vec = np.zeros(2**self.qubit_count)
        for w, c in self.coefficients.items():
            vec[index_for_word(w)] = c
        return vec

    def nonzero(self, tol: float = 1e-12) -> dict:
        return {w: c for w, c in self.coefficients.items() if abs(c) > tol}

    def to_table(self, tol: float = 0.0) -> str:
        lines = ["word,coefficient"]
        for idx in range(2**self.qubit_count):
            w = word_for_index(idx, self.qubit_count)
            c = self.coefficient(w)
            if abs(c) > tol or (tol == 0.0 and w in self.coefficients):
                lines.append(f"{w},{c:.12g}")
        return "\n".join(lines) + "\n"


def expand_diagonal(diag, n: int | None = None) -> PauliZExpansion:
    values = np.asarray(diag.values if isinstance(diag, DiagonalOperator) else diag, dtype=float)
    nq = _qubits_for(len(values))
    if n is not None and n != nq:
        raise ValueError(f"diagonal of length {len(values)} does not fit {n} qubits")
    coeffs = walsh_hadamard(values) / len(values)
    words = {word_for_index(k, nq): float(c) for k, c in enumerate(coeffs)}
    return PauliZExpansion(nq, words)


def reconstruct_diagonal(expansion: PauliZExpansion, representation: str = "position") -> DiagonalOperator:
    return DiagonalOperator(walsh_hadamard(expansion.as_vector()), representation)


def pauli_string_matrix(word: str) -> np.ndarray:
    """Dense tensor product for a z/i word; used as an independent check."""
    z = np.diag([1.0, -1.0])
    out = np.ones((1, 1))
    for letter in word:
        out = np.kron(out, z if letter == "z" else np.eye(2))
    return out


def single_z_words(n: int):
    for j in range(n):
        yield "".join("z" if k == j else "i" for k in range(n))


def all_words(n: int):
    return ("".join(p) for p in itertools.product("iz", repeat=n))


def encode_state(psi: Wavefunction) -> np.ndarray:
    """Grid amplitude ``m_k`` becomes the amplitude of basis state ``|k>``."""
    _qubits_for(psi.grid.point_count)
    return np.array(psi.amplitudes, dtype=complex)


def decode_state(statevector: np.ndarray, grid: Grid) -> Wavefunction:
    return Wavefunction(statevector, grid)
