"""Laser-driven hydrogen-transfer dynamics on a grid, on qubits, and under NMR control."""
from .model import ReactionModel, fs_to_au, make_grid
from .dynamics import Wavefunction, lowest_eigenpairs, propagate, run_reaction, split_step
from .circuit import Circuit, Gate, circuit_unitary, qft_circuit, run_circuit, step_circuit
from .control import GrapeConfig, SpinSystem, grape_optimize

__all__ = [
    "ReactionModel", "fs_to_au", "make_grid",
    "Wavefunction", "lowest_eigenpairs", "propagate", "run_reaction", "split_step",
    "Circuit", "Gate", "circuit_unitary", "qft_circuit", "run_circuit", "step_circuit",
    "GrapeConfig", "SpinSystem", "grape_optimize",
]
