"""
Grid operators of the double well
=================================

Build the 8-point grid, print the potential, kinetic and position
diagonals, and look at the two lowest eigenstates.
"""

import numpy as np

from reactsim import dynamics, model

m = model.ReactionModel()
grid = model.make_grid(m, 3)

# diagonals in units of 1e-3 hartree; the end points carry the wall factor
np.set_printoptions(precision=2, suppress=True)
print("V_diag x1e3:", model.build_potential_diag(m, grid).values * 1e3)
print("T_diag x1e3:", model.build_kinetic_diag(m, grid).values * 1e3)
print("q_diag     :", grid.positions)

# reactant and product states are the two lowest eigenstates of T + V
for k, pair in enumerate(dynamics.lowest_eigenpairs(m, grid, 2)):
    psi = pair.state
    print(f"phi{k}: E = {pair.energy:.6f} Eh, left {psi.left_probability():.3f}, right {psi.right_probability():.3f}")

# a finer grid for comparison
fine = model.make_grid(m, 6)
for k, pair in enumerate(dynamics.lowest_eigenpairs(m, fine, 2)):
    print(f"64-point phi{k}: E = {pair.energy:.6f} Eh, right-well probability {pair.state.right_probability():.3f}")
