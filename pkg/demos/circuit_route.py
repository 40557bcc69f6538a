"""
The same dynamics as a gate network
===================================

Each time step becomes diagonal phase gates plus a QFT pair.  The
statevector simulator reproduces the grid propagation to round-off.
"""

import numpy as np

from reactsim import circuit, dynamics, encoding, model

m = model.ReactionModel()
grid = model.make_grid(m, 3)

qft = circuit.qft_circuit(3)
print(qft.to_text())
print("QFT vs DFT:", np.abs(circuit.circuit_unitary(qft) - dynamics.dft_matrix(8)).max())

# the position operator only has single-z terms, so the field phase splits per qubit
print(encoding.expand_diagonal(model.build_position_diag(grid)).to_table(tol=1e-12))

phi0 = dynamics.lowest_eigenpairs(m, grid, 1)[0].state
state = encoding.encode_state(phi0)
psi = phi0
for j in range(1, m.step_count + 1):
    state = circuit.run_circuit(circuit.step_circuit(m, grid, j, factor_field=True), state)
    psi = dynamics.split_step(psi, m, j)
print("max amplitude difference after 25 steps:", np.abs(state - psi.amplitudes).max())
print("gates per step:", len(circuit.step_circuit(m, grid, 1, factor_field=True)))
