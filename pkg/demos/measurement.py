"""
Reading overlaps from populations
=================================

Rotate the evolved state into the eigenbasis of the reference projector.
The overlap is then a diagonal element that a population measurement
can see.
"""

import numpy as np

from reactsim import control, dynamics, model

m = model.ReactionModel()
grid = model.make_grid(m, 3)
phi0, phi1 = (p.state for p in dynamics.lowest_eigenpairs(m, grid, 2))

psi = phi0
for j in range(1, 8):
    psi = dynamics.split_step(psi, m, j)

r = control.diagonalizing_rotation(control.DensityMatrix.pure(phi0.amplitudes))
rho = control.DensityMatrix.pure(psi.amplitudes).conjugated(r)
readout = control.population_readout(rho)
print("populations after R:", np.round(readout.populations, 4))
print("peak differences   :", np.round(readout.peak_differences, 4))
print("reactant overlap   :", dynamics.overlap(psi, phi0), "= P8", readout.populations[-1])

# experiments start from a pseudo-pure state; the deviation carries the signal
pps = control.pseudo_pure(psi.amplitudes, 1e-4)
print("fidelity of PPS deviation with the pure state:",
      control.density_fidelity(pps.matrix - (1 - 1e-4) / 8 * np.eye(8), control.DensityMatrix.pure(psi.amplitudes)))
