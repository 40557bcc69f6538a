"""
Field-driven proton transfer
============================

Propagate the reactant state under the trapezoidal laser pulse with the
symmetric split-operator step and print the reactant/product overlaps.
"""

from reactsim import dynamics, model

m = model.ReactionModel()
snaps, final = dynamics.run_reaction(m, qubits=3)

print(f"{'step':>4} {'t/fs':>6} {'reactant':>9} {'product':>9}")
for s in snaps:
    print(f"{s.step_index:4d} {s.time:6.2f} {s.reactant_overlap:9.4f} {s.product_overlap:9.4f}")
print("final norm", final.norm)

# The 8-point grid is coarse.  Here is the same run on 64 points with
# progressively finer time steps.
grid = model.make_grid(m, 6)
for steps in (25, 50, 100, 400):
    last = dynamics.exact_reference(m.with_(step_count=steps), grid)[-1]
    print(f"64 points, {steps:3d} steps: reactant {last.reactant_overlap:.4f} product {last.product_overlap:.4f}")
