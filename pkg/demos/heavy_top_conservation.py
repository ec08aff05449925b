"""
Heavy top: what RK4 conserves and how fast the error shrinks
============================================================

Integrate the Euler-Poisson equations for an asymmetric top in a uniform
field and watch energy and the vertical angular momentum.
"""

import numpy as np

from poisson_reduce import (BodyPhaseState, InertiaTensor, IntegratorSettings, LinearPotential,
                            simulate_body)

I = InertiaTensor(2.0, 1.5, 1.0)
V = LinearPotential([0.0, 0.0, 1.0])
nu0 = np.array([0.6, 0.0, 0.8])
start = BodyPhaseState(nu0, np.array([1.0, 2.0, 3.0]))

###############################################################################
# One run at h = 1e-3 out to t = 50.

traj = simulate_body(start, I, V, IntegratorSettings(step=1e-3, t_end=50.0))
E, J = traj.energy, traj.momentum
print(f"E0 = {E[0]:.6f}, J0 = {J[0]:.6f}")
print(f"max |dE|/E0 = {np.abs(E - E[0]).max() / abs(E[0]):.2e}")
print(f"max |dJ|    = {np.abs(J - J[0]).max():.2e}")
print(f"max | |nu| - 1 | = {traj.residuals['unit'].max():.2e}")

###############################################################################
# Halve the step a few times. The drift should fall roughly 16x per halving
# until roundoff takes over.

for h in (8e-3, 4e-3, 2e-3, 1e-3):
    t = simulate_body(start, I, V, IntegratorSettings(step=h, t_end=50.0))
    print(f"h={h:.0e}  dE={np.abs(t.energy - t.energy[0]).max():.3e}  "
          f"dJ={np.abs(t.momentum - t.momentum[0]).max():.3e}")
