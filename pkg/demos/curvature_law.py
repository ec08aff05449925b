"""
Reduced trajectories turn one way
=================================

Measure the signed geodesic curvature of a reduced trajectory in the
Maupertuis metric and compare it with the gyroscopic density.
"""

import numpy as np

from poisson_reduce import (InertiaTensor, IntegratorSettings, LinearPotential, ReducedState,
                            ReducedSystemSpec, measure_curvature, simulate_reduced)

I = InertiaTensor(2.0, 1.5, 1.0)
V = LinearPotential([0.0, 0.0, 1.0])
start = ReducedState([0.6, 0.0, 0.8], [0.0, 2.0, 0.0])

for k in (1.0, -1.0):
    traj = simulate_reduced(ReducedSystemSpec(I, V, k), start,
                            IntegratorSettings(step=1e-3, t_end=5.0))
    cs = measure_curvature(traj, max_points=200)
    print(f"k={k:+g}: kg in [{cs.measured.min():.4f}, {cs.measured.max():.4f}], "
          f"max rel error vs prediction {cs.relative_error.max():.1e}")

###############################################################################
# Positive k keeps the curvature positive, i.e. the path bends to the right
# of its direction of motion under the outward orientation. No sample comes
# close to zero, so the paths have no inflection points.
