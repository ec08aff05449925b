"""
Full body versus reduced system on the sphere
=============================================

A full rotation-matrix simulation, projected to the direction of the field
in the body, is compared with an independent integration of the reduced
gyroscopic system in stereographic charts.
"""

import numpy as np

from poisson_reduce import (BodyPhaseState, FullState, InertiaTensor, IntegratorSettings,
                            LinearPotential, ReducedState, ReducedSystemSpec, momentum,
                            simulate_body, simulate_reduced)
from poisson_reduce import so3

I = InertiaTensor(2.0, 1.5, 1.0)
V = LinearPotential([0.0, 0.0, 1.0])
Q0 = so3.random_rotation(np.random.default_rng(7))
w0 = np.array([1.0, 2.0, 3.0])
settings = IntegratorSettings(step=1e-3, t_end=10.0)

full = simulate_body(FullState(Q0, w0), I, V, settings)

###############################################################################
# The reduced run needs only the momentum value k and the sphere velocity.

nu0 = so3.poisson_projection(Q0)
k = momentum(BodyPhaseState(nu0, w0), I)
for scale in (1.0, 1.01):
    red = simulate_reduced(ReducedSystemSpec(I, V, k, scale), ReducedState(nu0, np.cross(nu0, w0)),
                           settings)
    d = np.linalg.norm(full.nu - red.nu, axis=1).max()
    print(f"coefficient scale {scale}: sup distance {d:.2e}, {red.switches} chart switches")

###############################################################################
# A 1% error in the gyroscopic term is visible at once; the exact term
# agrees to integration accuracy.
