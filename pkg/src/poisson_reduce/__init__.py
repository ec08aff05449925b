"""Rigid body with a fixed point, its reduction to the Poisson sphere, and 2-D gyroscopic systems."""
from .body import (BodyPhaseState, CustomPotential, FullState, InertiaTensor, LinearPotential,
                   PotentialSpec, QuadraticPotential, Trajectory, ZeroPotential, euler_poisson_rhs,
                   full_rhs, kinetic_energy, momentum, simulate_body, total_energy)
from .charts import Chart, measure_curvature, reduced_system_in_chart, simulate_reduced
from .gyro2d import (ChartState, GyroSystem2D, christoffel, curvature_flow_rhs, gyro_rhs,
                     maupertuis_metric, reparameterize, signed_geodesic_curvature)
from .integrate import IntegratorSettings, Solution, StepRecord, dense_eval, integrate
from .reduction import (ReducedState, ReducedSystemSpec, amended_potential, connection_value,
                        curvature_coefficient, horizontal_lift, reconstruct_velocity,
                        reduced_metric)

__version__ = "0.1.0"
