"""
Reduction of the rigid body by rotations about the vertical axis.

The quotient of SO(3) by the symmetry is the Poisson sphere. Everything here
is expressed in direction cosines ``nu = (a1, a2, a3)`` and needs only the
weight ``P(nu) = I1 a1^2 + I2 a2^2 + I3 a3^2 = <v, v>``, the squared length of
the symmetry generator in the kinetic metric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .body import InertiaTensor, PotentialSpec
from .errors import ConstraintViolated
from .so3 import UNIT_TOL, check_unit, cross

TANGENCY_TOL = 1e-10
REPAIR_LIMIT = 1e-6


@dataclass(frozen=True)
class ReducedState:
    """Point of the Poisson sphere with a tangent vector.

    Small violations are repaired on construction: ``|nu|`` within 1e-6 of 1
    is rescaled and a normal component of ``nudot`` up to 1e-6 is projected
    out. Anything larger raises :class:`ConstraintViolated`.
    """

    nu: np.ndarray
    nudot: np.ndarray

    def __post_init__(self):
        nu = np.array(self.nu, dtype=float).reshape(3)
        nudot = np.array(self.nudot, dtype=float).reshape(3)
        n = float(np.sqrt(nu @ nu))
        if abs(n - 1.0) > REPAIR_LIMIT:
            raise ConstraintViolated(f"|nu| = {n!r} is not on the unit sphere")
        if abs(n - 1.0) > UNIT_TOL:
            nu = nu / n
        normal = float(nu @ nudot)
        if abs(normal) > REPAIR_LIMIT:
            raise ConstraintViolated(f"nudot is not tangent: nu . nudot = {normal:.3e}")
        if abs(normal) > TANGENCY_TOL:
            nudot = nudot - normal * nu
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "nudot", nudot)


@dataclass(frozen=True)
class ReducedSystemSpec:
    """Data of the reduced mechanical system on the sphere at momentum ``k``.

    ``curvature_scale`` multiplies the gyroscopic coefficient; it exists only
    for fault-injection checks and must be 1 for physical runs.
    """

    I: InertiaTensor
    V: PotentialSpec
    k: float
    curvature_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "I", InertiaTensor.of(self.I))


def generator_weight(nu, I) -> float:
    """``I1 a1^2 + I2 a2^2 + I3 a3^2``."""
    Id = InertiaTensor.of(I).diag
    nu = np.asarray(nu, dtype=float)
    return float(Id @ (nu * nu))


def _tangent(nu, w, what="vector"):
    if abs(float(nu @ w)) > REPAIR_LIMIT * max(1.0, float(np.sqrt(w @ w))):
        raise ConstraintViolated(f"{what} is not tangent to the sphere at nu")


def horizontal_lift(s: ReducedState, I) -> np.ndarray:
    """Zero-momentum angular velocity covering ``s.nudot`` (Kolosov relations).

    ``omega0 = (nudot x I nu) / (I nu . nu)``; it satisfies ``I omega0 . nu = 0``
    and ``nu x omega0 = nudot``.
    """
    Id = InertiaTensor.of(I).diag
    Inu = Id * s.nu
    return cross(s.nudot, Inu) / float(Inu @ s.nu)


def horizontal_lift_components(nu, nudot, I) -> np.ndarray:
    """The three Kolosov ratios written out one coordinate at a time."""
    I1, I2, I3 = InertiaTensor.of(I).moments
    a1, a2, a3 = nu
    d1, d2, d3 = nudot
    P = I1 * a1 * a1 + I2 * a2 * a2 + I3 * a3 * a3
    return np.array([(I3 * a3 * d2 - I2 * a2 * d3) / P,
                     (I1 * a1 * d3 - I3 * a3 * d1) / P,
                     (I2 * a2 * d1 - I1 * a1 * d2) / P])


def reduced_metric(s1_dot, s2_dot, nu, I) -> float:
    """Reduced kinetic metric on the Poisson sphere.

    ``I1 I2 I3 (sum_i x_i y_i / I_i) / (I nu . nu)`` for tangent vectors
    ``x, y`` at ``nu``.
    """
    nu = check_unit(nu)
    x = np.asarray(s1_dot, dtype=float)
    y = np.asarray(s2_dot, dtype=float)
    _tangent(nu, x)
    _tangent(nu, y)
    Id = InertiaTensor.of(I).diag
    return float(np.prod(Id) * ((x * y) @ (1.0 / Id)) / (Id @ (nu * nu)))


def connection_value(nu, omega, I) -> float:
    """Connection form: ``(I omega . nu) / (I nu . nu)``."""
    nu = check_unit(nu)
    Id = InertiaTensor.of(I).diag
    return float((Id * nu) @ omega / ((Id * nu) @ nu))


def curvature_coefficient(nu, I) -> float:
    """Density of the reduced gyroscopic form per unit momentum.

    The reduced gyroscopic 2-form is ``k * c(nu) * vol`` where ``vol`` is the
    outward area form of the unit sphere and

        c = [(I2+I3-I1) I1 a1^2 + (I3+I1-I2) I2 a2^2 + (I1+I2-I3) I3 a3^2] / P^2.

    ``c`` is invariant under scaling of the inertia tensor and is strictly
    positive when the strict triangle inequalities hold.
    """
    nu = check_unit(nu)
    I1, I2, I3 = InertiaTensor.of(I).moments
    a1, a2, a3 = nu
    P = I1 * a1 * a1 + I2 * a2 * a2 + I3 * a3 * a3
    num = ((I2 + I3 - I1) * I1 * a1 * a1 + (I3 + I1 - I2) * I2 * a2 * a2
           + (I1 + I2 - I3) * I3 * a3 * a3)
    return num / (P * P)


def curvature_coefficient_grid(nus, I) -> np.ndarray:
    """Vectorized :func:`curvature_coefficient` for an ``(n, 3)`` array of unit vectors."""
    I1, I2, I3 = InertiaTensor.of(I).moments
    a = np.asarray(nus, dtype=float)
    sq = a * a
    P = I1 * sq[:, 0] + I2 * sq[:, 1] + I3 * sq[:, 2]
    num = ((I2 + I3 - I1) * I1 * sq[:, 0] + (I3 + I1 - I2) * I2 * sq[:, 1]
           + (I1 + I2 - I3) * I3 * sq[:, 2])
    return num / (P * P)


def gyroscopic_form(nu, x, y, k, I) -> float:
    """Reduced gyroscopic 2-form ``k c(nu) vol(x, y)``, ``vol(x, y) = nu . (x x y)``."""
    nu = check_unit(nu)
    return k * curvature_coefficient(nu, I) * float(nu @ cross(x, y))


def amended_potential(nu, k, I, V: PotentialSpec) -> float:
    """``V(nu) + k^2 / (2 I nu . nu)``."""
    nu = check_unit(nu)
    return V.value(nu) + k * k / (2.0 * generator_weight(nu, I))


def amended_potential_gradient(nu, k, I, V: PotentialSpec) -> np.ndarray:
    """Ambient gradient of :func:`amended_potential`."""
    Id = InertiaTensor.of(I).diag
    nu = np.asarray(nu, dtype=float)
    P = float(Id @ (nu * nu))
    return V.gradient(nu) - (k * k / (P * P)) * (Id * nu)


def reconstruct_velocity(s: ReducedState, k: float, I) -> np.ndarray:
    """Angular velocity with momentum ``k`` projecting to ``s.nudot``.

    ``omega = omega0 + k nu / (I nu . nu)``.
    """
    return horizontal_lift(s, I) + (k / generator_weight(s.nu, I)) * s.nu


def decompose_velocity(nu, omega, I):
    """Split ``omega`` into its horizontal part and the multiple of ``nu``.

    Returns ``(omega0, eta)`` with ``omega = omega0 + eta * nu``.
    """
    eta = connection_value(nu, omega, I)
    return np.asarray(omega, dtype=float) - eta * np.asarray(nu, dtype=float), eta


def reduced_energy(s: ReducedState, spec: ReducedSystemSpec) -> float:
    """``m(nudot, nudot) / 2 + amended potential``."""
    return (0.5 * reduced_metric(s.nudot, s.nudot, s.nu, spec.I)
            + amended_potential(s.nu, spec.k, spec.I, spec.V))


def lat_long_grid(n_lat: int = 400, n_lon: int = 800):
    """Midpoint lat-long grid on the unit sphere.

    Returns ``(points, weights)``; the weights are the cell areas
    ``sin(theta) dtheta dphi`` and sum to 4 pi up to O(n_lat**-2).
    """
    dth = np.pi / n_lat
    dph = 2 * np.pi / n_lon
    th = (np.arange(n_lat) + 0.5) * dth
    ph = (np.arange(n_lon) + 0.5) * dph
    T, Ph = np.meshgrid(th, ph, indexing="ij")
    pts = np.stack([np.sin(T) * np.cos(Ph), np.sin(T) * np.sin(Ph), np.cos(T)], axis=-1)
    w = np.sin(T) * dth * dph
    return pts.reshape(-1, 3), w.ravel()


def sphere_integral_of_curvature(I, n_lat: int = 400, n_lon: int = 800) -> float:
    """Integral of the reduced curvature form over the sphere (``4 pi`` for every I)."""
    pts, w = lat_long_grid(n_lat, n_lon)
    return float(curvature_coefficient_grid(pts, I) @ w)
