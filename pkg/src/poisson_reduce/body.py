"""
Rigid body with a fixed point in an axially symmetric field.

The symmetry axis is the inertial axis 1, so the potential depends on the
configuration only through the Poisson vector ``nu`` (first row of ``Q``).
Motion is integrated either on the reduced phase space ``(nu, omega)``
(Euler-Poisson form) or on the full space ``(Q, omega)``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import so3
from .errors import InvariantBlown, NotUnit
from .integrate import IntegratorSettings, Solution, integrate

log = logging.getLogger(__name__)

UNIT_TOL = 1e-9
HARD_LIMIT = 1e-3


@dataclass(frozen=True)
class InertiaTensor:
    """Principal moments of inertia, diagonal in the body frame."""

    I1: float
    I2: float
    I3: float

    def __post_init__(self):
        if not all(np.isfinite(x) and x > 0 for x in self.moments):
            raise ValueError(f"moments of inertia must be positive, got {self.moments}")

    @classmethod
    def of(cls, moments) -> "InertiaTensor":
        if isinstance(moments, InertiaTensor):
            return moments
        a, b, c = (float(x) for x in moments)
        return cls(a, b, c)

    @property
    def moments(self) -> tuple:
        return (self.I1, self.I2, self.I3)

    @property
    def diag(self) -> np.ndarray:
        return np.array(self.moments)

    @property
    def strict_triangle(self) -> bool:
        a, b, c = self.moments
        return a + b > c and b + c > a and c + a > b

    def require_strict_triangle(self) -> bool:
        """Warn (and return False) when the sign guarantee of the reduced form is void."""
        if not self.strict_triangle:
            warnings.warn(f"inertia {self.moments} violates the strict triangle inequalities; "
                          "the reduced gyroscopic form need not have constant sign",
                          stacklevel=2)
            return False
        return True


class PotentialSpec:
    """Potential energy as a function of the Poisson vector.

    Subclasses implement :meth:`value` and :meth:`gradient`; the gradient is
    the ambient gradient in R^3 (only its tangential part affects motion).
    """

    kind = "abstract"

    def value(self, nu) -> float:
        raise NotImplementedError

    def gradient(self, nu) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, nu):
        return self.value(nu), self.gradient(nu)

    def to_dict(self) -> dict:
        raise TypeError(f"{type(self).__name__} is not serializable")


class ZeroPotential(PotentialSpec):
    kind = "zero"

    def value(self, nu) -> float:
        return 0.0

    def gradient(self, nu) -> np.ndarray:
        return np.zeros(3)

    def to_dict(self) -> dict:
        return {"kind": "zero"}

    def __repr__(self):
        return "ZeroPotential()"


class LinearPotential(PotentialSpec):
    """``V(nu) = c . nu``; a heavy top has ``c`` = weight times centre-of-mass offset."""

    kind = "linear"

    def __init__(self, c):
        self.c = np.array(c, dtype=float).reshape(3)

    def value(self, nu) -> float:
        return float(self.c @ nu)

    def gradient(self, nu) -> np.ndarray:
        return self.c.copy()

    def to_dict(self) -> dict:
        return {"kind": "linear", "c": self.c.tolist()}

    def __repr__(self):
        return f"LinearPotential({self.c.tolist()})"


class QuadraticPotential(PotentialSpec):
    """``V(nu) = nu . B nu / 2`` with symmetric ``B``."""

    kind = "quadratic"

    def __init__(self, B):
        B = np.array(B, dtype=float).reshape(3, 3)
        if np.abs(B - B.T).max() > 1e-12:
            raise ValueError("quadratic potential matrix must be symmetric")
        self.B = B

    def value(self, nu) -> float:
        nu = np.asarray(nu, dtype=float)
        return 0.5 * float(nu @ self.B @ nu)

    def gradient(self, nu) -> np.ndarray:
        return self.B @ nu

    def to_dict(self) -> dict:
        return {"kind": "quadratic", "B": self.B.tolist()}

    def __repr__(self):
        return f"QuadraticPotential({self.B.tolist()})"


_PROBE_POINTS = np.array([[0.6, 0.0, 0.8], [0.0, -0.28, 0.96], [-0.48, 0.6, 0.64],
                          [1.0, 0.0, 0.0], [0.36, -0.48, -0.8]])


class CustomPotential(PotentialSpec):
    """User potential ``func(nu) -> (value, gradient)``.

    The gradient is checked against central differences (step 1e-5) at a few
    fixed points on the sphere when the object is built.
    """

    kind = "custom"

    def __init__(self, func: Callable, fd_step: float = 1e-5, tol: float = 1e-6):
        self.func = func
        for p in _PROBE_POINTS:
            _, g = func(p)
            fd = np.empty(3)
            for i in range(3):
                e = np.zeros(3)
                e[i] = fd_step
                fd[i] = (func(p + e)[0] - func(p - e)[0]) / (2 * fd_step)
            g = np.asarray(g, dtype=float)
            if np.abs(fd - g).max() > tol * max(1.0, np.abs(g).max()):
                raise ValueError(f"custom potential gradient disagrees with finite differences at {p}")

    def value(self, nu) -> float:
        return float(self.func(nu)[0])

    def gradient(self, nu) -> np.ndarray:
        return np.asarray(self.func(nu)[1], dtype=float)


def potential_from_dict(d: dict) -> PotentialSpec:
    kind = d.get("kind")
    if kind == "zero":
        return ZeroPotential()
    if kind == "linear":
        return LinearPotential(d["c"])
    if kind == "quadratic":
        return QuadraticPotential(d["B"])
    raise ValueError(f"unknown potential kind {kind!r}")


@dataclass(frozen=True)
class BodyPhaseState:
    nu: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        nu = np.array(self.nu, dtype=float).reshape(3)
        if abs(np.linalg.norm(nu) - 1.0) > UNIT_TOL:
            raise NotUnit(f"|nu| - 1 = {np.linalg.norm(nu) - 1.0:.3e}")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "omega", np.array(self.omega, dtype=float).reshape(3))

    def pack(self) -> np.ndarray:
        return np.concatenate([self.nu, self.omega])


@dataclass(frozen=True)
class FullState:
    q: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", so3.as_rotation(self.q).copy())
        object.__setattr__(self, "omega", np.array(self.omega, dtype=float).reshape(3))

    @property
    def nu(self) -> np.ndarray:
        return so3.poisson_projection(self.q)

    def pack(self) -> np.ndarray:
        return np.concatenate([self.q.ravel(), self.omega])


@dataclass
class Trajectory:
    """Sampled motion with per-sample first integrals and constraint residuals.

    ``states`` holds packed states: ``(nu, omega)`` rows of length 6 or
    ``(Q.ravel(), omega)`` rows of length 12. ``residuals`` maps a residual
    name (``unit``, ``ortho``) to a per-sample array.
    """

    t: np.ndarray
    states: np.ndarray
    energy: np.ndarray
    momentum: np.ndarray
    residuals: dict = field(default_factory=dict)
    solution: Solution | None = None
    #: largest residual seen immediately before a renormalization
    max_pre_correction: dict = field(default_factory=dict)

    @property
    def nu(self) -> np.ndarray:
        # first row of Q is the leading triple of Q.ravel()
        return self.states[:, :3]

    @property
    def omega(self) -> np.ndarray:
        return self.states[:, -3:]

    @property
    def is_full(self) -> bool:
        return self.states.shape[1] == 12

    def rotations(self) -> np.ndarray:
        return self.states[:, :9].reshape(-1, 3, 3)


def kinetic_energy(omega, I) -> float:
    I = InertiaTensor.of(I)
    omega = np.asarray(omega, dtype=float)
    return 0.5 * float(I.diag @ (omega * omega))


def total_energy(s: BodyPhaseState, I, V: PotentialSpec) -> float:
    return kinetic_energy(s.omega, I) + V.value(s.nu)


def momentum(s: BodyPhaseState, I) -> float:
    """Momentum of the vertical rotation symmetry, ``I omega . nu``."""
    I = InertiaTensor.of(I)
    return float((I.diag * s.omega) @ s.nu)


def _omega_dot(nu, omega, Id, V):
    L = Id * omega
    return (so3.cross(L, omega) + so3.cross(nu, V.gradient(nu))) / Id


def euler_poisson_rhs(s: BodyPhaseState, I, V: PotentialSpec):
    """Euler-Poisson vector field.

    ``nudot = nu x omega`` and ``I omegadot = (I omega) x omega + nu x grad V``.
    Both the total energy and the momentum ``I omega . nu`` are exact first
    integrals of this field.
    """
    I = InertiaTensor.of(I)
    return so3.cross(s.nu, s.omega), _omega_dot(s.nu, s.omega, I.diag, V)


def full_rhs(s: FullState, I, V: PotentialSpec):
    """Lift of the Euler-Poisson field to ``SO(3) x R^3``: ``Qdot = Q hat(omega)``."""
    I = InertiaTensor.of(I)
    return s.q @ so3.hat(s.omega), _omega_dot(s.q[0], s.omega, I.diag, V)


# The two vector fields below are the hot loop of every simulation; they work
# on Python floats because numpy call overhead dominates at this size.
def _reduced_vector_rhs(Id, V):
    I1, I2, I3 = Id.tolist()

    def rhs(t, y):
        n1, n2, n3, w1, w2, w3 = y.tolist()
        g1, g2, g3 = V.gradient(y[:3]).tolist()
        L1, L2, L3 = I1 * w1, I2 * w2, I3 * w3
        return np.array([
            n2 * w3 - n3 * w2, n3 * w1 - n1 * w3, n1 * w2 - n2 * w1,
            (L2 * w3 - L3 * w2 + n2 * g3 - n3 * g2) / I1,
            (L3 * w1 - L1 * w3 + n3 * g1 - n1 * g3) / I2,
            (L1 * w2 - L2 * w1 + n1 * g2 - n2 * g1) / I3,
        ])
    return rhs


def _full_vector_rhs(Id, V):
    I1, I2, I3 = Id.tolist()

    def rhs(t, y):
        q11, q12, q13, q21, q22, q23, q31, q32, q33, w1, w2, w3 = y.tolist()
        g1, g2, g3 = V.gradient(y[:3]).tolist()
        L1, L2, L3 = I1 * w1, I2 * w2, I3 * w3
        n1, n2, n3 = q11, q12, q13
        # rows of Q @ hat(omega)
        return np.array([
            q12 * w3 - q13 * w2, q13 * w1 - q11 * w3, q11 * w2 - q12 * w1,
            q22 * w3 - q23 * w2, q23 * w1 - q21 * w3, q21 * w2 - q22 * w1,
            q32 * w3 - q33 * w2, q33 * w1 - q31 * w3, q31 * w2 - q32 * w1,
            (L2 * w3 - L3 * w2 + n2 * g3 - n3 * g2) / I1,
            (L3 * w1 - L1 * w3 + n3 * g1 - n1 * g3) / I2,
            (L1 * w2 - L2 * w1 + n1 * g2 - n2 * g1) / I3,
        ])
    return rhs


def _restore_integrals(nu_old, nu_new, omega, Id, V):
    """Smallest change of ``omega`` that keeps E and J at their pre-projection values.

    Rescaling ``nu`` alone shifts the momentum by ``J * (|nu| - 1)``; RK4
    shrinks ``|nu|`` at a rate of order h**5, so repeated bare projections
    would add a drift of their own on top of the integrator's.
    """
    L_old = Id * omega
    dE = V.value(nu_old) - V.value(nu_new)
    dJ = float(L_old @ (nu_old - nu_new))
    A = np.array([L_old, Id * nu_new])
    G = A @ A.T
    if abs(np.linalg.det(G)) < 1e-14 * np.trace(G) ** 2:
        return omega + np.linalg.lstsq(A, [dE, dJ], rcond=None)[0]
    return omega + A.T @ np.linalg.solve(G, [dE, dJ])


def simulate_body(initial: Union[BodyPhaseState, FullState], I, V: PotentialSpec,
                  settings: IntegratorSettings = IntegratorSettings()) -> Trajectory:
    """Integrate the rigid body from ``initial`` and record invariants.

    Every ``settings.renorm_every`` accepted steps ``nu`` is rescaled to unit
    length (reduced variant) or ``Q`` is replaced by its polar factor (full
    variant); ``omega`` then gets the minimum-norm nudge that leaves E and J
    where the integrator put them, so the projection neither hides nor adds
    drift. Residuals are measured on the stored samples, and the largest
    residual seen just before each correction is kept in
    ``Trajectory.max_pre_correction``.

    Raises
    ------
    InvariantBlown
        A constraint residual exceeds ``HARD_LIMIT`` (1e-3).
    StepRejected
        Adaptive step underflow.
    """
    I = InertiaTensor.of(I)
    Id = I.diag
    full = isinstance(initial, FullState)
    y0 = initial.pack()
    rhs = _full_vector_rhs(Id, V) if full else _reduced_vector_rhs(Id, V)
    every = settings.renorm_every
    worst = {"unit": 0.0, "ortho": 0.0}
    n_renorm = [0]

    def renormalize(i, t, y):
        if full:
            Q = y[:9].reshape(3, 3)
            res = so3.ortho_residual(Q)
            key = "ortho"
        else:
            res = abs(float(np.sqrt(y[:3] @ y[:3])) - 1.0)
            key = "unit"
        if res > HARD_LIMIT:
            raise InvariantBlown(f"{key} residual {res:.3e} at t={t:.6g}")
        if i % every:
            return None
        worst[key] = max(worst[key], res)
        n_renorm[0] += 1
        y = y.copy()
        nu_old = y[:3].copy()
        if full:
            y[:9] = so3.reorthonormalize(Q).ravel()
        else:
            y[:3] /= np.sqrt(y[:3] @ y[:3])
        y[-3:] = _restore_integrals(nu_old, y[:3], y[-3:], Id, V)
        return y

    sol = integrate(rhs, y0, settings, hooks=[renormalize])
    log.debug("simulate_body: %d samples, %d renormalizations", len(sol), n_renorm[0])
    Y = sol.y
    omega = Y[:, -3:]
    if full:
        Qs = Y[:, :9].reshape(-1, 3, 3)
        nu = Qs[:, 0, :]
        G = np.einsum("nki,nkj->nij", Qs, Qs) - np.eye(3)
        ortho = np.abs(G).reshape(len(Y), -1).max(axis=1)
    else:
        nu = Y[:, :3]
    energy = 0.5 * ((omega * omega) @ Id) + np.array([V.value(n) for n in nu])
    mom = ((omega * Id) * nu).sum(axis=1)
    residuals = {"unit": np.abs(np.linalg.norm(nu, axis=1) - 1.0)}
    if full:
        residuals["ortho"] = ortho
    return Trajectory(sol.t, Y, energy, mom, residuals, sol,
                      {k: v for k, v in worst.items() if (k == "ortho") == full})
