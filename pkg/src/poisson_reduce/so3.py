"""
Small-dimension algebra of SO(3).

Rotations are plain ``(3, 3)`` float arrays, vectors are ``(3,)`` arrays.
The configuration ``Q`` of the body maps the inertial basis onto the body
basis, ``e = i Q``, so the angular velocity in the body is the spin
``omega = vee(Q^T Qdot)`` and the vertical direction seen from the body
(the Poisson vector) is the first row of ``Q``.

The basis is right-handed throughout; the sign of the reduced gyroscopic
form depends on this choice.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import Degenerate, NotSkew, NotTangent, NotUnit

ORTHO_TOL = 1e-9
SKEW_TOL = 1e-9
UNIT_TOL = 1e-9


def hat(v) -> np.ndarray:
    """Skew matrix of ``v``, so that ``hat(v) @ w == cross(v, w)``."""
    x, y, z = v
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def vee(m, tol: float = SKEW_TOL) -> np.ndarray:
    """Inverse of :func:`hat` on skew-symmetric matrices.

    Raises
    ------
    NotSkew
        If ``m + m.T`` exceeds ``tol`` (scaled by the size of ``m``).
    """
    m = np.asarray(m, dtype=float)
    scale = max(1.0, np.abs(m).max())
    if np.abs(m + m.T).max() > tol * scale:
        raise NotSkew(f"matrix is not skew-symmetric: |m + m^T| = {np.abs(m + m.T).max():.3e}")
    return 0.5 * np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])


def cross(a, b) -> np.ndarray:
    """Cross product of two 3-vectors (cheaper than ``np.cross`` for single vectors)."""
    a1, a2, a3 = a
    b1, b2, b3 = b
    return np.array([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])


def expm(v) -> np.ndarray:
    """Rotation ``exp(hat(v))`` by the Rodrigues formula."""
    v = np.asarray(v, dtype=float)
    theta = float(np.sqrt(v @ v))
    K = hat(v)
    if theta < 1e-8:
        # series to second order; remainder is below rounding
        return np.eye(3) + K + 0.5 * (K @ K)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * K + b * (K @ K)


def axis_rotation(axis: int, angle: float) -> np.ndarray:
    """Right-handed rotation by ``angle`` about coordinate axis ``axis`` (0, 1, 2)."""
    c, s = np.cos(angle), np.sin(angle)
    i, j = [(1, 2), (2, 0), (0, 1)][axis]
    R = np.eye(3)
    R[i, i] = c
    R[i, j] = -s
    R[j, i] = s
    R[j, j] = c
    return R


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed rotation (QR of a Gaussian matrix with sign fix)."""
    A = rng.standard_normal((3, 3))
    Q, R = np.linalg.qr(A)
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def ortho_residual(q) -> float:
    """``max |Q^T Q - Id|``."""
    q = np.asarray(q, dtype=float)
    return float(np.abs(q.T @ q - np.eye(3)).max())


def as_rotation(m, tol: float = ORTHO_TOL) -> np.ndarray:
    """Validate ``m`` as a rotation and return it as a float array."""
    m = np.asarray(m, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise Degenerate("rotation must be a finite 3x3 matrix")
    if ortho_residual(m) > tol or np.linalg.det(m) <= 0:
        raise Degenerate(f"not a rotation: orthogonality residual {ortho_residual(m):.3e}")
    return m


def spin(q, qdot, tol: float = SKEW_TOL) -> np.ndarray:
    """Angular velocity in the body, ``vee(Q^{-1} Qdot)``.

    Raises :class:`NotTangent` when ``qdot`` is not in ``T_Q SO(3)``.
    """
    q = np.asarray(q, dtype=float)
    omega_hat = q.T @ np.asarray(qdot, dtype=float)
    try:
        return vee(omega_hat, tol)
    except NotSkew as exc:
        raise NotTangent("qdot is not tangent to SO(3) at q") from exc


def poisson_projection(q) -> np.ndarray:
    """Poisson vector of a configuration: the first row of ``Q``.

    This is the spin of the generator of rotations about the vertical axis 1
    and the image of ``Q`` on the Poisson sphere.
    """
    return np.array(q[0], dtype=float)


def check_unit(nu, tol: float = UNIT_TOL) -> np.ndarray:
    nu = np.asarray(nu, dtype=float)
    n = float(np.sqrt(nu @ nu))
    if abs(n - 1.0) > tol:
        raise NotUnit(f"|nu| = {n!r} is not 1 within {tol:g}")
    return nu


def tangent_projection(nu, omega, tol: float = UNIT_TOL) -> np.ndarray:
    """Velocity of the Poisson vector, ``nu x omega``."""
    nu = check_unit(nu, tol)
    return cross(nu, omega)


def reorthonormalize(m) -> np.ndarray:
    """Nearest rotation in Frobenius norm (orthogonal polar factor).

    Raises
    ------
    Degenerate
        If ``det m <= 0`` or ``m`` is too far from orthogonal for the polar
        factor to be meaningful (``max |m^T m - Id| >= 0.5``).
    """
    m = np.asarray(m, dtype=float)
    if np.linalg.det(m) <= 0 or ortho_residual(m) >= 0.5:
        raise Degenerate("matrix too far from SO(3) to re-orthonormalize")
    U, _, Vt = np.linalg.svd(m)
    return U @ Vt


OneForm = Callable[[np.ndarray, np.ndarray], float]


def fd_exterior_derivative_1form(eta: OneForm, q, u, v, eps: float = 1e-3) -> float:
    """Exterior derivative of a 1-form on SO(3) evaluated on left-invariant fields.

    ``eta(Q, omega)`` evaluates the form on the tangent vector at ``Q`` whose
    spin is ``omega``. Returns ``d eta(X_u, X_v)`` at ``q`` using

        d eta(X, Y) = X eta(Y) - Y eta(X) - eta([X, Y]),   [X_u, X_v] = X_{u x v},

    with the directional derivatives taken by central differences along
    ``t -> Q exp(t hat(u))``. Truncation error is O(eps**2).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    q = np.asarray(q, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    Eu_p, Eu_m = expm(eps * u), expm(-eps * u)
    Ev_p, Ev_m = expm(eps * v), expm(-eps * v)
    u_eta_v = (eta(q @ Eu_p, v) - eta(q @ Eu_m, v)) / (2 * eps)
    v_eta_u = (eta(q @ Ev_p, u) - eta(q @ Ev_m, u)) / (2 * eps)
    return u_eta_v - v_eta_u - eta(q, cross(u, v))
