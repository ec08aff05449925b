"""
Two-dimensional mechanical systems with gyroscopic forces, in coordinates.

A system is a metric ``a_ij(q)``, a potential ``V(q)`` and a closed 2-form
``kappa = c(q) dq1 ^ dq2``. The coefficient convention is ``kappa_12 = c``,
``kappa_21 = 0`` with antisymmetrized ``kbar_ij = kappa_ij - kappa_ji``, so
the equations of motion read

    q''^i + Gamma^i_jk q'^j q'^k + a^ij dV/dq^j = a^ik kbar_kj q'^j.

With ``c > 0`` in a positively oriented chart the force turns the velocity
clockwise.

On an energy level ``h`` the same curves, parameterized by arclength ``tau``
of the Maupertuis metric ``m_h = 2 (h - V) a``, solve the gyroscopic
equation of ``(m_h, V = 0, kappa)`` at unit speed, and ``dt = dtau / (2 (h - V))``
converts back to physical time.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import NotUnitSpeed, SingularMetric, TurningRegion
from .integrate import Solution, dense_eval

HV_FLOOR = 1e-6
FD_STEP = 1e-5


def _zero_potential(q):
    return 0.0, np.zeros(2)


def _zero_kappa(q):
    return 0.0


class GyroSystem2D:
    """Chart-level data of a 2-D gyroscopic system.

    Parameters
    ----------
    metric : callable
        ``q -> (2, 2)`` symmetric positive definite matrix.
    potential : callable, optional
        ``q -> (V, grad V)``. Defaults to zero.
    kappa : callable, optional
        ``q -> c(q)``, the coefficient of ``dq1 ^ dq2``. Defaults to zero.
    metric_grad : callable, optional
        ``q -> (2, 2, 2)`` array ``d[k, i, j] = d a_ij / d q^k``. When omitted
        the derivatives are taken by central differences with step
        ``fd_step * (|q| + 1)``.
    """

    def __init__(self, metric: Callable, potential: Optional[Callable] = None,
                 kappa: Optional[Callable] = None, metric_grad: Optional[Callable] = None,
                 fd_step: float = FD_STEP):
        self.metric = metric
        self.potential = potential or _zero_potential
        self.kappa = kappa or _zero_kappa
        self._metric_grad = metric_grad
        self.fd_step = fd_step

    def metric_grad(self, q) -> np.ndarray:
        if self._metric_grad is not None:
            return np.asarray(self._metric_grad(q), dtype=float)
        q = np.asarray(q, dtype=float)
        h = self.fd_step * (float(np.sqrt(q @ q)) + 1.0)
        out = np.empty((2, 2, 2))
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            out[k] = (np.asarray(self.metric(q + e)) - np.asarray(self.metric(q - e))) / (2 * h)
        return out

    def energy(self, q, qdot) -> float:
        qdot = np.asarray(qdot, dtype=float)
        return 0.5 * float(qdot @ np.asarray(self.metric(q)) @ qdot) + float(self.potential(q)[0])


@dataclass(frozen=True)
class ChartState:
    q: np.ndarray
    qdot: np.ndarray

    def pack(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.q, float), np.asarray(self.qdot, float)])


def _inverse(a) -> np.ndarray:
    a11, a12, a21, a22 = a[0, 0], a[0, 1], a[1, 0], a[1, 1]
    det = a11 * a22 - a12 * a21
    if not (det > 0 and a11 + a22 > 0):
        raise SingularMetric(f"metric not positive definite (det={det:.3e})")
    return np.array([[a22, -a12], [-a21, a11]]) / det


def christoffel(sys: GyroSystem2D, q) -> np.ndarray:
    """Christoffel symbols ``G[i, j, k]`` of the metric at ``q``.

    ``G^i_jk = a^il (d_j a_lk + d_k a_lj - d_l a_jk) / 2``.
    """
    ainv = _inverse(np.asarray(sys.metric(q), dtype=float))
    d = sys.metric_grad(q)
    # lower-index symbols G_ljk, symmetric in (j, k) by construction
    low = 0.5 * (np.transpose(d, (1, 0, 2)) + np.transpose(d, (1, 2, 0)) - d)
    return np.einsum("il,ljk->ijk", ainv, low)


def _accel(a, d, gradV, c, v):
    """Acceleration of the gyroscopic equation for metric ``a``, ``d = grad a``."""
    ainv = _inverse(a)
    v1, v2 = v
    dv = v1 * d[0] + v2 * d[1]           # (q'.grad) a
    u = dv @ v                           # d_j a_lk q'^j q'^k
    w = np.array([v @ d[0] @ v, v @ d[1] @ v])
    force = np.array([c * v2, -c * v1]) - gradV
    return ainv @ (force - u + 0.5 * w)


def gyro_rhs(sys: GyroSystem2D, s):
    """Right-hand side of the equations of motion: ``(qdot, qddot)``.

    ``s`` is a :class:`ChartState` or a packed ``(q1, q2, qdot1, qdot2)`` array.
    Total energy ``a(qdot, qdot) / 2 + V`` is a first integral of this field.
    """
    y = s.pack() if isinstance(s, ChartState) else np.asarray(s, dtype=float)
    q, v = y[:2], y[2:]
    a = np.asarray(sys.metric(q), dtype=float)
    _, gradV = sys.potential(q)
    return v.copy(), _accel(a, sys.metric_grad(q), np.asarray(gradV, float), float(sys.kappa(q)), v)


def gyro_field(sys: GyroSystem2D):
    """``gyro_rhs`` as an ``f(t, y)`` vector field for :func:`integrate.integrate`."""
    def f(t, y):
        qd, qdd = gyro_rhs(sys, y)
        return np.concatenate([qd, qdd])
    return f


def maupertuis_metric(sys: GyroSystem2D, h: float, floor: float = HV_FLOOR) -> GyroSystem2D:
    """Curvature-flow system on the energy level ``h``.

    Returns the system with metric ``m_h = 2 (h - V) a``, zero potential and
    the same gyroscopic form. Its metric derivatives follow from those of
    ``a`` and the potential gradient by the product rule.

    Evaluating the metric where ``h - V <= floor`` raises :class:`TurningRegion`.
    """
    def gap(q):
        V, gradV = sys.potential(q)
        g = h - float(V)
        if g <= floor:
            raise TurningRegion(f"h - V = {g:.3e} at q={np.asarray(q).tolist()}")
        return g, np.asarray(gradV, dtype=float)

    def metric(q):
        g, _ = gap(q)
        return 2.0 * g * np.asarray(sys.metric(q), dtype=float)

    def metric_grad(q):
        g, gradV = gap(q)
        a = np.asarray(sys.metric(q), dtype=float)
        return 2.0 * g * sys.metric_grad(q) - 2.0 * gradV[:, None, None] * a[None, :, :]

    return GyroSystem2D(metric, None, sys.kappa, metric_grad)


def speed(sys: GyroSystem2D, q, qdot) -> float:
    qdot = np.asarray(qdot, dtype=float)
    return float(np.sqrt(qdot @ np.asarray(sys.metric(q)) @ qdot))


def curvature_flow_rhs(sys: GyroSystem2D, h: float, s, tol: float = 1e-8):
    """Arclength form of the motion on the energy level ``h``.

    ``s`` holds ``(q, dq/dtau)`` with unit ``m_h`` speed (within ``tol``).
    Returns ``(dq/dtau, d2q/dtau2)`` where
    ``d2q/dtau2 = -Gbar q' q' + abar^{-1} kbar q'`` with barred quantities of ``m_h``.

    Raises :class:`NotUnitSpeed` or :class:`TurningRegion`.
    """
    y = s.pack() if isinstance(s, ChartState) else np.asarray(s, dtype=float)
    flow = maupertuis_metric(sys, h)
    sp = speed(flow, y[:2], y[2:])
    if abs(sp - 1.0) > tol:
        raise NotUnitSpeed(f"|dq/dtau|_(m_h) = {sp!r}")
    return gyro_rhs(flow, y)


def curvature_flow_field(sys: GyroSystem2D, h: float):
    """Vector field of :func:`curvature_flow_rhs` without the per-call speed check."""
    return gyro_field(maupertuis_metric(sys, h))


def unit_speed_state(sys: GyroSystem2D, h: float, q, direction) -> np.ndarray:
    """Packed ``(q, q')`` with ``q'`` along ``direction`` and unit ``m_h`` speed."""
    flow = maupertuis_metric(sys, h)
    d = np.asarray(direction, dtype=float)
    return np.concatenate([np.asarray(q, float), d / speed(flow, q, d)])


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-13, max_depth: int = 30) -> float:
    """Adaptive Simpson quadrature of a scalar function on ``[a, b]``."""
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) * (fa + 4 * fm + fb) / 6

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) * (fa + 4 * flm + fm) / 6
        right = (b - m) * (fm + 4 * frm + fb) / 6
        if depth <= 0 or abs(left + right - whole) <= 15 * tol:
            return left + right + (left + right - whole) / 15
        return (rec(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1))

    return rec(a, b, fa, fm, fb, whole, tol, max_depth)


def cumulative_integral(ts, f: Callable[[float], float], tol: float = 1e-13) -> np.ndarray:
    """Running integral of ``f`` from ``ts[0]`` to each ``ts[i]`` (adaptive Simpson per interval)."""
    ts = np.asarray(ts, dtype=float)
    out = np.zeros(len(ts))
    for i in range(1, len(ts)):
        out[i] = out[i - 1] + adaptive_simpson(f, ts[i - 1], ts[i], tol)
    return out


def invert_cumulative(ts, cum, f: Callable[[float], float], targets, tol: float = 1e-13) -> np.ndarray:
    """Solve ``cum(s) = target`` for each target, ``f`` being the integrand of ``cum``.

    The bracketing interval is found on the tabulated values, then Newton
    refines using ``f`` as the derivative.
    """
    ts = np.asarray(ts, dtype=float)
    out = np.empty(len(targets))
    for n, target in enumerate(targets):
        i = int(np.clip(np.searchsorted(cum, target, side="right") - 1, 0, len(cum) - 2))
        lo, hi = ts[i], ts[i + 1]
        s = lo + (hi - lo) * (target - cum[i]) / (cum[i + 1] - cum[i])
        for _ in range(8):
            s = min(max(s, lo), hi)
            part = adaptive_simpson(f, lo, s, tol) if s > lo else 0.0
            step = (cum[i] + part - target) / f(s)
            s -= step
            if abs(step) < 1e-15 * max(1.0, abs(s)):
                break
        out[n] = min(max(s, lo), hi)
    return out


def reparameterize(sol_tau: Solution, sys: GyroSystem2D, h: float, t_grid=None,
                   floor: float = HV_FLOOR, tol: float = 1e-13):
    """Convert a curvature-flow solution in ``tau`` to physical time.

    ``t(tau)`` is accumulated by adaptive Simpson quadrature of
    ``1 / (2 (h - V(q(tau))))`` and inverted at ``t_grid`` (default: the
    images of the stored ``tau`` samples). Velocities are rescaled by
    ``dtau/dt = 2 (h - V)``.

    Returns ``(t, q, qdot)`` arrays.
    """
    def gap(q):
        g = h - float(sys.potential(q)[0])
        if g <= floor:
            raise TurningRegion(f"h - V = {g:.3e}")
        return g

    def weight(q):
        return 1.0 / (2.0 * gap(q))

    def f(s):
        return weight(dense_eval(sol_tau, s)[:2])

    cum = cumulative_integral(sol_tau.t, f, tol)
    if t_grid is None:
        t_grid, taus = cum, sol_tau.t
    else:
        t_grid = np.asarray(t_grid, dtype=float)
        taus = invert_cumulative(sol_tau.t, cum, f, t_grid, tol)
    Y = dense_eval(sol_tau, taus)
    scale = np.array([2.0 * gap(y[:2]) for y in Y])
    return np.asarray(t_grid, dtype=float), Y[:, :2], Y[:, 2:] * scale[:, None]


def arclength_reparameterize(sol_t: Solution, sys: GyroSystem2D, h: float, tau_grid=None,
                             floor: float = HV_FLOOR, tol: float = 1e-13):
    """Convert a motion at energy ``h`` to ``m_h`` arclength.

    ``tau(t) = integral of 2 (h - V(q(t))) dt``. Returns ``(tau, q, dq/dtau)``.
    """
    def gap(q):
        g = h - float(sys.potential(q)[0])
        if g <= floor:
            raise TurningRegion(f"h - V = {g:.3e}")
        return g

    def weight(q):
        return 2.0 * gap(q)

    def f(s):
        return weight(dense_eval(sol_t, s)[:2])

    cum = cumulative_integral(sol_t.t, f, tol)
    if tau_grid is None:
        tau_grid, ts = cum, sol_t.t
    else:
        tau_grid = np.asarray(tau_grid, dtype=float)
        ts = invert_cumulative(sol_t.t, cum, f, tau_grid, tol)
    Y = dense_eval(sol_t, ts)
    scale = np.array([weight(y[:2]) for y in Y])
    return np.asarray(tau_grid, dtype=float), Y[:, :2], Y[:, 2:] / scale[:, None]


# 5-point central stencils
_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def signed_geodesic_curvature(q_samples, ds: float, metric_sys: GyroSystem2D,
                              orientation: int = 1, unit_speed: bool = True,
                              speed_tol: float = 1e-6) -> np.ndarray:
    """Signed geodesic curvature of a sampled curve.

    ``q_samples`` is an ``(n, 2)`` array of chart points equally spaced in the
    curve parameter (step ``ds``); ``metric_sys`` supplies the metric, usually
    the Maupertuis system of :func:`maupertuis_metric`. Derivatives come from
    5-point stencils, the covariant acceleration is ``q'' + G q' q'``, and

        k_g = orientation * vol(D q', q') / |q'|^3,

    i.e. positive when the basis {curvature vector, tangent vector} is
    positively oriented in the chart. Returns ``n - 4`` values for the
    interior samples ``2 .. n-3``.

    With ``unit_speed`` the parameter must be arclength; a speed off by more
    than ``speed_tol`` raises :class:`NotUnitSpeed`.
    """
    Q = np.asarray(q_samples, dtype=float)
    if len(Q) < 5:
        raise ValueError("need at least 5 samples")
    out = np.empty(len(Q) - 4)
    for n in range(2, len(Q) - 2):
        win = Q[n - 2:n + 3]
        v = _D1 @ win / ds
        acc = _D2 @ win / ds**2
        q = Q[n]
        a = np.asarray(metric_sys.metric(q), dtype=float)
        G = christoffel(metric_sys, q)
        cov = acc + np.einsum("ijk,j,k->i", G, v, v)
        sp = float(np.sqrt(v @ a @ v))
        if unit_speed and abs(sp - 1.0) > speed_tol:
            raise NotUnitSpeed(f"sample {n}: speed {sp!r}")
        area = np.sqrt(np.linalg.det(a)) * (cov[0] * v[1] - cov[1] * v[0])
        out[n - 2] = orientation * area / sp**3
    return out


def predicted_curvature(sys: GyroSystem2D, h: float, q) -> float:
    """``kappa / o_h``: the density of the gyroscopic form against the ``m_h`` area form."""
    abar = maupertuis_metric(sys, h).metric(q)
    return float(sys.kappa(q)) / float(np.sqrt(np.linalg.det(abar)))
