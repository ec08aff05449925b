"""
Stereographic atlas of the Poisson sphere and the reduced rigid body on it.

Two charts cover the sphere. The north chart projects from the south pole
and the south chart from the north pole; the south chart also flips the
second coordinate so that both charts are orientation-preserving for the
outward orientation of the sphere:

    nu(q) = (2 q1, 2 s q2, s (1 - |q|^2)) / (1 + |q|^2),   s = +1 / -1.

The chart pull-back of the outward area form is ``4 / (1 + |q|^2)^2 dq1 ^ dq2``
in both charts, so the gyroscopic density keeps its sign across the atlas.
Since ``|q_north| |q_south| = 1`` on the overlap, leaving one chart at radius
2 lands at radius 1/2 in the other; no switch can immediately undo itself.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .body import InertiaTensor
from .errors import TurningRegion
from .gyro2d import (HV_FLOOR, GyroSystem2D, _accel, cumulative_integral, invert_cumulative,
                     maupertuis_metric, predicted_curvature, signed_geodesic_curvature)
from .integrate import IntegratorSettings, Solution, dense_eval, integrate
from .reduction import ReducedState, ReducedSystemSpec, curvature_coefficient

log = logging.getLogger(__name__)

SWITCH_RADIUS = 2.0


@dataclass(frozen=True)
class Chart:
    id: str = "north"
    switch_radius: float = SWITCH_RADIUS

    def __post_init__(self):
        if self.id not in ("north", "south"):
            raise ValueError(f"unknown chart {self.id!r}")

    @property
    def sign(self) -> float:
        return 1.0 if self.id == "north" else -1.0

    @property
    def other(self) -> "Chart":
        return Chart("south" if self.id == "north" else "north", self.switch_radius)

    def chart_to_point(self, q) -> np.ndarray:
        q1, q2 = q
        s = self.sign
        r2 = q1 * q1 + q2 * q2
        D = 1.0 + r2
        return np.array([2 * q1 / D, 2 * s * q2 / D, s * (1 - r2) / D])

    def point_to_chart(self, nu) -> np.ndarray:
        x, y, z = nu
        s = self.sign
        d = 1.0 + s * z
        if d <= 0:
            raise ValueError(f"point {nu} is the pole excluded from the {self.id} chart")
        return np.array([x / d, s * y / d])

    def velocity_to_chart(self, nu, nudot) -> np.ndarray:
        """Chart velocity of the sphere velocity ``nudot`` at ``nu``."""
        x, y, z = nu
        dx, dy, dz = nudot
        s = self.sign
        d = 1.0 + s * z
        return np.array([dx / d - s * x * dz / (d * d), s * dy / d - y * dz / (d * d)])

    def jacobian(self, q) -> np.ndarray:
        """``(3, 2)`` matrix of ``d nu / d q``."""
        return _geometry(q, self.sign)[1]

    def velocity_to_sphere(self, q, qdot) -> np.ndarray:
        return self.jacobian(q) @ np.asarray(qdot, dtype=float)

    def area_density(self, q) -> float:
        """Outward area form of the unit sphere against ``dq1 ^ dq2``."""
        q1, q2 = q
        D = 1.0 + q1 * q1 + q2 * q2
        return 4.0 / (D * D)


def chart_for(nu, switch_radius: float = SWITCH_RADIUS) -> Chart:
    """The chart in which ``nu`` sits closest to the origin."""
    return Chart("north" if nu[2] >= 0 else "south", switch_radius)


def _geometry(q, s):
    """Point, Jacobian and second derivatives ``H[a, j, k]`` of the chart map."""
    q1, q2 = float(q[0]), float(q[1])
    r2 = q1 * q1 + q2 * q2
    D = 1.0 + r2
    u, w, w3 = 4.0 / (D * D), 16.0 / (D * D * D), 2.0 / D
    nu = np.array([q1 * w3, s * q2 * w3, s * (1 - r2) / D])
    J = np.array([[w3 - u * q1 * q1, -u * q1 * q2],
                  [-s * u * q1 * q2, s * (w3 - u * q2 * q2)],
                  [-s * u * q1, -s * u * q2]])
    # second derivatives of 2 q_a / D: -u (d_aj q_k + d_ak q_j + d_jk q_a) + w q_a q_j q_k
    x111 = -3 * u * q1 + w * q1 ** 3
    x112 = -u * q2 + w * q1 * q1 * q2
    x122 = -u * q1 + w * q1 * q2 * q2
    x222 = -3 * u * q2 + w * q2 ** 3
    z11 = s * (-u + w * q1 * q1)
    z12 = s * w * q1 * q2
    z22 = s * (-u + w * q2 * q2)
    H = np.array([[[x111, x112], [x112, x122]],
                  [[s * x112, s * x122], [s * x122, s * x222]],
                  [[z11, z12], [z12, z22]]])
    return nu, J, H


class ReducedChartSystem(GyroSystem2D):
    """The reduced rigid body written in one stereographic chart.

    Metric: pull-back of the reduced kinetic metric; potential: the amended
    potential; gyroscopic density: ``k * curvature_coefficient * 4 / (1 + |q|^2)^2``
    (times ``spec.curvature_scale``). All derivatives are analytic.
    """

    def __init__(self, spec: ReducedSystemSpec, chart: Chart):
        self.spec = spec
        self.chart = chart
        self.Id = InertiaTensor.of(spec.I).diag
        self.W0 = float(np.prod(self.Id))
        super().__init__(self._metric, self._potential, self._kappa, self._metric_grad)

    def evaluate(self, q):
        """``(nu, J, a, grad a, V_k, grad V_k, c)`` at ``q`` in one pass."""
        spec, Id = self.spec, self.Id
        nu, J, H = _geometry(q, self.chart.sign)
        Inu = Id * nu
        P = float(Inu @ nu)
        W = self.W0 / P
        JD = J / Id[:, None]
        M = J.T @ JD
        a = W * M
        dP = 2.0 * (Inu @ J)
        T = JD.T[None] @ np.transpose(H, (2, 0, 1))
        da = (-self.W0 / (P * P)) * dP[:, None, None] * M[None] + W * (T + np.transpose(T, (0, 2, 1)))
        k = spec.k
        V = spec.V.value(nu) + k * k / (2.0 * P)
        gnu = spec.V.gradient(nu) - (k * k / (P * P)) * Inu
        gradV = J.T @ gnu
        area = 4.0 / (1.0 + float(q[0]) ** 2 + float(q[1]) ** 2) ** 2
        c = k * spec.curvature_scale * curvature_coefficient(nu, spec.I) * area
        return nu, J, a, da, V, gradV, c

    def _metric(self, q):
        return self.evaluate(q)[2]

    def _metric_grad(self, q):
        return self.evaluate(q)[3]

    def _potential(self, q):
        r = self.evaluate(q)
        return r[4], r[5]

    def _kappa(self, q):
        return self.evaluate(q)[6]

    def field(self):
        """Fast ``f(t, y)`` for the equations of motion (one geometry pass per call)."""
        def f(t, y):
            q, v = y[:2], y[2:]
            _, _, a, da, _, gradV, c = self.evaluate(q)
            acc = _accel(a, da, gradV, c, v)
            return np.array([v[0], v[1], acc[0], acc[1]])
        return f


def reduced_system_in_chart(spec: ReducedSystemSpec, chart: Chart) -> ReducedChartSystem:
    """The reduced gyroscopic system ``(sphere, reduced metric, amended potential, k curvature)`` in ``chart``."""
    return ReducedChartSystem(spec, chart)


@dataclass
class ReducedTrajectory:
    """Sphere-level record of a reduced simulation.

    ``nuddot`` is stored so that :meth:`__call__` can interpolate both
    ``nu`` and ``nudot`` by cubic Hermite without going through a chart.
    """

    t: np.ndarray
    nu: np.ndarray
    nudot: np.ndarray
    nuddot: np.ndarray
    energy: np.ndarray
    chart_id: list
    switches: int
    spec: ReducedSystemSpec
    solution: Solution = field(repr=False)

    def sphere_solution(self) -> Solution:
        y = np.hstack([self.nu, self.nudot])
        dy = np.hstack([self.nudot, self.nuddot])
        return Solution(self.t, y, dy, np.zeros(len(self.t)))

    def __call__(self, t):
        """``(nu, nudot)`` at time(s) ``t`` as a ``(..., 6)`` array."""
        return dense_eval(self.sphere_solution(), t)


def reduced_energy_vec(nu, nudot, spec: ReducedSystemSpec) -> np.ndarray:
    """Reduced energy for arrays of sphere states."""
    Id = InertiaTensor.of(spec.I).diag
    nu = np.atleast_2d(nu)
    nudot = np.atleast_2d(nudot)
    P = (nu * nu) @ Id
    kin = 0.5 * np.prod(Id) * ((nudot * nudot) @ (1.0 / Id)) / P
    V = np.array([spec.V.value(n) for n in nu])
    return kin + V + spec.k ** 2 / (2.0 * P)


def simulate_reduced(spec: ReducedSystemSpec, initial: ReducedState,
                     settings: IntegratorSettings = IntegratorSettings(),
                     switch_radius: float = SWITCH_RADIUS,
                     chart: Optional[Chart] = None) -> ReducedTrajectory:
    """Integrate the reduced system from ``initial`` through the two-chart atlas.

    The run starts in ``chart`` (default: the chart where ``initial.nu`` is
    nearest the origin). After an accepted step that leaves the disc of
    radius ``switch_radius`` the state is moved to the other chart.
    """
    current = [chart or chart_for(initial.nu, switch_radius)]
    systems = {cid: ReducedChartSystem(spec, Chart(cid, switch_radius)) for cid in ("north", "south")}
    fields = {cid: s.field() for cid, s in systems.items()}
    ids = [current[0].id]
    switches = [0]

    def rhs(t, y):
        return fields[current[0].id](t, y)

    def switch(i, t, y):
        q = y[:2]
        if float(q @ q) <= switch_radius ** 2:
            ids.append(current[0].id)
            return None
        old = current[0]
        nu = old.chart_to_point(q)
        nudot = old.velocity_to_sphere(q, y[2:])
        new = old.other
        current[0] = new
        switches[0] += 1
        ids.append(new.id)
        log.debug("chart switch %s -> %s at t=%.6g", old.id, new.id, t)
        return np.concatenate([new.point_to_chart(nu), new.velocity_to_chart(nu, nudot)])

    c0 = current[0]
    y0 = np.concatenate([c0.point_to_chart(initial.nu), c0.velocity_to_chart(initial.nu, initial.nudot)])
    sol = integrate(rhs, y0, settings, hooks=[switch])

    n = len(sol.t)
    nu = np.empty((n, 3))
    nudot = np.empty((n, 3))
    nuddot = np.empty((n, 3))
    for i in range(n):
        s = Chart(ids[i], switch_radius).sign
        p, J, H = _geometry(sol.y[i, :2], s)
        v = sol.y[i, 2:]
        nu[i] = p
        nudot[i] = J @ v
        nuddot[i] = J @ sol.dy[i, 2:] + np.einsum("ajk,j,k->a", H, v, v)
    energy = reduced_energy_vec(nu, nudot, spec)
    return ReducedTrajectory(sol.t, nu, nudot, nuddot, energy, ids, switches[0], spec, sol)


@dataclass
class CurvatureSample:
    """Measured and predicted signed curvature along a reduced trajectory."""

    tau: np.ndarray
    t: np.ndarray
    nu: np.ndarray
    measured: np.ndarray
    predicted: np.ndarray
    h: float

    @property
    def relative_error(self) -> np.ndarray:
        return np.abs(self.measured - self.predicted) / np.abs(self.predicted)


def _amended_on_sphere(spec: ReducedSystemSpec):
    Id = InertiaTensor.of(spec.I).diag

    def V(nu):
        return spec.V.value(nu) + spec.k ** 2 / (2.0 * float(Id @ (nu * nu)))
    return V


def _window_curvature(window, ds, spec, h, orientation, unit_speed, switch_radius):
    chart = chart_for(window[2], switch_radius)
    sys = ReducedChartSystem(spec, chart)
    flow = maupertuis_metric(sys, h)
    qs = np.array([chart.point_to_chart(p) for p in window])
    kg = signed_geodesic_curvature(qs, ds, flow, orientation, unit_speed=unit_speed,
                                   speed_tol=1e-5)[0]
    return kg, orientation * predicted_curvature(sys, h, qs[2])


def measure_curvature(traj: ReducedTrajectory, ds: float = 0.02, h: Optional[float] = None,
                      orientation: int = 1, floor: float = HV_FLOOR,
                      max_points: Optional[int] = None) -> CurvatureSample:
    """Signed geodesic curvature in the Maupertuis metric along ``traj``.

    The trajectory is reparameterized by Maupertuis arclength
    ``tau = integral of 2 (h - V_k) dt``, resampled with spacing close to
    ``ds`` (at most ``max_points`` interior samples, from the start), and
    each interior sample is measured by a 5-point stencil in the chart
    centred on it. ``predicted`` is the
    density of ``k * curvature form`` against the Maupertuis area form.
    """
    spec = traj.spec
    h = float(traj.energy[0]) if h is None else float(h)
    Vk = _amended_on_sphere(spec)
    sph = traj.sphere_solution()

    def gap(t):
        g = h - Vk(dense_eval(sph, t)[:3])
        if g <= floor:
            raise TurningRegion(f"h - V = {g:.3e} at t={t:.6g}")
        return 2.0 * g

    cum = cumulative_integral(traj.t, gap)
    m = max(5, int(cum[-1] / ds) + 1)
    taus = np.linspace(0.0, cum[-1], m)
    ds = taus[1] - taus[0]
    if max_points is not None:
        taus = taus[:max_points + 4]
    n_points = len(taus) - 4
    ts = invert_cumulative(traj.t, cum, gap, taus)
    nus = dense_eval(sph, ts)[:, :3]
    meas = np.empty(n_points)
    pred = np.empty(n_points)
    for j in range(n_points):
        meas[j], pred[j] = _window_curvature(nus[j:j + 5], ds, spec, h, orientation, True,
                                             SWITCH_RADIUS)
    return CurvatureSample(taus[2:-2], ts[2:-2], nus[2:-2], meas, pred, h)


def curvature_along(traj: ReducedTrajectory, h: Optional[float] = None,
                    orientation: int = 1, floor: float = HV_FLOOR) -> np.ndarray:
    """Signed Maupertuis curvature at every stored sample, from time-domain stencils.

    Uses the parameter-free form ``vol(D q', q') / |q'|^3`` on the samples
    resampled to an equally spaced time grid; the first and last two
    entries are NaN. Raises TurningRegion if any stored sample has
    ``h - V_k <= floor``.
    """
    spec = traj.spec
    h = float(traj.energy[0]) if h is None else float(h)
    n = len(traj.t)
    Vk = _amended_on_sphere(spec)
    for t, nu in zip(traj.t, traj.nu):
        if h - Vk(nu) <= floor:
            raise TurningRegion(f"h - V = {h - Vk(nu):.3e} at t={t:.6g}")
    out = np.full(n, np.nan)
    if n < 5:
        return out
    grid = np.linspace(traj.t[0], traj.t[-1], n)
    nus = traj(grid)[:, :3]
    dt = grid[1] - grid[0]
    for j in range(2, n - 2):
        out[j] = _window_curvature(nus[j - 2:j + 3], dt, spec, h, orientation, False, SWITCH_RADIUS)[0]
    return out
