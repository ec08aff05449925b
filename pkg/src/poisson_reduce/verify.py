"""
Property battery behind ``poisson-reduce verify``.

Each check returns a :class:`CheckResult`; ``status`` is ``pass``, ``fail``
or ``skip``. Checks are independent and deterministic for a given seed, so
they can run in any order or in separate processes.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import so3
from .body import (BodyPhaseState, FullState, InertiaTensor, PotentialSpec, ZeroPotential,
                   momentum, potential_from_dict, simulate_body)
from .charts import measure_curvature, simulate_reduced
from .config import RunConfig
from .errors import PoissonReduceError
from .gyro2d import (GyroSystem2D, arclength_reparameterize, curvature_flow_field, gyro_field,
                     reparameterize, unit_speed_state)
from .integrate import IntegratorSettings, dense_eval, integrate
from .reduction import (ReducedState, ReducedSystemSpec, connection_value,
                        curvature_coefficient, curvature_coefficient_grid, horizontal_lift,
                        lat_long_grid, reconstruct_velocity, sphere_integral_of_curvature)

DEFAULT_INERTIA = (2.0, 1.5, 1.0)
DEFAULT_POTENTIAL = {"kind": "linear", "c": [0.0, 0.0, 1.0]}
HEAVY_TOP_OMEGA = (1.0, 2.0, 3.0)


@dataclass
class CheckResult:
    id: str
    status: str
    value: Optional[float]
    tolerance: Optional[float]
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "fail"


@dataclass
class VerifyContext:
    I: InertiaTensor
    V: PotentialSpec
    seed: int = 0
    curvature_scale: float = 1.0
    initial: Optional[dict] = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_config(cls, cfg: Optional[RunConfig], seed: int = 0) -> "VerifyContext":
        if cfg is None:
            return cls(InertiaTensor(*DEFAULT_INERTIA), potential_from_dict(DEFAULT_POTENTIAL), seed)
        return cls(InertiaTensor(*cfg.inertia), potential_from_dict(cfg.potential), seed,
                   cfg.curvature_scale, cfg.initial)

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])


def _result(cid, value, tol, ok, detail=""):
    return CheckResult(cid, "pass" if ok else "fail", float(value), float(tol), detail)


def random_unit(rng) -> np.ndarray:
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def rotation_with_first_row(nu) -> np.ndarray:
    """Some rotation whose first row is the unit vector ``nu``."""
    nu = np.asarray(nu, dtype=float)
    helper = np.eye(3)[int(np.argmin(np.abs(nu)))]
    b = np.cross(nu, helper)
    b /= np.linalg.norm(b)
    return np.array([nu, b, np.cross(nu, b)])


# -- conservation -----------------------------------------------------------

def heavy_top_drifts(I, V, nu0, omega0=HEAVY_TOP_OMEGA, step=1e-3, t_end=50.0):
    """``(max rel dE, max |dJ|)`` of a Euler-Poisson run."""
    traj = simulate_body(BodyPhaseState(nu0, np.asarray(omega0, float)), I, V,
                         IntegratorSettings(step=step, t_end=t_end))
    E, J = traj.energy, traj.momentum
    return float(np.abs(E - E[0]).max() / abs(E[0])), float(np.abs(J - J[0]).max())


def check_conservation(ctx: VerifyContext) -> CheckResult:
    nu0 = random_unit(ctx.rng(1))
    dE, dJ = heavy_top_drifts(ctx.I, ctx.V, nu0)
    dE2, dJ2 = heavy_top_drifts(ctx.I, ctx.V, nu0, step=2e-3)
    rE, rJ = dE2 / dE, dJ2 / dJ
    ok = dE <= 1e-8 and dJ <= 1e-8 and 12 <= rE <= 20 and 12 <= rJ <= 20
    return _result("conservation", max(dE, dJ), 1e-8, ok,
                   f"dE={dE:.3e} dJ={dJ:.3e} halving ratios E={rE:.2f} J={rJ:.2f} (window [12, 20])")


# -- projection of the full body vs the reduced chart system ----------------

def projection_distance(I, V, Q0, omega0, t_end=10.0, step=1e-3, curvature_scale=1.0):
    """Sup distance between the projected full motion and the reduced motion."""
    settings = IntegratorSettings(step=step, t_end=t_end)
    full = simulate_body(FullState(Q0, omega0), I, V, settings)
    nu0 = so3.poisson_projection(Q0)
    k = momentum(BodyPhaseState(nu0, omega0), I)
    red = simulate_reduced(ReducedSystemSpec(I, V, k, curvature_scale),
                           ReducedState(nu0, so3.cross(nu0, omega0)), settings)
    return float(np.linalg.norm(full.nu - red.nu, axis=1).max()), red.switches


def _projection_initial(ctx: VerifyContext):
    init = ctx.initial
    if init is None:
        return so3.random_rotation(ctx.rng(2)), np.array(HEAVY_TOP_OMEGA)
    if init["kind"] == "full":
        return so3.reorthonormalize(np.array(init["q"])), np.array(init["omega"])
    s = ReducedState(np.array(init["nu"]), np.array(init["nudot"]))
    return rotation_with_first_row(s.nu), reconstruct_velocity(s, init["k"], ctx.I)


def check_projection(ctx: VerifyContext) -> CheckResult:
    Q0, w0 = _projection_initial(ctx)
    d, switches = projection_distance(ctx.I, ctx.V, Q0, w0, curvature_scale=ctx.curvature_scale)
    return _result("projection", d, 1e-5, d <= 1e-5,
                   f"sup |p(full) - reduced| over t in [0, 10]; {switches} chart switches; "
                   f"curvature_scale={ctx.curvature_scale!r}")


# -- arclength reparameterization round trip --------------------------------

def demo_gyro_system() -> GyroSystem2D:
    """Non-conformal metric, anisotropic potential, variable gyroscopic density."""
    def metric(q):
        return np.array([[1 + 0.3 * q[0] ** 2, 0.1 * q[0] * q[1]],
                         [0.1 * q[0] * q[1], 1 + 0.2 * q[1] ** 2]])

    def potential(q):
        return 0.5 * (0.3 * q[0] ** 2 + 0.5 * q[1] ** 2), np.array([0.3 * q[0], 0.5 * q[1]])

    return GyroSystem2D(metric, potential, lambda q: 1.0 + 0.5 * q[0])


def round_trip_errors(sys: GyroSystem2D, q0, v0, T=5.0, step=1e-3, n=501):
    """Sup chart distances for both directions of the arclength/time conversion."""
    q0, v0 = np.asarray(q0, float), np.asarray(v0, float)
    h = sys.energy(q0, v0)
    direct = integrate(gyro_field(sys), np.r_[q0, v0], IntegratorSettings(step=step, t_end=T))
    tau_of_t, _, _ = arclength_reparameterize(direct, sys, h)
    tau_T = float(tau_of_t[-1])
    flow = integrate(curvature_flow_field(sys, h), unit_speed_state(sys, h, q0, v0),
                     IntegratorSettings(step=step, t_end=tau_T * (1 + 1e-6)))
    tg = np.linspace(0.0, T, n)
    _, q, _ = reparameterize(flow, sys, h, tg)
    forward = float(np.linalg.norm(q - dense_eval(direct, tg)[:, :2], axis=1).max())
    taug = np.linspace(0.0, tau_T, n)
    _, qq, _ = arclength_reparameterize(direct, sys, h, taug)
    reverse = float(np.linalg.norm(qq - dense_eval(flow, taug)[:, :2], axis=1).max())
    return forward, reverse


def check_reparameterization(ctx: VerifyContext) -> CheckResult:
    fwd, rev = round_trip_errors(demo_gyro_system(), [0.3, -0.2], [1.0, 0.6])
    return _result("reparameterization", max(fwd, rev), 1e-5, max(fwd, rev) <= 1e-5,
                   f"arclength->time {fwd:.3e}, time->arclength {rev:.3e}, t in [0, 5]")


# -- curvature of reduced trajectories --------------------------------------

CURVE_NU0 = (0.6, 0.0, 0.8)
CURVE_NUDOT0 = (0.0, 2.0, 0.0)


def curvature_run(I, V, k, t_end=5.0, max_points=200, nu0=CURVE_NU0, nudot0=CURVE_NUDOT0):
    spec = ReducedSystemSpec(I, V, k)
    traj = simulate_reduced(spec, ReducedState(np.array(nu0), np.array(nudot0)),
                            IntegratorSettings(step=1e-3, t_end=t_end))
    return measure_curvature(traj, max_points=max_points)


def check_curvature_law(ctx: VerifyContext) -> CheckResult:
    if not ctx.I.strict_triangle:
        warnings.warn("curvature sign law skipped: inertia is not strictly triangular")
        return CheckResult("curvature_law", "skip", None, None,
                           "inertia violates strict triangle inequalities")
    worst, details, ok = 0.0, [], True
    for k in (1.0, -1.0):
        cs = curvature_run(ctx.I, ctx.V, k)
        err = float(cs.relative_error.max())
        sign_ok = bool(np.all(np.sign(cs.measured) == np.sign(k)))
        no_inflection = float(np.abs(cs.measured).min()) > 0
        ok &= err <= 1e-3 and sign_ok and no_inflection and len(cs.measured) >= 100
        worst = max(worst, err)
        details.append(f"k={k:+g}: {len(cs.measured)} pts, rel err {err:.2e}, "
                       f"kg in [{cs.measured.min():.4g}, {cs.measured.max():.4g}]")
    return _result("curvature_law", worst, 1e-3, ok, "; ".join(details))


# -- curvature coefficient anchors -------------------------------------------

def random_strict_inertia(rng) -> InertiaTensor:
    while True:
        I = InertiaTensor(*rng.uniform(0.2, 3.0, 3))
        if I.strict_triangle:
            return I


def check_sphere_integral(ctx: VerifyContext) -> CheckResult:
    rng = ctx.rng(5)
    tensors = [ctx.I] + [random_strict_inertia(rng) for _ in range(5)]
    errs = [abs(sphere_integral_of_curvature(I) - 4 * np.pi) for I in tensors]
    return _result("sphere_integral", max(errs), 1e-3, max(errs) <= 1e-3,
                   f"{len(tensors)} inertia tensors, lat-long 400x800")


def sphere_grid_10k():
    pts, _ = lat_long_grid(100, 100)
    return pts


def check_positivity(ctx: VerifyContext) -> CheckResult:
    if not ctx.I.strict_triangle:
        warnings.warn("positivity check skipped: inertia is not strictly triangular")
        return CheckResult("positivity", "skip", None, None,
                           "inertia violates strict triangle inequalities")
    m = float(curvature_coefficient_grid(sphere_grid_10k(), ctx.I).min())
    return _result("positivity", m, 0.0, m > 0, "min of the coefficient on a 10^4-point grid")


def check_equal_moments(ctx: VerifyContext) -> CheckResult:
    pts = sphere_grid_10k()
    worst = 0.0
    for c in (0.5, 1.0, 2.0, 7.0):
        worst = max(worst, float(np.abs(curvature_coefficient_grid(pts, (c, c, c)) - 1.0).max()))
    return _result("equal_moments", worst, 1e-12, worst <= 1e-12,
                   "coefficient is identically 1 for I=(c,c,c), c in {0.5, 1, 2, 7}")


# -- structural identities ----------------------------------------------------

def maurer_cartan_residual(Q, eps=1e-3, x0=(0.3, -0.2, 0.5)) -> float:
    """Largest violation of ``d omega_i(d_a, d_b) = -(omega(d_a) x omega(d_b))_i``.

    The body spin forms are pulled back through the chart
    ``x -> Q expm(hat(x))`` and differentiated at ``x0`` by nested central
    differences. Coordinate fields commute, so no bracket enters and the
    check is independent of :func:`so3.fd_exterior_derivative_1form`.
    """
    E = np.eye(3)
    x0 = np.asarray(x0, dtype=float)

    def spins(x):
        # columns: spin of the coordinate field d_a at Q expm(hat(x))
        R = Q @ so3.expm(x)
        cols = []
        for e in E:
            M = R.T @ (Q @ (so3.expm(x + eps * e) - so3.expm(x - eps * e))) / (2 * eps)
            cols.append(so3.vee(0.5 * (M - M.T)))
        return np.stack(cols, axis=1)

    d = [(spins(x0 + eps * e) - spins(x0 - eps * e)) / (2 * eps) for e in E]
    A = spins(x0)
    worst = 0.0
    for a in range(3):
        for b in range(3):
            lhs = d[a][:, b] - d[b][:, a]
            worst = max(worst, float(np.abs(lhs + np.cross(A[:, a], A[:, b])).max()))
    return worst


def check_maurer_cartan(ctx: VerifyContext) -> CheckResult:
    eps = 1e-3
    rng = ctx.rng(6)
    r = max(maurer_cartan_residual(so3.random_rotation(rng), eps) for _ in range(3))
    return _result("maurer_cartan", r, 5 * eps ** 2, r <= 5 * eps ** 2,
                   "d omega_i on exponential-chart coordinate fields, 3 random base points")


def horizontal_pair(nu, I, rng):
    """Two independent spins with zero momentum at ``nu``."""
    n = InertiaTensor.of(I).diag * nu
    n /= np.linalg.norm(n)
    u = np.cross(n, rng.standard_normal(3))
    u /= np.linalg.norm(u)
    return u, np.cross(n, u)


def connection_curvature_error(Q, I, rng, eps=1e-3) -> float:
    nu = so3.poisson_projection(Q)
    u, v = horizontal_pair(nu, I, rng)

    def eta(q, w):
        return connection_value(so3.poisson_projection(q), w, I)

    fd = so3.fd_exterior_derivative_1form(eta, Q, u, v, eps)
    exact = curvature_coefficient(nu, I) * float(nu @ np.cross(np.cross(nu, u), np.cross(nu, v)))
    return abs(fd - exact) / abs(exact)


def check_connection_curvature(ctx: VerifyContext) -> CheckResult:
    rng = ctx.rng(7)
    errs = [connection_curvature_error(so3.random_rotation(rng), ctx.I, rng) for _ in range(20)]
    return _result("connection_curvature", max(errs), 1e-4, max(errs) <= 1e-4,
                   "d(connection) vs coefficient * area form, 20 random Q, eps=1e-3")


def check_horizontal_lift(ctx: VerifyContext) -> CheckResult:
    rng = ctx.rng(8)
    Id = ctx.I.diag
    worst = 0.0
    for _ in range(1000):
        nu = random_unit(rng)
        nudot = np.cross(nu, rng.standard_normal(3))
        w0 = horizontal_lift(ReducedState(nu, nudot), ctx.I)
        worst = max(worst, abs(float((Id * w0) @ nu)),
                    float(np.abs(np.cross(nu, w0) - nudot).max()))
    return _result("horizontal_lift", worst, 1e-12, worst <= 1e-12,
                   "I w0 . nu = 0 and nu x w0 = nudot on 1000 random reduced states")


# -- analytic dynamics anchors ------------------------------------------------

def free_top_closure(omega=(0.0, 0.0, 2.0), nu0=(1.0, 0.0, 0.0), step=1e-3) -> float:
    w = np.asarray(omega, float)
    period = 2 * np.pi / np.linalg.norm(w)
    traj = simulate_body(BodyPhaseState(np.array(nu0), w), (1.0, 1.0, 1.0), ZeroPotential(),
                         IntegratorSettings(step=step, t_end=period))
    return float(np.linalg.norm(traj.nu[-1] - traj.nu[0]))


def larmor_radius_error(B=2.0, q0=(0.0, 0.0), v0=(1.0, 0.5), t_end=10.0, step=1e-3) -> float:
    sys = GyroSystem2D(lambda q: np.eye(2), None, lambda q: B, lambda q: np.zeros((2, 2, 2)))
    q0, v0 = np.asarray(q0, float), np.asarray(v0, float)
    sol = integrate(gyro_field(sys), np.r_[q0, v0], IntegratorSettings(step=step, t_end=t_end))
    speed = float(np.linalg.norm(v0))
    R = speed / abs(B)
    centre = q0 + R * np.array([v0[1], -v0[0]]) / speed * np.sign(B)
    return float(np.abs(np.linalg.norm(sol.y[:, :2] - centre, axis=1) - R).max())


def check_free_top(ctx: VerifyContext) -> CheckResult:
    c = free_top_closure()
    return _result("free_top", c, 1e-8, c <= 1e-8, "I=(1,1,1), omega=(0,0,2), one period pi")


def check_larmor(ctx: VerifyContext) -> CheckResult:
    e = larmor_radius_error()
    return _result("larmor", e, 1e-6, e <= 1e-6, "Euclidean plane, c=2, |q'|/|c| circles")


CHECKS: dict[str, Callable[[VerifyContext], CheckResult]] = {
    "conservation": check_conservation,
    "projection": check_projection,
    "reparameterization": check_reparameterization,
    "curvature_law": check_curvature_law,
    "sphere_integral": check_sphere_integral,
    "positivity": check_positivity,
    "equal_moments": check_equal_moments,
    "maurer_cartan": check_maurer_cartan,
    "connection_curvature": check_connection_curvature,
    "horizontal_lift": check_horizontal_lift,
    "free_top": check_free_top,
    "larmor": check_larmor,
}


def run_check(cid: str, ctx: VerifyContext) -> CheckResult:
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            res = CHECKS[cid](ctx)
        if caught and res.status == "skip":
            res.detail += " (warning: " + "; ".join(str(w.message) for w in caught) + ")"
        return res
    except PoissonReduceError as exc:
        return CheckResult(cid, "fail", None, None, f"{type(exc).__name__}: {exc}")


def _run_one(args):
    cid, ctx = args
    return run_check(cid, ctx)


def run_battery(ctx: VerifyContext, ids=None, jobs: int = 1) -> list[CheckResult]:
    ids = list(ids or CHECKS)
    unknown = [c for c in ids if c not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check(s) {unknown}")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, [(c, ctx) for c in ids]))
    return [run_check(c, ctx) for c in ids]


def summary(results: list[CheckResult], seed: int) -> dict:
    failed = [r.id for r in results if r.status == "fail"]
    return {"seed": seed, "passed": not failed, "failed": failed,
            "checks": [asdict(r) for r in results]}
