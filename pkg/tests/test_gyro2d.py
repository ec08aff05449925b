import numpy as np
import pytest

from poisson_reduce.errors import NotUnitSpeed, SingularMetric, TurningRegion
from poisson_reduce.gyro2d import (ChartState, GyroSystem2D, adaptive_simpson,
                                   arclength_reparameterize, christoffel, curvature_flow_field,
                                   curvature_flow_rhs, gyro_field, gyro_rhs, maupertuis_metric,
                                   predicted_curvature, reparameterize, signed_geodesic_curvature,
                                   speed, unit_speed_state)
from poisson_reduce.integrate import IntegratorSettings, dense_eval, integrate
from poisson_reduce.verify import demo_gyro_system, larmor_radius_error, round_trip_errors


def EYE(q):
    return np.eye(2)


def euclid(c=0.0, V=None):
    return GyroSystem2D(lambda q: np.eye(2), V, lambda q: c)


def round_sphere():
    def metric(q):
        return 4 * np.eye(2) / (1 + q @ q) ** 2
    return GyroSystem2D(metric)


def analytic_system():
    """Non-conformal metric with analytic derivatives and an anharmonic potential."""
    def metric(q):
        return np.array([[2 + np.sin(q[0]), 0.3 * q[1]], [0.3 * q[1], 1 + q[0] ** 2]])

    def grad(q):
        d = np.zeros((2, 2, 2))
        d[0] = [[np.cos(q[0]), 0], [0, 2 * q[0]]]
        d[1] = [[0, 0.3], [0.3, 0]]
        return d

    def pot(q):
        return q[0] ** 4 / 4 + q[1] ** 2, np.array([q[0] ** 3, 2 * q[1]])
    return GyroSystem2D(metric, pot, lambda q: 0.7 + q[1], grad)


def test_christoffel_euclidean_is_zero():
    assert np.array_equal(christoffel(euclid(), np.array([0.3, -2.0])), np.zeros((2, 2, 2)))


def test_christoffel_round_sphere(rng):
    sys = round_sphere()
    for _ in range(10):
        q = rng.uniform(-1.5, 1.5, 2)
        G = christoffel(sys, q)
        assert G[0, 0, 0] == pytest.approx(-2 * q[0] / (1 + q @ q), abs=1e-8)
        assert np.array_equal(G, np.transpose(G, (0, 2, 1)))


def test_fd_metric_grad_matches_analytic(rng):
    sys = analytic_system()
    fd = GyroSystem2D(sys.metric)
    for _ in range(5):
        q = rng.uniform(-1, 1, 2)
        assert np.allclose(fd.metric_grad(q), sys.metric_grad(q), atol=1e-9)


def test_singular_metric():
    bad = GyroSystem2D(lambda q: np.diag([1.0, -1.0]))
    with pytest.raises(SingularMetric):
        christoffel(bad, np.zeros(2))
    with pytest.raises(SingularMetric):
        gyro_rhs(bad, ChartState(np.zeros(2), np.ones(2)))


def test_straight_lines_without_forces():
    sol = integrate(gyro_field(euclid()), [0, 0, 1, 2], IntegratorSettings(step=0.01, t_end=3))
    assert np.allclose(sol.y[:, :2], np.outer(sol.t, [1, 2]), atol=1e-12)


def test_larmor_circles():
    assert larmor_radius_error(B=2.0) <= 1e-6
    assert larmor_radius_error(B=-0.5, v0=(0.3, -1.0)) <= 1e-6


def test_positive_density_turns_clockwise():
    _, acc = gyro_rhs(euclid(c=1.0), ChartState(np.zeros(2), np.array([1.0, 0.0])))
    assert np.allclose(acc, [0, -1])


def test_energy_is_a_first_integral_of_the_field(rng):
    sys = analytic_system()
    for _ in range(20):
        q, v = rng.uniform(-1, 1, 2), rng.standard_normal(2)
        _, acc = gyro_rhs(sys, np.r_[q, v])
        a = sys.metric(q)
        d = sys.metric_grad(q)
        dE = 0.5 * v @ np.einsum("kij,k->ij", d, v) @ v + v @ a @ acc + sys.potential(q)[1] @ v
        assert abs(dE) <= 1e-12


def test_gyroscopic_force_does_no_work(rng):
    sys = GyroSystem2D(analytic_system().metric, None, lambda q: 1.0 + q[0],
                       analytic_system().metric_grad)
    q0, v0 = np.array([0.2, 0.1]), np.array([0.5, -0.4])
    sol = integrate(gyro_field(sys), np.r_[q0, v0], IntegratorSettings(step=1e-3, t_end=10))
    speeds = np.array([speed(sys, y[:2], y[2:]) for y in sol.y[::20]])
    assert np.abs(speeds - speeds[0]).max() <= 1e-9


def test_energy_step_halving_ratio():
    sys = analytic_system()

    def drift(h):
        sol = integrate(gyro_field(sys), [0.5, 0.2, 0.8, -0.6], IntegratorSettings(step=h, t_end=10))
        E = np.array([sys.energy(y[:2], y[2:]) for y in sol.y])
        return np.abs(E - E[0]).max()
    assert 12 <= drift(0.02) / drift(0.01) <= 20


def test_maupertuis_metric_examples():
    sys = analytic_system()
    zero = GyroSystem2D(sys.metric, None, None, sys.metric_grad)
    q = np.array([0.3, 0.4])
    assert np.array_equal(maupertuis_metric(zero, 0.5).metric(q), sys.metric(q))
    const = GyroSystem2D(EYE, lambda q: (1.25, np.zeros(2)))
    with pytest.raises(TurningRegion):
        maupertuis_metric(const, 1.25).metric(q)


def test_maupertuis_metric_positive_over_grid():
    def nu3(q):
        s = q @ q
        return (1 - s) / (1 + s), -4 * q / (1 + s) ** 2
    sys = GyroSystem2D(round_sphere().metric, nu3)
    flow = maupertuis_metric(sys, 1.5)
    for x in np.linspace(-2, 2, 21):
        for y in np.linspace(-2, 2, 21):
            a = flow.metric(np.array([x, y]))
            assert np.linalg.det(a) > 0 and np.trace(a) > 0


def test_maupertuis_metric_grad_matches_differences(rng):
    sys = analytic_system()
    flow = maupertuis_metric(sys, 5.0)
    fd = GyroSystem2D(flow.metric)
    q = rng.uniform(-0.5, 0.5, 2)
    assert np.allclose(flow.metric_grad(q), fd.metric_grad(q), atol=1e-8)


def test_curvature_flow_without_gyroscopic_term_is_a_geodesic():
    # constant potential: m_h is a constant multiple of the Euclidean metric
    sys = GyroSystem2D(EYE, lambda q: (0.25, np.zeros(2)))
    h = 0.75
    y0 = unit_speed_state(sys, h, [0, 0], [1, 1])
    sol = integrate(curvature_flow_field(sys, h), y0, IntegratorSettings(step=0.01, t_end=3))
    assert np.allclose(sol.y[:, 0], sol.y[:, 1], atol=1e-13)
    assert np.allclose(sol.y[:, 2:], y0[2:], atol=1e-13)


def test_curvature_flow_rhs_speed_precondition():
    sys = euclid(c=1.0)
    with pytest.raises(NotUnitSpeed):
        curvature_flow_rhs(sys, 0.5, np.array([0, 0, 2.0, 0]))
    qd, qdd = curvature_flow_rhs(sys, 0.5, np.array([0, 0, 1.0, 0]))
    assert np.allclose(qdd, [0, -1])


def test_curvature_flow_keeps_unit_speed():
    sys = demo_gyro_system()
    q0, v0 = np.array([0.3, -0.2]), np.array([1.0, 0.6])
    h = sys.energy(q0, v0)
    sol = integrate(curvature_flow_field(sys, h), unit_speed_state(sys, h, q0, v0),
                    IntegratorSettings(step=1e-3, t_end=10))
    flow = maupertuis_metric(sys, h)
    res = max(abs(speed(flow, y[:2], y[2:]) - 1) for y in sol.y[::10])
    assert res <= 1e-9


def test_curvature_flow_larmor_curvature():
    B = 1.7
    sys = euclid(c=B)
    sol = integrate(curvature_flow_field(sys, 0.5), [0, 0, 1, 0],
                    IntegratorSettings(step=1e-3, t_end=2))
    q = sol.y[::10, :2]
    kg = signed_geodesic_curvature(q, 1e-2, maupertuis_metric(sys, 0.5))
    assert np.abs(kg - B).max() <= 1e-6


def test_reparameterize_trivial_cases():
    sys = euclid(c=1.0)
    flow = integrate(curvature_flow_field(sys, 0.5), [0, 0, 1, 0], IntegratorSettings(step=0.01, t_end=2))
    t, q, qd = reparameterize(flow, sys, 0.5)
    assert np.allclose(t, flow.t, atol=1e-13)
    v0 = 0.3
    const = GyroSystem2D(EYE, lambda q: (v0, np.zeros(2)), lambda q: 1.0)
    h = 0.8
    y0 = unit_speed_state(const, h, [0, 0], [1, 0])
    flow = integrate(curvature_flow_field(const, h), y0, IntegratorSettings(step=0.01, t_end=2))
    t, _, _ = reparameterize(flow, const, h)
    assert np.allclose(t, flow.t / (2 * (h - v0)), atol=1e-13)


def test_reparameterize_to_grid_and_back():
    sys = demo_gyro_system()
    fwd, rev = round_trip_errors(sys, [0.3, -0.2], [1.0, 0.6], T=2.0)
    assert fwd <= 1e-5 and rev <= 1e-5


def test_reparameterized_velocity_has_energy_h():
    sys = demo_gyro_system()
    q0, v0 = np.array([0.3, -0.2]), np.array([1.0, 0.6])
    h = sys.energy(q0, v0)
    flow = integrate(curvature_flow_field(sys, h), unit_speed_state(sys, h, q0, v0),
                     IntegratorSettings(step=1e-3, t_end=3))
    _, q, qd = reparameterize(flow, sys, h, np.linspace(0, 1, 11))
    for qq, vv in zip(q, qd):
        assert sys.energy(qq, vv) == pytest.approx(h, abs=1e-10)


def test_reparameterize_turning_region():
    sys = GyroSystem2D(EYE, lambda q: (q[0], np.array([1.0, 0.0])))
    # motion straight up the slope reaches V = h at q1 = h
    sol = integrate(gyro_field(sys), [0, 0, 1, 0], IntegratorSettings(step=0.01, t_end=1.2))
    with pytest.raises(TurningRegion):
        arclength_reparameterize(sol, sys, 0.5)


def test_signed_curvature_of_geodesic_is_zero():
    sys = round_sphere()
    # the equator of the chart is the unit circle; the q1 axis is a great circle too
    s = np.linspace(-0.5, 0.5, 41)
    q = np.stack([np.tan(s / 2), np.zeros_like(s)], axis=1)
    kg = signed_geodesic_curvature(q, s[1] - s[0], sys)
    assert np.abs(kg).max() <= 5e-4


@pytest.mark.parametrize("R", [0.5, 2.0])
def test_signed_curvature_of_euclidean_circle(R):
    s = np.linspace(0, 2, 201)
    ccw = np.stack([R * np.cos(s / R), R * np.sin(s / R)], axis=1)
    sys = euclid()
    # {curvature vector, tangent} is negatively oriented on a counterclockwise circle
    assert np.abs(signed_geodesic_curvature(ccw, s[1] - s[0], sys) + 1 / R).max() <= 1e-6
    assert np.abs(signed_geodesic_curvature(ccw, s[1] - s[0], sys, orientation=-1) - 1 / R).max() <= 1e-6
    cw = ccw * [1, -1]
    assert np.abs(signed_geodesic_curvature(cw, s[1] - s[0], sys) - 1 / R).max() <= 1e-6


def test_signed_curvature_requires_unit_speed():
    s = np.linspace(0, 1, 11)
    q = np.stack([2 * s, 0 * s], axis=1)
    with pytest.raises(NotUnitSpeed):
        signed_geodesic_curvature(q, s[1] - s[0], euclid())
    assert np.allclose(signed_geodesic_curvature(q, s[1] - s[0], euclid(), unit_speed=False), 0)


def test_predicted_curvature_euclidean():
    assert predicted_curvature(euclid(c=3.0), 0.5, np.zeros(2)) == pytest.approx(3.0)


def test_adaptive_simpson():
    assert adaptive_simpson(np.sin, 0, np.pi) == pytest.approx(2.0, abs=1e-12)
    assert adaptive_simpson(lambda x: np.exp(-x * x), -3, 3) == pytest.approx(
        np.sqrt(np.pi) * 0.9999779095030014, rel=1e-12)


def test_chart_state_pack():
    s = ChartState(np.array([1.0, 2.0]), np.array([3.0, 4.0]))
    assert np.array_equal(s.pack(), [1, 2, 3, 4])
    qd, _ = gyro_rhs(euclid(), s)
    assert np.array_equal(qd, [3, 4])
