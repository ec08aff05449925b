import numpy as np
import pytest
from hypothesis import given, strategies as st

from poisson_reduce import so3
from poisson_reduce.errors import Degenerate, NotSkew, NotTangent, NotUnit
from poisson_reduce.integrate import IntegratorSettings, integrate
from poisson_reduce.reduction import connection_value, curvature_coefficient

finite = st.floats(-10, 10, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


def test_hat_examples():
    assert np.array_equal(so3.hat([0, 0, 0]), np.zeros((3, 3)))
    assert np.array_equal(so3.hat([1, 0, 0]), [[0, 0, 0], [0, 0, -1], [0, 1, 0]])
    a, b = np.array([1.0, 2, 3]), np.array([4.0, 5, 6])
    comm = so3.hat(a) @ so3.hat(b) - so3.hat(b) @ so3.hat(a)
    assert np.allclose(comm, so3.hat(np.cross(a, b)), atol=1e-12)


def test_vee_examples():
    assert np.array_equal(so3.vee(np.zeros((3, 3))), np.zeros(3))
    assert np.allclose(so3.vee(so3.hat([1, 2, 3])), [1, 2, 3])
    assert np.allclose(so3.vee([[0, -3, 2], [3, 0, -1], [-2, 1, 0]]), [1, 2, 3])


def test_vee_rejects_non_skew():
    with pytest.raises(NotSkew):
        so3.vee(np.eye(3))


@given(vec3)
def test_hat_vee_inverse(v):
    assert np.allclose(so3.vee(so3.hat(v)), v, atol=1e-14, rtol=0)


@given(vec3, vec3)
def test_hat_applies_cross_and_commutator(a, b):
    assert np.allclose(so3.hat(a) @ b, np.cross(a, b), atol=1e-12)
    comm = so3.hat(a) @ so3.hat(b) - so3.hat(b) @ so3.hat(a)
    assert np.allclose(comm, so3.hat(np.cross(a, b)), atol=1e-12)


def test_spin_examples(rng):
    w = np.array([1.0, 2.0, 3.0])
    assert np.allclose(so3.spin(np.eye(3), so3.hat(w)), w)
    Q = so3.random_rotation(rng)
    assert np.allclose(so3.spin(Q, Q @ so3.hat(w)), w, atol=1e-12)
    # right-invariant field: spin is the body image of the inertial axis
    R = so3.axis_rotation(2, np.pi / 2)
    s = so3.spin(R, so3.hat([0, 0, 1]) @ R)
    assert np.allclose(s, R.T @ [0, 0, 1], atol=1e-12)
    assert np.allclose(s, [0, 0, 1], atol=1e-12)


def test_spin_inverse_relation(rng):
    Q = so3.random_rotation(rng)
    qdot = Q @ so3.hat(rng.standard_normal(3))
    assert np.abs(Q @ so3.hat(so3.spin(Q, qdot)) - qdot).max() <= 1e-12


def test_spin_rejects_non_tangent():
    with pytest.raises(NotTangent):
        so3.spin(np.eye(3), np.eye(3))


def test_poisson_projection_examples():
    assert np.array_equal(so3.poisson_projection(np.eye(3)), [1, 0, 0])
    assert np.allclose(so3.poisson_projection(so3.axis_rotation(0, 0.7)), [1, 0, 0])
    # right-handed convention: first row of the quarter turn about axis 3
    assert np.allclose(so3.poisson_projection(so3.axis_rotation(2, np.pi / 2)), [0, -1, 0])


def test_poisson_projection_is_unit_and_invariant(rng):
    for _ in range(50):
        Q = so3.random_rotation(rng)
        nu = so3.poisson_projection(Q)
        assert abs(np.linalg.norm(nu) - 1) <= 1e-9
        g = so3.axis_rotation(0, rng.uniform(0, 2 * np.pi))
        assert np.abs(so3.poisson_projection(g @ Q) - nu).max() <= 1e-12


@pytest.mark.parametrize("nu, omega, expected", [
    ((1, 0, 0), (1, 0, 0), (0, 0, 0)),
    ((1, 0, 0), (0, 0, -1), (0, 1, 0)),
    ((0, 1, 0), (3, 4, 5), (5, 0, -3)),
])
def test_tangent_projection_examples(nu, omega, expected):
    out = so3.tangent_projection(np.array(nu, float), np.array(omega, float))
    assert np.allclose(out, expected)
    assert abs(out @ nu) <= 1e-12


def test_tangent_projection_needs_unit():
    with pytest.raises(NotUnit):
        so3.tangent_projection(np.array([2.0, 0, 0]), np.zeros(3))


def _averaging_polar(m, iters=60):
    Q = np.array(m, float)
    for _ in range(iters):
        Q = 0.5 * (Q + np.linalg.inv(Q).T)
    return Q


def test_reorthonormalize_examples(rng):
    P = np.eye(3) + 1e-8 * rng.standard_normal((3, 3))
    assert so3.ortho_residual(so3.reorthonormalize(P)) <= 1e-12
    Q = so3.random_rotation(rng)
    assert np.abs(so3.reorthonormalize(Q) - Q).max() <= 1e-14
    assert np.allclose(so3.reorthonormalize(1.01 * np.eye(3)), np.eye(3), atol=1e-15)


def test_reorthonormalize_matches_averaging_oracle(rng):
    for _ in range(10):
        m = so3.random_rotation(rng) + 0.05 * rng.standard_normal((3, 3))
        assert np.allclose(so3.reorthonormalize(m), _averaging_polar(m), atol=1e-12)


def test_reorthonormalize_rejects_degenerate():
    with pytest.raises(Degenerate):
        so3.reorthonormalize(-np.eye(3))
    with pytest.raises(Degenerate):
        so3.reorthonormalize(3 * np.eye(3))


def test_expm_is_rotation_and_matches_axis_rotation():
    R = so3.expm([0, 0, 0.3])
    assert np.allclose(R, so3.axis_rotation(2, 0.3), atol=1e-15)
    assert so3.ortho_residual(so3.expm([1e-10, 2e-10, 0])) <= 1e-15


def first_spin(q, w):
    return float(w[0])


def test_fd_exterior_derivative_of_spin_component():
    eps = 1e-3
    val = so3.fd_exterior_derivative_1form(first_spin, np.eye(3), np.eye(3)[1], np.eye(3)[2], eps)
    assert abs(val + 1) <= 5 * eps ** 2


def test_fd_exterior_derivative_of_exact_form(rng):
    # differential of the function Q -> Q[0, 0], evaluated on spins
    def d_alpha(q, w):
        return float((q @ so3.hat(w))[0, 0])
    eps = 1e-3
    for _ in range(5):
        Q = so3.random_rotation(rng)
        u, v = rng.standard_normal(3), rng.standard_normal(3)
        assert abs(so3.fd_exterior_derivative_1form(d_alpha, Q, u, v, eps)) <= 5 * eps ** 2


def test_fd_exterior_derivative_of_connection_at_identity():
    I = (2.0, 1.5, 1.0)
    nu = np.array([1.0, 0, 0])
    # horizontal spins at Q = Id: zero momentum means zero first component
    u, v = np.array([0, 1.0, 0]), np.array([0, 0, 1.0])

    def eta(q, w):
        return connection_value(so3.poisson_projection(q), w, I)
    fd = so3.fd_exterior_derivative_1form(eta, np.eye(3), u, v, 1e-3)
    area = nu @ np.cross(np.cross(nu, u), np.cross(nu, v))
    assert abs(fd - curvature_coefficient(nu, I) * area) <= 1e-5


def test_fd_exterior_derivative_rejects_bad_eps():
    with pytest.raises(ValueError):
        so3.fd_exterior_derivative_1form(first_spin, np.eye(3), np.ones(3), np.ones(3), 0.0)


def test_maurer_cartan_matrix(rng):
    eps = 1e-3
    E = np.eye(3)
    Q = so3.random_rotation(rng)
    for i in range(3):
        def eta(q, w, i=i):
            return float(w[i])
        for a in range(3):
            for b in range(3):
                val = so3.fd_exterior_derivative_1form(eta, Q, E[a], E[b], eps)
                assert abs(val + np.cross(E[a], E[b])[i]) <= 5 * eps ** 2


def test_projection_velocity_is_nu_cross_omega(rng):
    # integrate Q' = Q hat(omega(t)) with a time-varying spin, then differentiate p(Q(t))
    def omega(t):
        return np.array([np.sin(t), 1.0, np.cos(2 * t)])

    def rhs(t, y):
        return (y.reshape(3, 3) @ so3.hat(omega(t))).ravel()
    h = 1e-2
    sol = integrate(rhs, so3.random_rotation(rng).ravel(), IntegratorSettings(step=h, t_end=2.0))
    Qs = sol.y.reshape(-1, 3, 3)
    nus = Qs[:, 0, :]
    for i in range(1, len(nus) - 1, 20):
        fd = (nus[i + 1] - nus[i - 1]) / (2 * h)
        assert np.abs(fd - np.cross(nus[i], omega(sol.t[i]))).max() <= 1e-4


def test_maurer_cartan_residual_is_second_order(rng):
    from poisson_reduce.verify import maurer_cartan_residual
    Q = so3.random_rotation(rng)
    r1, r2 = maurer_cartan_residual(Q, 2e-3), maurer_cartan_residual(Q, 1e-3)
    assert 0 < r2 <= 5e-6
    assert 3.5 <= r1 / r2 <= 4.5
