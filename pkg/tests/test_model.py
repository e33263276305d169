import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minsurf.grid import laplacian
from minsurf.model import (
    ModelParams,
    StopRule,
    check_stop,
    conjugate_identity,
    energy,
    euler_lagrange,
    regularizer,
    relative_change,
)
from minsurf.spectral import BlurSpec, apply_blur, apply_blur_adjoint, spectrum_for

IDENTITY = BlurSpec()


def loop_energy(lam, alpha, blurred, f, u):
    """Per-pixel sum in reverse traversal order."""
    n, m = u.shape
    total = 0.0
    for i in reversed(range(n)):
        for j in reversed(range(m)):
            dx = u[(i + 1) % n, j] - u[i, j]
            dy = u[i, (j + 1) % m] - u[i, j]
            total += math.sqrt(alpha + dx * dx + dy * dy)
            total += 0.5 * lam * (blurred[i, j] - f[i, j]) ** 2
    return total


def fd_gradient(fun, u, h=1e-5):
    g = np.zeros_like(u)
    for idx in np.ndindex(u.shape):
        e = np.zeros_like(u)
        e[idx] = h
        g[idx] = (fun(u + e) - fun(u - e)) / (2 * h)
    return g


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(0.0)
    with pytest.raises(ValueError):
        ModelParams(1.0, -1e-3)
    ModelParams(1.0, 0.0)
    with pytest.raises(ValueError):
        StopRule(0.0)
    with pytest.raises(ValueError):
        StopRule(1e-5, 0)
    assert StopRule() == StopRule(1e-5, 500)


def test_energy_of_constant():
    n = 6
    c = np.full((n, n), 77.0)
    sp = spectrum_for(IDENTITY, n, n)
    assert energy(ModelParams(0.3, 0.01), sp, c, c) == pytest.approx(n * n * 0.1, rel=1e-12)


def test_energy_alpha_zero_is_tv(rng):
    f = rng.standard_normal((5, 7))
    sp = spectrum_for(IDENTITY, 7, 5)
    tv = 0.0
    for i in range(5):
        for j in range(7):
            tv += math.hypot(f[(i + 1) % 5, j] - f[i, j], f[i, (j + 1) % 7] - f[i, j])
    assert energy(ModelParams(2.0, 0.0), sp, f, f) == pytest.approx(tv, rel=1e-12)


@pytest.mark.parametrize("blur", [IDENTITY, BlurSpec(3, 0.8)])
def test_energy_matches_loop(rng, blur):
    u, f = 10 * rng.standard_normal((2, 4, 4))
    sp = spectrum_for(blur, 4, 4)
    params = ModelParams(0.7, 0.05)
    expected = loop_energy(params.lam, params.alpha, apply_blur(sp, u), f, u)
    assert energy(params, sp, f, u) == pytest.approx(expected, rel=1e-10)


def test_euler_lagrange_constant_and_alpha_zero():
    assert not np.any(euler_lagrange(ModelParams(1.0, 0.01), np.full((4, 4), 5.0)))
    with pytest.raises(ValueError, match="alpha"):
        euler_lagrange(ModelParams(1.0, 0.0), np.zeros((4, 4)))


def test_euler_lagrange_linearization(rng):
    alpha = 0.01
    v = rng.standard_normal((8, 8))
    eps = 1e-6
    e = euler_lagrange(ModelParams(1.0, alpha), eps * v)
    lin = laplacian(eps * v) / math.sqrt(alpha)
    assert np.linalg.norm(e - lin) <= 1e-8 * np.linalg.norm(lin)


@pytest.mark.parametrize("seed", range(3))
def test_regularizer_gradient_is_minus_euler_lagrange(seed):
    r = np.random.default_rng(seed)
    u = 3 * r.standard_normal((8, 8))
    params = ModelParams(1.0, 0.01)
    g = fd_gradient(lambda x: regularizer(params.alpha, x), u)
    np.testing.assert_allclose(g, -euler_lagrange(params, u), atol=1e-6)


@pytest.mark.parametrize("seed", range(3))
def test_full_objective_gradient(seed):
    r = np.random.default_rng(100 + seed)
    u, f = 3 * r.standard_normal((2, 8, 8))
    params = ModelParams(0.8, 0.1)
    sp = spectrum_for(IDENTITY, 8, 8)
    g = fd_gradient(lambda x: energy(params, sp, f, x), u)
    np.testing.assert_allclose(g, params.lam * (u - f) - euler_lagrange(params, u), atol=1e-6)


def test_conjugate_identity_examples():
    assert conjugate_identity(1.0, 0.0) == (1.0, 0.0)
    value, s = conjugate_identity(1.0, 1.0)
    assert value == pytest.approx(math.sqrt(2), abs=1e-15)
    assert s == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    with pytest.raises(ValueError):
        conjugate_identity(0.0, 1.0)


def test_conjugate_identity_grid_search():
    alpha = 0.01
    s = np.linspace(-1.0, 1.0, 200001)
    h = np.sqrt(alpha * (1 - s * s))
    for t in np.arange(-5, 6):
        value, s_star = conjugate_identity(alpha, float(t))
        assert abs(s_star) < 1
        assert np.max(t * s + h) == pytest.approx(value, abs=1e-6)
        # the maximizer attains the sup
        assert t * s_star + math.sqrt(alpha * (1 - s_star ** 2)) == pytest.approx(value, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(alpha=st.floats(1e-4, 10), t=st.floats(-100, 100))
def test_conjugate_parity(alpha, t):
    v1, s1 = conjugate_identity(alpha, t)
    v2, s2 = conjugate_identity(alpha, -t)
    assert v1 == v2
    assert s1 == -s2


def test_check_stop_examples(rng):
    rule = StopRule(1e-5, 500)
    u = rng.random((4, 4)) + 1
    assert check_stop(rule, u, u.copy(), 3.0, 3.0, 1)
    assert check_stop(rule, u, u + 100, 3.0, 300.0, 500)
    du = rng.standard_normal((4, 4))
    u_next = u + du * (2e-5 * np.linalg.norm(u) / np.linalg.norm(du))
    assert relative_change(u, u_next, 10.0, 10.0 * (1 - 1e-6)) == pytest.approx(2e-5, rel=1e-9)
    assert not check_stop(rule, u, u_next, 10.0, 10.0 * (1 - 1e-6), 12)


def test_check_stop_degenerate_denominators():
    z = np.zeros((3, 3))
    assert relative_change(z, z + 1e-9, 0.0, 1e-9) == pytest.approx(3e-9)
    assert check_stop(StopRule(), z, z, 0.0, 0.0, 1)


def test_regularizer_lower_bound(rng):
    alpha = 0.01
    n = 6
    c = np.full((n, n), 2.0)
    assert regularizer(alpha, c) == pytest.approx(n * n * math.sqrt(alpha), rel=1e-14)
    for _ in range(20):
        u = rng.standard_normal((n, n))
        assert regularizer(alpha, u) > n * n * math.sqrt(alpha)


def test_euler_lagrange_zero_mean(rng):
    e = euler_lagrange(ModelParams(1.0, 0.01), 50 * rng.standard_normal((16, 12)))
    assert abs(e.mean()) <= 1e-10


def test_blur_gradient_consistency(rng):
    u, f = 2 * rng.standard_normal((2, 8, 8))
    params = ModelParams(0.5, 0.05)
    sp = spectrum_for(BlurSpec(3, 0.7), 8, 8)
    g = fd_gradient(lambda x: energy(params, sp, f, x), u)
    analytic = params.lam * apply_blur_adjoint(sp, apply_blur(sp, u) - f) - euler_lagrange(params, u)
    np.testing.assert_allclose(g, analytic, atol=1e-6)
