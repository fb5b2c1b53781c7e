import numpy as np
import pytest

from critwave.calculus import (
    Psi_pq,
    Psi_pq_gradient,
    Psi_pq_prime,
    Psi_pq_second,
    Psi_pq_second_bilinear,
    check_pq,
    psi_second_coefficients,
    segment_min_norm,
    upsilon2_derivs,
    upsilon_q,
)
from critwave.errors import ConfigError, SingularityError
from critwave.norms import TimeGrid


def test_coefficients_at_default_exponents():
    assert psi_second_coefficients(4, 12) == (-8, 11)


@pytest.mark.parametrize("p, q, path", [(4, 1.5, "cost.q_norm"), (2, 12, "cost.p_norm"), (1, 2, "cost.p_norm")])
def test_check_pq_rejects(p, q, path):
    with pytest.raises(ConfigError) as e:
        check_pq(p, q)
    assert e.value.path == path


def test_check_pq_accepts_quadratic():
    check_pq(2, 2)
    check_pq(4, 12)


@pytest.mark.parametrize("p, q", [(4, 12), (3, 4), (2, 2)])
def test_psi_derivatives_match_differences(grid1, rng, p, q):
    tg = TimeGrid(1.0, 8)
    y = rng.standard_normal((tg.size,) + grid1.shape)
    h = rng.standard_normal(y.shape)
    k = rng.standard_normal(y.shape)
    eps = 1e-5

    fd1 = (Psi_pq(grid1, tg, y + eps * h, p, q) - Psi_pq(grid1, tg, y - eps * h, p, q)) / (2 * eps)
    d1 = Psi_pq_prime(grid1, tg, y, h, p, q)
    assert d1 == pytest.approx(fd1, rel=1e-6)

    fd2 = (
        Psi_pq_prime(grid1, tg, y + eps * k, h, p, q) - Psi_pq_prime(grid1, tg, y - eps * k, h, p, q)
    ) / (2 * eps)
    d2 = Psi_pq_second_bilinear(grid1, tg, y, h, k, p, q)
    assert d2 == pytest.approx(fd2, rel=1e-6)
    assert d2 == pytest.approx(Psi_pq_second_bilinear(grid1, tg, y, k, h, p, q), rel=1e-12)


def test_psi_quadratic_case_is_the_l2_norm(grid1, rng):
    tg = TimeGrid(1.0, 4)
    y = rng.standard_normal((tg.size,) + grid1.shape)
    h = rng.standard_normal(y.shape)
    assert np.allclose(Psi_pq_gradient(grid1, y, 2, 2), y)
    expect = float(np.dot(tg.weights, grid1.inner(h, h)))
    assert Psi_pq_second(grid1, tg, y, h, 2, 2) == pytest.approx(expect, rel=1e-12)


def test_zero_slices_contribute_nothing(grid1, rng):
    tg = TimeGrid(1.0, 4)
    y = rng.standard_normal((tg.size,) + grid1.shape)
    y[2] = 0.0
    h = rng.standard_normal(y.shape)
    g = Psi_pq_gradient(grid1, y, 4, 12)
    assert not np.any(g[2])
    only_zero = np.zeros_like(h)
    only_zero[2] = h[2]
    assert Psi_pq_second(grid1, tg, y, only_zero, 4, 12) == 0.0


def test_upsilon2_derivatives(grid1, rng):
    f = rng.standard_normal((3,) + grid1.shape)
    h = rng.standard_normal(f.shape)
    d1, d2, d3 = upsilon2_derivs(grid1, f, h)
    eps = 1e-4

    def norm(s):
        return upsilon_q(grid1, f + s * h, 2)

    assert np.allclose(d1, (norm(eps) - norm(-eps)) / (2 * eps), rtol=1e-8)
    assert np.allclose(d2, (norm(eps) - 2 * norm(0.0) + norm(-eps)) / eps**2, rtol=1e-5)
    e3 = 1e-3
    third = (norm(2 * e3) - 2 * norm(e3) + 2 * norm(-e3) - norm(-2 * e3)) / (2 * e3**3)
    assert np.allclose(d3, third, rtol=1e-4, atol=1e-5)
    assert np.all(d2 >= 0)


def test_upsilon2_at_zero(grid1):
    f = np.zeros((2,) + grid1.shape)
    f[0, 0] = 1.0
    with pytest.raises(SingularityError):
        upsilon2_derivs(grid1, f, f)


def test_segment_min_norm(grid1, rng):
    f = rng.standard_normal((2,) + grid1.shape)
    h = np.stack([-2 * f[0], f[1]])
    m = segment_min_norm(grid1, f, h)
    assert m[0] == pytest.approx(0.0, abs=1e-7)
    assert m[1] == pytest.approx(grid1.norm(f[1]))
