import math

import numpy as np
import pytest

from critwave.errors import ConfigError
from critwave.objective import CostParams, eval_j, j_dir, j_second, zero_tolerance


def _smooth(problem, rng, amp=1.0):
    modes = np.zeros((problem.tgrid.size,) + problem.grid.shape)
    modes[:, :4] = rng.standard_normal((problem.tgrid.size, 4))
    return problem.control(amp * problem.grid.synthesize(modes))


def test_cost_params_validation():
    with pytest.raises(ConfigError) as e:
        CostParams(beta1=-1.0)
    assert e.value.path == "cost.beta1"
    with pytest.raises(ConfigError) as e:
        CostParams(gamma=math.nan)
    assert e.value.path == "cost.gamma"
    with pytest.raises(ConfigError):
        CostParams(p_norm=2, q_norm=12)


def test_forward_solve_is_shared(nonlinear_problem, rng):
    u = _smooth(nonlinear_problem, rng)
    first = nonlinear_problem.state(u)
    assert nonlinear_problem.state(u) is first
    nonlinear_problem.grad_F(u)
    assert nonlinear_problem.evaluate(u).adjoint is not None
    assert nonlinear_problem.state(u.axpy(1e-3, u)) is not first


def test_gradient_matches_difference_quotient(nonlinear_problem, rng):
    p = nonlinear_problem
    u = _smooth(p, rng, 0.5)
    grad = p.grad_F(u)
    for _ in range(3):
        h = _smooth(p, rng)
        eps = 1e-5
        fd = (p.eval_F(u.axpy(eps, h)) - p.eval_F(u.axpy(-eps, h))) / (2 * eps)
        assert grad.dot(h) == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_gradient_paths_agree(nonlinear_problem, rng):
    p = nonlinear_problem
    u = _smooth(p, rng, 0.5)
    h = _smooth(p, rng)
    assert p.grad_F(u).dot(h) == pytest.approx(p.grad_F_via_sensitivity(u, h), rel=1e-10)


def test_second_derivative_paths_agree(nonlinear_problem, rng):
    p = nonlinear_problem
    u = _smooth(p, rng, 0.5)
    v = _smooth(p, rng)
    assert p.F_second(u, v) == pytest.approx(p.F_second_via_sensitivity(u, v), rel=1e-8)


def test_second_derivative_matches_gradient_differences(nonlinear_problem, rng):
    p = nonlinear_problem
    u = _smooth(p, rng, 0.5)
    v = _smooth(p, rng)
    w = _smooth(p, rng)
    eps = 1e-5
    fd = (p.grad_F(u.axpy(eps, w)).dot(v) - p.grad_F(u.axpy(-eps, w)).dot(v)) / (2 * eps)
    assert p.F_second_bilinear(u, v, w) == pytest.approx(fd, rel=1e-5, abs=1e-9)
    assert p.F_second_bilinear(u, v, w) == pytest.approx(p.F_second_bilinear(u, w, v), rel=1e-9)


def test_cost_breakdown(nonlinear_problem, rng):
    p = nonlinear_problem
    p.cost.beta1 = 0.05
    u = _smooth(p, rng)
    parts = p.cost_breakdown(u)
    assert set(parts) == {"tracking", "strichartz_penalty", "l1_term", "l2_term", "total"}
    assert parts["total"] == pytest.approx(p.eval_lr(u), rel=1e-14)
    assert parts["l1_term"] == pytest.approx(0.05 * u.l1_norm())


def test_j_is_convex(nonlinear_problem, rng):
    p = nonlinear_problem
    for _ in range(10):
        u = p.control(rng.standard_normal((p.tgrid.size,) + p.grid.shape))
        v = _smooth(p, rng)
        theta = rng.uniform()
        mix = u * theta + v * (1 - theta)
        assert eval_j(mix) <= theta * eval_j(u) + (1 - theta) * eval_j(v) + 1e-12


def test_j_directional_derivative(nonlinear_problem, rng):
    p = nonlinear_problem
    u = _smooth(p, rng)
    v = _smooth(p, rng)
    eps = 1e-6
    fd = (eval_j(u.axpy(eps, v)) - eval_j(u.axpy(-eps, v))) / (2 * eps)
    assert j_dir(u, v) == pytest.approx(fd, rel=1e-6)

    values = u.u.copy()
    values[3] = 0.0
    u0 = p.control(values)
    one_sided = (eval_j(u0.axpy(eps, v)) - eval_j(u0)) / eps
    assert j_dir(u0, v) == pytest.approx(one_sided, rel=1e-5)
    assert zero_tolerance(u0) == pytest.approx(1e-12 * (1 + u0.sup_norm()))


def test_j_second(nonlinear_problem, rng):
    p = nonlinear_problem
    u = _smooth(p, rng)
    assert j_second(u, u) == pytest.approx(0.0, abs=1e-10)
    assert j_second(u, _smooth(p, rng)) > 0
    tiny = u.scaled(np.full(p.tgrid.size, 1e-6))
    assert math.isinf(j_second(tiny, _smooth(p, rng), cap=1.0))
    assert j_second(p.zeros(), u) == 0.0
