import math

import numpy as np
import pytest

from conftest import sine
from critwave.errors import BlowupError, ConfigError, DivergenceError, GridMismatchError
from critwave.fields import manufactured_control
from critwave.grid import make_grid
from critwave.norms import TimeGrid
from critwave.solver import (
    SolverParams,
    convergence_ladder,
    second_source,
    solve_adjoint,
    solve_forward,
    solve_linear_free,
    solve_linearized,
    solve_second,
    weak_residual,
)
from critwave.trajectory import ControlTrajectory


def test_params_validation():
    with pytest.raises(ConfigError) as e:
        SolverParams(filter="gauss")
    assert e.value.path == "physics.filter"
    with pytest.raises(ConfigError):
        SolverParams(power=4)
    assert SolverParams(nonlinear=False).active_power == 0


@pytest.mark.parametrize("n_t", [7, 64, 301])
def test_standing_wave_is_exact(n_t):
    grid = make_grid(1, math.pi, 64)
    tg = TimeGrid(2 * math.pi, n_t)
    xi0 = (sine(grid, 3), np.zeros(grid.shape))
    state = solve_linear_free(grid, tg, xi0, SolverParams())
    exact = np.cos(3 * tg.nodes)[:, None] * sine(grid, 3)[None, :]
    assert np.max(np.abs(state.physical - exact)) <= 1e-12
    vel = -3 * np.sin(3 * tg.nodes)[:, None] * sine(grid, 3)[None, :]
    assert np.max(np.abs(state.velocity - vel)) <= 3e-12


def test_manufactured_convergence_order():
    grid = make_grid(1, math.pi, 16)
    tg = TimeGrid(1.0, 100)
    xi0 = (np.zeros(grid.shape), sine(grid, 1))
    exact = math.sin(1.0) * sine(grid, 1)
    rows = convergence_ladder(
        grid, tg, lambda g: manufactured_control(grid, g, 5), xi0, SolverParams(), 3, exact
    )
    assert [r.n_t for r in rows] == [100, 200, 400]
    assert rows[0].error > rows[1].error > rows[2].error
    for r in rows[1:]:
        assert 1.8 <= r.order <= 2.2


def test_ladder_without_exact_solution(grid1):
    tg = TimeGrid(1.0, 20)
    xi0 = (sine(grid1, 1, 0.5), np.zeros(grid1.shape))
    rows = convergence_ladder(
        grid1, tg, lambda g: ControlTrajectory.zeros(grid1, g), xi0, SolverParams(), 3
    )
    assert len(rows) == 3
    assert math.isnan(rows[0].order)
    assert all(1.5 <= r.order <= 2.5 for r in rows[1:])


def test_blowup_threshold(grid1, tgrid1):
    xi0 = (sine(grid1, 1), np.zeros(grid1.shape))
    u = ControlTrajectory.zeros(grid1, tgrid1)
    with pytest.raises(BlowupError) as e:
        solve_forward(u, xi0, SolverParams(blowup_threshold=1e-6))
    assert e.value.exit_code == 3


def test_divergence_reports_last_valid_time(grid1, tgrid1):
    xi0 = (sine(grid1, 1, 1e80), np.zeros(grid1.shape))
    u = ControlTrajectory.zeros(grid1, tgrid1)
    with np.errstate(all="ignore"):
        with pytest.raises(DivergenceError) as e:
            solve_forward(u, xi0, SolverParams())
    assert e.value.time == 0.0


def test_initial_data_shape(grid1, tgrid1):
    u = ControlTrajectory.zeros(grid1, tgrid1)
    with pytest.raises(GridMismatchError):
        solve_forward(u, (np.zeros(5), np.zeros(grid1.shape)))


def test_linearized_matches_difference_quotient(nonlinear_problem, rng):
    p = nonlinear_problem
    u = p.control(0.3 * rng.standard_normal((p.tgrid.size,) + p.grid.shape))
    h = p.control(rng.standard_normal(u.u.shape))
    base = solve_forward(u, p.xi0, p.params)
    z = solve_linearized(base, h)
    eps = 1e-5
    plus = solve_forward(u.axpy(eps, h), p.xi0, p.params).physical
    minus = solve_forward(u.axpy(-eps, h), p.xi0, p.params).physical
    fd = (plus - minus) / (2 * eps)
    assert np.max(np.abs(z.physical - fd)) <= 1e-7 * (1 + np.max(np.abs(fd)))


def test_second_sensitivity_matches_difference_quotient(nonlinear_problem, rng):
    p = nonlinear_problem
    u = p.control(0.3 * rng.standard_normal((p.tgrid.size,) + p.grid.shape))
    h = p.control(rng.standard_normal(u.u.shape))
    eps = 1e-4
    z_plus = solve_linearized(solve_forward(u.axpy(eps, h), p.xi0, p.params), h)
    z_minus = solve_linearized(solve_forward(u.axpy(-eps, h), p.xi0, p.params), h)
    base = solve_forward(u, p.xi0, p.params)
    z = solve_linearized(base, h)
    w = solve_second(base, z, z)
    fd = (z_plus.physical - z_minus.physical) / (2 * eps)
    assert np.max(np.abs(w.physical - fd)) <= 1e-6 * (1 + np.max(np.abs(fd)))


def test_second_source_vanishes_without_nonlinearity(grid1, tgrid1, rng):
    params = SolverParams(nonlinear=False)
    u = ControlTrajectory(grid1, tgrid1, rng.standard_normal((tgrid1.size,) + grid1.shape))
    base = solve_forward(u, (np.zeros(grid1.shape),) * 2, params)
    z = solve_linearized(base, u)
    assert not np.any(second_source(base, z, z))


def test_duality_to_round_off(nonlinear_problem, rng):
    p = nonlinear_problem
    grid, tg = p.grid, p.tgrid
    base = p.state(p.zeros())
    terminal = rng.standard_normal(grid.shape)
    source = rng.standard_normal((tg.size,) + grid.shape)
    adj = solve_adjoint(base, terminal, source)
    assert np.allclose(adj.physical[-1], 0.0, atol=1e-15)
    for _ in range(3):
        v = p.control(rng.standard_normal((tg.size,) + grid.shape))
        z = solve_linearized(base, v)
        lhs = np.dot(tg.weights, grid.inner(v.u, adj.physical))
        rhs = grid.inner(z.final(), terminal) + np.dot(tg.weights, grid.inner(source, z.physical))
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_adjoint_source_shape(nonlinear_problem):
    base = nonlinear_problem.state(nonlinear_problem.zeros())
    with pytest.raises(GridMismatchError):
        solve_adjoint(base, np.zeros(base.grid.shape), np.zeros((3,) + base.grid.shape))


def test_weak_residual_of_manufactured_solution():
    grid = make_grid(1, math.pi, 16)
    tg = TimeGrid(1.0, 200)
    u = manufactured_control(grid, tg, 5)
    state = solve_forward(u, (np.zeros(grid.shape), sine(grid, 1)), SolverParams())
    w = math.pi / tg.T
    residual = weak_residual(
        state,
        u,
        lambda t: np.sin(w * t) ** 2,
        lambda t: 2 * w**2 * np.cos(2 * w * t),
        sine(grid, 1),
    )
    assert abs(residual) <= 1e-4


def test_state_is_read_only(nonlinear_problem):
    state = nonlinear_problem.state(nonlinear_problem.zeros())
    with pytest.raises(ValueError):
        state.y[0, 0] = 1.0
