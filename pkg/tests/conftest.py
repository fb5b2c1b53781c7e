import math
from types import SimpleNamespace

import numpy as np
import pytest
from scipy import linalg

import critwave.cli as cli
from critwave.feasible import ConstraintProfile
from critwave.grid import make_grid
from critwave.norms import TimeGrid
from critwave.objective import CostParams, Problem
from critwave.solver import SolverParams, solve_forward
from critwave.trajectory import ControlTrajectory


@pytest.fixture(autouse=True)
def quiet():
    cli.set_quiet(True)
    yield
    cli.set_quiet(False)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid1():
    return make_grid(1, math.pi, 16)


@pytest.fixture
def tgrid1():
    return TimeGrid(1.0, 40)


def sine(grid, k=1, amp=1.0):
    (x,) = grid.coordinates()
    return amp * np.sin(k * x)


@pytest.fixture
def nonlinear_problem(grid1, tgrid1):
    xi0 = (sine(grid1, 1, 0.5), np.zeros(grid1.shape))
    cost = CostParams(gamma=0.1, beta2=1e-2, y_d=sine(grid1, 2, 0.2))
    return Problem(grid1, tgrid1, xi0, cost, SolverParams())


# Linear-quadratic case: no nonlinearity, gamma = beta1 = 0, a radius that never
# binds. F is then a quadratic whose minimizer solves the normal equations
# (B^T H B + beta2 W) x = B^T H y_d, with B the control-to-final-state matrix,
# H the spatial and W the space-time quadrature weights.
@pytest.fixture(scope="session")
def quadratic_case():
    grid = make_grid(1, math.pi, 16)
    tgrid = TimeGrid(1.0, 50)
    params = SolverParams(nonlinear=False)
    (x,) = grid.coordinates()
    y_d = 0.1 * np.sin(x) + 0.05 * np.sin(2 * x)
    beta2 = 0.1
    zero = np.zeros(grid.shape)
    problem = Problem(
        grid, tgrid, (zero, zero), CostParams(beta2=beta2, y_d=y_d), params
    )

    size = tgrid.size * grid.n[0]
    B = np.empty((grid.n[0], size))
    for col in range(size):
        e = np.zeros(size)
        e[col] = 1.0
        u = ControlTrajectory(grid, tgrid, e.reshape(tgrid.size, grid.n[0]))
        B[:, col] = solve_forward(u, (zero, zero), params).final()

    H = grid.cell * np.eye(grid.n[0])
    W = np.diag(np.repeat(tgrid.weights, grid.n[0]) * grid.cell)
    hessian = B.T @ H @ B + beta2 * W
    x_star = linalg.solve(hessian, B.T @ H @ y_d, assume_a="pos")
    lams, vecs = linalg.eigh(hessian, W, subset_by_index=[0, 0])

    return SimpleNamespace(
        grid=grid,
        tgrid=tgrid,
        problem=problem,
        profile=ConstraintProfile.constant(tgrid, 1e3),
        u_star=ControlTrajectory(grid, tgrid, x_star.reshape(tgrid.size, grid.n[0])),
        lam_min=float(lams[0]),
        v_min=ControlTrajectory(grid, tgrid, vecs[:, 0].reshape(tgrid.size, grid.n[0])),
        beta2=beta2,
    )
