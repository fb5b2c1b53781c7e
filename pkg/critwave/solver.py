"""
Time integration of the state, linearized, second-order sensitivity and adjoint
equations.

All solves share one trigonometric impulse step: a half kick with the force at
t_j, the exact propagation e^{A dt}, and a half kick with the force at t_{j+1}.
The nonlinear force is `Phi P((E Phi y)^p)` where `Phi` is the Gautschi filter,
`E` the evaluation on the padded grid and `P` the projection back onto the
retained modes. The linearized and second-order solves differentiate exactly this
step, and the adjoint is its transpose, which is the same step run backward in
time. Discrete gradients are therefore exact up to round-off.
"""

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

import critwave.cli as cli

from .errors import BlowupError, ConfigError, DivergenceError, GridMismatchError
from .grid import FilterKind, Propagator, SpaceGrid, check_power, power_coefficients
from .norms import TimeGrid, strichartz_monitor
from .trajectory import ControlTrajectory, StateTrajectory

DEFAULT_BLOWUP_THRESHOLD = 1e6


@dataclass(frozen=True)
class SolverParams:
    power: int = 5
    nonlinear: bool = True
    filter: FilterKind = FilterKind.SINC
    # Strichartz norm ||y||_{L4(L12)} above which a solve is declared blown up.
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD
    # Warn when the growth-lemma premise holds but the Strichartz norm exceeds the
    # resulting bound by this factor.
    growth_factor: float = 10.0

    def __post_init__(self):
        check_power(self.power)
        try:
            object.__setattr__(self, "filter", FilterKind(self.filter))
        except ValueError:
            kinds = ", ".join(k.value for k in FilterKind)
            raise ConfigError(
                "physics.filter", f"unknown filter '{self.filter}'", f"Use one of: {kinds}"
            ) from None
        if not self.blowup_threshold > 0:
            raise ConfigError("physics.blowup_threshold", "must be positive")

    @property
    def active_power(self) -> int:
        return self.power if self.nonlinear else 0


Force = Callable[[int, np.ndarray], np.ndarray]


# One pass of the impulse scheme. `force(j, y)` is the velocity forcing at node
# j; the stored velocity at a node sits between its two half kicks. Backward
# passes start at the last node.
def _integrate(
    grid: SpaceGrid,
    tgrid: TimeGrid,
    y0: np.ndarray,
    v0: np.ndarray,
    force: Force,
    backward: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    dt = -tgrid.dt if backward else tgrid.dt
    prop = Propagator(grid, dt)
    nodes = list(range(tgrid.n_t, -1, -1) if backward else range(tgrid.n_t + 1))

    ys = np.empty((tgrid.size,) + grid.shape)
    vs = np.empty((tgrid.size,) + grid.shape)
    y, v = y0, v0
    f = force(nodes[0], y)
    ys[nodes[0]], vs[nodes[0]] = y, v
    for prev, j in zip(nodes, nodes[1:]):
        v = v + 0.5 * dt * f
        y, v = prop(y, v)
        f = force(j, y)
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(f))):
            raise DivergenceError(
                float(tgrid.nodes[prev]),
                "state became non-finite",
                "Reduce the time step or the size of the data.",
            )
        v = v + 0.5 * dt * f
        ys[j], vs[j] = y, v
    return ys, vs


def _filter(grid: SpaceGrid, tgrid: TimeGrid, params: SolverParams) -> np.ndarray:
    return grid.filter_weights(tgrid.dt, params.filter)


def _same_grids(state: StateTrajectory, grid: SpaceGrid, tgrid: TimeGrid) -> None:
    if state.grid != grid or state.tgrid != tgrid:
        raise GridMismatchError("inputs live on different grids than the base state")


def solve_forward(
    u: ControlTrajectory,
    xi0: tuple[np.ndarray, np.ndarray],
    params: SolverParams = SolverParams(),
) -> StateTrajectory:
    grid, tgrid = u.grid, u.tgrid
    y0, y1 = (np.asarray(x, dtype=float) for x in xi0)
    grid.check(y0, "y0")
    grid.check(y1, "y1")

    src = grid.analyze(u.u)
    phi = _filter(grid, tgrid, params)

    def force(j: int, y: np.ndarray) -> np.ndarray:
        if not params.nonlinear:
            return src[j]
        return src[j] - phi * power_coefficients(grid, phi * y, params.power)

    ys, vs = _integrate(grid, tgrid, grid.analyze(y0), grid.analyze(y1), force)
    state = StateTrajectory(grid, tgrid, ys, vs, params)

    report = strichartz_monitor(state, u, params.blowup_threshold)
    state.report = report
    if report.blowup:
        raise BlowupError(
            tgrid.T,
            f"Strichartz norm {report.l4l12:.6g} exceeds {params.blowup_threshold:.6g}",
            "Feasible controls give global solutions; refine dt or n.",
        )
    if report.growth_premise and report.l4l12 > params.growth_factor * report.growth_bound:
        cli.warn(
            f"||y||_L4L12 = {report.l4l12:.4g} exceeds {params.growth_factor:g} x "
            f"growth bound {report.growth_bound:.4g}",
            "The time step may be too coarse for this data.",
        )
    return state


# Free linear wave from xi0: no control, nonlinearity switched off.
def solve_linear_free(
    grid: SpaceGrid,
    tgrid: TimeGrid,
    xi0: tuple[np.ndarray, np.ndarray],
    params: SolverParams = SolverParams(),
) -> StateTrajectory:
    free = replace(params, nonlinear=False)
    return solve_forward(ControlTrajectory.zeros(grid, tgrid), xi0, free)


# Fine-grid weights p y^(p-1) (order 1) or p (p-1) y^(p-2) (order 2) of the
# filtered base state.
def _potential(state: StateTrajectory, order: int) -> np.ndarray:
    if order in state._potentials:
        return state._potentials[order]
    p = state.params.power
    phi = _filter(state.grid, state.tgrid, state.params)
    yf = state.grid.prolong(phi * state.y)
    if order == 1:
        pot = p * yf ** (p - 1)
    else:
        pot = p * (p - 1) * yf ** (p - 2)
    state._potentials[order] = pot
    return pot


# Solve z_tt - Lap z + V(ybar) z = source with the base state's step, where
# `src` holds source coefficients per node.
def _sensitivity(
    ybar: StateTrajectory,
    src: np.ndarray,
    v0: Optional[np.ndarray] = None,
    backward: bool = False,
) -> StateTrajectory:
    grid, tgrid, params = ybar.grid, ybar.tgrid, ybar.params
    phi = _filter(grid, tgrid, params)
    pot = _potential(ybar, 1) if params.nonlinear else None

    def force(j: int, z: np.ndarray) -> np.ndarray:
        if pot is None:
            return src[j]
        return src[j] - phi * grid.restrict(pot[j] * grid.prolong(phi * z))

    zero = np.zeros(grid.shape)
    zs, zvs = _integrate(
        grid, tgrid, zero, zero if v0 is None else v0, force, backward=backward
    )
    return StateTrajectory(grid, tgrid, zs, zvs, params)


def solve_linearized(ybar: StateTrajectory, h: ControlTrajectory) -> StateTrajectory:
    _same_grids(ybar, h.grid, h.tgrid)
    return _sensitivity(ybar, ybar.grid.analyze(h.u))


# Coefficients of the second-order source -Phi P(p (p-1) ybar^(p-2) z1 z2).
def second_source(
    ybar: StateTrajectory, z1: StateTrajectory, z2: StateTrajectory
) -> np.ndarray:
    for z in (z1, z2):
        _same_grids(ybar, z.grid, z.tgrid)
    grid, params = ybar.grid, ybar.params
    if not params.nonlinear or params.power == 1:
        return np.zeros((ybar.tgrid.size,) + grid.shape)
    phi = _filter(grid, ybar.tgrid, params)
    pot2 = _potential(ybar, 2)
    return -phi * grid.restrict(
        pot2 * grid.prolong(phi * z1.y) * grid.prolong(phi * z2.y)
    )


def solve_second(
    ybar: StateTrajectory, z1: StateTrajectory, z2: StateTrajectory
) -> StateTrajectory:
    return _sensitivity(ybar, second_source(ybar, z1, z2))


# Backward problem p_tt - Lap p + V(ybar) p = source, p(T) = 0,
# p_t(T) = -terminal_v. Returned as a trajectory with `y` = p and `yt` = p_t.
def solve_adjoint(
    ybar: StateTrajectory,
    terminal_v: np.ndarray,
    source: Optional[np.ndarray] = None,
) -> StateTrajectory:
    grid, tgrid = ybar.grid, ybar.tgrid
    terminal_v = np.asarray(terminal_v, dtype=float)
    grid.check(terminal_v, "terminal data")
    if source is None:
        src = np.zeros((tgrid.size,) + grid.shape)
    else:
        source = np.asarray(source, dtype=float)
        if source.shape != (tgrid.size,) + grid.shape:
            raise GridMismatchError(f"adjoint source has shape {source.shape}")
        src = grid.analyze(source)
    return _sensitivity(ybar, src, v0=-grid.analyze(terminal_v), backward=True)


@dataclass
class LadderRow:
    n_t: int
    dt: float
    error: float
    order: float = math.nan


# Final-time errors under dt halving. Without an exact solution the error of a
# level is its distance to the next finer level.
def convergence_ladder(
    grid: SpaceGrid,
    tgrid: TimeGrid,
    control: Callable[[TimeGrid], ControlTrajectory],
    xi0: tuple[np.ndarray, np.ndarray],
    params: SolverParams,
    levels: int = 3,
    exact: Optional[np.ndarray] = None,
) -> list[LadderRow]:
    grids = [TimeGrid(tgrid.T, tgrid.n_t * 2**k) for k in range(levels)]
    if exact is None:
        grids.append(TimeGrid(tgrid.T, tgrid.n_t * 2**levels))
    finals = []
    for tg in grids:
        cli.progress(f"  ladder n_t = {tg.n_t}")
        finals.append(solve_forward(control(tg), xi0, params).final())

    rows = []
    for k in range(levels):
        ref = exact if exact is not None else finals[k + 1]
        err = float(grid.norm(finals[k] - ref))
        rows.append(LadderRow(grids[k].n_t, grids[k].dt, err))
    for prev, row in zip(rows, rows[1:]):
        if prev.error > 0 and row.error > 0:
            row.order = math.log2(prev.error / row.error)
    return rows


# Discrete residual of the weak form
#   int int y theta'' chi + <grad y, grad chi> theta + y^p theta chi - u theta chi
# for phi(t, x) = theta(t) chi(x) with theta compactly supported in (0, T).
def weak_residual(
    state: StateTrajectory,
    u: ControlTrajectory,
    theta: Callable[[np.ndarray], np.ndarray],
    theta_tt: Callable[[np.ndarray], np.ndarray],
    chi: np.ndarray,
) -> float:
    grid, tgrid = state.grid, state.tgrid
    _same_grids(state, u.grid, u.tgrid)
    t = tgrid.nodes
    chi_hat = grid.analyze(chi)
    y = state.physical
    stiff = grid.parseval * np.sum(
        grid.eigenvalues * state.y * chi_hat, axis=grid.axes
    )
    p = state.params.active_power
    nonlin = grid.inner(y**p, chi) if p else 0.0
    integrand = (
        theta_tt(t) * grid.inner(y, chi)
        + theta(t) * (stiff + nonlin - grid.inner(u.u, chi))
    )
    return float(np.dot(tgrid.weights, integrand))
