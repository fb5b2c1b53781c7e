"""
The smooth part F of the reduced cost, the sparsity functional j and their
derivatives.

    F(u) = 1/2 ||y_u(T) - y_d||^2 + gamma Psi_{p,q}(y_u) + beta2/2 ||u||^2
    j(u) = ||u||_{L1(L2)}
    l_r(u) = F(u) + beta1 j(u)

With (p, q) = (4, 12) the penalty is gamma/4 ||y||^4_{L4(L12)}. Gradients are
Riesz representers in the control inner product sum_j w_j <u_j, v_j>.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .calculus import (
    Psi_pq,
    Psi_pq_gradient,
    Psi_pq_prime,
    Psi_pq_second_bilinear,
    check_pq,
)
from .errors import ConfigError
from .grid import SpaceGrid
from .norms import TimeGrid
from .solver import (
    SolverParams,
    solve_adjoint,
    solve_forward,
    solve_linearized,
    solve_second,
    second_source,
)
from .trajectory import ControlTrajectory, StateTrajectory

# Default cap on the j'' integrand before it is reported as +inf.
J_SECOND_CAP = 1e12


@dataclass
class CostParams:
    gamma: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0
    # Target state at T as nodal values; None means y_d = 0.
    y_d: Optional[np.ndarray] = field(default=None, repr=False)
    p_norm: float = 4
    q_norm: float = 12

    def __post_init__(self):
        for name in ("gamma", "beta1", "beta2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ConfigError(f"cost.{name}", f"must be finite and >= 0, got {value}")
        check_pq(self.p_norm, self.q_norm)

    def target(self, grid: SpaceGrid) -> np.ndarray:
        if self.y_d is None:
            return np.zeros(grid.shape)
        y_d = np.asarray(self.y_d, dtype=float)
        grid.check(y_d, "cost.y_d")
        return y_d


# p(t_j) + beta2 u(t_j) as nodal fields.
@dataclass
class GradientField:
    grid: SpaceGrid
    tgrid: TimeGrid
    values: np.ndarray
    adjoint: StateTrajectory = field(repr=False)

    def as_control(self) -> ControlTrajectory:
        return ControlTrajectory(self.grid, self.tgrid, self.values)

    def dot(self, h: ControlTrajectory) -> float:
        return self.as_control().dot(h)


# Slice norm below which u(t) counts as zero.
def zero_tolerance(u: ControlTrajectory) -> float:
    return 1e-12 * (1 + u.sup_norm())


def psi(state: StateTrajectory, p: float = 4, q: float = 12) -> np.ndarray:
    return Psi_pq_gradient(state.grid, state.physical, p, q)


def eval_j(u: ControlTrajectory) -> float:
    return u.l1_norm()


def j_dir(u: ControlTrajectory, v: ControlTrajectory) -> float:
    nu = u.slice_norms
    zero = nu <= zero_tolerance(u)
    uv = u.grid.inner(u.u, v.u)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(zero, v.slice_norms, uv / nu)
    return float(np.dot(u.tgrid.weights, integrand))


# Formal second derivative of j in direction v; +inf once an integrand sample
# exceeds `cap`.
def j_second(
    u: ControlTrajectory, v: ControlTrajectory, cap: float = J_SECOND_CAP
) -> float:
    nu = u.slice_norms
    nz = nu > zero_tolerance(u)
    if not np.any(nz):
        return 0.0
    uv = u.grid.inner(u.u, v.u)[nz]
    vv = v.slice_norms[nz] ** 2
    integrand = np.zeros_like(nu)
    integrand[nz] = np.maximum(vv - (uv / nu[nz]) ** 2, 0.0) / nu[nz]
    if np.max(integrand) > cap:
        return math.inf
    return float(np.dot(u.tgrid.weights, integrand))


# One forward solve and what is derived from it.
@dataclass(eq=False)
class Evaluation:
    key: str
    control: ControlTrajectory
    state: StateTrajectory
    adjoint: Optional[StateTrajectory] = None


class Problem:
    grid: SpaceGrid
    tgrid: TimeGrid
    xi0: tuple[np.ndarray, np.ndarray]
    cost: CostParams
    params: SolverParams

    _last: Optional[Evaluation]

    def __init__(
        self,
        grid: SpaceGrid,
        tgrid: TimeGrid,
        xi0: tuple[np.ndarray, np.ndarray],
        cost: CostParams,
        params: SolverParams = SolverParams(),
    ):
        self.grid = grid
        self.tgrid = tgrid
        self.xi0 = tuple(np.asarray(x, dtype=float) for x in xi0)
        for x, what in zip(self.xi0, ("initial.y0", "initial.y1")):
            grid.check(x, what)
        self.cost = cost
        self.params = params
        self._y_d = cost.target(grid)
        self._last = None

    def zeros(self) -> ControlTrajectory:
        return ControlTrajectory.zeros(self.grid, self.tgrid)

    def control(self, values: np.ndarray) -> ControlTrajectory:
        return ControlTrajectory(self.grid, self.tgrid, values)

    def evaluate(self, u: ControlTrajectory) -> Evaluation:
        if u.grid != self.grid or u.tgrid != self.tgrid:
            raise ConfigError("", "control lives on a different grid than the problem")
        if self._last is not None and self._last.key == u.key:
            return self._last
        state = solve_forward(u, self.xi0, self.params)
        self._last = Evaluation(u.key, u, state)
        return self._last

    def state(self, u: ControlTrajectory) -> StateTrajectory:
        return self.evaluate(u).state

    def residual(self, state: StateTrajectory) -> np.ndarray:
        return state.final() - self._y_d

    def _penalty(self, state: StateTrajectory) -> float:
        if self.cost.gamma == 0:
            return 0.0
        return Psi_pq(
            self.grid, self.tgrid, state.physical, self.cost.p_norm, self.cost.q_norm
        )

    def psi(self, u: ControlTrajectory) -> np.ndarray:
        return psi(self.state(u), self.cost.p_norm, self.cost.q_norm)

    def eval_F(self, u: ControlTrajectory) -> float:
        state = self.state(u)
        r = self.residual(state)
        value = 0.5 * self.grid.inner(r, r) + self.cost.gamma * self._penalty(state)
        if self.cost.beta2:
            value += 0.5 * self.cost.beta2 * u.dot(u)
        return float(value)

    def eval_lr(self, u: ControlTrajectory) -> float:
        value = self.eval_F(u)
        if self.cost.beta1:
            value += self.cost.beta1 * eval_j(u)
        return value

    def cost_breakdown(self, u: ControlTrajectory) -> dict[str, float]:
        state = self.state(u)
        r = self.residual(state)
        parts = {
            "tracking": 0.5 * float(self.grid.inner(r, r)),
            "strichartz_penalty": self.cost.gamma * self._penalty(state),
            "l1_term": self.cost.beta1 * eval_j(u),
            "l2_term": 0.5 * self.cost.beta2 * u.dot(u),
        }
        parts["total"] = sum(parts.values())
        return parts

    def adjoint(self, u: ControlTrajectory) -> StateTrajectory:
        ev = self.evaluate(u)
        if ev.adjoint is None:
            source = None
            if self.cost.gamma:
                source = self.cost.gamma * psi(ev.state, self.cost.p_norm, self.cost.q_norm)
            ev.adjoint = solve_adjoint(ev.state, self.residual(ev.state), source)
        return ev.adjoint

    def grad_F(self, u: ControlTrajectory) -> GradientField:
        adj = self.adjoint(u)
        values = adj.physical + self.cost.beta2 * u.u
        return GradientField(self.grid, self.tgrid, values, adj)

    # F'(u)h through the linearized state, without the adjoint.
    def grad_F_via_sensitivity(self, u: ControlTrajectory, h: ControlTrajectory) -> float:
        state = self.state(u)
        z = solve_linearized(state, h)
        value = float(self.grid.inner(self.residual(state), z.final()))
        if self.cost.gamma:
            value += self.cost.gamma * Psi_pq_prime(
                self.grid, self.tgrid, state.physical, z.physical,
                self.cost.p_norm, self.cost.q_norm,
            )
        return value + self.cost.beta2 * u.dot(h)

    def _psi_second(self, state, z1, z2) -> float:
        if not self.cost.gamma:
            return 0.0
        return self.cost.gamma * Psi_pq_second_bilinear(
            self.grid, self.tgrid, state.physical, z1.physical, z2.physical,
            self.cost.p_norm, self.cost.q_norm,
        )

    def F_second_bilinear(
        self, u: ControlTrajectory, v1: ControlTrajectory, v2: ControlTrajectory
    ) -> float:
        state = self.state(u)
        adj = self.adjoint(u)
        z1 = solve_linearized(state, v1)
        z2 = z1 if v2 is v1 else solve_linearized(state, v2)
        value = float(self.grid.inner(z1.final(), z2.final()))
        src = self.grid.synthesize(second_source(state, z1, z2))
        value += float(np.dot(self.tgrid.weights, self.grid.inner(adj.physical, src)))
        value += self._psi_second(state, z1, z2)
        return value + self.cost.beta2 * v1.dot(v2)

    def F_second(self, u: ControlTrajectory, v: ControlTrajectory) -> float:
        return self.F_second_bilinear(u, v, v)

    # F''(u)v^2 through the second-order sensitivity S''(u)(v, v).
    def F_second_via_sensitivity(self, u: ControlTrajectory, v: ControlTrajectory) -> float:
        state = self.state(u)
        z = solve_linearized(state, v)
        w = solve_second(state, z, z)
        value = float(self.grid.inner(z.final(), z.final()))
        value += float(self.grid.inner(self.residual(state), w.final()))
        value += self._psi_second(state, z, z)
        if self.cost.gamma:
            value += self.cost.gamma * Psi_pq_prime(
                self.grid, self.tgrid, state.physical, w.physical,
                self.cost.p_norm, self.cost.q_norm,
            )
        return value + self.cost.beta2 * v.dot(v)

