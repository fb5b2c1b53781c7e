"""
Mixed Lebesgue norms L^p(0,T;L^q), the energy functional and the Strichartz
monitor.

Spatial integrals use the uniform nodal rule of the sine grid, time integrals
the trapezoidal rule on the solver's time grid. Sup-norms in time are maxima
over the nodes and therefore lower bounds of the true supremum.
"""

import math
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Optional

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import ConfigError, GridMismatchError
from .grid import SpaceGrid

if TYPE_CHECKING:
    from .trajectory import ControlTrajectory, StateTrajectory


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n_t: int

    def __post_init__(self):
        if not math.isfinite(self.T) or self.T <= 0:
            raise ConfigError("time.T", f"must be positive, got {self.T}")
        if int(self.n_t) != self.n_t or self.n_t < 1:
            raise ConfigError("time.n_t", f"must be a positive integer, got {self.n_t}")

    @property
    def dt(self) -> float:
        return self.T / self.n_t

    @property
    def size(self) -> int:
        return self.n_t + 1

    @cached_property
    def nodes(self) -> np.ndarray:
        t = self.dt * np.arange(self.n_t + 1)
        t[-1] = self.T
        return t

    # Trapezoid weights: dt/2 at both ends, dt inside.
    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.n_t + 1, self.dt)
        w[0] = w[-1] = self.dt / 2
        return w

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.T, self.n_t * factor)


def _check_exponent(q: float, name: str) -> None:
    if not q >= 1:
        raise ConfigError(name, f"exponent must be in [1, inf], got {q}")


def slice_norms(grid: SpaceGrid, values: np.ndarray, q: float) -> np.ndarray:
    _check_exponent(q, "q")
    grid.check(values)
    a = np.abs(values)
    if math.isinf(q):
        return np.max(a, axis=grid.axes)
    return (grid.cell * np.sum(a**q, axis=grid.axes)) ** (1 / q)


def lq_norm(grid: SpaceGrid, values: np.ndarray, q: float) -> float:
    return float(slice_norms(grid, np.asarray(values, dtype=float), q))


# Time integral of per-node scalars with the trapezoid rule.
def integrate(tgrid: TimeGrid, samples: np.ndarray) -> float:
    if samples.shape[0] != tgrid.size:
        raise GridMismatchError(f"{samples.shape[0]} samples for {tgrid.size} time nodes")
    return float(np.dot(tgrid.weights, samples))


def time_norm(tgrid: TimeGrid, per_slice: np.ndarray, p: float) -> float:
    _check_exponent(p, "p")
    if per_slice.size == 0:
        raise ConfigError("", "empty trajectory")
    if math.isinf(p):
        return float(np.max(per_slice))
    return integrate(tgrid, per_slice**p) ** (1 / p)


def mixed_norm(
    grid: SpaceGrid, tgrid: TimeGrid, values: np.ndarray, p: float, q: float
) -> float:
    if values.size == 0:
        raise ConfigError("", "empty trajectory")
    return time_norm(tgrid, slice_norms(grid, values, q), p)


def potential_energy(grid: SpaceGrid, values: np.ndarray, power: int) -> np.ndarray:
    return slice_norms(grid, values, power + 1) ** (power + 1) / (power + 1)


# E_y(t_j) = 1/2 ||xi_y||_E^2 + 1/(p+1) ||y||^(p+1) - int_0^t <u, y_t>.
def energy(
    state: "StateTrajectory", control: "ControlTrajectory", power: Optional[int] = None
) -> np.ndarray:
    if state.grid != control.grid or state.tgrid != control.tgrid:
        raise GridMismatchError("state and control live on different grids")
    grid = state.grid
    if power is None:
        power = state.params.power if state.params.nonlinear else 0
    vel = grid.synthesize(state.yt)
    kinetic = grid.parseval * np.sum(state.yt**2, axis=grid.axes)
    quad = 0.5 * (kinetic + grid.gradient_energy(state.y))
    pot = potential_energy(grid, state.physical, power) if power else 0.0
    work = cumulative_trapezoid(
        grid.inner(control.u, vel), dx=state.tgrid.dt, initial=0.0
    )
    return quad + pot - work


@dataclass
class MixedNormReport:
    l4l12: float
    l5l10: float
    linf_l6: float
    l1l2: float
    e0: float
    energy_drift: float
    blowup: bool
    # (||xi_y||^2_{C(E)} + ||y||^6_{inf,6}) / E0
    apriori_ratio: float = 0.0
    # Growth lemma: premise eps < 2^-s C0^(1-s) and the resulting bound 2 C0.
    growth_premise: bool = False
    growth_bound: float = math.inf

    def interpolation_gap(self) -> float:
        return self.l4l12**4 * self.linf_l6 - self.l5l10**5

    def to_json(self) -> dict:
        return {
            "l4l12": self.l4l12,
            "l5l10": self.l5l10,
            "linf_l6": self.linf_l6,
            "l1l2": self.l1l2,
            "e0": self.e0,
            "energy_drift": self.energy_drift,
            "blowup": self.blowup,
            "apriori_ratio": self.apriori_ratio,
            "growth_premise": self.growth_premise,
            "growth_bound": self.growth_bound if math.isfinite(self.growth_bound) else None,
        }


GROWTH_SIGMA = 4


# If eps < 2^-sigma c0^(1-sigma), any f with f(a) = 0 and f <= c0 + eps f^sigma
# stays below 2 c0. Returns the bound, or None when the premise fails.
def growth_bound(c0: float, eps: float, sigma: float = GROWTH_SIGMA) -> Optional[float]:
    if c0 <= 0:
        return None
    if eps < 2.0**-sigma * c0 ** (1 - sigma):
        return 2 * c0
    return None


def strichartz_monitor(
    state: "StateTrajectory", control: "ControlTrajectory", threshold: float
) -> MixedNormReport:
    if not threshold > 0:
        raise ConfigError("physics.blowup_threshold", f"must be positive, got {threshold}")
    grid, tgrid = state.grid, state.tgrid
    y = state.physical
    with np.errstate(over="ignore", invalid="ignore"):
        l4l12 = mixed_norm(grid, tgrid, y, 4, 12)
        l5l10 = mixed_norm(grid, tgrid, y, 5, 10)
        l6 = slice_norms(grid, y, 6)
    linf_l6 = float(np.max(l6))
    l1l2 = control.l1_norm()

    xi_sq = grid.parseval * np.sum(state.yt**2, axis=grid.axes) + grid.gradient_energy(
        state.y
    )
    e0 = float(xi_sq[0] + l6[0] ** 6 + l1l2**2)

    pot_power = state.params.power if state.params.nonlinear else 0
    e = energy(state, control, pot_power)
    drift = float(np.max(np.abs(e - e[0])))
    if e[0] != 0:
        drift /= abs(float(e[0]))

    ratio = float((np.max(xi_sq) + linf_l6**6) / e0) if e0 > 0 else 0.0
    bound = growth_bound(math.sqrt(e0), linf_l6)

    blowup = not math.isfinite(l4l12) or l4l12 > threshold
    return MixedNormReport(
        l4l12=l4l12,
        l5l10=l5l10,
        linf_l6=linf_l6,
        l1l2=l1l2,
        e0=e0,
        energy_drift=drift,
        blowup=blowup,
        apriori_ratio=ratio,
        growth_premise=bound is not None,
        growth_bound=bound if bound is not None else math.inf,
    )
