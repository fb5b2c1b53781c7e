"""
Time-sampled states and controls.
"""

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Callable, Optional

import numpy as np

from .errors import GridMismatchError
from .grid import SpaceGrid
from .norms import TimeGrid, slice_norms

if TYPE_CHECKING:
    from .norms import MixedNormReport
    from .solver import SolverParams


def _frozen(values: np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr


# The pair xi_y = (y, y_t) at every time node, stored as sine coefficients.
@dataclass(eq=False)
class StateTrajectory:
    grid: SpaceGrid
    tgrid: TimeGrid
    y: np.ndarray
    yt: np.ndarray
    params: "SolverParams"
    report: Optional["MixedNormReport"] = None
    # Fine-grid potentials of this state, keyed by derivative order.
    _potentials: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        expect = (self.tgrid.size,) + self.grid.shape
        if self.y.shape != expect or self.yt.shape != expect:
            raise GridMismatchError(f"trajectory arrays must have shape {expect}")
        self.y = _frozen(self.y)
        self.yt = _frozen(self.yt)

    @cached_property
    def physical(self) -> np.ndarray:
        return _frozen(self.grid.synthesize(self.y))

    @cached_property
    def velocity(self) -> np.ndarray:
        return _frozen(self.grid.synthesize(self.yt))

    def final(self) -> np.ndarray:
        return self.physical[-1]


# Controls u(t_j, .) as nodal fields.
@dataclass(eq=False)
class ControlTrajectory:
    grid: SpaceGrid
    tgrid: TimeGrid
    u: np.ndarray

    def __post_init__(self):
        expect = (self.tgrid.size,) + self.grid.shape
        if self.u.shape != expect:
            raise GridMismatchError(f"control has shape {self.u.shape}, expected {expect}")
        self.u = _frozen(self.u)

    @classmethod
    def zeros(cls, grid: SpaceGrid, tgrid: TimeGrid) -> "ControlTrajectory":
        return cls(grid, tgrid, np.zeros((tgrid.size,) + grid.shape))

    @classmethod
    def from_function(
        cls, grid: SpaceGrid, tgrid: TimeGrid, fn: Callable[..., np.ndarray]
    ) -> "ControlTrajectory":
        coords = grid.coordinates()
        values = np.stack([np.broadcast_to(fn(t, *coords), grid.shape) for t in tgrid.nodes])
        return cls(grid, tgrid, values)

    def like(self, values: np.ndarray) -> "ControlTrajectory":
        return ControlTrajectory(self.grid, self.tgrid, values)

    @cached_property
    def slice_norms(self) -> np.ndarray:
        return _frozen(slice_norms(self.grid, self.u, 2))

    @cached_property
    def key(self) -> str:
        return hashlib.sha1(self.u.tobytes()).hexdigest()

    def _same(self, other: "ControlTrajectory") -> None:
        if self.grid != other.grid or self.tgrid != other.tgrid:
            raise GridMismatchError("controls live on different grids")

    # Inner product of L2(0,T;L2) with trapezoid weights in time.
    def dot(self, other: "ControlTrajectory") -> float:
        self._same(other)
        return float(np.dot(self.tgrid.weights, self.grid.inner(self.u, other.u)))

    def norm(self) -> float:
        return float(np.sqrt(max(self.dot(self), 0.0)))

    def l1_norm(self) -> float:
        return float(np.dot(self.tgrid.weights, self.slice_norms))

    def sup_norm(self) -> float:
        return float(np.max(self.slice_norms))

    def __add__(self, other: "ControlTrajectory") -> "ControlTrajectory":
        self._same(other)
        return self.like(self.u + other.u)

    def __sub__(self, other: "ControlTrajectory") -> "ControlTrajectory":
        self._same(other)
        return self.like(self.u - other.u)

    def __mul__(self, alpha: float) -> "ControlTrajectory":
        return self.like(alpha * self.u)

    __rmul__ = __mul__

    def __neg__(self) -> "ControlTrajectory":
        return self.like(-self.u)

    def axpy(self, alpha: float, other: "ControlTrajectory") -> "ControlTrajectory":
        self._same(other)
        return self.like(self.u + alpha * other.u)

    # Multiply every slice by a per-node scalar.
    def scaled(self, factors: np.ndarray) -> "ControlTrajectory":
        shape = (self.tgrid.size,) + (1,) * self.grid.dim
        return self.like(self.u * np.reshape(factors, shape))
