"""
Box domains with homogeneous Dirichlet conditions, sine-spectral transforms and
the exact linear wave propagator.

Fields live either as nodal values on the interior grid points or as sine-series
coefficients. Arrays may carry leading batch axes (typically time); the
transforms always act on the trailing `dim` axes.
"""

from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property
from typing import Sequence, Union

import numpy as np
from scipy import fft

from .errors import ConfigError, GridMismatchError

DEFAULT_PADDING = 2


class FilterKind(StrEnum):
    # Plain trigonometric impulse step.
    NONE = "none"
    # Gautschi-type mollification with sinc(dt * sqrt(lambda)).
    SINC = "sinc"


@dataclass(frozen=True, eq=False)
class SpaceGrid:
    dim: int
    extents: tuple[float, ...]
    n: tuple[int, ...]
    # Zero-padding factor for products of fields.
    padding: int = DEFAULT_PADDING

    @property
    def key(self) -> tuple:
        return (self.dim, self.extents, self.n, self.padding)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpaceGrid):
            return NotImplemented
        return self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / (k + 1) for L, k in zip(self.extents, self.n))

    # Quadrature weight of a single node.
    @cached_property
    def cell(self) -> float:
        return float(np.prod(self.spacing))

    # <f, g>_h = parseval * sum(f_k g_k) for nodal fields f, g.
    @cached_property
    def parseval(self) -> float:
        return float(np.prod([L / 2 for L in self.extents]))

    @cached_property
    def fine_n(self) -> tuple[int, ...]:
        return tuple(self.padding * (k + 1) - 1 for k in self.n)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        parts = [
            (np.arange(1, k + 1) * np.pi / L) ** 2 for L, k in zip(self.extents, self.n)
        ]
        grids = np.meshgrid(*parts, indexing="ij")
        lam = np.sum(grids, axis=0)
        lam.flags.writeable = False
        return lam

    @cached_property
    def frequencies(self) -> np.ndarray:
        om = np.sqrt(self.eigenvalues)
        om.flags.writeable = False
        return om

    # Eigenvalue of a 1-based multi-index.
    def eigenvalue(self, k: Sequence[int]) -> float:
        idx = tuple(int(i) - 1 for i in k)
        return float(self.eigenvalues[idx])

    def coordinates(self) -> tuple[np.ndarray, ...]:
        axes = [
            np.arange(1, k + 1) * h for k, h in zip(self.n, self.spacing)
        ]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def fine_coordinates(self) -> tuple[np.ndarray, ...]:
        axes = [
            np.arange(1, m + 1) * L / (m + 1) for m, L in zip(self.fine_n, self.extents)
        ]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def check(self, values: np.ndarray, what: str = "field") -> None:
        if values.ndim < self.dim or values.shape[values.ndim - self.dim :] != self.shape:
            raise GridMismatchError(
                f"{what} has shape {values.shape}, grid expects trailing {self.shape}"
            )

    # Nodal values -> sine coefficients.
    def analyze(self, values: np.ndarray) -> np.ndarray:
        self.check(values)
        scale = float(np.prod([k + 1 for k in self.n]))
        return fft.dstn(values, type=1, axes=self.axes) / scale

    # Sine coefficients -> nodal values.
    def synthesize(self, coeffs: np.ndarray) -> np.ndarray:
        self.check(coeffs, "coefficients")
        return fft.dstn(coeffs, type=1, axes=self.axes) / 2**self.dim

    # Evaluate a coefficient array on the padded grid.
    def prolong(self, coeffs: np.ndarray) -> np.ndarray:
        self.check(coeffs, "coefficients")
        batch = coeffs.shape[: coeffs.ndim - self.dim]
        padded = np.zeros(batch + self.fine_n)
        padded[(...,) + tuple(slice(0, k) for k in self.n)] = coeffs
        return fft.dstn(padded, type=1, axes=self.axes) / 2**self.dim

    # Project values on the padded grid back onto the retained modes.
    def restrict(self, fine: np.ndarray) -> np.ndarray:
        scale = float(np.prod([m + 1 for m in self.fine_n]))
        coeffs = fft.dstn(fine, type=1, axes=self.axes) / scale
        return coeffs[(...,) + tuple(slice(0, k) for k in self.n)]

    def inner(self, f: np.ndarray, g: np.ndarray) -> Union[float, np.ndarray]:
        res = self.cell * np.sum(f * g, axis=self.axes)
        return float(res) if np.ndim(res) == 0 else res

    def norm(self, f: np.ndarray) -> Union[float, np.ndarray]:
        return np.sqrt(self.inner(f, f))

    # ||grad y||^2 from the coefficients of y.
    def gradient_energy(self, coeffs: np.ndarray) -> Union[float, np.ndarray]:
        res = self.parseval * np.sum(self.eigenvalues * coeffs**2, axis=self.axes)
        return float(res) if np.ndim(res) == 0 else res

    def filter_weights(self, dt: float, kind: FilterKind) -> np.ndarray:
        match FilterKind(kind):
            case FilterKind.SINC:
                return np.sinc(dt * self.frequencies / np.pi)
            case _:
                return np.ones(self.shape)


@dataclass(frozen=True, eq=False)
class SpectralField:
    coefficients: np.ndarray
    grid: SpaceGrid

    def __post_init__(self):
        if self.coefficients.shape != self.grid.shape:
            raise GridMismatchError(
                f"{self.coefficients.shape} coefficients for {self.grid.shape} modes"
            )

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.coefficients + other.coefficients, self.grid)

    def __mul__(self, alpha: float) -> "SpectralField":
        return SpectralField(alpha * self.coefficients, self.grid)

    __rmul__ = __mul__


def _per_axis(value, dim: int, path: str) -> tuple:
    if np.ndim(value) == 0:
        return (value,) * dim
    value = tuple(value)
    if len(value) != dim:
        raise ConfigError(path, f"expected {dim} entries, got {len(value)}")
    return value


def make_grid(
    dim: int,
    extents: Union[float, Sequence[float]],
    n: Union[int, Sequence[int]],
    padding: int = DEFAULT_PADDING,
) -> SpaceGrid:
    if dim not in (1, 2, 3):
        raise ConfigError("grid.dim", f"must be 1, 2 or 3, got {dim}")
    ext = tuple(float(L) for L in _per_axis(extents, dim, "grid.extents"))
    if any(not np.isfinite(L) or L <= 0 for L in ext):
        raise ConfigError("grid.extents", f"all extents must be positive, got {ext}")
    nodes = _per_axis(n, dim, "grid.n")
    if any(int(k) != k or k < 2 for k in nodes):
        raise ConfigError("grid.n", f"need at least 2 nodes per axis, got {nodes}")
    if int(padding) != padding or padding < 1:
        raise ConfigError("grid.padding", f"must be an integer >= 1, got {padding}")
    return SpaceGrid(dim, ext, tuple(int(k) for k in nodes), int(padding))


def to_spectral(grid: SpaceGrid, values: np.ndarray) -> SpectralField:
    return SpectralField(grid.analyze(np.asarray(values, dtype=float)), grid)


def to_physical(spec: SpectralField) -> np.ndarray:
    return spec.grid.synthesize(spec.coefficients)


# The exact group e^{A dt} acting on (y, v) coefficient pairs.
@dataclass(frozen=True, eq=False)
class Propagator:
    grid: SpaceGrid
    dt: float
    _cos: np.ndarray = field(init=False, repr=False)
    _sin_over: np.ndarray = field(init=False, repr=False)
    _sin_times: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        om = self.grid.frequencies
        s = np.sin(om * self.dt)
        object.__setattr__(self, "_cos", np.cos(om * self.dt))
        object.__setattr__(self, "_sin_over", s / om)
        object.__setattr__(self, "_sin_times", om * s)

    def __call__(self, y: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return (
            self._cos * y + self._sin_over * v,
            -self._sin_times * y + self._cos * v,
        )


def linear_propagate(
    y: SpectralField, v: SpectralField, dt: float
) -> tuple[SpectralField, SpectralField]:
    if y.grid != v.grid:
        raise GridMismatchError("state pair lives on different grids")
    if not np.isfinite(dt):
        raise ConfigError("dt", f"must be finite, got {dt}")
    yn, vn = Propagator(y.grid, dt)(y.coefficients, v.coefficients)
    return SpectralField(yn, y.grid), SpectralField(vn, y.grid)


def check_power(p: int) -> int:
    if int(p) != p or p < 1 or p % 2 == 0:
        raise ConfigError("physics.power", f"must be an odd integer >= 1, got {p}")
    return int(p)


# P_n((E c)^p): the dealiased power of a coefficient array.
def power_coefficients(grid: SpaceGrid, coeffs: np.ndarray, p: int) -> np.ndarray:
    return grid.restrict(grid.prolong(coeffs) ** p)


def nonlinear_apply(grid: SpaceGrid, values: np.ndarray, p: int = 5) -> np.ndarray:
    p = check_power(p)
    coeffs = grid.analyze(np.asarray(values, dtype=float))
    return grid.synthesize(power_coefficients(grid, coeffs, p))
