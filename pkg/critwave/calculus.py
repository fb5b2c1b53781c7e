"""
Derivatives of Lebesgue norms and of powers of mixed norms.

`Upsilon_q(f) = ||f||_{L^q}` is smooth away from f = 0. Its powers
`Psi_{p,q}(y) = 1/p ||y||^p_{L^p(L^q)}` are differentiable everywhere for p > 2,
with slices where ||y(t)|| vanishes contributing nothing.

Functions here take fields with a leading batch axis (time slices) and return
one value per slice unless they integrate in time.
"""

import numpy as np

from .errors import ConfigError, SingularityError
from .grid import SpaceGrid
from .norms import TimeGrid, slice_norms


def upsilon_q(grid: SpaceGrid, f: np.ndarray, q: float = 2) -> np.ndarray:
    return slice_norms(grid, f, q)


# (Upsilon_2'(f)h, Upsilon_2''(f)h^2, Upsilon_2'''(f)h^3). Batched over leading
# axes; every slice of f must be nonzero.
def upsilon2_derivs(
    grid: SpaceGrid, f: np.ndarray, h: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    nf = np.asarray(grid.norm(f))
    if np.any(nf == 0):
        raise SingularityError(
            "||f|| = 0: the norm is not differentiable there",
            "Restrict the evaluation to slices with nonzero norm.",
        )
    fh = np.asarray(grid.inner(f, h))
    hh = np.asarray(grid.inner(h, h))
    radial = fh / nf
    # ||h||^2 - <f, h>^2 / ||f||^2, clipped at round-off
    tangential = np.maximum(hh - radial**2, 0.0)
    d1 = radial
    d2 = tangential / nf
    d3 = -3.0 * radial * tangential / nf**2
    return d1, d2, d3


def check_pq(p: float, q: float) -> None:
    if not q >= 2:
        raise ConfigError("cost.q_norm", f"must be >= 2, got {q}")
    if not (p > 2 or (p == 2 and q == 2)):
        raise ConfigError(
            "cost.p_norm",
            f"must be > 2 unless p = q = 2, got p = {p}, q = {q}",
            "Psi_{p,q} is not twice differentiable at zero slices otherwise.",
        )


# Coefficients (a, b) of Psi'' = a * (...) + b * (...): the cross term and the
# pointwise term.
def psi_second_coefficients(p: float, q: float) -> tuple[float, float]:
    return (p - q, q - 1)


def _pow_norm(norms: np.ndarray, e: float) -> np.ndarray:
    if e == 0:
        return np.ones_like(norms)
    out = np.zeros_like(norms)
    nz = norms > 0
    out[nz] = norms[nz] ** e
    return out


def _broadcast(grid: SpaceGrid, per_slice: np.ndarray) -> np.ndarray:
    return per_slice.reshape(per_slice.shape + (1,) * grid.dim)


# |y|^(q-2) y
def _duality_field(y: np.ndarray, q: float) -> np.ndarray:
    return np.abs(y) ** (q - 2) * y


def Psi_pq(grid: SpaceGrid, tgrid: TimeGrid, y: np.ndarray, p: float, q: float) -> float:
    check_pq(p, q)
    norms = slice_norms(grid, y, q)
    return float(np.dot(tgrid.weights, norms**p)) / p


# L2 gradient of Psi_{p,q} per slice: ||y||^(p-q) |y|^(q-2) y, zero on zero
# slices.
def Psi_pq_gradient(grid: SpaceGrid, y: np.ndarray, p: float, q: float) -> np.ndarray:
    check_pq(p, q)
    norms = slice_norms(grid, y, q)
    return _broadcast(grid, _pow_norm(norms, p - q)) * _duality_field(y, q)


def Psi_pq_prime(
    grid: SpaceGrid, tgrid: TimeGrid, y: np.ndarray, h: np.ndarray, p: float, q: float
) -> float:
    g = Psi_pq_gradient(grid, y, p, q)
    return float(np.dot(tgrid.weights, grid.inner(g, h)))


def Psi_pq_second_bilinear(
    grid: SpaceGrid,
    tgrid: TimeGrid,
    y: np.ndarray,
    h1: np.ndarray,
    h2: np.ndarray,
    p: float,
    q: float,
) -> float:
    check_pq(p, q)
    a, b = psi_second_coefficients(p, q)
    norms = slice_norms(grid, y, q)
    dual = _duality_field(y, q)
    cross = _pow_norm(norms, p - 2 * q) * grid.inner(dual, h1) * grid.inner(dual, h2)
    point = _pow_norm(norms, p - q) * grid.inner(np.abs(y) ** (q - 2), h1 * h2)
    return float(np.dot(tgrid.weights, a * cross + b * point))


def Psi_pq_second(
    grid: SpaceGrid, tgrid: TimeGrid, y: np.ndarray, h: np.ndarray, p: float, q: float
) -> float:
    return Psi_pq_second_bilinear(grid, tgrid, y, h, h, p, q)


# min over theta in [0, 1] of ||f + theta h|| per slice.
def segment_min_norm(grid: SpaceGrid, f: np.ndarray, h: np.ndarray) -> np.ndarray:
    ff = np.asarray(grid.inner(f, f))
    fh = np.asarray(grid.inner(f, h))
    hh = np.asarray(grid.inner(h, h))
    with np.errstate(divide="ignore", invalid="ignore"):
        theta = np.where(hh > 0, np.clip(-fh / hh, 0.0, 1.0), 0.0)
    return np.sqrt(np.maximum(ff + 2 * theta * fh + theta**2 * hh, 0.0))

