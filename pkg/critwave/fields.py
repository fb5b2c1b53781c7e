"""
Named fields used in run configurations.

A field spec is either `name`, `name:key=value,key=value` or a path to a `.npy`
file. Spatial specs give nodal values on the grid, control specs give one field
per time node (any spatial spec is also a control constant in time), and
constraint specs give the radii omega(t_j).
"""

import math
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError
from .feasible import ConstraintProfile
from .grid import SpaceGrid
from .norms import TimeGrid
from .trajectory import ControlTrajectory


def parse_spec(spec: str, path: str) -> tuple[str, dict[str, float]]:
    name, _, rest = spec.strip().partition(":")
    params: dict[str, float] = {}
    if rest:
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise ConfigError(path, f"expected key=value in '{spec}', got '{item}'")
            try:
                params[key.strip()] = float(value)
            except ValueError:
                raise ConfigError(path, f"'{value}' is not a number in '{spec}'") from None
    return name.strip().lower(), params


def _take(params: dict[str, float], key: str, default: float) -> float:
    return params.pop(key, default)


def _done(params: dict[str, float], name: str, path: str) -> None:
    if params:
        unknown = ", ".join(params)
        raise ConfigError(path, f"unknown parameters for '{name}': {unknown}")


# prod_i sin(k_i pi x_i / L_i)
def _mode(grid: SpaceGrid, k: tuple[int, ...]) -> np.ndarray:
    out = np.ones(grid.shape)
    for x, L, ki in zip(grid.coordinates(), grid.extents, k):
        out = out * np.sin(ki * np.pi * x / L)
    return out


def _mode_index(params: dict[str, float], grid: SpaceGrid) -> tuple[int, ...]:
    k = int(_take(params, "k", 1))
    return tuple(int(_take(params, f"k{i + 1}", k)) for i in range(grid.dim))


def _gaussian(grid: SpaceGrid, width: float) -> np.ndarray:
    r2 = np.zeros(grid.shape)
    for x, L in zip(grid.coordinates(), grid.extents):
        r2 = r2 + ((x - L / 2) / (width * L)) ** 2
    return np.exp(-r2)


# Smooth bump with support in the middle half of the box.
def _bump(grid: SpaceGrid) -> np.ndarray:
    out = np.ones(grid.shape)
    for x, L in zip(grid.coordinates(), grid.extents):
        s = np.clip((x - L / 4) / (L / 2), 0.0, 1.0)
        inside = (s > 0) & (s < 1)
        part = np.zeros_like(s)
        part[inside] = np.exp(1 - 1 / (1 - (2 * s[inside] - 1) ** 2))
        out = out * part
    return out


def _load_npy(spec: str, path: str) -> np.ndarray:
    try:
        return np.load(spec)
    except (OSError, ValueError) as e:
        raise ConfigError(path, f"cannot load '{spec}': {e}") from None


def spatial_field(spec: str, grid: SpaceGrid, path: str) -> np.ndarray:
    if spec.endswith(".npy"):
        values = np.asarray(_load_npy(spec, path), dtype=float)
        if values.shape != grid.shape:
            raise ConfigError(path, f"'{spec}' has shape {values.shape}, expected {grid.shape}")
        return values
    name, params = parse_spec(spec, path)
    amp = _take(params, "amp", 1.0)
    match name:
        case "zero":
            values = np.zeros(grid.shape)
        case "mode":
            values = amp * _mode(grid, _mode_index(params, grid))
        case "gaussian":
            values = amp * _gaussian(grid, _take(params, "width", 0.1))
        case "bump":
            values = amp * _bump(grid)
        case "manufactured_velocity":
            values = amp * _mode(grid, (1,) * grid.dim)
        case "manufactured_state":
            t = _take(params, "t", 0.0)
            values = amp * math.sin(t) * _mode(grid, (1,) * grid.dim)
        case _:
            raise ConfigError(
                path,
                f"unknown field '{name}'",
                "Use zero, mode, gaussian, bump, manufactured_velocity, "
                "manufactured_state or a .npy file.",
            )
    _done(params, name, path)
    return values


# Forcing of y*(t, x) = sin(t) prod_i sin(pi x_i / L_i):
# (lambda_1 - 1) y* + (y*)^p.
def manufactured_control(
    grid: SpaceGrid, tgrid: TimeGrid, power: int = 5
) -> ControlTrajectory:
    shape = _mode(grid, (1,) * grid.dim)
    lam1 = grid.eigenvalue((1,) * grid.dim)

    def fn(t: float, *_: np.ndarray) -> np.ndarray:
        y = math.sin(t) * shape
        return (lam1 - 1) * y + y**power

    return ControlTrajectory.from_function(grid, tgrid, fn)


def control_field(
    spec: str,
    grid: SpaceGrid,
    tgrid: TimeGrid,
    path: str,
    seed: int = 0,
) -> ControlTrajectory:
    if spec.endswith(".npy"):
        values = np.asarray(_load_npy(spec, path), dtype=float)
        if values.shape == grid.shape:
            values = np.broadcast_to(values, (tgrid.size,) + grid.shape)
        if values.shape != (tgrid.size,) + grid.shape:
            raise ConfigError(path, f"'{spec}' has shape {values.shape}")
        return ControlTrajectory(grid, tgrid, np.array(values))
    name, params = parse_spec(spec, path)
    match name:
        case "manufactured":
            power = int(_take(params, "power", 5))
            _done(params, name, path)
            return manufactured_control(grid, tgrid, power)
        case "random":
            amp = _take(params, "amp", 1.0)
            rng = np.random.default_rng(int(_take(params, "seed", seed)))
            _done(params, name, path)
            return ControlTrajectory(
                grid, tgrid, amp * rng.standard_normal((tgrid.size,) + grid.shape)
            )
        case "wave":
            # static field modulated by cos(freq t)
            freq = _take(params, "freq", 1.0)
            rest = ",".join(f"{k}={v!r}" for k, v in params.items())
            base = spatial_field("mode" + (f":{rest}" if rest else ""), grid, path)
            return ControlTrajectory.from_function(
                grid, tgrid, lambda t, *_: math.cos(freq * t) * base
            )
    values = spatial_field(spec, grid, path)
    return ControlTrajectory(grid, tgrid, np.broadcast_to(values, (tgrid.size,) + grid.shape))


def omega_profile(spec: str, tgrid: TimeGrid, path: str) -> ConstraintProfile:
    if spec.endswith(".csv"):
        return ConstraintProfile.from_csv(Path(spec), tgrid)
    name, params = parse_spec(spec, path)
    value = _take(params, "value", 1.0)
    _done(params, name, path)
    makers: dict[str, Callable[[TimeGrid, float], ConstraintProfile]] = {
        "constant": ConstraintProfile.constant,
        "linear_decay": ConstraintProfile.linear_decay,
    }
    if name not in makers:
        raise ConfigError(
            path, f"unknown profile '{name}'", "Use constant, linear_decay or a .csv file."
        )
    return makers[name](tgrid, value)


# Exact final state for the convergence ladder, if the spec names one.
def exact_final(spec: Optional[str], grid: SpaceGrid, tgrid: TimeGrid, path: str) -> Optional[np.ndarray]:
    if not spec:
        return None
    name, _ = parse_spec(spec, path)
    if name == "manufactured":
        return spatial_field(f"manufactured_state:t={tgrid.T!r}", grid, path)
    return spatial_field(spec, grid, path)
