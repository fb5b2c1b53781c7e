"""
On-disk formats.

Trajectories are a fixed binary header followed by little-endian float64 values,
slice-major (all fields of t_0, then all fields of t_1, ...), next to a JSON
sidecar with the grid metadata. Reports are JSON, iterate logs CSV.
"""

import hashlib
import json
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError
from .grid import SpaceGrid, make_grid
from .norms import TimeGrid
from .trajectory import ControlTrajectory, StateTrajectory
from .version import VERSION_STR

MAGIC = b"CRITWAVE"

HEADER = np.dtype(
    [
        ("magic", "S8"),
        ("dim", "<i4"),
        ("n", "<i4", (3,)),
        ("n_t", "<i4"),
        ("fields", "<i4"),
        ("T", "<f8"),
    ]
)

PAYLOAD = np.dtype("<f8")


def sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def write_json(path: Path, data: Any) -> None:
    path.write_text(json.dumps(data, indent=2) + "\n")


def read_json(path: Path) -> Any:
    return json.loads(path.read_text())


def save_trajectory(
    path: Path,
    grid: SpaceGrid,
    tgrid: TimeGrid,
    arrays: dict[str, np.ndarray],
) -> None:
    names = list(arrays)
    stacked = np.stack([arrays[k] for k in names], axis=1)
    expect = (tgrid.size, len(names)) + grid.shape
    if stacked.shape != expect:
        raise ConfigError("", f"trajectory has shape {stacked.shape}, expected {expect}")

    header = np.zeros((), dtype=HEADER)
    header["magic"] = MAGIC
    header["dim"] = grid.dim
    header["n"] = list(grid.n) + [1] * (3 - grid.dim)
    header["n_t"] = tgrid.n_t
    header["fields"] = len(names)
    header["T"] = tgrid.T
    with path.open("wb") as f:
        f.write(header.tobytes())
        f.write(stacked.astype(PAYLOAD).tobytes())

    write_json(
        sidecar_path(path),
        {
            "format": "critwave-trajectory",
            "version": VERSION_STR,
            "dim": grid.dim,
            "extents": list(grid.extents),
            "n": list(grid.n),
            "padding": grid.padding,
            "n_t": tgrid.n_t,
            "T": tgrid.T,
            "fields": names,
            "layout": "slice-major, little-endian float64",
        },
    )


@dataclass
class StoredTrajectory:
    grid: SpaceGrid
    tgrid: TimeGrid
    arrays: dict[str, np.ndarray] = field(default_factory=dict)


def load_trajectory(path: Path) -> StoredTrajectory:
    try:
        meta = read_json(sidecar_path(path))
        raw = path.read_bytes()
    except OSError as e:
        raise ConfigError("", f"cannot read trajectory {path}: {e}") from None

    header = np.frombuffer(raw[: HEADER.itemsize], dtype=HEADER)
    if header.size != 1 or header[0]["magic"] != MAGIC:
        raise ConfigError("", f"{path} is not a trajectory file")
    header = header[0]
    dim = int(header["dim"])
    n = tuple(int(k) for k in header["n"][:dim])
    if dim != meta["dim"] or n != tuple(meta["n"]) or int(header["n_t"]) != meta["n_t"]:
        raise ConfigError("", f"{path} does not match its sidecar")

    grid = make_grid(dim, meta["extents"], n, meta.get("padding", 2))
    tgrid = TimeGrid(float(header["T"]), int(header["n_t"]))
    names = meta["fields"]
    payload = np.frombuffer(raw[HEADER.itemsize :], dtype=PAYLOAD)
    shape = (tgrid.size, len(names)) + grid.shape
    if payload.size != int(np.prod(shape)):
        raise ConfigError("", f"{path} is truncated")
    data = payload.reshape(shape).astype(float)
    return StoredTrajectory(grid, tgrid, {k: data[:, i] for i, k in enumerate(names)})


def save_state(path: Path, state: StateTrajectory) -> None:
    save_trajectory(
        path, state.grid, state.tgrid, {"y": state.physical, "y_t": state.velocity}
    )


def save_control(path: Path, u: ControlTrajectory) -> None:
    save_trajectory(path, u.grid, u.tgrid, {"u": u.u})


def load_control(path: Path) -> ControlTrajectory:
    stored = load_trajectory(path)
    if "u" not in stored.arrays:
        raise ConfigError("audit.control", f"{path} holds no control")
    return ControlTrajectory(stored.grid, stored.tgrid, stored.arrays["u"])


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    config_hash: str
    version: str
    wall_clock: float
    platform: str = field(default_factory=platform.system)
    # (file name, size in bytes, sha256)
    inventory: list[tuple[str, int, str]] = field(default_factory=list)

    def add(self, path: Path, root: Path) -> None:
        self.inventory.append(
            (path.relative_to(root).as_posix(), path.stat().st_size, sha256_file(path))
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "config_hash": self.config_hash,
            "version": self.version,
            "wall_clock": self.wall_clock,
            "platform": self.platform,
            "inventory": [
                {"name": n, "size": s, "sha256": h} for n, s, h in self.inventory
            ],
        }
