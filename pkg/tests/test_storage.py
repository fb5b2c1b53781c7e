import hashlib

import numpy as np
import pytest

from conftest import sine
from critwave.errors import ConfigError
from critwave.solver import solve_forward
from critwave.storage import (
    HEADER,
    MAGIC,
    RunManifest,
    load_control,
    load_trajectory,
    read_json,
    save_control,
    save_state,
    save_trajectory,
    sidecar_path,
)
from critwave.trajectory import ControlTrajectory


def test_state_file(grid1, tgrid1, tmp_path):
    u = ControlTrajectory.zeros(grid1, tgrid1)
    state = solve_forward(u, (sine(grid1, 1, 0.5), np.zeros(grid1.shape)))
    path = tmp_path / "state.bin"
    save_state(path, state)

    raw = path.read_bytes()
    assert raw[:8] == MAGIC
    assert len(raw) == HEADER.itemsize + 8 * 2 * tgrid1.size * 16
    meta = read_json(sidecar_path(path))
    assert meta["fields"] == ["y", "y_t"]
    assert meta["n"] == [16] and meta["n_t"] == tgrid1.n_t

    stored = load_trajectory(path)
    assert stored.tgrid.T == tgrid1.T and stored.tgrid.n_t == tgrid1.n_t
    assert stored.grid.shape == grid1.shape
    assert np.array_equal(stored.arrays["y"], state.physical)
    assert np.array_equal(stored.arrays["y_t"], state.velocity)


def test_payload_is_slice_major(grid1, tgrid1, tmp_path):
    values = np.arange(tgrid1.size * 16, dtype=float).reshape(tgrid1.size, 16)
    path = tmp_path / "control.bin"
    save_control(path, ControlTrajectory(grid1, tgrid1, values))
    payload = np.frombuffer(path.read_bytes()[HEADER.itemsize :], dtype="<f8")
    assert np.array_equal(payload, values.ravel())
    assert np.array_equal(load_control(path).u, values)


def test_rejects_bad_files(grid1, tgrid1, tmp_path):
    path = tmp_path / "control.bin"
    save_control(path, ControlTrajectory.zeros(grid1, tgrid1))
    raw = bytearray(path.read_bytes())

    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"NOTAWAVE" + bytes(raw[8:]))
    sidecar_path(bad).write_text(sidecar_path(path).read_text())
    with pytest.raises(ConfigError) as e:
        load_trajectory(bad)
    assert "not a trajectory" in e.value.message

    short = tmp_path / "short.bin"
    short.write_bytes(bytes(raw[:-8]))
    sidecar_path(short).write_text(sidecar_path(path).read_text())
    with pytest.raises(ConfigError) as e:
        load_trajectory(short)
    assert "truncated" in e.value.message

    other = tmp_path / "other.bin"
    other.write_bytes(bytes(raw))
    sidecar_path(other).write_text(sidecar_path(path).read_text().replace('"n_t": 40', '"n_t": 41'))
    with pytest.raises(ConfigError) as e:
        load_trajectory(other)
    assert "sidecar" in e.value.message

    with pytest.raises(ConfigError):
        load_trajectory(tmp_path / "missing.bin")


def test_shape_mismatch_on_save(grid1, tgrid1, tmp_path):
    with pytest.raises(ConfigError):
        save_trajectory(tmp_path / "x.bin", grid1, tgrid1, {"u": np.zeros((3, 16))})


def test_state_file_is_not_a_control(grid1, tgrid1, tmp_path):
    state = solve_forward(ControlTrajectory.zeros(grid1, tgrid1), (sine(grid1), np.zeros(16)))
    path = tmp_path / "state.bin"
    save_state(path, state)
    with pytest.raises(ConfigError) as e:
        load_control(path)
    assert e.value.path == "audit.control"


def test_manifest(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    (out / "a.json").write_text("{}\n")
    manifest = RunManifest("abc", "1.0", 0.5)
    manifest.add(out / "a.json", out)
    data = manifest.to_json()
    assert data["config_hash"] == "abc"
    assert data["platform"]
    entry = data["inventory"][0]
    assert entry["name"] == "a.json"
    assert entry["size"] == 3
    assert entry["sha256"] == hashlib.sha256(b"{}\n").hexdigest()
