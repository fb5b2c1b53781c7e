import math

import numpy as np
import pytest

from critwave.errors import ConfigError
from critwave.fields import (
    control_field,
    exact_final,
    manufactured_control,
    omega_profile,
    parse_spec,
    spatial_field,
)
from critwave.grid import make_grid
from critwave.norms import TimeGrid


def test_parse_spec():
    assert parse_spec("Mode:k=2, amp=0.5", "x") == ("mode", {"k": 2.0, "amp": 0.5})
    assert parse_spec("zero", "x") == ("zero", {})
    with pytest.raises(ConfigError):
        parse_spec("mode:k", "x")
    with pytest.raises(ConfigError) as e:
        parse_spec("mode:k=two", "initial.y0")
    assert e.value.path == "initial.y0"


def test_spatial_fields(grid1):
    (x,) = grid1.coordinates()
    assert not np.any(spatial_field("zero", grid1, "y0"))
    assert np.allclose(spatial_field("mode:k=3,amp=2", grid1, "y0"), 2 * np.sin(3 * x))
    g = spatial_field("gaussian:width=0.1", grid1, "y0")
    assert g.max() <= 1.0 and np.argmax(g) in (7, 8)
    bump = spatial_field("bump", grid1, "y0")
    assert np.all(bump >= 0)
    assert bump[0] == 0.0 and bump[-1] == 0.0


def test_mode_indices_per_axis():
    grid = make_grid(2, [math.pi, 2 * math.pi], [8, 8])
    x, y = grid.coordinates()
    values = spatial_field("mode:k1=2,k2=1", grid, "y0")
    assert np.allclose(values, np.sin(2 * x) * np.sin(y / 2))


def test_unknown_field(grid1):
    with pytest.raises(ConfigError) as e:
        spatial_field("sawtooth", grid1, "cost.y_d")
    assert e.value.path == "cost.y_d"
    assert e.value.tip
    with pytest.raises(ConfigError) as e:
        spatial_field("mode:width=2", grid1, "cost.y_d")
    assert "width" in e.value.message


def test_npy_fields(grid1, tmp_path):
    path = tmp_path / "f.npy"
    np.save(path, np.arange(16.0))
    assert np.array_equal(spatial_field(str(path), grid1, "y0"), np.arange(16.0))
    np.save(path, np.arange(5.0))
    with pytest.raises(ConfigError):
        spatial_field(str(path), grid1, "y0")
    with pytest.raises(ConfigError):
        spatial_field(str(tmp_path / "none.npy"), grid1, "y0")


def test_manufactured_control(grid1):
    tg = TimeGrid(1.0, 4)
    (x,) = grid1.coordinates()
    u = manufactured_control(grid1, tg)
    lam1 = grid1.eigenvalue((1,))
    for j, t in enumerate(tg.nodes):
        y = math.sin(t) * np.sin(x)
        assert np.allclose(u.u[j], (lam1 - 1) * y + y**5)
    assert not np.any(u.u[0])


def test_control_fields(grid1, tmp_path):
    tg = TimeGrid(2.0, 5)
    (x,) = grid1.coordinates()
    const = control_field("mode:k=2", grid1, tg, "control.u")
    assert np.allclose(const.u, np.sin(2 * x))

    wave = control_field("wave:freq=3,k=1", grid1, tg, "control.u")
    for j, t in enumerate(tg.nodes):
        assert np.allclose(wave.u[j], math.cos(3 * t) * np.sin(x))

    a = control_field("random:amp=0.5", grid1, tg, "control.u", seed=4)
    b = control_field("random:amp=0.5", grid1, tg, "control.u", seed=4)
    assert np.array_equal(a.u, b.u)

    path = tmp_path / "u.npy"
    np.save(path, np.ones((4,) + grid1.shape))
    with pytest.raises(ConfigError):
        control_field(str(path), grid1, tg, "control.u")


def test_omega_profiles(tgrid1, tmp_path):
    assert np.all(omega_profile("constant:value=2", tgrid1, "omega").omega == 2.0)
    decay = omega_profile("linear_decay", tgrid1, "omega").omega
    assert decay[0] == 1.0 and decay[-1] == 0.0
    with pytest.raises(ConfigError):
        omega_profile("wobble", tgrid1, "constraint.omega")
    with pytest.raises(ConfigError):
        omega_profile("constant:radius=1", tgrid1, "constraint.omega")


def test_exact_final(grid1):
    tg = TimeGrid(2.0, 10)
    (x,) = grid1.coordinates()
    assert exact_final("", grid1, tg, "run.exact") is None
    assert np.allclose(exact_final("manufactured", grid1, tg, "run.exact"), math.sin(2.0) * np.sin(x))
