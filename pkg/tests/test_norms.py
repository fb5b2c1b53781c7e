import json
import math

import numpy as np
import pytest

from conftest import sine
from critwave.errors import ConfigError
from critwave.grid import make_grid
from critwave.norms import (
    MixedNormReport,
    TimeGrid,
    energy,
    growth_bound,
    lq_norm,
    mixed_norm,
    slice_norms,
)
from critwave.solver import SolverParams, solve_forward, solve_linear_free
from critwave.trajectory import ControlTrajectory


@pytest.mark.parametrize("T, n_t, path", [(1.0, 0, "time.n_t"), (0.0, 10, "time.T"), (1.0, 2.5, "time.n_t")])
def test_time_grid_rejects(T, n_t, path):
    with pytest.raises(ConfigError) as e:
        TimeGrid(T, n_t)
    assert e.value.path == path


def test_time_grid_nodes_and_weights():
    tg = TimeGrid(3.0, 7)
    assert tg.nodes[0] == 0.0 and tg.nodes[-1] == 3.0
    assert tg.nodes.size == 8
    assert np.sum(tg.weights) == pytest.approx(3.0)
    assert tg.refined(4).n_t == 28


def test_lq_norm_of_constant():
    grid = make_grid(1, math.pi, 31)
    ones = np.ones(grid.shape)
    assert lq_norm(grid, ones, 2) == pytest.approx(math.sqrt(math.pi * 31 / 32))
    assert lq_norm(grid, ones, math.inf) == 1.0


def test_exponent_below_one():
    grid = make_grid(1, 1.0, 4)
    with pytest.raises(ConfigError):
        slice_norms(grid, np.ones((2, 4)), 0.5)


def test_mixed_norm_separable(grid1):
    tg = TimeGrid(2.0, 20)
    f = sine(grid1, 1)
    a = np.linspace(0.0, 1.0, tg.size)
    values = a[:, None] * f[None, :]
    q_part = lq_norm(grid1, f, 12)
    expect = float(np.dot(tg.weights, a**4)) ** 0.25 * q_part
    assert mixed_norm(grid1, tg, values, 4, 12) == pytest.approx(expect, rel=1e-13)
    const = np.broadcast_to(f, (tg.size,) + grid1.shape)
    assert mixed_norm(grid1, tg, const, 4, 12) == pytest.approx(2.0**0.25 * q_part)
    assert mixed_norm(grid1, tg, const, math.inf, 6) == pytest.approx(lq_norm(grid1, f, 6))


def test_growth_bound():
    assert growth_bound(1.0, 0.01) == 2.0
    assert growth_bound(1.0, 0.1) is None
    assert growth_bound(0.0, 0.0) is None


def test_linear_energy_is_conserved(grid1):
    tg = TimeGrid(3.0, 30)
    xi0 = (sine(grid1, 1) + 0.3 * sine(grid1, 4), sine(grid1, 2))
    state = solve_linear_free(grid1, tg, xi0)
    e = energy(state, ControlTrajectory.zeros(grid1, tg))
    assert np.max(np.abs(e - e[0])) <= 1e-13 * e[0]


def test_monitor_report(grid1, tgrid1):
    xi0 = (sine(grid1, 1, 0.5), sine(grid1, 2, 0.2))
    u = ControlTrajectory.from_function(
        grid1, tgrid1, lambda t, x: math.cos(t) * np.sin(3 * x)
    )
    state = solve_forward(u, xi0, SolverParams())
    report = state.report
    assert not report.blowup
    assert set(report.to_json()) == {
        "l4l12", "l5l10", "linf_l6", "l1l2", "e0", "energy_drift", "blowup",
        "apriori_ratio", "growth_premise", "growth_bound",
    }
    assert report.l1l2 == pytest.approx(u.l1_norm())
    assert report.e0 > 0
    assert report.apriori_ratio > 0
    # Hoelder interpolation between L4(L12) and Linf(L6)
    assert report.l5l10**5 <= report.l4l12**4 * report.linf_l6 + 1e-10
    assert report.interpolation_gap() >= -1e-10


def test_report_json_keeps_growth_fields():
    report = MixedNormReport(1.0, 1.0, 1.0, 0.0, 2.0, 0.0, False, apriori_ratio=1.5)
    data = report.to_json()
    assert data["apriori_ratio"] == 1.5
    assert data["growth_premise"] is False
    assert data["growth_bound"] is None
    json.dumps(data, allow_nan=False)

    report.growth_premise, report.growth_bound = True, 4.0
    assert report.to_json()["growth_bound"] == 4.0
