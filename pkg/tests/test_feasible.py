import numpy as np
import pytest

from critwave.errors import ConfigError
from critwave.feasible import (
    ConstraintProfile,
    NodeSet,
    active_sets,
    critical_cone_test,
    project_uad,
    prox_composite,
    radial_scan_prox,
    tangent_cone_test,
)
from critwave.norms import TimeGrid
from critwave.trajectory import ControlTrajectory


def _random(grid, tgrid, rng, scale=1.0):
    return ControlTrajectory(grid, tgrid, scale * rng.standard_normal((tgrid.size,) + grid.shape))


def test_profile_validation(tgrid1):
    with pytest.raises(ConfigError) as e:
        ConstraintProfile(np.array([1.0, -0.5, 1.0]))
    assert e.value.path == "constraint.omega"
    assert "node 1" in e.value.message
    with pytest.raises(ConfigError):
        ConstraintProfile(np.array([1.0, np.inf]))
    with pytest.raises(ConfigError):
        ConstraintProfile.constant(TimeGrid(1.0, 3), 1.0).check(tgrid1)


def test_linear_decay(tgrid1):
    profile = ConstraintProfile.linear_decay(tgrid1, 2.0)
    assert profile.omega[0] == 2.0
    assert profile.omega[-1] == 0.0
    assert np.all(np.diff(profile.omega) < 0)


def test_csv_profile(tmp_path):
    tg = TimeGrid(1.0, 4)
    path = tmp_path / "omega.csv"
    rows = "\n".join(f"{t!r},{1 + t!r}" for t in tg.nodes)
    path.write_text("t,omega\n" + rows + "\n")
    profile = ConstraintProfile.from_csv(path, tg)
    assert np.allclose(profile.omega, 1 + tg.nodes)

    with pytest.raises(ConfigError) as e:
        ConstraintProfile.from_csv(path, TimeGrid(1.0, 5))
    assert e.value.path == "constraint.omega"

    other = tmp_path / "bad.csv"
    other.write_text("time,radius\n0,1\n")
    with pytest.raises(ConfigError):
        ConstraintProfile.from_csv(other, tg)


def test_projection(grid1, tgrid1, rng):
    profile = ConstraintProfile.constant(tgrid1, 1.0)
    u = _random(grid1, tgrid1, rng)
    proj = project_uad(u, profile)
    assert np.all(proj.slice_norms <= 1.0 + 1e-14)
    big = u.slice_norms > 1.0
    assert np.allclose(proj.slice_norms[big], 1.0)
    assert np.array_equal(proj.u[~big], u.u[~big])
    assert np.allclose(project_uad(proj, profile).u, proj.u, rtol=0, atol=1e-15)


def test_prox_with_zero_threshold_is_projection(grid1, tgrid1, rng):
    profile = ConstraintProfile(rng.uniform(0, 2, size=tgrid1.size))
    g = _random(grid1, tgrid1, rng, 2.0)
    assert np.array_equal(prox_composite(g, 0.0, profile).u, project_uad(g, profile).u)


def test_prox_matches_scan(grid1, tgrid1, rng):
    omega = rng.uniform(0, 2, size=tgrid1.size)
    omega[5] = 0.0
    profile = ConstraintProfile(omega)
    g = _random(grid1, tgrid1, rng, 1.5)
    tau = 0.7
    out = prox_composite(g, tau, profile)
    for gn, sn, om in zip(g.slice_norms, out.slice_norms, omega):
        s, _ = radial_scan_prox(gn, tau, om, 2001)
        assert abs(sn - s) <= om / 2000 + 1e-14
    # direction is kept on nonzero slices
    nz = out.slice_norms > 0
    cos = grid1.inner(out.u, g.u)[nz] / (out.slice_norms[nz] * g.slice_norms[nz])
    assert np.allclose(cos, 1.0)


def test_prox_rejects_negative_threshold(grid1, tgrid1, rng):
    with pytest.raises(ConfigError):
        prox_composite(_random(grid1, tgrid1, rng), -1.0, ConstraintProfile.constant(tgrid1, 1.0))


def test_active_sets(grid1, tgrid1, rng):
    omega = np.ones(tgrid1.size)
    omega[0] = 0.0
    profile = ConstraintProfile(omega)
    u = project_uad(_random(grid1, tgrid1, rng, 3.0), profile)
    u = u.scaled(np.where(np.arange(tgrid1.size) % 2 == 0, 1.0, 0.5))
    sets = active_sets(u, profile, 1e-10)
    labels = sets.labels()
    assert labels[0] == NodeSet.ZERO
    assert labels[2] == NodeSet.ACTIVE
    assert labels[1] == NodeSet.INACTIVE
    counts = sets.counts()
    assert sum(counts.values()) == tgrid1.size
    assert counts["A0"] == 1
    with pytest.raises(ConfigError) as e:
        active_sets(u, profile, 0.0)
    assert e.value.path == "audit.tol"


def test_tangent_cone(grid1, tgrid1, rng):
    omega = np.ones(tgrid1.size)
    omega[-1] = 0.0
    profile = ConstraintProfile(omega)
    u = project_uad(_random(grid1, tgrid1, rng, 3.0), profile)
    inward = u * -1.0
    assert tangent_cone_test(inward, u, profile, 1e-10).accepted

    outward = u.scaled(np.where(np.arange(tgrid1.size) == 4, 1.0, 0.0))
    report = tangent_cone_test(outward, u, profile, 1e-10)
    assert not report.accepted
    assert report.violations[0][0] == 4

    values = np.zeros_like(u.u)
    values[-1] = 1.0
    report = tangent_cone_test(u.like(values), u, profile, 1e-10)
    assert [v[0] for v in report.violations] == [tgrid1.size - 1]


def test_critical_cone_needs_zero_derivative(nonlinear_problem, rng):
    p = nonlinear_problem
    profile = ConstraintProfile.constant(p.tgrid, 1.0)
    u = p.zeros()
    grad = p.grad_F(u)
    g = grad.as_control()
    assert g.norm() > 0

    steepest = g * -1.0
    assert tangent_cone_test(steepest, u, profile, 1e-8).accepted
    report = critical_cone_test(steepest, u, profile, grad, 0.0, 1e-8)
    assert report.accepted is False
    assert [v[0] for v in report.violations] == [-1]
    assert report.violations[0][2] == pytest.approx(-g.dot(g))

    w = _random(p.grid, p.tgrid, rng)
    flat = w.axpy(-w.dot(g) / g.dot(g), g)
    assert critical_cone_test(flat, u, profile, grad, 0.0, 1e-8).accepted
