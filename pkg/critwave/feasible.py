"""
The admissible set U_ad = {v : ||v(t)||_{L2} <= omega(t)}, its projection, the
proximal map of step * beta1 ||.||_{L1(L2)} + indicator(U_ad), and tests for the
tangent and critical cones.

Both maps act radially on each time slice. The trapezoid weight of a node
scales the metric and the l1 term alike, so the per-node threshold is simply
step * beta1.
"""

from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError
from .norms import TimeGrid
from .objective import GradientField, j_dir
from .trajectory import ControlTrajectory

# Relative tolerance when matching CSV times against the time grid.
CSV_TIME_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ConstraintProfile:
    omega: np.ndarray

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float)
        if omega.ndim != 1:
            raise ConfigError("constraint.omega", "must be one radius per time node")
        if not np.all(np.isfinite(omega)):
            raise ConfigError("constraint.omega", "radii must be finite")
        if np.any(omega < 0):
            node = int(np.argmax(omega < 0))
            raise ConfigError(
                "constraint.omega", f"negative radius {omega[node]} at node {node}"
            )
        omega.flags.writeable = False
        object.__setattr__(self, "omega", omega)

    @classmethod
    def constant(cls, tgrid: TimeGrid, value: float) -> "ConstraintProfile":
        return cls(np.full(tgrid.size, float(value)))

    # Radius decaying linearly to 0 at T.
    @classmethod
    def linear_decay(cls, tgrid: TimeGrid, value: float) -> "ConstraintProfile":
        return cls(float(value) * (1 - tgrid.nodes / tgrid.T))

    # Radii from a CSV file with columns `t` and `omega`, one row per time node.
    @classmethod
    def from_csv(cls, path: Path, tgrid: TimeGrid) -> "ConstraintProfile":
        try:
            data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
        except OSError as e:
            raise ConfigError("constraint.omega", f"cannot read {path}: {e}") from None
        names = data.dtype.names or ()
        if "t" not in names or "omega" not in names:
            raise ConfigError(
                "constraint.omega", f"{path} must have the columns t, omega"
            )
        t = np.atleast_1d(data["t"])
        if t.shape != tgrid.nodes.shape or not np.allclose(
            t, tgrid.nodes, rtol=0, atol=CSV_TIME_TOL * tgrid.T
        ):
            raise ConfigError(
                "constraint.omega",
                f"{path} has {t.size} rows that do not match the {tgrid.size} time nodes",
                "Radii are not interpolated; write one row per node.",
            )
        return cls(np.atleast_1d(data["omega"]))

    def check(self, tgrid: TimeGrid) -> None:
        if self.omega.shape != (tgrid.size,):
            raise ConfigError(
                "constraint.omega",
                f"{self.omega.size} radii for {tgrid.size} time nodes",
            )


# Scale every slice of g to norm clip(||g|| - tau, 0, omega). Zero slices stay
# zero.
def _shrink(g: ControlTrajectory, tau: float, profile: ConstraintProfile) -> ControlTrajectory:
    profile.check(g.tgrid)
    norms = g.slice_norms
    target = np.clip(norms - tau, 0.0, profile.omega)
    factors = np.zeros_like(norms)
    nz = norms > 0
    factors[nz] = target[nz] / norms[nz]
    return g.scaled(factors)


def project_uad(g: ControlTrajectory, profile: ConstraintProfile) -> ControlTrajectory:
    return _shrink(g, 0.0, profile)


def prox_composite(
    g: ControlTrajectory, tau: float, profile: ConstraintProfile
) -> ControlTrajectory:
    if not tau >= 0:
        raise ConfigError("", f"prox threshold must be >= 0, got {tau}")
    return _shrink(g, tau, profile)


# Brute-force minimizer of 1/2 (s - norm_g)^2 + tau s over a uniform grid of
# [0, omega]. Returns (s, objective).
def radial_scan_prox(
    norm_g: float, tau: float, omega: float, points: int = 200
) -> tuple[float, float]:
    s = np.linspace(0.0, omega, points)
    obj = 0.5 * (s - norm_g) ** 2 + tau * s
    k = int(np.argmin(obj))
    return float(s[k]), float(obj[k])


class NodeSet(StrEnum):
    INACTIVE = "I"
    ACTIVE = "A+"
    ZERO = "A0"


@dataclass
class ActiveSets:
    inactive: np.ndarray
    active: np.ndarray
    zero: np.ndarray

    def labels(self) -> list[NodeSet]:
        out = []
        for i, a in zip(self.inactive, self.active):
            out.append(NodeSet.INACTIVE if i else NodeSet.ACTIVE if a else NodeSet.ZERO)
        return out

    def counts(self) -> dict[str, int]:
        return {
            NodeSet.INACTIVE.value: int(np.sum(self.inactive)),
            NodeSet.ACTIVE.value: int(np.sum(self.active)),
            NodeSet.ZERO.value: int(np.sum(self.zero)),
        }


def active_sets(u: ControlTrajectory, profile: ConstraintProfile, tol: float) -> ActiveSets:
    if not tol > 0:
        raise ConfigError("audit.tol", f"must be positive, got {tol}")
    profile.check(u.tgrid)
    omega = profile.omega
    zero = omega == 0
    active = (np.abs(u.slice_norms - omega) <= tol * (1 + omega)) & ~zero
    inactive = ~(zero | active)
    return ActiveSets(inactive, active, zero)


@dataclass
class ConeReport:
    accepted: bool
    # (node, reason, value)
    violations: list[tuple[int, str, float]] = field(default_factory=list)


def tangent_cone_test(
    v: ControlTrajectory,
    u: ControlTrajectory,
    profile: ConstraintProfile,
    tol: float,
    sets: Optional[ActiveSets] = None,
) -> ConeReport:
    if sets is None:
        sets = active_sets(u, profile, tol)
    violations = []
    uv = u.grid.inner(u.u, v.u)
    for j in np.flatnonzero(sets.active):
        if uv[j] > tol:
            violations.append((int(j), "<v, u> > 0 on A+", float(uv[j])))
    vn = v.slice_norms
    for j in np.flatnonzero(sets.zero):
        if vn[j] > tol:
            violations.append((int(j), "v != 0 on A0", float(vn[j])))
    return ConeReport(not violations, violations)


# Tangent directions with F'(u)v + beta1 j'(u; v) = 0 within tol (1 + ||v||).
def critical_cone_test(
    v: ControlTrajectory,
    u: ControlTrajectory,
    profile: ConstraintProfile,
    grad: GradientField,
    beta1: float,
    tol: float,
    sets: Optional[ActiveSets] = None,
) -> ConeReport:
    report = tangent_cone_test(v, u, profile, tol, sets)
    derivative = grad.dot(v) + beta1 * j_dir(u, v)
    if abs(derivative) > tol * (1 + v.norm()):
        report.violations.append((-1, "F'(u)v + beta1 j'(u; v) != 0", derivative))
        report.accepted = False
    return report
