"""
Numerical self-checks: each compares a computed quantity against an
independent oracle (finite differences, refinement ladders, brute-force scans)
and reports the measured error next to its tolerance.
"""

import math
from dataclasses import dataclass
from enum import StrEnum
from typing import Any

import numpy as np

import critwave.cli as cli

from .calculus import Psi_pq, Psi_pq_prime, Psi_pq_second, psi_second_coefficients
from .feasible import ConstraintProfile, project_uad, prox_composite, radial_scan_prox
from .grid import SpaceGrid
from .kkt import taylor_norm_checks
from .norms import TimeGrid, energy
from .objective import Problem
from .solver import SolverParams, solve_adjoint, solve_forward, solve_linearized
from .trajectory import ControlTrajectory


class CheckKind(StrEnum):
    GRADIENT = "gradient"
    ENERGY = "energy"
    PROX = "prox"
    DUALITY = "duality"
    PSI = "psi"
    TAYLOR = "taylor"


@dataclass
class CheckResult:
    name: str
    measured: float
    tolerance: float
    passed: bool
    detail: str = ""

    def to_json(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "measured": self.measured if math.isfinite(self.measured) else None,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "detail": self.detail,
        }


# Smooth random field made of the lowest `modes` sine modes per axis.
def smooth_field(
    grid: SpaceGrid, rng: np.random.Generator, batch: tuple[int, ...] = (), modes: int = 4
) -> np.ndarray:
    coeffs = np.zeros(batch + grid.shape)
    low = tuple(slice(0, min(modes, k)) for k in grid.n)
    shape = batch + tuple(min(modes, k) for k in grid.n)
    coeffs[(...,) + low] = rng.standard_normal(shape)
    return grid.synthesize(coeffs)


def smooth_control(
    grid: SpaceGrid, tgrid: TimeGrid, rng: np.random.Generator, amp: float = 1.0
) -> ControlTrajectory:
    return ControlTrajectory(grid, tgrid, amp * smooth_field(grid, rng, (tgrid.size,)))


GRADIENT_TOL = 1e-4


def check_gradient(
    problem: Problem,
    u: ControlTrajectory,
    rng: np.random.Generator,
    directions: int = 10,
    epsilon: float = 1e-4,
) -> CheckResult:
    grad = problem.grad_F(u)
    worst = 0.0
    for _ in range(directions):
        h = smooth_control(problem.grid, problem.tgrid, rng)
        adj = grad.dot(h)
        fd = (problem.eval_F(u.axpy(epsilon, h)) - problem.eval_F(u.axpy(-epsilon, h))) / (
            2 * epsilon
        )
        worst = max(worst, abs(adj - fd) / max(1.0, abs(fd)))
    return CheckResult(
        CheckKind.GRADIENT, worst, GRADIENT_TOL, worst <= GRADIENT_TOL,
        f"{directions} directions, epsilon {epsilon:g}",
    )


@dataclass
class EnergyRow:
    n_t: int
    drift: float
    order: float = math.nan


# Relative energy drift of an uncontrolled run under dt halving.
def energy_ladder(
    grid: SpaceGrid,
    tgrid: TimeGrid,
    xi0: tuple[np.ndarray, np.ndarray],
    params: SolverParams,
    levels: int = 3,
) -> list[EnergyRow]:
    rows = []
    for k in range(levels):
        tg = tgrid.refined(2**k)
        u = ControlTrajectory.zeros(grid, tg)
        state = solve_forward(u, xi0, params)
        e = energy(state, u)
        drift = float(np.max(np.abs(e - e[0])) / abs(e[0])) if e[0] else 0.0
        cli.progress(f"  energy n_t = {tg.n_t}: drift {drift:.3e}")
        rows.append(EnergyRow(tg.n_t, drift))
    for prev, row in zip(rows, rows[1:]):
        if prev.drift > 0 and row.drift > 0:
            row.order = math.log2(prev.drift / row.drift)
    return rows


ORDER_WINDOW = (1.8, 2.2)
# Drifts this small are round-off and carry no order information.
DRIFT_FLOOR = 1e-13


def check_energy(
    grid: SpaceGrid,
    tgrid: TimeGrid,
    xi0: tuple[np.ndarray, np.ndarray],
    params: SolverParams,
    levels: int = 3,
) -> CheckResult:
    rows = energy_ladder(grid, tgrid, xi0, params, max(levels, 2))
    last = rows[-1]
    detail = ", ".join(f"n_t={r.n_t}: {r.drift:.3e}" for r in rows)
    if last.drift <= DRIFT_FLOOR:
        return CheckResult(CheckKind.ENERGY, last.drift, DRIFT_FLOOR, True, detail)
    lo, hi = ORDER_WINDOW
    return CheckResult(CheckKind.ENERGY, last.order, hi, lo <= last.order <= hi, detail)


def check_prox(
    grid: SpaceGrid,
    tgrid: TimeGrid,
    rng: np.random.Generator,
    controls: int = 100,
    points: int = 200,
) -> CheckResult:
    worst = 0.0
    exact = True
    for _ in range(controls):
        scale = rng.uniform(0.0, 3.0, size=tgrid.size)
        g = ControlTrajectory(grid, tgrid, rng.standard_normal((tgrid.size,) + grid.shape))
        g = g.scaled(scale / np.maximum(g.slice_norms, 1e-300))
        profile = ConstraintProfile(rng.uniform(0.0, 2.0, size=tgrid.size))
        tau = float(rng.uniform(0.0, 1.0))

        out = prox_composite(g, tau, profile)
        for gn, sn, om in zip(g.slice_norms, out.slice_norms, profile.omega):
            s_scan, obj_scan = radial_scan_prox(gn, tau, om, points)
            obj = 0.5 * (sn - gn) ** 2 + tau * sn
            if obj > obj_scan + 1e-12:
                worst = math.inf
            resolution = om / (points - 1) if om > 0 else 1.0
            worst = max(worst, abs(sn - s_scan) / resolution)

        same = np.array_equal(prox_composite(g, 0.0, profile).u, project_uad(g, profile).u)
        exact = exact and same
    detail = "prox(., 0, omega) == projection" if exact else "prox(., 0, omega) != projection"
    return CheckResult(CheckKind.PROX, worst, 1.0, exact and worst <= 1.0, detail)


DUALITY_TOL = 1e-6


def check_duality(
    problem: Problem, u: ControlTrajectory, rng: np.random.Generator, directions: int = 10
) -> CheckResult:
    grid, tgrid = problem.grid, problem.tgrid
    state = problem.state(u)
    terminal = smooth_field(grid, rng)
    source = smooth_field(grid, rng, (tgrid.size,))
    adj = solve_adjoint(state, terminal, source)
    worst = 0.0
    for _ in range(directions):
        v = smooth_control(grid, tgrid, rng)
        z = solve_linearized(state, v)
        lhs = float(np.dot(tgrid.weights, grid.inner(v.u, adj.physical)))
        rhs = float(grid.inner(z.final(), terminal))
        rhs += float(np.dot(tgrid.weights, grid.inner(source, z.physical)))
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return CheckResult(CheckKind.DUALITY, worst, DUALITY_TOL, worst <= DUALITY_TOL)


PSI_TOL = 1e-6


def check_psi(
    grid: SpaceGrid,
    tgrid: TimeGrid,
    rng: np.random.Generator,
    p: float = 4,
    q: float = 12,
    epsilon: float = 1e-5,
    samples: int = 5,
) -> CheckResult:
    worst = 0.0
    for _ in range(samples):
        y = smooth_field(grid, rng, (tgrid.size,))
        h = smooth_field(grid, rng, (tgrid.size,))
        d1 = Psi_pq_prime(grid, tgrid, y, h, p, q)
        fd1 = (Psi_pq(grid, tgrid, y + epsilon * h, p, q) - Psi_pq(grid, tgrid, y - epsilon * h, p, q)) / (
            2 * epsilon
        )
        d2 = Psi_pq_second(grid, tgrid, y, h, p, q)
        fd2 = (
            Psi_pq_prime(grid, tgrid, y + epsilon * h, h, p, q)
            - Psi_pq_prime(grid, tgrid, y - epsilon * h, h, p, q)
        ) / (2 * epsilon)
        worst = max(
            worst,
            abs(d1 - fd1) / max(1.0, abs(fd1)),
            abs(d2 - fd2) / max(1.0, abs(fd2)),
        )
    a, b = psi_second_coefficients(p, q)
    return CheckResult(
        CheckKind.PSI, worst, PSI_TOL, worst <= PSI_TOL,
        f"coefficients ({a:g}, {b:g})",
    )


# Window around the exact 1/8 scaling of the third-order remainder.
SCALING_WINDOW = (0.1, 0.15)


def remainder_scaling(
    grid: SpaceGrid, f: np.ndarray, h: np.ndarray, eta: np.ndarray, weights: np.ndarray
) -> float:
    full = taylor_norm_checks(grid, f, h, eta, weights).remainder
    half = taylor_norm_checks(grid, f, 0.5 * h, eta, weights).remainder
    return half / full if full else math.nan


def check_taylor(
    grid: SpaceGrid, tgrid: TimeGrid, rng: np.random.Generator, instances: int = 100
) -> CheckResult:
    failures = 0
    worst_ratio = 0.125
    for _ in range(instances):
        f = smooth_field(grid, rng, (tgrid.size,))
        f = f / np.reshape(grid.norm(f), (tgrid.size,) + (1,) * grid.dim)
        h = smooth_field(grid, rng, (tgrid.size,))
        eta = rng.uniform(0.5, 1.5, size=tgrid.size)
        report = taylor_norm_checks(grid, f, h, eta, tgrid.weights)
        if not report.passed:
            failures += 1
        small = 1e-2 * h / np.max(grid.norm(h))
        ratio = remainder_scaling(grid, f, small, eta, tgrid.weights)
        if abs(ratio - 0.125) > abs(worst_ratio - 0.125) or not math.isfinite(ratio):
            worst_ratio = ratio
    lo, hi = SCALING_WINDOW
    ok = failures == 0 and lo <= worst_ratio <= hi
    return CheckResult(
        CheckKind.TAYLOR, worst_ratio, hi, ok,
        f"{instances - failures}/{instances} instances within the convexity and remainder bounds",
    )
