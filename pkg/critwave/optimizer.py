"""
Proximal gradient minimization of l_r = F + beta1 j over U_ad.

Steps start from a safeguarded Barzilai-Borwein estimate and are halved until
the composite Armijo condition holds. The accelerated variant restarts whenever
the objective would increase, so accepted iterates never increase l_r.
"""

import csv
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import numpy as np

import critwave.cli as cli

from .errors import ConfigError, DivergenceError
from .feasible import ConstraintProfile, prox_composite, project_uad
from .objective import Problem, eval_j, zero_tolerance
from .trajectory import ControlTrajectory


@dataclass
class OptimizeConfig:
    max_iters: int = 500
    step0: float = 1.0
    # Step reduction factor in (0, 1).
    backtrack: float = 0.5
    # Armijo constant in (0, 1).
    sufficient_decrease: float = 1e-4
    fista: bool = False
    tol_stationarity: float = 1e-6
    max_backtracks: int = 40
    bb: bool = True
    step_min: float = 1e-6
    step_max: float = 1e6
    # Print a progress line every this many iterations; 0 disables.
    report_every: int = 10

    def load_overrides(self, raw: dict[str, Any]):
        for f in fields(self):
            if f.name in raw:
                setattr(self, f.name, raw.pop(f.name))

    def validate(self) -> None:
        if int(self.max_iters) != self.max_iters or self.max_iters < 0:
            raise ConfigError("optimizer.max_iters", f"must be an integer >= 0, got {self.max_iters}")
        if not self.step0 > 0:
            raise ConfigError("optimizer.step0", f"must be positive, got {self.step0}")
        if not 0 < self.backtrack < 1:
            raise ConfigError("optimizer.backtrack", f"must be in (0, 1), got {self.backtrack}")
        if not 0 < self.sufficient_decrease < 1:
            raise ConfigError(
                "optimizer.sufficient_decrease",
                f"must be in (0, 1), got {self.sufficient_decrease}",
            )
        if not self.tol_stationarity > 0:
            raise ConfigError(
                "optimizer.tol_stationarity", f"must be positive, got {self.tol_stationarity}"
            )
        if int(self.max_backtracks) != self.max_backtracks or self.max_backtracks < 1:
            raise ConfigError("optimizer.max_backtracks", f"must be >= 1, got {self.max_backtracks}")
        if not 0 < self.step_min <= self.step_max:
            raise ConfigError("optimizer.step_min", "need 0 < step_min <= step_max")


@dataclass
class IterateRow:
    iter: int
    lr: float
    F: float
    # beta1 j(u)
    j: float
    step: float
    residual: float
    sparse_nodes: int


@dataclass
class IterateLog:
    rows: list[IterateRow] = field(default_factory=list)
    converged: bool = False
    message: str = ""

    def append(self, row: IterateRow) -> None:
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def last(self) -> Optional[IterateRow]:
        return self.rows[-1] if self.rows else None

    def is_monotone(self, slack: float = 1e-12) -> bool:
        values = [r.lr for r in self.rows]
        return all(b <= a + slack * max(1.0, abs(a)) for a, b in zip(values, values[1:]))

    def to_csv(self, path: Path) -> None:
        names = [f.name for f in fields(IterateRow)]
        with path.open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(names)
            for r in self.rows:
                writer.writerow(
                    format(v, ".17g") if isinstance(v, float) else v
                    for v in (getattr(r, n) for n in names)
                )


def _prox_step(
    problem: Problem,
    base: ControlTrajectory,
    grad: ControlTrajectory,
    step: float,
    profile: ConstraintProfile,
) -> ControlTrajectory:
    return prox_composite(base.axpy(-step, grad), step * problem.cost.beta1, profile)


def stationarity_residual(
    problem: Problem, u: ControlTrajectory, profile: ConstraintProfile, step: float
) -> float:
    if not step > 0:
        raise ConfigError("optimizer.step0", f"step must be positive, got {step}")
    grad = problem.grad_F(u).as_control()
    return (u - _prox_step(problem, u, grad, step, profile)).norm() / step


def _sparse_nodes(u: ControlTrajectory) -> int:
    return int(np.sum(u.slice_norms <= zero_tolerance(u)))


def _bb_step(
    du: ControlTrajectory, dg: ControlTrajectory, fallback: float, config: OptimizeConfig
) -> float:
    curv = du.dot(dg)
    if curv <= 0 or not math.isfinite(curv):
        return fallback
    return float(np.clip(du.dot(du) / curv, config.step_min, config.step_max))


# Roundoff allowance in the acceptance tests.
def _slack(value: float) -> float:
    return min(1e-12, 4 * np.finfo(float).eps * max(1.0, abs(value)))


@dataclass
class _Trial:
    u: ControlTrajectory
    lr: float
    step: float


# Backtrack from `step` until the composite Armijo test holds at a point taken
# from `base`. Returns None when every trial failed on round-off.
def _line_search(
    problem: Problem,
    profile: ConstraintProfile,
    config: OptimizeConfig,
    base: ControlTrajectory,
    grad: ControlTrajectory,
    ref_lr: float,
    step: float,
    quadratic_model: Optional[float] = None,
) -> Optional[_Trial]:
    diverged = 0
    last: Optional[DivergenceError] = None
    for _ in range(config.max_backtracks):
        cand = _prox_step(problem, base, grad, step, profile)
        d = cand - base
        try:
            lr = problem.eval_lr(cand)
        except DivergenceError as e:
            diverged += 1
            last = e
            step *= config.backtrack
            continue
        dd = d.dot(d)
        if quadratic_model is None:
            bound = ref_lr - config.sufficient_decrease / step * dd
        else:
            # F(y) + <g, d> + |d|^2 / 2s + beta1 j(cand)
            bound = quadratic_model + grad.dot(d) + dd / (2 * step)
            bound += problem.cost.beta1 * eval_j(cand)
        if lr <= bound + _slack(ref_lr):
            return _Trial(cand, lr, step)
        step *= config.backtrack
    if diverged == config.max_backtracks and last is not None:
        raise DivergenceError(
            last.time,
            f"every trial step diverged after {config.max_backtracks} halvings",
            "Reduce optimizer.step0 or refine the time grid.",
        )
    return None


def optimize(
    problem: Problem,
    u0: ControlTrajectory,
    profile: ConstraintProfile,
    config: OptimizeConfig = OptimizeConfig(),
) -> tuple[ControlTrajectory, IterateLog]:
    config.validate()
    profile.check(problem.tgrid)

    u = project_uad(u0, profile)
    if (u - u0).norm() > 0:
        cli.note("Initial control was infeasible and has been projected onto U_ad.")

    log = IterateLog()
    step = config.step0
    F = problem.eval_F(u)
    lr = problem.eval_lr(u)
    grad = problem.grad_F(u).as_control()
    prev: Optional[tuple[ControlTrajectory, ControlTrajectory]] = None
    # accelerated state
    t_k = 1.0
    u_prev = u

    try:
        for k in range(config.max_iters + 1):
            if prev is not None and config.bb:
                step = _bb_step(u - prev[0], grad - prev[1], step, config)
            # residual at the fixed step0, independent of the BB step
            residual = (u - _prox_step(problem, u, grad, config.step0, profile)).norm() / config.step0
            beta1_j = problem.cost.beta1 * eval_j(u)
            log.append(IterateRow(k, lr, F, beta1_j, step, residual, _sparse_nodes(u)))
            if config.report_every and k % config.report_every == 0:
                cli.progress(f"  iter {k:5d}  l_r {lr:.10e}  residual {residual:.3e}  step {step:.3e}")

            if residual <= config.tol_stationarity:
                log.converged = True
                log.message = f"stationary after {k} iterations"
                break
            if k == config.max_iters:
                log.message = f"max_iters = {config.max_iters} reached"
                break

            trial = None
            if config.fista and k > 0:
                t_next = 0.5 * (1 + math.sqrt(1 + 4 * t_k * t_k))
                y = u.axpy((t_k - 1) / t_next, u - u_prev)
                try:
                    F_y = problem.eval_F(y)
                    g_y = problem.grad_F(y).as_control()
                    trial = _line_search(
                        problem, profile, config, y, g_y, lr, step, quadratic_model=F_y
                    )
                except DivergenceError:
                    trial = None
                if trial is not None and trial.lr > lr + _slack(lr):
                    trial = None
                if trial is None:
                    t_k = 1.0
                else:
                    t_k = t_next
            if trial is None:
                trial = _line_search(problem, profile, config, u, grad, lr, step)
            if trial is None:
                cli.warn(
                    f"Line search stalled at iteration {k}",
                    "The remaining decrease is below round-off; loosen optimizer.tol_stationarity.",
                )
                log.message = f"line search stalled at iteration {k}"
                break

            prev = (u, grad)
            u_prev = u
            u, lr, step = trial.u, trial.lr, trial.step
            F = problem.eval_F(u)
            grad = problem.grad_F(u).as_control()
    except DivergenceError as e:
        e.log = log
        raise

    return u, log
