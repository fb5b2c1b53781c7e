"""
Optimality audit of a computed control.

Reconstructs the subgradient lambda of j and the multiplier mu of the ball
constraint from the adjoint state, checks the first-order system

    p(t) + beta1 lambda(t) + beta2 u(t) + mu(t) u(t) / ||u(t)|| = 0

node by node, and samples the second-order forms on directions of the critical
cone. Every "for all v" condition is checked on a finite sample whose size is
recorded in the report.
"""

import math
from dataclasses import dataclass, field, fields
from typing import Any, Optional

import numpy as np

import critwave.cli as cli

from .calculus import segment_min_norm, upsilon2_derivs
from .errors import ConfigError, SingularityError
from .feasible import (
    ActiveSets,
    ConstraintProfile,
    active_sets,
    critical_cone_test,
    project_uad,
)
from .grid import SpaceGrid
from .objective import J_SECOND_CAP, Problem, j_dir, j_second, zero_tolerance
from .trajectory import ControlTrajectory

# tol_kkt = KKT_TOL_SCALE * (1 + ||p||_{inf,2})
KKT_TOL_SCALE = 1e-6


@dataclass
class AuditConfig:
    # Relative tolerance deciding ||u(t)|| = omega(t).
    tol: float = 1e-8
    fonc_directions: int = 100
    directions: int = 20
    radii: list[float] = field(default_factory=lambda: [1e-1, 1e-2, 1e-3])
    seed: int = 0
    j_cap: float = J_SECOND_CAP
    ssoc: bool = True

    def load_overrides(self, raw: dict[str, Any]):
        for f in fields(self):
            if f.name in raw:
                value = raw.pop(f.name)
                setattr(self, f.name, list(value) if f.name == "radii" else value)

    def validate(self) -> None:
        if not self.tol > 0:
            raise ConfigError("audit.tol", f"must be positive, got {self.tol}")
        for name in ("fonc_directions", "directions"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"audit.{name}", f"must be a positive integer, got {value}")
        if not self.radii or any(not r > 0 for r in self.radii):
            raise ConfigError("audit.radii", f"need positive radii, got {self.radii}")
        if not self.j_cap > 0:
            raise ConfigError("audit.j_cap", f"must be positive, got {self.j_cap}")


def tol_kkt(grid: SpaceGrid, p_values: np.ndarray) -> float:
    return KKT_TOL_SCALE * (1 + float(np.max(grid.norm(p_values))))


def _per_node(grid: SpaceGrid, values: np.ndarray) -> np.ndarray:
    return values.reshape(values.shape + (1,) * grid.dim)


@dataclass
class LambdaField:
    values: np.ndarray
    # A0 nodes, where any ||lambda|| <= 1 is admissible.
    unresolved: np.ndarray
    # Set when beta1 = 0 leaves lambda undefined on zero slices.
    undefined: bool = False


def compute_lambda(
    u: ControlTrajectory,
    p_values: np.ndarray,
    beta1: float,
    tau0: float,
    sets: Optional[ActiveSets] = None,
) -> LambdaField:
    grid = u.grid
    norms = u.slice_norms
    unresolved = np.zeros(u.tgrid.size, dtype=bool)
    if sets is not None:
        unresolved = sets.zero.copy()
    zero = (norms <= tau0) & ~unresolved
    nz = (norms > tau0) & ~unresolved
    lam = np.zeros_like(u.u)
    lam[nz] = u.u[nz] / _per_node(grid, norms[nz])
    undefined = False
    if np.any(zero):
        if beta1 > 0:
            lam[zero] = -p_values[zero] / beta1
        else:
            undefined = True
            cli.warn(
                "beta1 = 0: the subgradient is undefined on zero slices",
                "The sparsity branch of lambda needs beta1 > 0.",
            )
    return LambdaField(lam, unresolved, undefined)


# mu = ||p + beta1 lambda + beta2 u|| on A+, 0 on I, NaN on A0.
def compute_mu(
    u: ControlTrajectory,
    p_values: np.ndarray,
    lam: LambdaField,
    beta1: float,
    beta2: float,
    sets: ActiveSets,
) -> np.ndarray:
    g = p_values + beta1 * lam.values + beta2 * u.u
    mu = np.zeros(u.tgrid.size)
    mu[sets.active] = u.grid.norm(g)[sets.active]
    mu[sets.zero] = math.nan
    return mu


def _outward(u: ControlTrajectory, tau0: float) -> np.ndarray:
    norms = u.slice_norms
    out = np.zeros_like(u.u)
    nz = norms > tau0
    out[nz] = u.u[nz] / _per_node(u.grid, norms[nz])
    return out


# Per node ||p + beta1 lambda + beta2 u + mu u/||u|||; NaN on A0.
def gradient_residuals(
    u: ControlTrajectory,
    p_values: np.ndarray,
    lam: LambdaField,
    mu: np.ndarray,
    beta1: float,
    beta2: float,
    sets: ActiveSets,
) -> np.ndarray:
    mu0 = np.nan_to_num(mu)
    g = p_values + beta1 * lam.values + beta2 * u.u
    g = g + _per_node(u.grid, mu0) * _outward(u, zero_tolerance(u))
    res = np.asarray(u.grid.norm(g), dtype=float)
    res[sets.zero] = math.nan
    return res


@dataclass
class FoncResiduals:
    # max over nodes and sampled tangent v of max(0, -<g, v>/||v||)
    tangent: float
    # max over I of ||p + beta1 lambda + beta2 u||
    inactive: float
    # min over sampled v of sum_j w_j <g_j, v_j>
    integrated: float
    directions: int


def _random_field(u: ControlTrajectory, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal(u.u.shape)


def _tangent_sample(
    u: ControlTrajectory, sets: ActiveSets, rng: np.random.Generator
) -> ControlTrajectory:
    v = _random_field(u, rng)
    uv = u.grid.inner(u.u, v)
    flip = sets.active & (uv > 0)
    v[flip] = -v[flip]
    v[sets.zero] = 0.0
    return u.like(v)


def fonc_residuals(
    u: ControlTrajectory,
    p_values: np.ndarray,
    lam: LambdaField,
    mu: np.ndarray,
    beta1: float,
    beta2: float,
    sets: ActiveSets,
    rng: np.random.Generator,
    directions: int = 100,
) -> FoncResiduals:
    grid = u.grid
    g = p_values + beta1 * lam.values + beta2 * u.u
    keep = ~sets.zero
    worst = 0.0
    integrated = math.inf
    for _ in range(directions):
        v = _tangent_sample(u, sets, rng)
        c = np.asarray(grid.inner(g, v.u))
        vn = v.slice_norms
        pointwise = np.where(keep & (vn > 0), c / np.where(vn > 0, vn, 1.0), 0.0)
        worst = max(worst, float(-np.min(pointwise)))
        integrated = min(integrated, float(np.dot(u.tgrid.weights, c)))
    inactive = 0.0
    if np.any(sets.inactive):
        inactive = float(np.max(grid.norm(g)[sets.inactive]))
    return FoncResiduals(max(worst, 0.0), inactive, integrated, directions)


# sum over A+ of w mu / ||u|| * bracket(u, v)
def _multiplier_term(
    u: ControlTrajectory, mu: np.ndarray, sets: ActiveSets, v: ControlTrajectory, parallel: bool
) -> float:
    if not np.any(sets.active):
        return 0.0
    a = sets.active
    un = u.slice_norms[a]
    vv = v.slice_norms[a] ** 2
    if parallel:
        uv = u.grid.inner(u.u, v.u)[a]
        vv = np.maximum(vv - (uv / un) ** 2, 0.0)
    return float(np.dot(u.tgrid.weights[a], mu[a] * vv / un))


def _second_order(
    problem: Problem,
    u: ControlTrajectory,
    mu: np.ndarray,
    sets: ActiveSets,
    v: ControlTrajectory,
    cap: float,
    parallel: bool,
) -> float:
    j2 = j_second(u, v, cap) if problem.cost.beta1 else 0.0
    if math.isinf(j2):
        return math.inf
    value = problem.F_second(u, v) + problem.cost.beta1 * j2
    return value + _multiplier_term(u, mu, sets, v, parallel)


def sonc_form(
    problem: Problem,
    u: ControlTrajectory,
    mu: np.ndarray,
    sets: ActiveSets,
    v: ControlTrajectory,
    cap: float = J_SECOND_CAP,
) -> float:
    return _second_order(problem, u, mu, sets, v, cap, parallel=True)


def sonc_form_quadratic_penalty(
    problem: Problem,
    u: ControlTrajectory,
    mu: np.ndarray,
    sets: ActiveSets,
    v: ControlTrajectory,
    cap: float = J_SECOND_CAP,
) -> float:
    return _second_order(problem, u, mu, sets, v, cap, parallel=False)


# Remove the u(t)-component of v(t) on the masked nodes.
def _drop_radial(u: ControlTrajectory, v: np.ndarray, mask: np.ndarray, tau0: float) -> np.ndarray:
    e = _outward(u, tau0)
    coef = np.where(mask, np.asarray(u.grid.inner(e, v)), 0.0)
    return v - _per_node(u.grid, coef) * e


# Directions in the critical cone at a stationary u: zero on zero slices and
# on A0, free on nonzero I slices, tangent to the sphere on A+.
def sample_critical_directions(
    u: ControlTrajectory,
    sets: ActiveSets,
    count: int,
    rng: np.random.Generator,
) -> list[tuple[str, ControlTrajectory]]:
    tau0 = zero_tolerance(u)
    nonzero = u.slice_norms > tau0
    free = nonzero & sets.inactive
    tangent = nonzero & sets.active
    support = free | tangent
    kinds = ("random", "orthogonal", "parallel", "masked")
    out = []
    for i in range(count):
        kind = kinds[i % len(kinds)]
        v = _random_field(u, rng)
        match kind:
            case "random":
                v = _drop_radial(u, v, tangent, tau0)
            case "orthogonal":
                v = _drop_radial(u, v, support, tau0)
            case "parallel":
                alpha = rng.standard_normal(u.tgrid.size)
                v = _per_node(u.grid, np.where(free, alpha, 0.0)) * u.u
            case "masked":
                v = _drop_radial(u, v, tangent, tau0)
                a, b = sorted(rng.integers(0, u.tgrid.size, size=2))
                window = np.zeros(u.tgrid.size, dtype=bool)
                window[a : b + 1] = True
                v[~window] = 0.0
        v[~support] = 0.0
        out.append((f"{kind}-{i}", u.like(v)))
    return out


@dataclass
class SsocSample:
    direction: str
    radius: float
    # Largest delta with l_r(u) + delta/2 ||w - u||^2 <= l_r(w) at the probe w.
    delta: float


def ssoc_probe(
    problem: Problem,
    u: ControlTrajectory,
    profile: ConstraintProfile,
    directions: list[tuple[str, ControlTrajectory]],
    radii: list[float],
) -> list[SsocSample]:
    if not problem.cost.beta2 > 0:
        raise ConfigError(
            "cost.beta2",
            "the quadratic growth probe needs beta2 > 0",
        )
    base = problem.eval_lr(u)
    samples = []
    for name, d in directions:
        dn = d.norm()
        if dn == 0:
            continue
        for r in radii:
            w = project_uad(u.axpy(r / dn, d), profile)
            diff = (w - u).norm()
            if diff == 0:
                samples.append(SsocSample(name, r, math.inf))
                continue
            delta = 2 * (problem.eval_lr(w) - base) / diff**2
            samples.append(SsocSample(name, r, delta))
    return samples


@dataclass
class TaylorReport:
    convexity: bool
    quadratic_bound: bool
    remainder_bound: bool
    # Gap of the convexity inequality, its minimum over slices.
    convexity_gap: float
    quadratic: float
    remainder: float
    # |remainder| / (alpha^-2 ||eta||_inf sum w ||h||^3)
    fitted_constant: float
    alpha: float

    @property
    def passed(self) -> bool:
        return self.convexity and self.quadratic_bound and self.remainder_bound


# Checks the second-order Taylor expansion of sum_j w_j eta_j ||f_j + h_j||
# on the slices selected by `mask`.
def taylor_norm_checks(
    grid: SpaceGrid,
    f: np.ndarray,
    h: np.ndarray,
    eta: np.ndarray,
    weights: np.ndarray,
    mask: Optional[np.ndarray] = None,
    second_order: bool = True,
    tol: float = 1e-12,
) -> TaylorReport:
    f = np.asarray(f, dtype=float)
    h = np.asarray(h, dtype=float)
    if mask is None:
        mask = np.ones(f.shape[0], dtype=bool)
    f, h, eta, weights = f[mask], h[mask], np.asarray(eta)[mask], np.asarray(weights)[mask]

    nf = np.asarray(grid.norm(f))
    nfh = np.asarray(grid.norm(f + h))
    nh = np.asarray(grid.norm(h))
    sub = np.zeros_like(f)
    nz = nf > 0
    sub[nz] = f[nz] / _per_node(grid, nf[nz])
    gap = nfh - nf - np.asarray(grid.inner(sub, h))
    min_gap = float(np.min(gap)) if gap.size else 0.0
    convexity = bool(np.all(gap >= -tol * (1 + nh)))

    if not second_order:
        return TaylorReport(convexity, True, True, min_gap, 0.0, 0.0, 0.0, math.nan)

    alpha = float(np.min(nf)) if nf.size else math.inf
    alpha_seg = float(np.min(segment_min_norm(grid, f, h))) if nf.size else math.inf
    if alpha == 0 or alpha_seg == 0:
        raise SingularityError(
            "alpha = 0: ||f + theta h|| vanishes on the checked slices",
            "Exclude zero slices through the mask.",
        )
    d1, d2, _ = upsilon2_derivs(grid, f, h)
    eta_inf = float(np.max(np.abs(eta))) if eta.size else 0.0

    quadratic = float(np.dot(weights, eta * d2))
    quad_limit = 2 / alpha * eta_inf * float(np.dot(weights, nh**2))
    remainder = float(np.dot(weights, eta * (nfh - nf - d1 - 0.5 * d2)))
    scale = eta_inf * float(np.dot(weights, nh**3)) / alpha_seg**2
    fitted = abs(remainder) / scale if scale > 0 else 0.0
    return TaylorReport(
        convexity=convexity,
        quadratic_bound=abs(quadratic) <= quad_limit * (1 + tol),
        remainder_bound=abs(remainder) <= scale * (1 + tol) + tol,
        convexity_gap=min_gap,
        quadratic=quadratic,
        remainder=remainder,
        fitted_constant=fitted,
        alpha=alpha,
    )


def _json_float(value: float) -> Optional[float]:
    return float(value) if math.isfinite(value) else None


@dataclass
class KKTReport:
    t: np.ndarray
    u_norms: np.ndarray
    omega: np.ndarray
    sets: ActiveSets
    p_norms: np.ndarray
    lam: LambdaField
    mu: np.ndarray
    residuals: np.ndarray
    tol_kkt: float
    gradient_residual: float
    complementarity_residual: float
    lambda_bound: float
    fonc: FoncResiduals
    sparse_u: np.ndarray
    sparse_p: np.ndarray
    sparsity_consistent: bool
    criticality_residual: float
    critical_accepted: int
    curvature_samples: list[tuple[str, float]] = field(default_factory=list)
    penalty_samples: list[tuple[str, float]] = field(default_factory=list)
    ssoc: list[SsocSample] = field(default_factory=list)

    @property
    def min_curvature(self) -> float:
        values = [v for _, v in self.curvature_samples]
        return min(values) if values else math.inf

    @property
    def mu_nonnegative(self) -> bool:
        finite = self.mu[np.isfinite(self.mu)]
        return bool(np.all(finite >= 0))

    def summary(self) -> dict[str, Any]:
        deltas = [s.delta for s in self.ssoc]
        return {
            "tol_kkt": self.tol_kkt,
            "sets": self.sets.counts(),
            "gradient_residual": _json_float(self.gradient_residual),
            "complementarity_residual": self.complementarity_residual,
            "lambda_bound": _json_float(self.lambda_bound),
            "lambda_undefined": self.lam.undefined,
            "mu_nonnegative": self.mu_nonnegative,
            "fonc_tangent_residual": self.fonc.tangent,
            "fonc_inactive_residual": self.fonc.inactive,
            "fonc_integrated_min": self.fonc.integrated,
            "fonc_directions": self.fonc.directions,
            "sparsity_consistent": self.sparsity_consistent,
            "criticality_residual": self.criticality_residual,
            "critical_directions": len(self.curvature_samples),
            "critical_accepted": self.critical_accepted,
            "min_curvature": _json_float(self.min_curvature),
            "min_ssoc_delta": _json_float(min(deltas)) if deltas else None,
        }

    def to_json(self) -> dict[str, Any]:
        labels = self.sets.labels()
        nodes = []
        for j in range(self.t.size):
            nodes.append(
                {
                    "t": float(self.t[j]),
                    "||u||": float(self.u_norms[j]),
                    "omega": float(self.omega[j]),
                    "set": labels[j].value,
                    "||p||": float(self.p_norms[j]),
                    "mu": _json_float(self.mu[j]),
                    "sparsity_flag": bool(self.sparse_u[j]),
                }
            )
        return {
            "nodes": nodes,
            "summary": self.summary(),
            "curvature_samples": [
                {"direction": d, "sonc": _json_float(v), "sonc_quadratic_penalty": _json_float(q)}
                for (d, v), (_, q) in zip(self.curvature_samples, self.penalty_samples)
            ],
            "ssoc": [
                {"direction": s.direction, "radius": s.radius, "delta": _json_float(s.delta)}
                for s in self.ssoc
            ],
        }


def audit(
    problem: Problem,
    u: ControlTrajectory,
    profile: ConstraintProfile,
    config: AuditConfig = AuditConfig(),
) -> KKTReport:
    config.validate()
    grid, tgrid = problem.grid, problem.tgrid
    cost = problem.cost
    rng = np.random.default_rng(config.seed)

    grad = problem.grad_F(u)
    p = grad.adjoint.physical
    tau0 = zero_tolerance(u)
    sets = active_sets(u, profile, config.tol)
    lam = compute_lambda(u, p, cost.beta1, tau0, sets)
    mu = compute_mu(u, p, lam, cost.beta1, cost.beta2, sets)
    tolk = tol_kkt(grid, p)

    residuals = gradient_residuals(u, p, lam, mu, cost.beta1, cost.beta2, sets)
    finite = residuals[np.isfinite(residuals)]
    gradient_residual = float(np.max(finite)) if finite.size else 0.0

    u_norms = u.slice_norms
    omega = profile.omega
    keep = ~sets.zero
    comp = np.abs(np.nan_to_num(mu) * (u_norms - omega)) / (1 + omega)
    complementarity = float(np.max(comp[keep])) if np.any(keep) else 0.0

    sparse_u = u_norms <= tau0
    lam_norms = np.asarray(grid.norm(lam.values))
    zero_slices = sparse_u & keep
    lambda_bound = float(np.max(lam_norms[zero_slices])) if np.any(zero_slices) else 0.0

    p_norms = np.asarray(grid.norm(p))
    sparse_p = p_norms <= cost.beta1 + tolk
    borderline = np.abs(p_norms - cost.beta1) <= tolk
    consistent = bool(np.all(~sparse_u[keep] | sparse_p[keep]))
    if cost.beta2 > 0:
        consistent = consistent and bool(
            np.all((sparse_u == sparse_p)[keep] | borderline[keep])
        )

    fonc = fonc_residuals(
        u, p, lam, mu, cost.beta1, cost.beta2, sets, rng, config.fonc_directions
    )

    directions = sample_critical_directions(u, sets, config.directions, rng)
    curvature = []
    penalty = []
    crit_res = 0.0
    accepted = 0
    for name, v in directions:
        curvature.append((name, sonc_form(problem, u, mu, sets, v, config.j_cap)))
        penalty.append((name, sonc_form_quadratic_penalty(problem, u, mu, sets, v, config.j_cap)))
        lam_v = float(np.dot(tgrid.weights, grid.inner(lam.values, v.u)))
        crit_res = max(crit_res, abs(j_dir(u, v) - lam_v))
        if critical_cone_test(v, u, profile, grad, cost.beta1, tolk, sets).accepted:
            accepted += 1

    ssoc = []
    if config.ssoc and cost.beta2 > 0:
        probes = [(f"random-{i}", u.like(rng.standard_normal(u.u.shape))) for i in range(config.directions)]
        ssoc = ssoc_probe(problem, u, profile, probes + directions, config.radii)

    report = KKTReport(
        t=tgrid.nodes,
        u_norms=u_norms,
        omega=omega,
        sets=sets,
        p_norms=p_norms,
        lam=lam,
        mu=mu,
        residuals=residuals,
        tol_kkt=tolk,
        gradient_residual=gradient_residual,
        complementarity_residual=complementarity,
        lambda_bound=lambda_bound,
        fonc=fonc,
        sparse_u=sparse_u,
        sparse_p=sparse_p,
        sparsity_consistent=consistent,
        criticality_residual=crit_res,
        critical_accepted=accepted,
        curvature_samples=curvature,
        penalty_samples=penalty,
        ssoc=ssoc,
    )
    return report
