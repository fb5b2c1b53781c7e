"""
Run configuration files.

Configurations are TOML, usually written with flat dotted keys:

    grid.dim = 1
    grid.n = 64
    time.T = 6.283185307179586
    cost.beta1 = 0.1

Every section is a dataclass whose `load_overrides` pops the keys it knows;
whatever is left over is reported as an unknown key.
"""

import hashlib
import math
import tomllib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
import tomli_w

import critwave.cli as cli
import critwave.version as version

from .errors import ConfigError
from .fields import control_field, exact_final, omega_profile, spatial_field
from .feasible import ConstraintProfile
from .grid import SpaceGrid, make_grid
from .kkt import AuditConfig
from .norms import TimeGrid
from .objective import CostParams, Problem
from .optimizer import OptimizeConfig
from .solver import SolverParams
from .trajectory import ControlTrajectory

DEFAULT_CONFIG_NAME = "critwave.toml"


class Section:
    def load_overrides(self, raw: dict[str, Any]):
        for f in fields(self):
            if f.name in raw:
                setattr(self, f.name, raw.pop(f.name))


@dataclass
class GridSection(Section):
    dim: int = 1
    extents: Union[float, list[float]] = math.pi
    n: Union[int, list[int]] = 32
    padding: int = 2


@dataclass
class TimeSection(Section):
    T: float = 1.0
    n_t: int = 100


@dataclass
class PhysicsSection(Section):
    power: int = 5
    nonlinear: bool = True
    filter: str = "sinc"
    blowup_threshold: float = 1e6
    growth_factor: float = 10.0


@dataclass
class InitialSection(Section):
    y0: str = "zero"
    y1: str = "zero"


@dataclass
class ControlSection(Section):
    # Control for `solve`, start point for `optimize`.
    u: str = "zero"


@dataclass
class CostSection(Section):
    gamma: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0
    y_d: str = "zero"
    p_norm: float = 4
    q_norm: float = 12


@dataclass
class ConstraintSection(Section):
    omega: str = "constant:value=1"


@dataclass
class AuditSection(AuditConfig):
    # Stored control to audit; defaults to `<out>/control.bin`.
    control: str = ""

    def settings(self) -> AuditConfig:
        return AuditConfig(
            **{f.name: getattr(self, f.name) for f in fields(AuditConfig)}
        )


@dataclass
class CheckSection(Section):
    epsilon: float = 1e-4
    directions: int = 10
    # dt halvings for the energy and convergence ladders
    ladder: int = 3
    # random controls for the prox check and instances for the Taylor check
    samples: int = 100
    scan_points: int = 200


@dataclass
class RunSection(Section):
    seed: int = 0
    out: str = "out"
    critwave: str = f"{version.VERSION_STR}+"
    # dt halvings for the convergence table of `solve`; 0 disables it.
    ladder: int = 0
    # Exact final state for that table, e.g. `manufactured`; empty means
    # differences between successive levels.
    exact: str = ""


SECTIONS = {
    "grid": GridSection,
    "time": TimeSection,
    "physics": PhysicsSection,
    "initial": InitialSection,
    "control": ControlSection,
    "cost": CostSection,
    "constraint": ConstraintSection,
    "optimizer": OptimizeConfig,
    "audit": AuditSection,
    "check": CheckSection,
    "run": RunSection,
}


def parse_value(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


# Split `section.key=value` and store it into the raw table.
def apply_override(raw: dict[str, Any], item: str) -> None:
    key, eq, value = item.partition("=")
    if not eq:
        raise ConfigError("", f"override '{item}' is not of the form key=value")
    parts = key.strip().split(".")
    if len(parts) != 2 or parts[0] not in SECTIONS:
        raise ConfigError(key.strip(), "unknown configuration key")
    raw.setdefault(parts[0], {})[parts[1]] = parse_value(value.strip())


@dataclass
class RunConfig:
    grid: GridSection = field(default_factory=GridSection)
    time: TimeSection = field(default_factory=TimeSection)
    physics: PhysicsSection = field(default_factory=PhysicsSection)
    initial: InitialSection = field(default_factory=InitialSection)
    control: ControlSection = field(default_factory=ControlSection)
    cost: CostSection = field(default_factory=CostSection)
    constraint: ConstraintSection = field(default_factory=ConstraintSection)
    optimizer: OptimizeConfig = field(default_factory=OptimizeConfig)
    audit: AuditSection = field(default_factory=AuditSection)
    check: CheckSection = field(default_factory=CheckSection)
    run: RunSection = field(default_factory=RunSection)
    # Directory relative paths in the file are resolved against.
    base: Path = field(default=Path("."), compare=False)

    @classmethod
    def from_dict(cls, raw: dict[str, Any], base: Path = Path(".")) -> "RunConfig":
        config = cls(base=base)
        for name, section_raw in raw.items():
            if name not in SECTIONS:
                raise ConfigError(name, "unknown section")
            if not isinstance(section_raw, dict):
                raise ConfigError(name, "must be a table")
            section_raw = dict(section_raw)
            getattr(config, name).load_overrides(section_raw)
            if section_raw:
                key = next(iter(section_raw))
                raise ConfigError(f"{name}.{key}", "unknown key")

        raw_reqr = config.run.critwave
        reqr = version.parse_reqr(raw_reqr)
        if reqr is None:
            cli.warn(f"Could not parse version requirement: {raw_reqr}")
        elif not reqr.is_satisfied():
            raise ConfigError(
                "run.critwave",
                f"this configuration is meant for critwave {raw_reqr}",
                f"You are currently using critwave {version.VERSION_STR}",
            )
        return config

    @classmethod
    def parse(cls, text: str, overrides: Sequence[str] = (), base: Path = Path(".")) -> "RunConfig":
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError("", f"invalid configuration file: {e}") from None
        for item in overrides:
            apply_override(raw, item)
        return cls.from_dict(raw, base)

    @classmethod
    def load(cls, path: Path, overrides: Sequence[str] = ()) -> "RunConfig":
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigError("", f"cannot read {path}: {e}") from None
        return cls.parse(text, overrides, path.parent)

    def to_dict(self) -> dict[str, Any]:
        return {name: asdict(getattr(self, name)) for name in SECTIONS}

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    def resolve(self, spec: str) -> str:
        if spec.endswith((".npy", ".csv", ".bin")) and not Path(spec).is_absolute():
            return str(self.base / spec)
        return spec

    # builders

    def build_grid(self) -> SpaceGrid:
        g = self.grid
        return make_grid(g.dim, g.extents, g.n, g.padding)

    def build_tgrid(self) -> TimeGrid:
        return TimeGrid(self.time.T, self.time.n_t)

    def build_params(self) -> SolverParams:
        p = self.physics
        return SolverParams(
            power=p.power,
            nonlinear=p.nonlinear,
            filter=p.filter,
            blowup_threshold=p.blowup_threshold,
            growth_factor=p.growth_factor,
        )

    def build_cost(self, grid: SpaceGrid) -> CostParams:
        c = self.cost
        return CostParams(
            gamma=c.gamma,
            beta1=c.beta1,
            beta2=c.beta2,
            y_d=spatial_field(self.resolve(c.y_d), grid, "cost.y_d"),
            p_norm=c.p_norm,
            q_norm=c.q_norm,
        )

    def build_xi0(self, grid: SpaceGrid) -> tuple[np.ndarray, np.ndarray]:
        return (
            spatial_field(self.resolve(self.initial.y0), grid, "initial.y0"),
            spatial_field(self.resolve(self.initial.y1), grid, "initial.y1"),
        )

    def build_control(self, grid: SpaceGrid, tgrid: TimeGrid) -> ControlTrajectory:
        return control_field(
            self.resolve(self.control.u), grid, tgrid, "control.u", self.run.seed
        )

    def build_profile(self, tgrid: TimeGrid) -> ConstraintProfile:
        return omega_profile(self.resolve(self.constraint.omega), tgrid, "constraint.omega")

    def build_exact(self, grid: SpaceGrid, tgrid: TimeGrid) -> Optional[np.ndarray]:
        return exact_final(self.resolve(self.run.exact), grid, tgrid, "run.exact")

    def build_problem(self) -> Problem:
        grid = self.build_grid()
        return Problem(
            grid,
            self.build_tgrid(),
            self.build_xi0(grid),
            self.build_cost(grid),
            self.build_params(),
        )

    # Check every field against the preconditions of the modules that consume
    # it, before anything is solved.
    def validate(self) -> None:
        for name, value in (
            ("run.seed", self.run.seed),
            ("run.ladder", self.run.ladder),
            ("check.directions", self.check.directions),
            ("check.ladder", self.check.ladder),
            ("check.samples", self.check.samples),
        ):
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                raise ConfigError(name, f"must be a nonnegative integer, got {value!r}")
        if not self.check.epsilon > 0:
            raise ConfigError("check.epsilon", f"must be positive, got {self.check.epsilon}")
        if self.check.scan_points < 2:
            raise ConfigError("check.scan_points", "need at least 2 points")
        grid = self.build_grid()
        tgrid = self.build_tgrid()
        self.build_params()
        self.build_cost(grid)
        self.build_xi0(grid)
        self.build_control(grid, tgrid)
        self.build_profile(tgrid)
        self.build_exact(grid, tgrid)
        self.optimizer.validate()
        self.audit.validate()
