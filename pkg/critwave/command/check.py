"""
CheckCommand
"""

import numpy as np

from critwave.checks import (
    CheckKind,
    CheckResult,
    check_duality,
    check_energy,
    check_gradient,
    check_prox,
    check_psi,
    check_taylor,
)
from critwave.errors import CheckFailure, ConfigError
from critwave.storage import write_json

from .abc import *


class CheckCommand(Command):
    _kinds: list[CheckKind]

    def __init__(self, info: RunInfo):
        super(CheckCommand, self).__init__("check", info)
        self._kinds = []

    def want_run(self) -> bool:
        which = self.info.which.lower()
        if which == "all":
            self._kinds = list(CheckKind)
            return True
        try:
            self._kinds = [CheckKind(w.strip()) for w in which.split(",")]
        except ValueError:
            supported = ", ".join(k.value for k in CheckKind)
            raise ConfigError(
                "--which", f"unknown check '{which}'", f"Use all or one of: {supported}"
            ) from None
        return True

    def _run_one(self, kind: CheckKind, rng: np.random.Generator) -> CheckResult:
        config = self.info.config
        c = config.check
        grid, tgrid = config.build_grid(), config.build_tgrid()
        match kind:
            case CheckKind.GRADIENT:
                problem = config.build_problem()
                u = config.build_control(grid, tgrid)
                return check_gradient(problem, u, rng, c.directions, c.epsilon)
            case CheckKind.ENERGY:
                return check_energy(
                    grid, tgrid, config.build_xi0(grid), config.build_params(), c.ladder
                )
            case CheckKind.PROX:
                return check_prox(grid, tgrid, rng, c.samples, c.scan_points)
            case CheckKind.DUALITY:
                problem = config.build_problem()
                u = config.build_control(grid, tgrid)
                return check_duality(problem, u, rng, c.directions)
            case CheckKind.PSI:
                return check_psi(grid, tgrid, rng, config.cost.p_norm, config.cost.q_norm)
            case CheckKind.TAYLOR:
                return check_taylor(grid, tgrid, rng, c.samples)

    def run(self) -> None:
        if not self._kinds:
            self.want_run()
        seed = self.info.config.run.seed
        results = []
        for i, kind in enumerate(CheckKind):
            if kind not in self._kinds:
                continue
            cli.progress(f"Checking {kind.value}")
            # one stream per check, so a selection reproduces the full run
            rng = np.random.default_rng([seed, i])
            results.append(self._run_one(kind, rng))

        out = self._prepare_out()
        write_json(out / "checks.json", [r.to_json() for r in results])
        rows = [
            [r.name, f"{r.measured:.3e}", f"{r.tolerance:.1e}", "pass" if r.passed else "FAIL", r.detail]
            for r in results
        ]
        cli.wrapped(2, cli.table(["check", "measured", "tolerance", "result", "detail"], rows))

        failed = [r.name for r in results if not r.passed]
        if failed:
            cli.failure(f"{len(failed)} of {len(results)} checks failed")
            raise CheckFailure(
                f"failed checks: {', '.join(failed)}",
                f"Measured errors are in {out / 'checks.json'}",
            )
        cli.success(f"All {len(results)} checks passed.")

    def contrib(self) -> list[Contrib]:
        return [Contrib.report("checks", self.info.out / "checks.json")]
