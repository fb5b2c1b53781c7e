"""
OptimizeCommand
"""

import critwave.cli as cli
from critwave.errors import DivergenceError
from critwave.kkt import KKTReport, audit
from critwave.optimizer import optimize
from critwave.storage import save_control, sidecar_path, write_json

from .abc import *


# Print the headline numbers of an audit.
def show_report(report: KKTReport) -> None:
    summary = report.summary()
    rows = [[k, repr(v)] for k, v in summary.items() if not isinstance(v, dict)]
    rows += [[f"nodes {k}", str(v)] for k, v in summary["sets"].items()]
    cli.wrapped(2, cli.table(["quantity", "value"], rows))


class OptimizeCommand(Command):
    def __init__(self, info: RunInfo):
        super(OptimizeCommand, self).__init__("optimize", info)

    def want_run(self) -> bool:
        return True

    def run(self) -> None:
        config = self.info.config
        problem = config.build_problem()
        u0 = config.build_control(problem.grid, problem.tgrid)
        profile = config.build_profile(problem.tgrid)
        out = self._prepare_out()

        cli.progress(
            f"Optimizing on {problem.grid.shape} nodes with {problem.tgrid.n_t} steps"
        )
        try:
            u, log = optimize(problem, u0, profile, config.optimizer)
        except DivergenceError as e:
            partial = getattr(e, "log", None)
            if partial is not None:
                partial.to_csv(out / "iterates.csv")
                cli.note(f"Iterates up to the failure are in {out / 'iterates.csv'}")
            raise

        save_control(out / "control.bin", u)
        log.to_csv(out / "iterates.csv")
        if log.converged:
            cli.success(f"Optimizer: {log.message}")
        else:
            cli.warn(f"Optimizer: {log.message}", "Raise optimizer.max_iters or the tolerance.")

        cost = problem.cost_breakdown(u)
        cost["converged"] = log.converged
        cost["iterations"] = len(log) - 1
        write_json(out / "cost.json", cost)

        cli.progress("Auditing optimality conditions")
        report = audit(problem, u, profile, config.audit.settings())
        write_json(out / "kkt.json", report.to_json())
        show_report(report)

    def contrib(self) -> list[Contrib]:
        out = self.info.out
        return [
            Contrib.trajectory("control", out / "control.bin"),
            Contrib.trajectory("control-meta", sidecar_path(out / "control.bin")),
            Contrib.log("iterates", out / "iterates.csv"),
            Contrib.report("cost", out / "cost.json"),
            Contrib.report("kkt", out / "kkt.json"),
        ]
