"""
SolveCommand
"""

import csv

import critwave.cli as cli
from critwave.solver import convergence_ladder, solve_forward
from critwave.storage import save_state, sidecar_path, write_json

from .abc import *


class SolveCommand(Command):
    def __init__(self, info: RunInfo):
        super(SolveCommand, self).__init__("solve", info)

    def want_run(self) -> bool:
        return True

    def run(self) -> None:
        config = self.info.config
        grid, tgrid = config.build_grid(), config.build_tgrid()
        params = config.build_params()
        xi0 = config.build_xi0(grid)
        u = config.build_control(grid, tgrid)

        cli.progress(f"Solving on {grid.shape} nodes with {tgrid.n_t} steps")
        state = solve_forward(u, xi0, params)
        out = self._prepare_out()
        save_state(out / "state.bin", state)
        write_json(out / "norms.json", state.report.to_json())
        cli.wrapped(
            2,
            "\n".join(f"{k} = {v!r}" for k, v in state.report.to_json().items()),
        )

        if config.run.ladder > 0:
            exact = config.build_exact(grid, tgrid)
            rows = convergence_ladder(
                grid,
                tgrid,
                lambda tg: config.build_control(grid, tg),
                xi0,
                params,
                config.run.ladder,
                exact,
            )
            with (out / "ladder.csv").open("w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(["n_t", "dt", "error", "order"])
                for r in rows:
                    writer.writerow(
                        [r.n_t, format(r.dt, ".17g"), format(r.error, ".17g"), format(r.order, ".17g")]
                    )
            cli.wrapped(
                2,
                cli.table(
                    ["n_t", "dt", "error", "order"],
                    [[str(r.n_t), f"{r.dt:.4e}", f"{r.error:.4e}", f"{r.order:.3f}"] for r in rows],
                ),
            )
        cli.success("Solve finished.")

    def clean(self) -> bool:
        removed = super(SolveCommand, self).clean()
        ladder = self.info.out / "ladder.csv"
        if ladder.exists():
            ladder.unlink()
            removed = True
        return removed

    def contrib(self) -> list[Contrib]:
        out = self.info.out
        items = [
            Contrib.trajectory("state", out / "state.bin"),
            Contrib.trajectory("state-meta", sidecar_path(out / "state.bin")),
            Contrib.report("norms", out / "norms.json"),
        ]
        if self.info.config.run.ladder > 0:
            items.append(Contrib.log("ladder", out / "ladder.csv"))
        return items
