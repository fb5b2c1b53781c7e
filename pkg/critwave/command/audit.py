"""
AuditCommand
"""

from critwave.errors import ConfigError, GridMismatchError
from critwave.kkt import audit
from critwave.storage import load_control, write_json

from .abc import *
from .optimize import show_report


class AuditCommand(Command):
    _control_path: Optional[Path]

    def __init__(self, info: RunInfo):
        super(AuditCommand, self).__init__("audit", info)
        self._control_path = None

    # `--control` wins over `audit.control`, which wins over `<out>/control.bin`.
    def want_run(self) -> bool:
        config = self.info.config
        if self.info.control is not None:
            path = self.info.control
        elif config.audit.control:
            path = Path(config.resolve(config.audit.control))
        else:
            path = self.info.out / "control.bin"
        if not path.exists():
            raise ConfigError(
                "audit.control",
                f"no stored control at {path}",
                "Run `critwave optimize` first or point audit.control at a control.bin.",
            )
        self._control_path = path
        return True

    def run(self) -> None:
        if self._control_path is None:
            self.want_run()
        config = self.info.config
        problem = config.build_problem()
        u = load_control(self._control_path)
        if u.grid != problem.grid or u.tgrid != problem.tgrid:
            raise GridMismatchError(
                f"{self._control_path} was computed on a different grid than the configuration"
            )
        profile = config.build_profile(problem.tgrid)
        out = self._prepare_out()

        cli.progress(f"Auditing {self._control_path}")
        report = audit(problem, u, profile, config.audit.settings())
        write_json(out / "kkt.json", report.to_json())
        show_report(report)
        cli.success("Audit finished.")

    def contrib(self) -> list[Contrib]:
        return [Contrib.report("kkt", self.info.out / "kkt.json")]
