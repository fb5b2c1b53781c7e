"""
Command abstract base class.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import IntEnum, auto
from pathlib import Path
from typing import Optional

import critwave.cli as cli
from critwave.config import RunConfig


class ContribKind(IntEnum):
    TRAJECTORY = auto()
    REPORT = auto()
    LOG = auto()


# A file a command writes into the output directory.
@dataclass
class Contrib:
    kind: ContribKind
    name: str
    path: Path

    @classmethod
    def trajectory(cls, name: str, path: Path):
        return cls(ContribKind.TRAJECTORY, name, path)

    @classmethod
    def report(cls, name: str, path: Path):
        return cls(ContribKind.REPORT, name, path)

    @classmethod
    def log(cls, name: str, path: Path):
        return cls(ContribKind.LOG, name, path)


@dataclass
class RunInfo:
    # Output directory.
    out: Path
    config: RunConfig
    # Checks selected with `--which`.
    which: str = "all"
    # Control given with `--control`.
    control: Optional[Path] = None


# A command is one action of the command line, run against a configuration.
class Command(ABC):
    # Name of this command on the command line.
    name: str
    info: RunInfo

    @abstractmethod
    def __init__(self, name: str, info: RunInfo):
        self.name = name
        self.info = info

    # Check whether this command can run. This is also useful for preparing a
    # later run.
    @abstractmethod
    def want_run(self) -> bool:
        return True

    # Execute this command and write its artifacts.
    @abstractmethod
    def run(self) -> None:
        pass

    # Remove all run artifacts.
    def clean(self) -> bool:
        removed = False
        for c in self.contrib():
            if c.path.exists():
                c.path.unlink()
                removed = True
        return removed

    # Files this command writes, in a fixed order.
    @abstractmethod
    def contrib(self) -> list[Contrib]:
        pass

    def _prepare_out(self) -> Path:
        out = self.info.out
        out.mkdir(parents=True, exist_ok=True)
        cli.note(f"Writing to {out}")
        return out
