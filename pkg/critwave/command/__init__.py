"""
Command definitions.
"""

from enum import StrEnum
from typing import Optional

import critwave.cli as cli

from .abc import Command, Contrib, ContribKind, RunInfo
from .audit import AuditCommand
from .check import CheckCommand
from .optimize import OptimizeCommand
from .solve import SolveCommand


# Represents the kind of command, as named on the command line.
class Kind(StrEnum):
    SOLVE = "solve"
    OPTIMIZE = "optimize"
    AUDIT = "audit"
    CHECK = "check"


def find(name: str) -> Optional[Kind]:
    try:
        return Kind(name.lower())
    except ValueError:
        return None


# Create the command of the given kind.
def create(kind: Kind, info: RunInfo) -> Command:
    match kind:
        case Kind.SOLVE:
            return SolveCommand(info)
        case Kind.OPTIMIZE:
            return OptimizeCommand(info)
        case Kind.AUDIT:
            return AuditCommand(info)
        case Kind.CHECK:
            return CheckCommand(info)


# Create a command from its command-line name.
def from_name(name: str, info: RunInfo) -> Optional[Command]:
    kind = find(name)
    if kind is None:
        supported = ", ".join(k.value for k in Kind)
        cli.error(
            f"Unknown command '{name}'.",
            f"Supported commands: {supported}, clean, version",
        )
        return None
    return create(kind, info)
