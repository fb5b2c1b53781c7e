"""
Argument parsing and terminal output for the `critwave` command.

Output goes to stdout. Notes and progress lines can be silenced with `-q`;
warnings, errors and results are always shown.
"""

from dataclasses import dataclass, field
from enum import StrEnum
from typing import Iterator, Optional

from colorama import Fore, Style

# Options that take a value, either as `--name=value`, `--name:value` or as the
# following argument.
VALUED = ("config", "out", "override", "which", "control")
# Options that may be given more than once.
REPEATED = ("override",)


@dataclass
class Args:
    # Name of the invoked program.
    program: str
    # Positional arguments: the action.
    pos: list[str] = field(default_factory=list)
    # `-q`, `--quiet`
    flags: list[str] = field(default_factory=list)
    # `--out=dir`, `--out:dir`, `--out dir`
    named: dict[str, str] = field(default_factory=dict)
    # Repeated options, in order of appearance.
    multi: dict[str, list[str]] = field(default_factory=dict)

    def _option(self, raw: str, rest: Iterator[str]) -> None:
        cuts = [i for i in (raw.find("="), raw.find(":")) if i != -1]
        if cuts:
            name, value = raw[: min(cuts)], raw[min(cuts) + 1 :]
        else:
            name, value = raw, None
        name = name.lower()
        if value is None and name in VALUED:
            value = next(rest, None)
        if value is None:
            self.flags.append(name)
        elif name in REPEATED:
            self.multi.setdefault(name, []).append(value)
        else:
            self.named[name] = value


def parse(args: list[str]) -> Args:
    out = Args(args[0])
    rest = iter(args[1:])
    for a in rest:
        if a.startswith("--"):
            out._option(a[2:], rest)
        elif a.startswith("-") and len(a) > 1:
            out.flags.append(a[1:].lower())
        else:
            out.pos.append(a)
    return out


class Level(StrEnum):
    NOTE = "note"
    WARN = "warn"
    ERROR = "error"

    @property
    def color(self) -> str:
        match self:
            case Level.NOTE:
                return Fore.CYAN
            case Level.WARN:
                return Fore.YELLOW
            case Level.ERROR:
                return Fore.RED


_quiet = False


def set_quiet(quiet: bool) -> None:
    global _quiet
    _quiet = quiet


def is_quiet() -> bool:
    return _quiet


def message(level: Level, text: str, tip: Optional[str] = None) -> None:
    if level == Level.NOTE and _quiet:
        return
    c = level.color
    print()
    print(f" {c}{level.value:>5} |{Fore.RESET} {Style.BRIGHT}{text}{Style.NORMAL}")
    if tip:
        print(f"       {c}|{Fore.RESET} Tip: {tip}")


def note(text: str, tip: Optional[str] = None) -> None:
    message(Level.NOTE, text, tip)


def warn(text: str, tip: Optional[str] = None) -> None:
    message(Level.WARN, text, tip)


def error(text: str, tip: Optional[str] = None) -> None:
    message(Level.ERROR, text, tip)


LINE_WIDTH = 120


# One bold status line, cut to the line width.
def progress(text: str) -> None:
    if _quiet:
        return
    if len(text) > LINE_WIDTH - 2:
        text = text[: LINE_WIDTH - 5] + "..."
    print(f"{Style.BRIGHT}{text}{Style.NORMAL}")


def success(text: str) -> None:
    print(f"{Fore.GREEN}{Style.BRIGHT}{text}{Style.RESET_ALL}")


def failure(text: str) -> None:
    print(f"{Fore.RED}{Style.BRIGHT}{text}{Style.RESET_ALL}")


# Print `text` indented, hard-wrapping lines at the line width.
def wrapped(indent: int, text: str) -> None:
    width = LINE_WIDTH - indent
    pad = " " * indent
    for line in text.splitlines():
        for start in range(0, max(len(line), 1), width):
            print(pad + line[start : start + width])


# Left-aligned columns, two spaces apart.
def table(header: list[str], rows: list[list[str]]) -> str:
    lines = [header, *rows]
    widths = [max(len(r[i]) for r in lines) for i in range(len(header))]
    return "\n".join(
        "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in lines
    )
