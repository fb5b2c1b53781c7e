import operator
import re
from dataclasses import dataclass
from enum import StrEnum
from typing import Callable, Optional

VERSION = (1, 0)
VERSION_STR = f"{VERSION[0]}.{VERSION[1]}"

# `1.0`, `>=1.0`, `1.0+` (same as `>=1.0`), `<2.0`, ...
REQR_REGEX = re.compile(r"^(<=|>=|==|<|>|=)?(\d+)\.(\d+)(\+)?$")


class Comparator(StrEnum):
    LOWER = "<"
    LOWER_EQUAL = "<="
    EQUAL = "="
    GREATER_EQUAL = ">="
    GREATER = ">"

    @property
    def test(self) -> Callable[[tuple[int, int], tuple[int, int]], bool]:
        return _TESTS[self]


_TESTS = {
    Comparator.LOWER: operator.lt,
    Comparator.LOWER_EQUAL: operator.le,
    Comparator.EQUAL: operator.eq,
    Comparator.GREATER_EQUAL: operator.ge,
    Comparator.GREATER: operator.gt,
}


# Requirement on the critwave version, as written in `run.critwave`.
@dataclass(frozen=True)
class Reqr:
    comparator: Comparator
    major: int
    minor: int

    def is_satisfied(self, version: tuple[int, int] = VERSION) -> bool:
        return self.comparator.test(version, (self.major, self.minor))

    def __str__(self) -> str:
        prefix = "" if self.comparator == Comparator.EQUAL else self.comparator.value
        return f"{prefix}{self.major}.{self.minor}"


def parse_reqr(raw: str) -> Optional[Reqr]:
    res = REQR_REGEX.fullmatch(raw.strip())
    if res is None:
        return None
    prefix, major, minor, plus = res.groups()
    if prefix and plus:
        return None
    if plus:
        comparator = Comparator.GREATER_EQUAL
    elif prefix in (None, "==", "="):
        comparator = Comparator.EQUAL
    else:
        comparator = Comparator(prefix)
    return Reqr(comparator, int(major), int(minor))
