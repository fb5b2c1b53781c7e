"""
Exception types raised by the library. The command line maps them to exit
codes.
"""

from typing import Optional


class CritwaveError(Exception):
    # Process exit code used by the command line for this kind of error.
    exit_code = 1

    def __init__(self, message: str, tip: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.tip = tip


# Invalid configuration or violated precondition. `path` is the dotted
# configuration key, e.g. `time.n_t`, when one applies.
class ConfigError(CritwaveError):
    exit_code = 2

    def __init__(self, path: str, message: str, tip: Optional[str] = None):
        super().__init__(f"{path}: {message}" if path else message, tip)
        self.path = path


class GridMismatchError(ConfigError):
    def __init__(self, message: str):
        super().__init__("", message)


# A solve produced non-finite values. `time` is the last time with a valid
# state.
class DivergenceError(CritwaveError):
    exit_code = 3

    def __init__(self, time: float, message: str, tip: Optional[str] = None):
        super().__init__(f"{message} (last valid time {time:.6g})", tip)
        self.time = time


# The Strichartz monitor crossed its threshold.
class BlowupError(DivergenceError):
    pass


class SingularityError(CritwaveError):
    pass


class CheckFailure(CritwaveError):
    exit_code = 4
