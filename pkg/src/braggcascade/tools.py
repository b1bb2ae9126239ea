from __future__ import annotations
import os
import sys
import threading


class BraggError(Exception):
    """Base class of all errors raised by :mod:`braggcascade`."""


class InvalidInput(BraggError, ValueError):
    """Arguments that violate the preconditions of an operation."""


class NoGuidedMode(BraggError):
    """The requested mode order is below cutoff for this geometry."""


class NoResonanceInWindow(BraggError):
    """The phase-matching residual does not change sign in the search window."""


class BandwidthBelowLengthLimit(BraggError, ValueError):
    """Requested bandwidth is narrower than a grating of this length allows."""


class SegmentationMismatch(BraggError, ValueError):
    """Perturbation list does not match the segmentation of the grating."""


class CompositionMismatch(BraggError, TypeError):
    """Exception for cascades evaluated under the wrong composition law."""

    def __init__(self, op: str, composition: str):
        super().__init__(f"Operation {op} cannot be applied to a {composition} cascade")


class CalibrationFailed(BraggError):
    """Noise calibration could not establish or close its bracket."""


class WindowOutOfRange(BraggError, ValueError):
    """Off-band window does not overlap the wavelength grid."""


class NotchTooShallow(BraggError):
    """Notch is not deep enough for the requested bandwidth criterion."""


class NoNotchFound(BraggError):
    """Spectrum is flat within the detection threshold."""


class InfeasibleTarget(BraggError):
    """No design satisfies the requested targets."""


class ConfigError(InvalidInput):
    """Configuration error attached to a dotted field path."""

    path: str

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class SpectrumFormatError(BraggError, ValueError):
    """Malformed spectrum file, with the offending line number."""

    line: int

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class Logger:
    active: bool = False

    def __call__(self, *args, **kwdargs):
        pass

    def __enter__(self) -> Logger:
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        pass

    def __bool__(self) -> bool:
        return False

    def close(self):
        pass


DEBUG = int(os.environ.get("BRAGGCASCADE_DEBUG", "0") or 0)
_STATE = threading.local()
NO_LOGGER = Logger()


def prefix() -> str:
    """Indentation of the calling thread's debug output."""
    return getattr(_STATE, "prefix", "")


class VerboseLogger(Logger):
    old_prefix: str
    level: int

    def __init__(self, level: int):
        self.old_prefix = prefix()
        self.level = level
        if level <= DEBUG:
            self.active = True
            _STATE.prefix = self.old_prefix + " "
        else:
            self.active = False

    def __bool__(self) -> bool:
        return self.active

    def __enter__(self) -> Logger:
        return self

    def __call__(self, *args, **kwdargs):
        if self.active:
            txt = " ".join([str(a) for a in args])
            lead = prefix()
            txt = "\n".join([lead + a for a in txt.split("\n")])
            kwdargs.setdefault("file", sys.stderr)
            print(txt, **kwdargs)

    def __exit__(self, exc_type, exc_value, traceback):
        self.close()

    def close(self):
        _STATE.prefix = self.old_prefix


def make_logger(level: int = 1) -> Logger:
    """Create an object that logs debug information. This object has a property
    `active` that determines whether logging is working. It also has a `__call__`
    method that allows invoking the object with the information to log, working
    as if it were a `print` statement directed to standard error."""
    if level > DEBUG:
        return NO_LOGGER
    return VerboseLogger(level)


def set_debug_level(level: int) -> int:
    """Change the global debug level and return the previous one."""
    global DEBUG
    old, DEBUG = DEBUG, int(level)
    return old


__all__ = [
    "BraggError",
    "InvalidInput",
    "NoGuidedMode",
    "NoResonanceInWindow",
    "BandwidthBelowLengthLimit",
    "SegmentationMismatch",
    "CompositionMismatch",
    "CalibrationFailed",
    "WindowOutOfRange",
    "NotchTooShallow",
    "NoNotchFound",
    "InfeasibleTarget",
    "ConfigError",
    "SpectrumFormatError",
    "Logger",
    "VerboseLogger",
    "make_logger",
    "set_debug_level",
    "prefix",
]
