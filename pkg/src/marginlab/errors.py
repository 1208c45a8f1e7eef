"""Exception types raised by the marginlab modules.

Every error that a caller is expected to handle has its own class so tests
and the CLI can discriminate without string matching.  Configuration and
input-validation problems derive from ValueError; runtime failures of a
backend or analysis derive from RuntimeError.
"""

from __future__ import annotations


class MarginLabError(Exception):
    """Base class for all marginlab errors."""


class UnsupportedVoltage(MarginLabError, ValueError):
    """Voltage is not one of the supply steps in the guardband table."""


class DegenerateVoltage(MarginLabError, ValueError):
    """Voltage is at or below the threshold-voltage analog of the model."""


class InvalidCoreCount(MarginLabError, ValueError):
    """Active core count outside the 1..9 range (8 cluster cores + FC)."""


class CalibrationDiverged(MarginLabError, RuntimeError):
    """Least-squares calibration could not meet its residual tolerance."""


class InvalidSeed(MarginLabError, ValueError):
    """Workload generator seed outside the generator family's domain."""


class IndexOutOfRange(MarginLabError, IndexError):
    """Corruption flip iteration or bit index outside the run."""


class MalformedFrame(MarginLabError, ValueError):
    """Wire-protocol frame that does not parse.

    Carries the byte offset of the first offending byte.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class EmptyWindow(MarginLabError, ValueError):
    """Power-trace trigger window holds fewer than two samples."""


class NonMonotonicTimestamps(MarginLabError, ValueError):
    """Power-trace timestamps go backwards."""


class EmptyPlan(MarginLabError, ValueError):
    """Sweep plan enumerates no test points."""


class BackendFailure(MarginLabError, RuntimeError):
    """A backend raised mid-campaign; partial records were flushed."""


class NoFailuresObserved(MarginLabError, RuntimeError):
    """Summary requested over records that contain no error or lockup."""


class InsufficientData(MarginLabError, RuntimeError):
    """Size-independence check lacks the size coverage it needs."""


class NoCommonFrequency(MarginLabError, RuntimeError):
    """No frequency has both a within-guardband baseline and a candidate."""


class NoRecords(MarginLabError, ValueError):
    """Analysis invoked on an empty record set."""


class InfeasibleTarget(MarginLabError, ValueError):
    """Controller target frequency unreachable at any supply step."""


class NoGuardbandBaseline(MarginLabError, RuntimeError):
    """No supply step's guardband covers the requested frequency."""


class ConfigError(MarginLabError, ValueError):
    """Campaign configuration failed validation.

    Carries the dotted path of the offending field.
    """

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path
