"""Error taxonomy for the simulator.

Every failure mode raised by the package derives from :class:`SimulationError`
so callers (CLI, service) can map them to diagnostics uniformly.  Errors that
occur inside a running scenario carry the failing timestamp.
"""

from __future__ import annotations


class SimulationError(Exception):
    """Base class for all simulator errors."""

    def __init__(self, message: str, t: float | None = None):
        self.t = t
        if t is not None:
            message = f"t={t:.3f}s: {message}"
        super().__init__(message)


class TautOrOverstretched(SimulationError):
    """Endpoint chord is at or beyond the cable length; no slack curve exists."""


class DegenerateVertical(SimulationError):
    """Cable endpoints are (nearly) vertically aligned; the hanging-curve solve is ill-posed."""


class NegativeNormal(SimulationError):
    """Net upward pull on the box exceeds its weight; the box would lift off."""


class Infeasible(SimulationError):
    """Demanded force lies outside the cone the two cable segments can produce."""


class InvalidTransition(SimulationError):
    """A (mode, event) pair that is not an edge of the contact automaton."""


class FloorViolation(SimulationError):
    """No quadrotor placement honors the altitude floor."""


class Unreachable(SimulationError):
    """Requested contact placement cannot be reached with the given cable and box."""


class AttitudeSingular(SimulationError):
    """Desired force is too small to define a thrust direction."""


class ParseError(SimulationError):
    """Configuration file is not syntactically valid."""


class ValidationError(SimulationError):
    """Configuration violates an invariant (names the offending field)."""


class MalformedLog(SimulationError):
    """A log file does not conform to the CSV schema (carries the row number)."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class SimulationDiverged(SimulationError):
    """A state magnitude exceeded the divergence bound during integration."""
