"""Error taxonomy shared by every qfl module.

Every domain failure raises a QflError subclass. The class name doubles as
the machine-readable error code used by the HTTP service and the CLI, so
renaming a class here is a wire-format change.
"""

from __future__ import annotations


class QflError(Exception):
    """Base class for all qfl domain errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# --- document / schema problems -------------------------------------------

class SchemaError(QflError):
    """Document does not conform to its interchange schema."""


class ValidationError(QflError):
    """Document parsed but violates a model invariant (dangling id, cycle, ...)."""


class ConfigError(QflError):
    """Configuration file missing or inconsistent."""


# --- evaluation -------------------------------------------------------------

class FieldMissing(QflError):
    """A record lacks a field named by an evaluator spec."""


class MissingMetricValue(QflError):
    """evaluate_snapshot called without values for one or more metrics."""


class EmptyChildren(QflError):
    """Aggregation over an empty child list."""


class UnknownElement(QflError):
    """Element id not present (or not usable) in the quality model or store."""


class ValueOutOfRange(QflError):
    """A supplied value falls outside [0, 1]."""


class SourceMissing(QflError):
    """No snapshot available for a metric's data source."""


# --- store ------------------------------------------------------------------

class OutOfOrderTimestamp(QflError):
    """Appended point is older than the stored tail for its element."""


class StorageFailure(QflError):
    """Underlying storage could not complete a write."""


class MissingRationale(QflError):
    """A rejection decision was submitted without a rationale."""


# --- alerting ---------------------------------------------------------------

class UnknownAlert(QflError):
    """Alert id not found."""


class IllegalTransition(QflError):
    """Requested lifecycle transition is not allowed from the current state."""


# --- catalogue --------------------------------------------------------------

class DanglingMetricLink(QflError):
    """Pattern links to a metric id absent from the active model."""


class MissingParam(QflError):
    """Pattern instantiation lacks a value for a declared parameter."""


class ParamOutOfRange(QflError):
    """Parameter value violates its correctness constraint."""


class PatternNotApplicable(QflError):
    """Pattern is not a candidate for the alert it was applied to."""


# --- workflow ---------------------------------------------------------------

class UnknownRequirement(QflError):
    """Quality requirement id not found."""


# --- analytics --------------------------------------------------------------

class EmptySeries(QflError):
    """Forecast requested over an empty history."""


class BadAlpha(QflError):
    """Smoothing coefficient outside (0, 1]."""


class InsufficientHistory(QflError):
    """Not enough points for the requested forecast method."""


# --- backlog client ---------------------------------------------------------

class RemoteError(QflError):
    """Transport failure or 5xx from the backlog service; retryable."""


class BacklogUnavailable(QflError):
    """Backlog service stayed unreachable after retries; caller state unchanged."""


class ConflictError(QflError):
    """Same idempotency key reused with a different payload."""


class UnknownParent(QflError):
    """Referenced parent work package does not exist."""


class UnknownWorkPackage(QflError):
    """Work package id not found."""


class UnknownStatus(QflError):
    """Status outside the backlog service's vocabulary."""


# CLI exit-code classes: 1 domain error, 2 usage, 3 I/O or remote.
IO_ERRORS = (StorageFailure, RemoteError, BacklogUnavailable)
