"""Exception types shared across the engine."""

from __future__ import annotations


class SchemagateError(Exception):
    """Base class for engine errors."""


class NotFound(SchemagateError):
    """A tool, workflow, dataset, run, or version does not exist."""


class Retired(SchemagateError):
    """The requested entry exists but has been retired."""


class DuplicateVersion(SchemagateError):
    """An id + version pair is already published; published entries are immutable."""


class StorageError(SchemagateError):
    """Persistence failed or a store is corrupt."""


class DocumentInvalid(SchemagateError):
    """A document failed schema validation; carries the collected diagnostics."""

    def __init__(self, diagnostics, message: str = "document failed validation"):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class TypeSyntaxError(SchemagateError):
    """A type expression failed to parse; records the offending token and position."""

    def __init__(self, text: str, token: str, position: int):
        super().__init__(f"invalid type expression {text!r}: unexpected {token!r} at position {position}")
        self.text = text
        self.token = token
        self.position = position


class CyclicDependencies(SchemagateError):
    """A tool dependency closure contains a cycle."""

    def __init__(self, cycle):
        super().__init__("cyclic tool dependencies: " + " -> ".join(cycle))
        self.cycle = list(cycle)


class GateStateError(SchemagateError):
    """An invocation is in the wrong state for the requested gate operation."""


class NotValidated(GateStateError):
    """Approval or dispatch requested before the invocation reached the required state."""


class GateRegression(GateStateError):
    """Re-validation at dispatch failed because the registry changed since approval."""


class UnknownParameter(SchemagateError):
    """A supplied parameter name is not part of the workflow's parameter schema."""


class PlannerUnavailable(SchemagateError):
    """The remote planner adapter failed; the session remains usable."""


class ActionArgumentError(SchemagateError):
    """A proposed platform action is unknown or its arguments failed their schema."""

    def __init__(self, message: str, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class AdapterMissing(SchemagateError):
    """No tool adapter is registered for a tool required by the workflow."""


class ExecutorUnavailable(SchemagateError):
    """The executor rejected a submission for operational reasons."""
