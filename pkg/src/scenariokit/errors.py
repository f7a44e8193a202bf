"""Exception hierarchy shared across the package.

Every error raised on a supported code path derives from EngineError so the
CLI can map failures onto its exit-code convention without pattern matching
on message text.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all domain-level failures."""


class SchemaError(EngineError):
    """A value violates a local structural invariant (bad enum, bad range,
    missing required field)."""


class ReferenceError_(EngineError):
    """An identifier does not resolve against the assessment state."""


class MissingDataError(EngineError):
    """A computation needs a value that is absent and must not be imputed."""


class UsageError(EngineError):
    """An operation was called in a way its contract forbids (wrong rule,
    wrong file kind, mismatched stages)."""


class BindingError(EngineError):
    """Option or action parameter bindings are unknown or incomplete."""


class CycleError(EngineError):
    """An insert would break a required acyclicity guarantee."""


class NormalizationError(EngineError):
    """A probability vector or weight vector fails its sum constraint."""


class ChainError(EngineError):
    """A state lineage is broken: predecessor digests do not line up."""
