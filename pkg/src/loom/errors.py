"""Exception hierarchy shared across the engine, service, and CLI."""

from __future__ import annotations


class LoomError(Exception):
    """Base class for all engine errors."""


class ScenarioFormatError(LoomError):
    """Scenario document is structurally malformed (bad types, unknown keys)."""


class ScenarioValidationError(LoomError):
    """Scenario violates its invariants; carries the full violation report."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


class UnknownNodeError(LoomError):
    """Referenced node id does not exist in the tree."""


class DuplicateRootError(LoomError):
    """Attempted to add a second scene_setup node."""


class NestedPathsError(LoomError):
    """Compare endpoints are on the same root path (one is an ancestor of the other)."""


class EmptyStirError(LoomError):
    """Stir text was empty."""


class NoChangesError(LoomError):
    """Reshape submitted with a scenario identical to the effective one."""


class UnknownSpeakerError(LoomError):
    """Requested speaker is not in the effective cast."""


class BackendTransportError(LoomError):
    """Generation backend unreachable or returned a transport-level failure."""


class BackendParseError(LoomError):
    """Backend reply could not be parsed after a reprompt; carries the raw output."""

    def __init__(self, message: str, raw_output: str):
        super().__init__(message)
        self.raw_output = raw_output


class SessionIntegrityError(LoomError):
    """Replay hit a cache miss for committed history; the session is corrupted."""


class UnknownSessionError(LoomError):
    """Referenced session id does not exist."""


class PersistenceError(LoomError):
    """Session document could not be written or read back."""
