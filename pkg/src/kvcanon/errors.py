"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class KvcanonError(Exception):
    """Base class for all toolkit errors."""


class CorpusFormatError(KvcanonError, ValueError):
    """A corpus/prediction file could not be parsed (names the offending line)."""


class ValidationError(KvcanonError, ValueError):
    """Well-formed input violating a documented invariant."""


class ConfigError(KvcanonError, ValueError):
    """Inconsistent or out-of-range configuration."""


class ConflictError(KvcanonError):
    """Inventory mutation that would break alias/canonical disjointness."""


class StateError(KvcanonError):
    """Operation applied to an object in the wrong lifecycle state."""


class BackendError(KvcanonError):
    """A logit backend failed or returned a malformed response."""
