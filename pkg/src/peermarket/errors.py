"""Domain error hierarchy.

User-level errors (bad requests against a healthy engine) all derive from
MarketError. Engine-bug errors (broken internal invariants that must abort
the command) derive from EngineInvariantError and should never be reachable
through the public API.
"""

from __future__ import annotations


class MarketError(Exception):
    """Base class for user-level domain errors."""

    #: short machine-readable code, defaults to the class name
    @property
    def code(self) -> str:
        return type(self).__name__


class DuplicateParticipant(MarketError):
    pass


class UnknownParticipant(MarketError):
    pass


class DuplicateTitle(MarketError):
    pass


class UnknownProject(MarketError):
    pass


class UnknownOrder(MarketError):
    pass


class NotOwner(MarketError):
    pass


class AlreadyFilled(MarketError):
    pass


class InsufficientFunds(MarketError):
    pass


class InsufficientHoldings(MarketError):
    pass


class ZeroQuantity(MarketError):
    pass


class NonPositivePrice(MarketError):
    pass


class DegenerateTrade(MarketError):
    pass


class StaleRevision(MarketError):
    pass


class MissingValuation(MarketError):
    """A held project lacks an ex-post value; carries the project ids."""

    def __init__(self, project_ids: list[str]):
        self.project_ids = sorted(project_ids)
        super().__init__(f"missing ex-post valuation for: {', '.join(self.project_ids)}")


class InsufficientPoints(MarketError):
    pass


class NonPositiveValue(MarketError):
    pass


class InvalidConfig(MarketError):
    pass


class EngineInvariantError(Exception):
    """An internal invariant broke; signals an engine bug, not user error."""


class InsufficientReservation(EngineInvariantError):
    pass


class JournalError(Exception):
    """Base class for journal persistence/replay errors."""


class SequenceGap(JournalError):
    pass


class CorruptJournal(JournalError):
    pass


class ReplayDivergence(JournalError):
    pass


class StorageFailure(JournalError):
    pass


class JournalLocked(JournalError):
    pass
