"""Exception hierarchy shared across the posw package."""

from __future__ import annotations


class PoswError(Exception):
    """Base class for all posw errors."""


class ConfigError(PoswError, ValueError):
    """A consensus configuration field is out of range or inconsistent."""


class BeliefError(PoswError, ValueError):
    """A belief vector or peer roster fails validation."""


class ProtocolError(PoswError):
    """A protocol precondition was violated (duplicate vote, empty round, ...)."""


class DatasetError(PoswError, ValueError):
    """A prediction dataset file or structure fails validation."""


class CapExceededError(PoswError):
    """The consensus loop ran past its round cap.

    The cap is sized so that hitting it signals either an implementation bug
    or a genuinely adversarial instance; the error carries enough context to
    replay the offending run.
    """

    def __init__(
        self,
        message: str,
        *,
        beliefs=None,
        config=None,
        rounds: int | None = None,
        sample_id: str | None = None,
    ):
        super().__init__(message)
        self.beliefs = beliefs
        self.config = config
        self.rounds = rounds
        self.sample_id = sample_id

    def replay_payload(self) -> dict:
        """A JSON-safe dict from which the failing run can be re-executed."""
        from dataclasses import asdict

        return {
            "sample_id": self.sample_id,
            "rounds": self.rounds,
            "beliefs": [list(b) for b in self.beliefs] if self.beliefs is not None else None,
            "config": asdict(self.config) if self.config is not None else None,
        }
