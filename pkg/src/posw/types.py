"""Domain types for the PoSw consensus protocol.

A class label is a plain integer index in ``[0, K)``; mapping indices to
human-readable names is a dataset-level concern. Everything here is immutable
so round traces can be compared structurally (the distributed harness is
checked element-wise against the centralized reference).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal

from .errors import BeliefError, ConfigError

# Softmax outputs carry rounding error; vectors within this distance of the
# probability simplex are accepted as-is.
SIMPLEX_TOLERANCE = 1e-6

ClassLabel = int
PreferenceOrder = tuple[ClassLabel, ...]

LocalTiePolicy = Literal["lowest-index", "seeded-random"]
EarlyStopBasis = Literal["peers", "classes"]


@dataclass(frozen=True, slots=True)
class BeliefVector:
    """One classifier's probability distribution over the K class labels."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.probs) < 2:
            raise BeliefError(f"a belief vector needs at least 2 classes, got {len(self.probs)}")
        for i, p in enumerate(self.probs):
            if not (0.0 <= p <= 1.0):
                raise BeliefError(f"probability {p!r} for class {i} is outside [0, 1]")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > SIMPLEX_TOLERANCE:
            raise BeliefError(
                f"probabilities sum to {total!r}; must be within {SIMPLEX_TOLERANCE} of 1"
            )

    @classmethod
    def coerce(
        cls, values: BeliefVector | Iterable[float], renormalize: bool = False
    ) -> BeliefVector:
        """Build from any float iterable, optionally rescaling a drifted sum.

        Renormalization only rescales vectors whose sum drifted beyond the
        simplex tolerance; already-valid vectors pass through bit-exactly.
        Entries outside [0, 1] are rejected either way.
        """
        if isinstance(values, BeliefVector):
            return values
        probs = tuple(float(p) for p in values)
        if renormalize:
            for i, p in enumerate(probs):
                if not (0.0 <= p <= 1.0):
                    raise BeliefError(f"probability {p!r} for class {i} is outside [0, 1]")
            total = math.fsum(probs)
            if total <= 0.0:
                raise BeliefError("cannot renormalize a vector that sums to 0")
            if abs(total - 1.0) > SIMPLEX_TOLERANCE:
                probs = tuple(p / total for p in probs)
        return cls(probs)

    @property
    def k(self) -> int:
        return len(self.probs)


@dataclass(frozen=True, slots=True)
class VoteMessage:
    """The (label, probability) pair a peer broadcasts in a round."""

    peer_id: int
    label: ClassLabel
    prob: float


@dataclass(frozen=True, slots=True)
class PeerState:
    """A peer's position within its own preference order.

    ``current_label`` and ``current_prob`` always agree with ``pref[cursor]``;
    cursor 0 means the peer proposes its local best.
    """

    peer_id: int
    belief: BeliefVector
    pref: PreferenceOrder
    cursor: int
    current_label: ClassLabel
    current_prob: float


@dataclass(frozen=True)
class GlobalBestSet:
    """The label(s) holding the maximum vote count after a round's tally.

    ``prob_sums`` is populated only when vote-count tie resolution ran; it maps
    each max-vote label to its summed broadcast probability.
    """

    labels: frozenset[ClassLabel]
    max_votes: int
    prob_sums: dict[ClassLabel, float] | None = None

    def sorted_labels(self) -> tuple[ClassLabel, ...]:
        return tuple(sorted(self.labels))


@dataclass(frozen=True, slots=True)
class ConsensusConfig:
    """Tunables for a consensus run; the defaults are the reference behavior.

    ``round_cap_factor`` of ``None`` means "number of peers", giving an overall
    cap of N*K*(K-1) rounds. ``early_stop_basis`` picks what a "majority"
    counts over: the peers casting votes (default) or, for exploration only,
    the number of classes.
    """

    early_stop: bool = True
    round_cap_factor: int | None = None
    tie_tolerance: float = 1e-9
    rng_seed: int | None = None
    local_tie_policy: str = "lowest-index"
    early_stop_basis: str = "peers"

    def validate(self) -> None:
        if self.round_cap_factor is not None and self.round_cap_factor < 1:
            raise ConfigError("round_cap_factor must be >= 1")
        if self.tie_tolerance < 0:
            raise ConfigError("tie_tolerance must be >= 0")
        if self.local_tie_policy not in ("lowest-index", "seeded-random"):
            raise ConfigError(f"unknown local_tie_policy {self.local_tie_policy!r}")
        if self.early_stop_basis not in ("peers", "classes"):
            raise ConfigError(f"unknown early_stop_basis {self.early_stop_basis!r}")
        if self.local_tie_policy == "seeded-random" and self.rng_seed is None:
            raise ConfigError("the seeded-random tie policy needs an rng_seed")


@dataclass(frozen=True, slots=True)
class RoundRecord:
    """Everything observable about one protocol round.

    ``moved`` lists the peers whose proposal changed going *into* this round,
    so round 1 always has ``moved == ()``.
    """

    round_no: int
    moved: tuple[int, ...]
    messages: tuple[VoteMessage, ...]
    counts: dict[ClassLabel, int]
    best: GlobalBestSet


@dataclass(frozen=True, slots=True)
class ConsensusResult:
    """Outcome of a full consensus run, with the per-round trace.

    ``used_index_tie_break`` is True when any decision during the run fell
    back on the deterministic lowest-index rule (equal probabilities inside a
    belief vector, or a still-plural best set at convergence).
    """

    final_label: ClassLabel
    rounds: int
    early_stopped: bool
    trace: tuple[RoundRecord, ...]
    used_index_tie_break: bool
