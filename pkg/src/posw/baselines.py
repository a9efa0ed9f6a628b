"""Voting baselines PoSw is compared against.

Plurality voting and the 2/3-threshold rule decide from one round of local
bests and can fail to decide at all; soft voting is the centralized oracle
that sums every peer's full distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import BeliefError, ProtocolError
from .types import BeliefVector, ClassLabel, VoteMessage
from .protocol import tally

DECIDED = "decided"
TIE = "tie"
NO_CONSENSUS = "no-consensus"


@dataclass(frozen=True, slots=True)
class BaselineOutcome:
    decision: ClassLabel | None
    status: str

    def __post_init__(self) -> None:
        if (self.decision is not None) != (self.status == DECIDED):
            raise ValueError("decision must be present exactly when status is 'decided'")


def majority_vote(messages: Sequence[VoteMessage]) -> BaselineOutcome:
    """Plurality over one round of votes; ties are reported, not resolved."""
    if not messages:
        raise ProtocolError("majority vote needs at least one vote")
    counts = tally(messages)
    max_votes = max(counts.values())
    top = [c for c, v in counts.items() if v == max_votes]
    if len(top) == 1:
        return BaselineOutcome(top[0], DECIDED)
    return BaselineOutcome(None, TIE)


def bft_two_thirds(messages: Sequence[VoteMessage], n_peers: int) -> BaselineOutcome:
    """Decide only when one label gathers at least ceil(2N/3) votes."""
    if not messages:
        raise ProtocolError("threshold vote needs at least one vote")
    threshold = -(-2 * n_peers // 3)
    counts = tally(messages)
    for label in sorted(counts):
        if counts[label] >= threshold:
            return BaselineOutcome(label, DECIDED)
    return BaselineOutcome(None, NO_CONSENSUS)


def soft_vote(beliefs: Sequence[BeliefVector | Iterable[float]]) -> ClassLabel:
    """Argmax of the per-class probability sums over all peers.

    The centralized comparator: it sees every full distribution, which the
    round-based protocol deliberately does not require. Exact ties resolve to
    the lowest label index.
    """
    vectors = [BeliefVector.coerce(b) for b in beliefs]
    if not vectors:
        raise BeliefError("soft vote needs at least one peer")
    k = vectors[0].k
    for i, v in enumerate(vectors):
        if v.k != k:
            raise BeliefError(f"peer {i} has {v.k} classes, expected {k}")
    sums = [math.fsum(v.probs[c] for v in vectors) for c in range(k)]
    return min(range(k), key=lambda c: (-sums[c], c))
