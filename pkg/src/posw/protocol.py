"""Per-round operations and the full convergence loop of the PoSw protocol.

The protocol runs in lock-step rounds over N peers, each holding a static
probability distribution over K class labels:

1. every peer broadcasts its current proposal ``(label, prob)``, initially
   the label it believes in most;
2. votes are tallied; the "global best" set is the label(s) with the maximum
   vote count, tie-broken by the summed broadcast probabilities;
3. every peer whose proposal is outside the global best set moves to the next
   label in its own descending-probability preference order (wrapping back to
   the top after exhausting all K);
4. repeat until every proposal lies inside the global best set or, with
   early stopping on, until one label holds a strict majority of votes.

All functions are pure and deterministic for a fixed configuration, which is
what makes the centralized loop usable as a reference oracle for the
distributed harness.
"""

from __future__ import annotations

import math
import random
from dataclasses import replace
from typing import Iterable, Sequence

from .errors import BeliefError, CapExceededError, ProtocolError
from .types import (
    BeliefVector,
    ClassLabel,
    ConsensusConfig,
    ConsensusResult,
    GlobalBestSet,
    PeerState,
    PreferenceOrder,
    RoundRecord,
    VoteMessage,
)

__all__ = [
    "derive_preference_order",
    "has_probability_ties",
    "initial_state",
    "build_states",
    "local_best",
    "tally",
    "probability_sum",
    "compute_global_best",
    "move_peer",
    "check_converged",
    "check_early_stop",
    "resolve_output",
    "run_consensus",
]


def derive_preference_order(
    belief: BeliefVector, rng: random.Random | None = None
) -> PreferenceOrder:
    """Label indices sorted by descending probability.

    Equal probabilities order by ascending label index. When ``rng`` is given
    (seeded-random tie policy) each run of equal probabilities is shuffled
    instead, fixing a random-but-reproducible order for the whole run.
    """
    probs = belief.probs
    order = sorted(range(len(probs)), key=lambda c: (-probs[c], c))
    if rng is not None:
        shuffled: list[int] = []
        i = 0
        while i < len(order):
            j = i
            while j + 1 < len(order) and probs[order[j + 1]] == probs[order[i]]:
                j += 1
            group = order[i : j + 1]
            if len(group) > 1:
                rng.shuffle(group)
            shuffled.extend(group)
            i = j + 1
        order = shuffled
    return tuple(order)


def has_probability_ties(belief: BeliefVector) -> bool:
    """True when two classes share the exact same probability."""
    ordered = sorted(belief.probs)
    return any(ordered[i] == ordered[i + 1] for i in range(len(ordered) - 1))


def initial_state(
    peer_id: int, belief: BeliefVector, rng: random.Random | None = None
) -> PeerState:
    """A peer positioned at its local best (cursor 0)."""
    pref = derive_preference_order(belief, rng)
    top = pref[0]
    return PeerState(peer_id, belief, pref, 0, top, belief.probs[top])


def build_states(
    beliefs: Sequence[BeliefVector | Iterable[float]], config: ConsensusConfig
) -> list[PeerState]:
    """Validate a peer roster and place every peer at its local best."""
    vectors = [BeliefVector.coerce(b) for b in beliefs]
    if len(vectors) < 2:
        raise BeliefError(f"consensus needs at least 2 peers, got {len(vectors)}")
    k = vectors[0].k
    for i, v in enumerate(vectors):
        if v.k != k:
            raise BeliefError(f"peer {i} has {v.k} classes, expected {k}")
    rng = None
    if config.local_tie_policy == "seeded-random":
        # str seeding hashes the text, which is stable across platforms.
        rng = random.Random(f"posw:{config.rng_seed}")
    return [initial_state(i, v, rng) for i, v in enumerate(vectors)]


def local_best(state: PeerState) -> VoteMessage:
    """The message a peer broadcasts: its current proposal and confidence."""
    return VoteMessage(state.peer_id, state.current_label, state.current_prob)


def tally(messages: Iterable[VoteMessage]) -> dict[ClassLabel, int]:
    """Vote counts per label; rejects duplicate senders."""
    counts: dict[ClassLabel, int] = {}
    seen: set[int] = set()
    for m in messages:
        if m.peer_id in seen:
            raise ProtocolError(f"duplicate vote from peer {m.peer_id}")
        seen.add(m.peer_id)
        counts[m.label] = counts.get(m.label, 0) + 1
    return counts


def probability_sum(label: ClassLabel, messages: Iterable[VoteMessage]) -> float:
    """Summed broadcast probability over the votes cast for ``label``.

    Uses exact float summation, so the result is independent of message order.
    """
    return math.fsum(m.prob for m in messages if m.label == label)


def compute_global_best(
    messages: Sequence[VoteMessage], tie_tolerance: float = 1e-9
) -> GlobalBestSet:
    """The global best set for one round of votes.

    A unique max-vote label wins outright. Max-vote ties fall back to the
    summed probabilities; sums within ``tie_tolerance`` of the best sum count
    as tied, and any residual tie keeps all tied labels in the set.
    """
    if not messages:
        raise ProtocolError("cannot compute a global best from zero votes")
    counts = tally(messages)
    max_votes = max(counts.values())
    top = [c for c, v in counts.items() if v == max_votes]
    if len(top) == 1:
        return GlobalBestSet(frozenset(top), max_votes, None)
    sums = {c: probability_sum(c, messages) for c in sorted(top)}
    best_sum = max(sums.values())
    tied = frozenset(c for c, s in sums.items() if best_sum - s <= tie_tolerance)
    return GlobalBestSet(tied, max_votes, sums)


def move_peer(state: PeerState) -> PeerState:
    """Advance a peer to its next-most-believed label.

    After the least-believed label the cursor wraps back to the local best,
    restarting the walk.
    """
    cursor = (state.cursor + 1) % len(state.pref)
    label = state.pref[cursor]
    return replace(
        state, cursor=cursor, current_label=label, current_prob=state.belief.probs[label]
    )


def check_converged(states: Sequence[PeerState], best: GlobalBestSet) -> bool:
    """True when every peer's proposal lies inside the global best set."""
    return all(s.current_label in best.labels for s in states)


def check_early_stop(counts: dict[ClassLabel, int], n_peers: int) -> ClassLabel | None:
    """The label holding a strict majority (``n_peers // 2 + 1`` votes), if any.

    With ``n_peers`` equal to the number of voters at most one label can
    qualify; a majority label can never lose the lead in later rounds, so the
    run may stop immediately. Callers exploring the class-count basis may pass
    K instead, in which case several labels can qualify and the most-voted
    (lowest index on ties) is returned.
    """
    threshold = n_peers // 2 + 1
    winners = [c for c, v in counts.items() if v >= threshold]
    if not winners:
        return None
    return min(winners, key=lambda c: (-counts[c], c))


def resolve_output(best: GlobalBestSet) -> ClassLabel:
    """Final label for a converged run: lowest index if the set is plural."""
    return min(best.labels)


def run_consensus(
    beliefs: Sequence[BeliefVector | Iterable[float]],
    config: ConsensusConfig | None = None,
) -> ConsensusResult:
    """Run the full protocol to convergence (or early stop) and return a trace.

    Raises :class:`CapExceededError` when the loop passes
    ``round_cap_factor * K * (K-1)`` rounds, which signals a bug or an
    adversarial instance rather than a normal outcome.
    """
    cfg = config if config is not None else ConsensusConfig()
    cfg.validate()
    states = build_states(beliefs, cfg)
    n = len(states)
    k = states[0].belief.k
    factor = cfg.round_cap_factor if cfg.round_cap_factor is not None else n
    cap = factor * k * (k - 1)
    majority_over = n if cfg.early_stop_basis == "peers" else k

    tie_break = any(has_probability_ties(s.belief) for s in states)
    trace: list[RoundRecord] = []
    moved: tuple[int, ...] = ()
    round_no = 0
    while True:
        round_no += 1
        if round_no > cap:
            raise CapExceededError(
                f"no convergence after {cap} rounds (N={n}, K={k})",
                beliefs=tuple(s.belief.probs for s in states),
                config=cfg,
                rounds=cap,
            )
        messages = tuple(local_best(s) for s in states)
        counts = tally(messages)
        best = compute_global_best(messages, cfg.tie_tolerance)
        trace.append(RoundRecord(round_no, moved, messages, counts, best))

        if check_converged(states, best):
            plural = len(best.labels) > 1
            return ConsensusResult(
                resolve_output(best), round_no, False, tuple(trace), tie_break or plural
            )
        if cfg.early_stop:
            winner = check_early_stop(counts, majority_over)
            if winner is not None:
                return ConsensusResult(winner, round_no, True, tuple(trace), tie_break)

        moved = tuple(s.peer_id for s in states if s.current_label not in best.labels)
        movers = set(moved)
        states = [move_peer(s) if s.peer_id in movers else s for s in states]
