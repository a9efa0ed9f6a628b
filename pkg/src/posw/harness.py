"""Lock-step network simulation of the protocol, with fault injection.

Every peer runs as an independent state machine: it broadcasts its proposal,
receives everyone's messages through a reliable bus, computes the global best
set from its own inbox, and decides for itself whether to move. The round
boundary is a barrier (all sends complete before anyone tallies), so honest
nodes always share one view. A fault-free run must reproduce the centralized
reference trace element-for-element, which is asserted per-round here and at
scale in the test suite.

Fault vocabulary: ``Silent`` peers stop emitting (a crash; the majority
threshold still counts them), ``FixedLiar`` peers broadcast one constant
(label, prob) claim forever. A liar whose claim never enters the global best
set blocks full convergence, so such runs end via early stop or hit the round
cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import CapExceededError, ProtocolError
from .protocol import (
    build_states,
    check_early_stop,
    compute_global_best,
    has_probability_ties,
    local_best,
    move_peer,
    resolve_output,
    run_consensus,
    tally,
)
from .types import (
    BeliefVector,
    ConsensusConfig,
    ConsensusResult,
    PeerState,
    RoundRecord,
    VoteMessage,
)


@dataclass(frozen=True, slots=True)
class Honest:
    def describe(self) -> str:
        return "honest"


@dataclass(frozen=True, slots=True)
class Silent:
    def describe(self) -> str:
        return "silent"


@dataclass(frozen=True, slots=True)
class FixedLiar:
    label: int
    prob: float

    def describe(self) -> str:
        return f"fixed-liar(label={self.label}, prob={self.prob})"


Behavior = Honest | Silent | FixedLiar


@dataclass
class PeerNode:
    """One simulated peer: protocol state, mailbox, and behavior."""

    state: PeerState
    behavior: Behavior = field(default_factory=Honest)
    inbox: tuple[VoteMessage, ...] = ()
    pending_move: bool = False

    def emit(self) -> VoteMessage | None:
        if isinstance(self.behavior, Silent):
            return None
        if isinstance(self.behavior, FixedLiar):
            return VoteMessage(self.state.peer_id, self.behavior.label, self.behavior.prob)
        return local_best(self.state)


@dataclass
class BroadcastBus:
    """Reliable lock-step broadcast: every message reaches every node once."""

    round_number: int = 0
    delivered: list[tuple[VoteMessage, ...]] = field(default_factory=list)

    def broadcast(self, messages: tuple[VoteMessage, ...]) -> tuple[VoteMessage, ...]:
        self.round_number += 1
        self.delivered.append(messages)
        return messages


@dataclass
class Network:
    nodes: list[PeerNode]
    config: ConsensusConfig
    bus: BroadcastBus
    cap: int
    majority_over: int
    trace: list[RoundRecord] = field(default_factory=list)
    done: bool = False
    final_label: int | None = None
    early_stopped: bool = False
    plural_final: bool = False

    @property
    def round_number(self) -> int:
        return self.bus.round_number


@dataclass(frozen=True)
class SimulationReport:
    result: ConsensusResult
    reference_match: bool
    fault_summary: str


def spawn_network(
    beliefs: Sequence[BeliefVector | Iterable[float]],
    config: ConsensusConfig | None = None,
    behaviors: Sequence[Behavior] | None = None,
) -> Network:
    """Initialize N peer nodes at their local bests."""
    cfg = config if config is not None else ConsensusConfig()
    cfg.validate()
    states = build_states(beliefs, cfg)
    if behaviors is None:
        behaviors = [Honest()] * len(states)
    if len(behaviors) != len(states):
        raise ProtocolError(
            f"{len(behaviors)} behaviors given for {len(states)} peers"
        )
    if not any(isinstance(b, Honest) for b in behaviors):
        raise ProtocolError("at least one peer must be honest")
    n = len(states)
    k = states[0].belief.k
    factor = cfg.round_cap_factor if cfg.round_cap_factor is not None else n
    return Network(
        nodes=[PeerNode(state=s, behavior=b) for s, b in zip(states, behaviors)],
        config=cfg,
        bus=BroadcastBus(),
        cap=factor * k * (k - 1),
        majority_over=n if cfg.early_stop_basis == "peers" else k,
    )


def inject_fault(network: Network, peer_id: int, behavior: Behavior) -> None:
    """Replace a peer's behavior for all subsequent rounds."""
    for node in network.nodes:
        if node.state.peer_id == peer_id:
            node.behavior = behavior
            return
    raise ProtocolError(f"unknown peer {peer_id}")


def step_round(network: Network) -> RoundRecord:
    """Advance the network one round: move, broadcast, tally, decide."""
    if network.done:
        raise ProtocolError("network already converged; no further rounds to run")
    if network.round_number + 1 > network.cap:
        raise CapExceededError(
            f"no convergence after {network.cap} rounds",
            beliefs=tuple(n.state.belief.probs for n in network.nodes),
            config=network.config,
            rounds=network.cap,
        )

    moved: list[int] = []
    for node in network.nodes:
        if node.pending_move:
            node.state = move_peer(node.state)
            node.pending_move = False
            moved.append(node.state.peer_id)

    emitted = tuple(m for m in (node.emit() for node in network.nodes) if m is not None)
    delivered = network.bus.broadcast(emitted)
    for node in network.nodes:
        node.inbox = delivered

    counts = tally(delivered)
    best = compute_global_best(delivered, network.config.tie_tolerance)
    # Honest nodes recompute the global best independently; lock-step delivery
    # guarantees their views agree, and we assert it rather than assume it.
    for node in network.nodes:
        if isinstance(node.behavior, Honest):
            view = compute_global_best(node.inbox, network.config.tie_tolerance)
            if view != best:
                raise ProtocolError(
                    f"peer {node.state.peer_id} computed a divergent global best"
                )

    record = RoundRecord(network.round_number, tuple(moved), delivered, counts, best)
    network.trace.append(record)

    if all(m.label in best.labels for m in delivered):
        network.done = True
        network.final_label = resolve_output(best)
        network.plural_final = len(best.labels) > 1
        return record
    if network.config.early_stop:
        winner = check_early_stop(counts, network.majority_over)
        if winner is not None:
            network.done = True
            network.final_label = winner
            network.early_stopped = True
            return record

    for node in network.nodes:
        if isinstance(node.behavior, Honest):
            node.pending_move = node.state.current_label not in best.labels
    return record


def run_to_convergence(network: Network) -> SimulationReport:
    """Step until the network settles and compare against the reference run."""
    while not network.done:
        step_round(network)

    tie_break = any(has_probability_ties(n.state.belief) for n in network.nodes)
    result = ConsensusResult(
        final_label=network.final_label,
        rounds=network.round_number,
        early_stopped=network.early_stopped,
        trace=tuple(network.trace),
        used_index_tie_break=tie_break or network.plural_final,
    )

    beliefs = tuple(n.state.belief for n in network.nodes)
    try:
        reference = run_consensus(beliefs, network.config)
        reference_match = result == reference
    except CapExceededError:
        reference_match = False
    return SimulationReport(
        result=result,
        reference_match=reference_match,
        fault_summary=describe_behaviors([n.behavior for n in network.nodes]),
    )


def describe_behaviors(behaviors: Sequence[Behavior]) -> str:
    faults = [
        f"peer {i}: {b.describe()}"
        for i, b in enumerate(behaviors)
        if not isinstance(b, Honest)
    ]
    return "; ".join(faults) if faults else "fault-free"


def export_trace_lines(
    trace: Sequence[RoundRecord], class_names: Sequence[str] | None = None
) -> list[str]:
    """Render a trace as tab-separated lines for diffing.

    Columns: ``round``, ``peer_id``, ``label``, ``prob``, ``global_best``
    (sorted labels joined with ``|``) and ``moved`` (1 when the peer's
    proposal changed going into the round). One line per delivered message;
    probabilities use shortest exact float spelling. Centralized and
    distributed traces of the same run render identically.
    """

    def name(label: int) -> str:
        return class_names[label] if class_names else str(label)

    lines = ["round\tpeer_id\tlabel\tprob\tglobal_best\tmoved"]
    for rec in trace:
        best = "|".join(name(c) for c in rec.best.sorted_labels())
        for m in rec.messages:
            moved = "1" if m.peer_id in rec.moved else "0"
            lines.append(f"{rec.round_no}\t{m.peer_id}\t{name(m.label)}\t{m.prob!r}\t{best}\t{moved}")
    return lines
