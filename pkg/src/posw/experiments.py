"""Experiment drivers: batch consensus runs, method comparisons, fault sweeps.

These functions consume validated datasets and return plain JSON-safe dicts,
which the service returns verbatim and the CLI writes to disk. Samples are
independent; per-sample seeds are derived from the base seed and the sample's
position, never from scheduling, so results are reproducible regardless of how
the work is ordered.
"""

from __future__ import annotations

import hashlib
import statistics
import time
from dataclasses import asdict, replace
from typing import Sequence

from .baselines import DECIDED, bft_two_thirds, majority_vote, soft_vote
from .datasets import PredictionDataset
from .errors import CapExceededError, DatasetError
from .harness import (
    Behavior,
    FixedLiar,
    Honest,
    Silent,
    describe_behaviors,
    run_to_convergence,
    spawn_network,
)
from .protocol import build_states, local_best, run_consensus
from .types import ConsensusConfig

ALL_METHODS = ("posw", "majority", "bft", "soft", "locals")


def derive_sample_seed(base_seed: int | None, position: int) -> int:
    """Position-based per-sample seed, stable across platforms and schedulers."""
    digest = hashlib.sha256(f"{base_seed}:{position}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _per_sample_config(config: ConsensusConfig, position: int) -> ConsensusConfig:
    if config.local_tie_policy != "seeded-random":
        return config
    return replace(config, rng_seed=derive_sample_seed(config.rng_seed, position))


def run_over_dataset(dataset: PredictionDataset, config: ConsensusConfig | None = None) -> dict:
    """Run the protocol on every sample; timing covers the consensus loop only."""
    cfg = config if config is not None else ConsensusConfig()
    cfg.validate()
    records: list[dict] = []
    per_sample_s: list[float] = []
    histogram: dict[int, int] = {}
    early_stopped = 0
    for i, sid in enumerate(dataset.sample_ids):
        sample_cfg = _per_sample_config(cfg, i)
        beliefs = dataset.beliefs[i]
        start = time.perf_counter()
        try:
            result = run_consensus(beliefs, sample_cfg)
        except CapExceededError as exc:
            exc.sample_id = sid
            raise
        per_sample_s.append(time.perf_counter() - start)
        histogram[result.rounds] = histogram.get(result.rounds, 0) + 1
        early_stopped += result.early_stopped
        records.append(
            {
                "sample_id": sid,
                "final_label": result.final_label,
                "final_class": dataset.label_name(result.final_label),
                "rounds": result.rounds,
                "early_stopped": result.early_stopped,
            }
        )
    summary = {
        "n_samples": dataset.n_samples,
        "n_peers": dataset.n_peers,
        "n_classes": dataset.n_classes,
        "rounds_histogram": {str(r): histogram[r] for r in sorted(histogram)},
        "early_stopped_samples": early_stopped,
        "config": asdict(cfg),
    }
    timing = {
        "per_sample_s": per_sample_s,
        "mean_s": statistics.fmean(per_sample_s),
        "median_s": statistics.median(per_sample_s),
        "max_s": max(per_sample_s),
    }
    return {"records": records, "summary": summary, "timing": timing}


def first_round_votes(dataset: PredictionDataset, sample_index: int):
    """The one-shot local-best votes the baselines consume."""
    states = build_states(dataset.beliefs[sample_index], ConsensusConfig())
    return tuple(local_best(s) for s in states)


def compare_over_dataset(
    dataset: PredictionDataset,
    methods: Sequence[str] | None = None,
    config: ConsensusConfig | None = None,
) -> dict:
    """Accuracy of each method over the same samples.

    Baselines vote once on every peer's local best (lowest-index tie rule);
    undecided outcomes (majority ties, threshold failures) score as incorrect
    and are also counted separately.
    """
    if not dataset.has_full_truth:
        raise DatasetError("comparison requires ground truth for every sample")
    cfg = config if config is not None else ConsensusConfig()
    cfg.validate()
    selected = tuple(methods) if methods is not None else ALL_METHODS
    unknown = [m for m in selected if m not in ALL_METHODS]
    if unknown:
        raise DatasetError(f"unknown methods {unknown!r}; choose from {ALL_METHODS}")

    n = dataset.n_samples
    correct: dict[str, int] = {}
    undecided: dict[str, int] = {}
    if "locals" in selected:
        for p in range(dataset.n_peers):
            correct[f"peer_{p}"] = 0

    for i in range(n):
        truth = dataset.truth[i]
        votes = first_round_votes(dataset, i)
        if "posw" in selected:
            result = run_consensus(dataset.beliefs[i], _per_sample_config(cfg, i))
            correct["posw"] = correct.get("posw", 0) + (result.final_label == truth)
        if "majority" in selected:
            outcome = majority_vote(votes)
            undecided.setdefault("majority", 0)
            if outcome.status == DECIDED:
                correct["majority"] = correct.get("majority", 0) + (outcome.decision == truth)
            else:
                undecided["majority"] += 1
                correct.setdefault("majority", 0)
        if "bft" in selected:
            outcome = bft_two_thirds(votes, dataset.n_peers)
            undecided.setdefault("bft", 0)
            if outcome.status == DECIDED:
                correct["bft"] = correct.get("bft", 0) + (outcome.decision == truth)
            else:
                undecided["bft"] += 1
                correct.setdefault("bft", 0)
        if "soft" in selected:
            correct["soft"] = correct.get("soft", 0) + (soft_vote(dataset.beliefs[i]) == truth)
        if "locals" in selected:
            for p, vote in enumerate(votes):
                correct[f"peer_{p}"] += vote.label == truth

    return {
        "n_samples": n,
        "methods": list(selected),
        "accuracies": {name: correct[name] / n for name in correct},
        "undecided": undecided,
        "config": asdict(cfg),
    }


def parse_fault_specs(
    silent: Sequence[int] = (),
    liars: Sequence[tuple[int, int, float]] = (),
    n_peers: int | None = None,
) -> list[tuple[int, Behavior]]:
    """Normalize fault descriptions into (peer_id, behavior) pairs."""
    faults: list[tuple[int, Behavior]] = []
    for peer in silent:
        faults.append((int(peer), Silent()))
    for peer, label, prob in liars:
        faults.append((int(peer), FixedLiar(int(label), float(prob))))
    seen: set[int] = set()
    for peer, _ in faults:
        if peer in seen:
            raise DatasetError(f"peer {peer} given more than one fault")
        seen.add(peer)
        if n_peers is not None and not (0 <= peer < n_peers):
            raise DatasetError(f"fault names peer {peer}, outside 0..{n_peers - 1}")
    return faults


def simulate_over_dataset(
    dataset: PredictionDataset,
    faults: Sequence[tuple[int, Behavior]] = (),
    config: ConsensusConfig | None = None,
) -> dict:
    """Run the network harness per sample, with the given faults injected."""
    cfg = config if config is not None else ConsensusConfig()
    cfg.validate()
    behaviors: list[Behavior] = [Honest()] * dataset.n_peers
    for peer, behavior in faults:
        if not (0 <= peer < dataset.n_peers):
            raise DatasetError(f"fault names peer {peer}, outside 0..{dataset.n_peers - 1}")
        behaviors[peer] = behavior

    records: list[dict] = []
    matches = 0
    for i, sid in enumerate(dataset.sample_ids):
        network = spawn_network(dataset.beliefs[i], _per_sample_config(cfg, i), behaviors)
        try:
            report = run_to_convergence(network)
        except CapExceededError as exc:
            exc.sample_id = sid
            raise
        matches += report.reference_match
        records.append(
            {
                "sample_id": sid,
                "final_label": report.result.final_label,
                "final_class": dataset.label_name(report.result.final_label),
                "rounds": report.result.rounds,
                "early_stopped": report.result.early_stopped,
                "reference_match": report.reference_match,
            }
        )
    summary = {
        "n_samples": dataset.n_samples,
        "reference_match_samples": matches,
        "fault_summary": describe_behaviors(behaviors),
        "config": asdict(cfg),
    }
    return {"records": records, "summary": summary}
