"""Prediction-matrix datasets: validation, file round-trips, bundled fixtures.

A dataset is a rectangular block of belief vectors, one per (sample, peer)
pair, with optional ground-truth labels and class names. Two interchangeable
on-disk formats are supported:

* **tabular CSV**: header ``sample_id,peer_id,true_label,p_0,...,p_{K-1}``,
  one row per (sample, peer); ``true_label`` is an integer class index and may
  be left empty. Probabilities are written with 17 significant digits so a
  load/save cycle is bit-exact.
* **structured JSON**: a top-level object with ``n_peers``, ``n_classes``,
  ``class_names`` (may be null) and a ``samples`` array of
  ``{"id": ..., "truth": ..., "beliefs": [[...], ...]}`` where ``beliefs`` is
  an N x K matrix. The same schema is used on the service wire.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import BeliefError, DatasetError
from .types import BeliefVector, ClassLabel

CSV_FIXED_COLUMNS = ("sample_id", "peer_id", "true_label")


@dataclass(frozen=True)
class PredictionDataset:
    """Per-sample, per-peer belief vectors, optionally with ground truth."""

    sample_ids: tuple[str, ...]
    beliefs: tuple[tuple[BeliefVector, ...], ...]
    truth: tuple[ClassLabel | None, ...] | None = None
    class_names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.sample_ids:
            raise DatasetError("a dataset needs at least one sample")
        if len(self.beliefs) != len(self.sample_ids):
            raise DatasetError("sample_ids and beliefs disagree on the sample count")
        if len(set(self.sample_ids)) != len(self.sample_ids):
            raise DatasetError("sample ids must be unique")
        n_peers = len(self.beliefs[0])
        if n_peers == 0:
            raise DatasetError("a dataset needs at least one peer")
        k = self.beliefs[0][0].k
        for sid, row in zip(self.sample_ids, self.beliefs):
            if len(row) != n_peers:
                raise DatasetError(f"sample {sid!r} has {len(row)} peers, expected {n_peers}")
            for vec in row:
                if vec.k != k:
                    raise DatasetError(f"sample {sid!r} mixes class counts ({vec.k} vs {k})")
        if self.truth is not None:
            if len(self.truth) != len(self.sample_ids):
                raise DatasetError("truth length must match the sample count")
            for sid, t in zip(self.sample_ids, self.truth):
                if t is not None and not (0 <= t < k):
                    raise DatasetError(f"sample {sid!r}: true label {t} outside [0, {k})")
        if self.class_names is not None and len(self.class_names) != k:
            raise DatasetError(
                f"{len(self.class_names)} class names given for {k} classes"
            )

    @property
    def n_samples(self) -> int:
        return len(self.sample_ids)

    @property
    def n_peers(self) -> int:
        return len(self.beliefs[0])

    @property
    def n_classes(self) -> int:
        return self.beliefs[0][0].k

    @property
    def has_full_truth(self) -> bool:
        return self.truth is not None and all(t is not None for t in self.truth)

    def label_name(self, label: ClassLabel) -> str:
        return self.class_names[label] if self.class_names else str(label)

    def to_dict(self) -> dict:
        """The structured-JSON representation (also the service wire schema)."""
        return {
            "n_peers": self.n_peers,
            "n_classes": self.n_classes,
            "class_names": list(self.class_names) if self.class_names else None,
            "samples": [
                {
                    "id": sid,
                    "truth": None if self.truth is None else self.truth[i],
                    "beliefs": [list(vec.probs) for vec in self.beliefs[i]],
                }
                for i, sid in enumerate(self.sample_ids)
            ],
        }

    @classmethod
    def from_dict(cls, payload: dict, renormalize: bool = False) -> "PredictionDataset":
        try:
            samples = payload["samples"]
            n_peers = int(payload["n_peers"])
            n_classes = int(payload["n_classes"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"malformed dataset object: {exc}") from exc
        if not isinstance(samples, list) or not samples:
            raise DatasetError("dataset needs a non-empty 'samples' array")
        sample_ids: list[str] = []
        rows: list[tuple[BeliefVector, ...]] = []
        truth: list[ClassLabel | None] = []
        for pos, entry in enumerate(samples):
            sid = str(entry.get("id", pos))
            matrix = entry.get("beliefs")
            if not isinstance(matrix, list) or len(matrix) != n_peers:
                raise DatasetError(f"sample {sid!r}: beliefs must be an {n_peers}-row matrix")
            vectors = []
            for peer, probs in enumerate(matrix):
                if len(probs) != n_classes:
                    raise DatasetError(
                        f"sample {sid!r}, peer {peer}: {len(probs)} probabilities, "
                        f"expected {n_classes}"
                    )
                try:
                    vectors.append(BeliefVector.coerce(probs, renormalize=renormalize))
                except BeliefError as exc:
                    raise DatasetError(f"sample {sid!r}, peer {peer}: {exc}") from exc
            sample_ids.append(sid)
            rows.append(tuple(vectors))
            t = entry.get("truth")
            truth.append(None if t is None else int(t))
        names = payload.get("class_names")
        return cls(
            sample_ids=tuple(sample_ids),
            beliefs=tuple(rows),
            truth=tuple(truth) if any(t is not None for t in truth) else None,
            class_names=tuple(names) if names else None,
        )


def _resolve_format(path: str | Path, format: str | None) -> str:
    if format is not None:
        if format not in ("csv", "json"):
            raise DatasetError(f"unknown format {format!r}; expected 'csv' or 'json'")
        return format
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix == ".json":
        return "json"
    raise DatasetError(f"cannot infer format from {path!r}; pass format='csv' or 'json'")


def load_dataset(
    path: str | Path, format: str | None = None, *, renormalize: bool = False
) -> PredictionDataset:
    """Load and validate a dataset file.

    Rows that fail simplex validation are rejected with the offending row
    named, unless ``renormalize`` is set, in which case drifted sums are
    rescaled (entries outside [0, 1] are always rejected).
    """
    fmt = _resolve_format(path, format)
    if fmt == "json":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}: invalid JSON: {exc}") from exc
        return PredictionDataset.from_dict(payload, renormalize=renormalize)
    return _load_csv(path, renormalize=renormalize)


def _load_csv(path: str | Path, renormalize: bool) -> PredictionDataset:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        k = len(header) - len(CSV_FIXED_COLUMNS)
        expected = list(CSV_FIXED_COLUMNS) + [f"p_{i}" for i in range(k)]
        if k < 2 or header != expected:
            raise DatasetError(
                f"{path}: malformed header {header!r}; expected "
                f"'sample_id,peer_id,true_label,p_0,...,p_{{K-1}}' with K >= 2"
            )

        order: list[str] = []
        per_sample: dict[str, dict[int, BeliefVector]] = {}
        truths: dict[str, ClassLabel] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise DatasetError(f"{path}: row {lineno}: {len(row)} fields, expected {len(expected)}")
            sid, peer_text, truth_text = row[0], row[1], row[2]
            try:
                peer = int(peer_text)
            except ValueError:
                raise DatasetError(f"{path}: row {lineno}: bad peer_id {peer_text!r}") from None
            try:
                probs = [float(x) for x in row[3:]]
            except ValueError as exc:
                raise DatasetError(f"{path}: row {lineno}: {exc}") from None
            try:
                vec = BeliefVector.coerce(probs, renormalize=renormalize)
            except BeliefError as exc:
                raise DatasetError(f"{path}: row {lineno} (sample {sid!r}, peer {peer}): {exc}") from exc
            if sid not in per_sample:
                order.append(sid)
                per_sample[sid] = {}
            if peer in per_sample[sid]:
                raise DatasetError(f"{path}: row {lineno}: duplicate peer {peer} for sample {sid!r}")
            per_sample[sid][peer] = vec
            if truth_text != "":
                try:
                    t = int(truth_text)
                except ValueError:
                    raise DatasetError(f"{path}: row {lineno}: bad true_label {truth_text!r}") from None
                if sid in truths and truths[sid] != t:
                    raise DatasetError(f"{path}: row {lineno}: conflicting truth for sample {sid!r}")
                truths[sid] = t

    if not order:
        raise DatasetError(f"{path}: no data rows")
    peer_sets = {sid: frozenset(peers) for sid, peers in per_sample.items()}
    n_peers = len(per_sample[order[0]])
    want = frozenset(range(n_peers))
    for sid in order:
        if peer_sets[sid] != want:
            raise DatasetError(
                f"{path}: sample {sid!r} has peers {sorted(peer_sets[sid])}, "
                f"expected 0..{n_peers - 1}"
            )
    rows = tuple(tuple(per_sample[sid][p] for p in range(n_peers)) for sid in order)
    truth = tuple(truths.get(sid) for sid in order)
    return PredictionDataset(
        sample_ids=tuple(order),
        beliefs=rows,
        truth=truth if any(t is not None for t in truth) else None,
    )


def save_dataset(dataset: PredictionDataset, path: str | Path, format: str | None = None) -> None:
    """Write a dataset file; ``load_dataset`` round-trips it bit-exactly."""
    fmt = _resolve_format(path, format)
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(dataset.to_dict(), fh, indent=2)
            fh.write("\n")
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(CSV_FIXED_COLUMNS) + [f"p_{i}" for i in range(dataset.n_classes)])
        for i, sid in enumerate(dataset.sample_ids):
            truth = "" if dataset.truth is None or dataset.truth[i] is None else dataset.truth[i]
            for peer, vec in enumerate(dataset.beliefs[i]):
                writer.writerow([sid, peer, truth] + [format_prob(p) for p in vec.probs])


def format_prob(p: float) -> str:
    """Decimal text with enough significant digits to round-trip exactly."""
    return format(p, ".17g")


def dataset_from_matrices(
    matrices: Sequence[Sequence[Sequence[float]]],
    truth: Sequence[ClassLabel | None] | None = None,
    class_names: Sequence[str] | None = None,
    sample_ids: Sequence[str] | None = None,
) -> PredictionDataset:
    """Convenience constructor from in-memory N x K matrices."""
    ids = tuple(sample_ids) if sample_ids is not None else tuple(
        str(i) for i in range(len(matrices))
    )
    rows = tuple(tuple(BeliefVector.coerce(v) for v in matrix) for matrix in matrices)
    return PredictionDataset(
        sample_ids=ids,
        beliefs=rows,
        truth=tuple(truth) if truth is not None else None,
        class_names=tuple(class_names) if class_names is not None else None,
    )


# Bundled two-sample fixture: five peers, five classes (named N, S, V, F, Q).
# Sample "case-1" has a clean plurality winner; sample "case-2" forces the
# vote-count tie that only the probability-sum rule can break.
CASE_STUDY_CLASS_NAMES = ("N", "S", "V", "F", "Q")

CASE_STUDY_1 = (
    (0.40, 0.06, 0.12, 0.18, 0.24),
    (0.38, 0.07, 0.10, 0.20, 0.25),
    (0.18, 0.06, 0.36, 0.10, 0.30),
    (0.30, 0.07, 0.10, 0.18, 0.35),
    (0.31, 0.08, 0.12, 0.33, 0.16),
)

CASE_STUDY_2 = (
    (0.30, 0.10, 0.15, 0.25, 0.20),
    (0.28, 0.10, 0.12, 0.24, 0.26),
    (0.15, 0.08, 0.35, 0.30, 0.12),
    (0.10, 0.07, 0.08, 0.35, 0.40),
    (0.12, 0.34, 0.08, 0.16, 0.30),
)


def case_study_dataset() -> PredictionDataset:
    """The bundled two-sample fixture used in docs, demos and tests."""
    return dataset_from_matrices(
        [CASE_STUDY_1, CASE_STUDY_2],
        class_names=CASE_STUDY_CLASS_NAMES,
        sample_ids=("case-1", "case-2"),
    )
