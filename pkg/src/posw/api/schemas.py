"""Pydantic request/response models for the consensus service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from ..datasets import PredictionDataset
from ..types import ConsensusConfig, ConsensusResult, GlobalBestSet, RoundRecord


class ConfigModel(BaseModel):
    early_stop: bool = True
    round_cap_factor: int | None = Field(default=None, ge=1)
    tie_tolerance: float = Field(default=1e-9, ge=0)
    rng_seed: int | None = None
    local_tie_policy: Literal["lowest-index", "seeded-random"] = "lowest-index"
    early_stop_basis: Literal["peers", "classes"] = "peers"

    def to_config(self) -> ConsensusConfig:
        return ConsensusConfig(**self.model_dump())


class SampleModel(BaseModel):
    id: str
    truth: int | None = None
    beliefs: list[list[float]]


class DatasetModel(BaseModel):
    """Wire shape of a dataset; identical to the structured JSON file format."""

    n_peers: int
    n_classes: int
    class_names: list[str] | None = None
    samples: list[SampleModel]

    def to_dataset(self, renormalize: bool = False) -> PredictionDataset:
        return PredictionDataset.from_dict(self.model_dump(), renormalize=renormalize)

    @classmethod
    def from_dataset(cls, dataset: PredictionDataset) -> "DatasetModel":
        return cls.model_validate(dataset.to_dict())


class VoteModel(BaseModel):
    peer_id: int
    label: int
    prob: float


class GlobalBestModel(BaseModel):
    labels: list[int]
    max_votes: int
    prob_sums: dict[int, float] | None = None

    @classmethod
    def from_best(cls, best: GlobalBestSet) -> "GlobalBestModel":
        return cls(labels=list(best.sorted_labels()), max_votes=best.max_votes,
                   prob_sums=best.prob_sums)


class RoundModel(BaseModel):
    round_no: int
    moved: list[int]
    votes: list[VoteModel]
    counts: dict[int, int]
    best: GlobalBestModel

    @classmethod
    def from_record(cls, rec: RoundRecord) -> "RoundModel":
        return cls(
            round_no=rec.round_no,
            moved=list(rec.moved),
            votes=[VoteModel(peer_id=m.peer_id, label=m.label, prob=m.prob) for m in rec.messages],
            counts=rec.counts,
            best=GlobalBestModel.from_best(rec.best),
        )


class ConsensusRequest(BaseModel):
    beliefs: list[list[float]]
    config: ConfigModel = ConfigModel()
    include_trace: bool = False


class ConsensusResponse(BaseModel):
    final_label: int
    rounds: int
    early_stopped: bool
    used_index_tie_break: bool
    trace: list[RoundModel] | None = None

    @classmethod
    def from_result(cls, result: ConsensusResult, include_trace: bool) -> "ConsensusResponse":
        return cls(
            final_label=result.final_label,
            rounds=result.rounds,
            early_stopped=result.early_stopped,
            used_index_tie_break=result.used_index_tie_break,
            trace=[RoundModel.from_record(r) for r in result.trace] if include_trace else None,
        )


class RunRequest(BaseModel):
    dataset: DatasetModel
    config: ConfigModel = ConfigModel()


class TimingModel(BaseModel):
    per_sample_s: list[float]
    mean_s: float
    median_s: float
    max_s: float


class RunResponse(BaseModel):
    records: list[dict]
    summary: dict
    timing: TimingModel


class CompareRequest(BaseModel):
    dataset: DatasetModel
    methods: list[str] | None = None
    config: ConfigModel = ConfigModel()


class CompareResponse(BaseModel):
    n_samples: int
    methods: list[str]
    accuracies: dict[str, float]
    undecided: dict[str, int]
    config: dict


class GenRequest(BaseModel):
    n_samples: int = Field(ge=1)
    n_peers: int = Field(ge=2)
    n_classes: int = Field(ge=2)
    accuracies: list[float]
    concentration: float = 6.0
    rng_seed: int = 0


class FaultModel(BaseModel):
    peer: int
    kind: Literal["silent", "liar"]
    label: int | None = None
    prob: float | None = None


class SimulateRequest(BaseModel):
    dataset: DatasetModel
    faults: list[FaultModel] = []
    config: ConfigModel = ConfigModel()


class SimulateResponse(BaseModel):
    records: list[dict]
    summary: dict


class HealthResponse(BaseModel):
    status: str
    version: str
