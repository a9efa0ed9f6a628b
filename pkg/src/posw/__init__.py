"""PoSw: round-based, confidence-weighted consensus for classifier ensembles.

The core protocol lives in :mod:`posw.protocol`; :mod:`posw.harness` runs it
as N independent peers over a lock-step broadcast bus; :mod:`posw.baselines`
holds the voting rules it is compared against; :mod:`posw.datasets` and
:mod:`posw.synth` handle prediction-matrix files and synthetic ensembles; the
FastAPI service in :mod:`posw.api` wraps it all for the thin-client CLI.
"""

__version__ = "0.1.0"

from .baselines import BaselineOutcome, bft_two_thirds, majority_vote, soft_vote
from .datasets import PredictionDataset, case_study_dataset, load_dataset, save_dataset
from .errors import (
    BeliefError,
    CapExceededError,
    ConfigError,
    DatasetError,
    PoswError,
    ProtocolError,
)
from .harness import (
    FixedLiar,
    Honest,
    Silent,
    SimulationReport,
    export_trace_lines,
    inject_fault,
    run_to_convergence,
    spawn_network,
    step_round,
)
from .protocol import run_consensus
from .synth import SynthesisSpec, synthesize_ensemble
from .types import (
    BeliefVector,
    ConsensusConfig,
    ConsensusResult,
    GlobalBestSet,
    PeerState,
    RoundRecord,
    VoteMessage,
)

__all__ = [
    "__version__",
    "BaselineOutcome",
    "BeliefError",
    "BeliefVector",
    "CapExceededError",
    "ConfigError",
    "ConsensusConfig",
    "ConsensusResult",
    "DatasetError",
    "FixedLiar",
    "GlobalBestSet",
    "Honest",
    "PeerState",
    "PoswError",
    "PredictionDataset",
    "ProtocolError",
    "RoundRecord",
    "Silent",
    "SimulationReport",
    "SynthesisSpec",
    "VoteMessage",
    "bft_two_thirds",
    "case_study_dataset",
    "export_trace_lines",
    "inject_fault",
    "load_dataset",
    "majority_vote",
    "run_consensus",
    "run_to_convergence",
    "save_dataset",
    "soft_vote",
    "spawn_network",
    "step_round",
    "synthesize_ensemble",
]
