"""Synthetic ensembles: seed-deterministic prediction matrices at target accuracies.

Each peer is modeled as a noisy classifier: with probability equal to its
accuracy target its belief vector peaks on the true label, otherwise on a
uniformly chosen wrong label. Peak sharpness is controlled by a concentration
parameter (softmax of scaled Gumbel noise), so ``concentration -> inf`` yields
one-hot vectors and small values approach uniform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .datasets import PredictionDataset
from .errors import DatasetError
from .types import BeliefVector


@dataclass(frozen=True)
class SynthesisSpec:
    n_samples: int
    n_peers: int
    n_classes: int
    accuracies: tuple[float, ...]
    concentration: float = 6.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise DatasetError("n_samples must be >= 1")
        if self.n_peers < 2:
            raise DatasetError("n_peers must be >= 2")
        if self.n_classes < 2:
            raise DatasetError("n_classes must be >= 2")
        if len(self.accuracies) != self.n_peers:
            raise DatasetError(
                f"{len(self.accuracies)} accuracy targets given for {self.n_peers} peers"
            )
        floor = 1.0 / self.n_classes
        for i, a in enumerate(self.accuracies):
            if not (floor < a < 1.0):
                raise DatasetError(
                    f"peer {i}: accuracy target {a} infeasible; must be in (1/K, 1) = ({floor:.4g}, 1)"
                )
        if not (self.concentration > 0):
            raise DatasetError("concentration must be positive")


def synthesize_ensemble(spec: SynthesisSpec) -> PredictionDataset:
    """Draw a dataset matching the spec; identical specs give identical data.

    The argmax of every generated vector lands on the intended label by
    construction, so each peer's empirical accuracy converges on its target
    with plain binomial noise.
    """
    rng = np.random.default_rng(spec.rng_seed)
    n, k = spec.n_samples, spec.n_classes
    truth = rng.integers(0, k, size=n)

    per_peer: list[np.ndarray] = []
    for accuracy in spec.accuracies:
        correct = rng.random(n) < accuracy
        wrong = rng.integers(0, k - 1, size=n)
        wrong = wrong + (wrong >= truth)  # uniform over the k-1 wrong labels
        mode = np.where(correct, truth, wrong)

        if math.isinf(spec.concentration):
            vectors = np.zeros((n, k))
            vectors[np.arange(n), mode] = 1.0
        else:
            noise = rng.gumbel(size=(n, k)) * spec.concentration
            noise -= noise.max(axis=1, keepdims=True)
            vectors = np.exp(noise)
            vectors /= vectors.sum(axis=1, keepdims=True)
            # Swap the peak into the intended position.
            rows = np.arange(n)
            peak = vectors.argmax(axis=1)
            peak_vals = vectors[rows, peak].copy()
            vectors[rows, peak] = vectors[rows, mode]
            vectors[rows, mode] = peak_vals
        per_peer.append(vectors)

    samples = tuple(
        tuple(BeliefVector(tuple(per_peer[p][i].tolist())) for p in range(spec.n_peers))
        for i in range(n)
    )
    return PredictionDataset(
        sample_ids=tuple(str(i) for i in range(n)),
        beliefs=samples,
        truth=tuple(int(t) for t in truth),
    )
