"""Shared fixtures and deterministic instance generators."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from posw.datasets import CASE_STUDY_1, CASE_STUDY_2, case_study_dataset

ARTIFACT_DIR = Path(__file__).parent / "_artifacts"


def random_instances(rng: np.random.Generator, count: int, n_peers: int, k: int):
    """Yield ``count`` random belief matrices, half mild and half peaked."""
    half = count // 2
    if half:
        mild = rng.random((half, n_peers, k))
        mild /= mild.sum(axis=-1, keepdims=True)
        yield from mild.tolist()
    sharp = rng.dirichlet([0.5] * k, size=(count - half, n_peers))
    yield from sharp.tolist()


@pytest.fixture
def case1():
    return [list(row) for row in CASE_STUDY_1]


@pytest.fixture
def case2():
    return [list(row) for row in CASE_STUDY_2]


@pytest.fixture
def case_dataset():
    return case_study_dataset()


@pytest.fixture(scope="session")
def artifact_dir() -> Path:
    ARTIFACT_DIR.mkdir(exist_ok=True)
    return ARTIFACT_DIR
