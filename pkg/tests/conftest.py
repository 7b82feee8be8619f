"""
Shared fixtures for the accountant test suite.
"""
import json

import numpy as np
import pytest

from src.privacy.estimator import EstimatorConfig
from src.privacy.mechanisms import MechanismConfig
from src.simulation.models import GradientModel, ModelKind


@pytest.fixture
def mechanism():
    """Clipped mechanism with unit noise multiplier."""
    return MechanismConfig(sigma=1.0, q=0.01, clip=1.0)


@pytest.fixture
def estimator():
    return EstimatorConfig(m=100)


@pytest.fixture
def weibull():
    return GradientModel(kind=ModelKind.WEIBULL, shape=0.5, scale=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def distance_stream(tmp_path):
    """
    Write a JSON-lines distance stream and return its path.
    """
    def write(records, name="stream.jsonl"):
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as handle:
            for step, distances in records:
                handle.write(json.dumps({"step": step, "distances": list(distances)}) + "\n")
        return str(path)
    return write


@pytest.fixture
def separable_dataset():
    """Two well-separated Gaussian blobs with 400 rows and 2 features."""
    rng = np.random.default_rng(7)
    n = 200
    positive = rng.normal(loc=(2.5, 2.5), scale=0.5, size=(n, 2))
    negative = rng.normal(loc=(-2.5, -2.5), scale=0.5, size=(n, 2))
    features = np.vstack([positive, negative])
    labels = np.concatenate([np.ones(n), np.zeros(n)])
    return features, labels
