"""
Synthetic models of per-example gradient norms.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import stats

from ..utils.errors import ConfigurationError, DomainError
from ..utils.rng import Stream, derive_rng

logger = logging.getLogger(__name__)


class ModelKind(str, Enum):
    WEIBULL = "weibull"
    LOGNORMAL = "lognormal"
    CONSTANT = "constant"
    EMPIRICAL = "empirical"


@dataclass(frozen=True)
class GradientModel:
    """
    Distribution of the neighbour distance ||g - g'||.

    Weibull uses ``shape`` as k and ``scale`` as its scale; Lognormal uses
    ``shape`` as the log-scale deviation and ``scale`` as exp(mean of log);
    Constant returns ``scale``; Empirical resamples ``samples``.
    """
    kind: ModelKind = ModelKind.WEIBULL
    shape: float = 0.5
    scale: float = 1.0
    calibration_draws: int = 10**6
    seed: int = 0
    samples: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if not self.shape > 0:
            raise ConfigurationError(f"model shape must be positive, got {self.shape}")
        if not self.scale > 0:
            raise ConfigurationError(f"model scale must be positive, got {self.scale}")
        if self.calibration_draws < 2:
            raise ConfigurationError("calibration_draws must be at least 2")
        if self.kind is ModelKind.EMPIRICAL:
            if not self.samples:
                raise ConfigurationError("empirical model needs recorded samples")
            samples = tuple(float(s) for s in self.samples)
            if any(s < 0 or not math.isfinite(s) for s in samples):
                raise ConfigurationError("empirical samples must be finite and non-negative")
            object.__setattr__(self, "samples", samples)

    def describe(self):
        """Plain dict for run metadata."""
        description = {"kind": self.kind.value, "shape": self.shape, "scale": self.scale,
                       "calibration_draws": self.calibration_draws, "seed": self.seed}
        if self.samples is not None:
            description["n_samples"] = len(self.samples)
        return description


def sample_pair_distances(model, m, rng):
    """
    Draw m neighbour distances from the model.

    Args:
        model (GradientModel): Distance model
        m (int): Number of draws, at least 2
        rng (numpy.random.Generator): Seeded stream

    Returns:
        numpy.ndarray: m non-negative distances
    """
    if m < 2:
        raise DomainError(f"need at least 2 distance samples, got {m}")
    if model.kind is ModelKind.WEIBULL:
        return model.scale * rng.weibull(model.shape, size=m)
    if model.kind is ModelKind.LOGNORMAL:
        return rng.lognormal(mean=math.log(model.scale), sigma=model.shape, size=m)
    if model.kind is ModelKind.CONSTANT:
        return np.full(m, model.scale)
    return rng.choice(np.asarray(model.samples), size=m, replace=True)


def _nearest_rank(values, p):
    ordered = np.sort(np.asarray(values, dtype=float))
    rank = max(math.ceil(p * ordered.size), 1)
    return float(ordered[rank - 1])


def quantile_of_norms(model, p, method="auto"):
    """
    p-quantile of the distance distribution.

    Closed forms are used where they exist; ``method="sampling"`` instead
    takes the nearest-rank quantile of ``calibration_draws`` fresh draws.

    Args:
        model (GradientModel): Distance model
        p (float): Probability strictly inside (0, 1)
        method (str): "auto" or "sampling"

    Returns:
        float: The quantile
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {p}")
    if model.kind is ModelKind.EMPIRICAL:
        return _nearest_rank(model.samples, p)
    if model.kind is ModelKind.CONSTANT:
        return model.scale
    if method == "sampling":
        rng = derive_rng(model.seed, Stream.CALIBRATION)
        return _nearest_rank(sample_pair_distances(model, model.calibration_draws, rng), p)
    if model.kind is ModelKind.WEIBULL:
        return model.scale * (-math.log1p(-p)) ** (1.0 / model.shape)
    return float(stats.lognorm.ppf(p, s=model.shape, scale=model.scale))
