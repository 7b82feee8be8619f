"""
Finite-sample estimators that overestimate the privacy cost with high confidence.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from ..utils.errors import ConfigurationError, DataError
from ..utils.numerics import beta_inv_cdf, student_t_inv_cdf

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 1e-15


@dataclass(frozen=True)
class EstimatorConfig:
    """
    Settings of the m-sample privacy-cost estimator.

    Attributes:
        m (int): Distance samples per step
        gamma (float): Probability that the estimate undershoots the true cost
        clamp_to_ma (bool): Cap the estimate by the moments-accountant cost
    """
    m: int = 100
    gamma: float = DEFAULT_GAMMA
    clamp_to_ma: bool = True

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ConfigurationError(f"estimator needs m >= 2 samples, got {self.m}")
        if not 0.0 < self.gamma < 1.0:
            raise ConfigurationError(f"gamma must lie in (0, 1), got {self.gamma}")


@dataclass(frozen=True)
class MomentSampleBatch:
    """
    Per-sample log-moments log max{e^(lambda D(p||q)), e^(lambda D(q||p))} of one step.
    """
    values: tuple
    step: int
    lam: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise DataError("moment samples must be a flat sequence")
        if np.any(~np.isfinite(values)):
            raise DataError(f"non-finite moment sample at step {self.step}")
        if np.any(values < 0):
            raise DataError(f"negative log-moment at step {self.step}; every moment is at least 1")
        object.__setattr__(self, "values", tuple(float(v) for v in values))

    @property
    def m(self):
        return len(self.values)


@dataclass(frozen=True)
class DeltaBudget:
    """
    Total δ after charging estimator failures; ``vacuous`` when δ >= 1.
    """
    delta: float
    vacuous: bool


@lru_cache(maxsize=256)
def _quantile_factor(gamma, m):
    return student_t_inv_cdf(1.0 - gamma, m - 1) / math.sqrt(m - 1)


def _check_sample_count(m):
    if m < 2:
        raise ConfigurationError(f"estimator needs m >= 2 samples, got {m}")


def estimate_from_ratios(peak, ratios, cfg, ma_costs=None):
    """
    Estimate the privacy cost at every order from samples rescaled by their maximum.

    Args:
        peak: Largest log-moment of every order, shape (n_orders,)
        ratios: exp(log-moment - peak) per sample, shape (n_orders, m)
        cfg (EstimatorConfig): Estimator settings
        ma_costs: Optional moments-accountant cost per order used as a cap

    Returns:
        numpy.ndarray: Estimated cost per order, all >= 0
    """
    peak = np.atleast_1d(np.asarray(peak, dtype=float))
    ratios = np.atleast_2d(np.asarray(ratios, dtype=float))
    _check_sample_count(ratios.shape[1])
    if not (np.all(np.isfinite(peak)) and np.all(np.isfinite(ratios))):
        raise DataError("log-moment samples must be finite")

    factor = _quantile_factor(cfg.gamma, ratios.shape[1])
    inner = ratios.mean(axis=1) + factor * ratios.std(axis=1)
    with np.errstate(divide="ignore"):
        estimate = peak + np.log(np.where(inner > 0, inner, 0.0))
    estimate = np.maximum(estimate, 0.0)

    if cfg.clamp_to_ma and ma_costs is not None:
        ma_costs = np.asarray(ma_costs, dtype=float)
        if ma_costs.shape != estimate.shape:
            raise ConfigurationError("moments-accountant costs are not aligned with the estimates")
        estimate = np.minimum(estimate, ma_costs)
    return estimate


def estimate_privacy_costs(values, cfg, ma_costs=None):
    """
    Estimate the privacy cost at every order of a grid from one step's samples.

    Each row holds the m per-sample log-moments of one order. The estimate is
    log[M + t_{1-gamma, m-1} / sqrt(m-1) * S] with M and S the mean and the
    population standard deviation of the exponentiated samples; samples are
    rescaled by their maximum so no exponential overflows.

    Args:
        values: Array of shape (n_orders, m) of log-moments
        cfg (EstimatorConfig): Estimator settings
        ma_costs: Optional moments-accountant cost per order used as a cap

    Returns:
        numpy.ndarray: Estimated cost per order, all >= 0
    """
    values = np.atleast_2d(np.asarray(values, dtype=float))
    _check_sample_count(values.shape[1])
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise DataError("log-moment samples must be finite and non-negative")
    peak = values.max(axis=1)
    return estimate_from_ratios(peak, np.exp(values - peak[:, None]), cfg, ma_costs)


def estimate_privacy_cost(batch, cfg, ma_cost: Optional[float] = None):
    """
    Estimate c_t(lambda) from one batch of per-sample log-moments.

    Args:
        batch (MomentSampleBatch): Samples of one step and order
        cfg (EstimatorConfig): Estimator settings
        ma_cost (float): Optional moments-accountant cost used as a cap

    Returns:
        float: Estimated log-domain cost
    """
    if batch.m != cfg.m:
        raise ConfigurationError(f"batch holds {batch.m} samples but the estimator expects m={cfg.m}")
    caps = None if ma_cost is None else [ma_cost]
    return float(estimate_privacy_costs([batch.values], cfg, caps)[0])


def bernoulli_mean_upper(n_ones, n_zeros, gamma):
    """
    Upper confidence bound on a Bernoulli mean under a flat prior.

    The posterior is Beta(n_ones + 1, n_zeros + 1); its (1 - gamma) quantile
    overestimates the mean with posterior probability 1 - gamma.

    Args:
        n_ones (int): Observed ones
        n_zeros (int): Observed zeros
        gamma (float): Allowed failure probability

    Returns:
        float: The bound on the mean
    """
    if n_ones < 0 or n_zeros < 0:
        raise DataError("counts must be non-negative")
    return beta_inv_cdf(1.0 - gamma, n_ones + 1, n_zeros + 1)


def delta_budget(beta, steps, gamma):
    """
    Total δ once every step's estimator failure is charged by a union bound.

    Args:
        beta (float): Chernoff tail probability
        steps (int): Steps that used the estimator
        gamma (float): Per-step estimator failure probability

    Returns:
        DeltaBudget: beta + steps * gamma, flagged vacuous when >= 1
    """
    if beta < 0 or gamma < 0 or steps < 0:
        raise DataError("beta, gamma and steps must be non-negative")
    delta = beta + steps * gamma
    vacuous = delta >= 1.0
    if vacuous:
        logger.warning("delta budget %.6g is vacuous (>= 1)", delta)
    return DeltaBudget(delta=delta, vacuous=vacuous)
