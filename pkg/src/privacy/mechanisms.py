"""
Per-iteration moment terms of the subsampled Gaussian mechanism.

For a neighbour distance d and effective noise scale s, with a = d^2 / (2 s^2):

    left(lambda)  = log E_{k ~ B(lambda + 1, q)} exp((k^2 - k) a)
    right(lambda) = log E_{k ~ B(lambda, q)}     exp((k^2 + k) a)

``left`` equals lambda * D_{lambda+1}(mixture || base) exactly; ``right`` is the
convexity upper bound on lambda * D_{lambda+1}(base || mixture). All sums are
taken in log space.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import special

from ..utils.errors import ConfigurationError, DivergenceUndefinedError, DomainError

logger = logging.getLogger(__name__)

# log of the smallest term, relative to an order's largest, kept by the fused evaluation
NEGLIGIBLE_LOG_TERM = -60.0


@dataclass(frozen=True)
class MechanismConfig:
    """
    Noise and sampling parameters of one Gaussian mechanism.

    ``sigma`` is a noise multiplier: with a clip bound and
    ``noise_relative_to_clip`` the noise standard deviation is
    ``noise_multiplier_factor * sigma * clip``, otherwise
    ``noise_multiplier_factor * sigma``.
    """
    sigma: float
    q: float
    clip: Optional[float] = None
    noise_multiplier_factor: float = 1.0
    noise_relative_to_clip: bool = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 <= self.q <= 1.0:
            raise ConfigurationError(f"q must lie in [0, 1], got {self.q}")
        if self.clip is not None and not self.clip > 0:
            raise ConfigurationError(f"clip must be positive when given, got {self.clip}")
        if not self.noise_multiplier_factor > 0:
            raise ConfigurationError(
                f"noise_multiplier_factor must be positive, got {self.noise_multiplier_factor}"
            )

    @property
    def effective_sigma(self):
        """Standard deviation of the added noise, in distance units."""
        scale = self.noise_multiplier_factor * self.sigma
        if self.clip is not None and self.noise_relative_to_clip:
            return scale * self.clip
        return scale

    @property
    def worst_case_distance(self):
        """Neighbour distance the moments accountant charges for."""
        if self.clip is None:
            raise ConfigurationError("moments accountant needs a clip bound")
        return self.clip


@dataclass(frozen=True)
class DirectionalMoment:
    """
    Log-moments of both divergence directions for one distance.
    """
    left: float
    right: float

    @property
    def cost(self):
        return max(self.left, self.right)


@lru_cache(maxsize=4096)
def _log_binomial_weights(n_trials, q):
    k = np.arange(n_trials + 1, dtype=float)
    log_weights = (
        special.gammaln(n_trials + 1)
        - special.gammaln(k + 1)
        - special.gammaln(n_trials - k + 1)
        + special.xlogy(k, q)
        + special.xlog1py(n_trials - k, -q)
    )
    log_weights.setflags(write=False)
    return k, log_weights


@lru_cache(maxsize=64)
def _grid_log_weights(lambda_grid, q):
    """
    Log-binomial weights of every order on one shared index j.

    Both directions use the exponent (j^2 - j) a: the left sum runs over
    j ~ B(lambda + 1, q) and the right one over j - 1 ~ B(lambda, q). Rows are
    padded with -inf up to the largest order.
    """
    size = max(lambda_grid) + 2
    left = np.full((len(lambda_grid), size), -np.inf)
    right = np.full((len(lambda_grid), size), -np.inf)
    for row, lam in enumerate(lambda_grid):
        left[row, : lam + 2] = _log_binomial_weights(lam + 1, q)[1]
        right[row, 1: lam + 2] = _log_binomial_weights(lam, q)[1]
    j = np.arange(size, dtype=float)
    exponents = j * j - j
    for array in (exponents, left, right):
        array.setflags(write=False)
    return exponents, left, right


def _log_binomial_moment(a, n_trials, q, sign):
    """
    log E_{k ~ B(n_trials, q)} exp((k^2 + sign * k) * a), vectorised over ``a``.
    """
    a = np.asarray(a, dtype=float)
    k, log_weights = _log_binomial_weights(int(n_trials), float(q))
    exponents = (k * k + sign * k) * a[..., None]
    result = special.logsumexp(log_weights + exponents, axis=-1)
    # exact zero for vanishing distance, and no negative round-off
    result = np.where(a == 0.0, 0.0, np.maximum(result, 0.0))
    if q == 0.0:
        result = np.zeros_like(result)
    return result


def _half_snr_squared(d, cfg):
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise DomainError("distances must be non-negative")
    s = cfg.effective_sigma
    return d * d / (2.0 * s * s)


def _check_lambda(lam):
    if int(lam) != lam or lam < 1:
        raise DomainError(f"lambda must be a positive integer, got {lam}")
    return int(lam)


def renyi_gaussian_shared_var(d, sigma, order):
    """
    Rényi divergence between two Gaussians with a shared variance.

    Args:
        d (float): Distance between the means
        sigma (float): Shared standard deviation
        order (float): Rényi order above 1

    Returns:
        float: order * d^2 / (2 sigma^2)
    """
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if d < 0:
        raise DomainError(f"distance must be non-negative, got {d}")
    if not order > 1:
        raise DomainError(f"Rényi order must exceed 1, got {order}")
    return order * d * d / (2.0 * sigma * sigma)


def renyi_gaussian_diag(mean_a, var_a, mean_b, var_b, order):
    """
    Rényi divergence D_order(N(mean_a, var_a) || N(mean_b, var_b)) for diagonal Gaussians.

    Used for variational posteriors, whose variances differ between the two
    neighbouring outcomes.

    Args:
        mean_a: Means of the first distribution
        var_a: Positive variances of the first distribution
        mean_b: Means of the second distribution
        var_b: Positive variances of the second distribution
        order (float): Rényi order above 1

    Returns:
        float: Divergence in nats, summed over coordinates
    """
    mean_a, var_a, mean_b, var_b = (np.atleast_1d(np.asarray(x, dtype=float))
                                    for x in (mean_a, var_a, mean_b, var_b))
    if not (mean_a.shape == var_a.shape == mean_b.shape == var_b.shape):
        raise DomainError("means and variances must share one dimension")
    if np.any(var_a <= 0) or np.any(var_b <= 0):
        raise DomainError("variances must be positive")
    if not order > 1:
        raise DomainError(f"Rényi order must exceed 1, got {order}")

    mixed = (1.0 - order) * var_a + order * var_b
    if np.any(mixed <= 0):
        raise DivergenceUndefinedError(
            f"order {order} outside the validity range: mixed variance is not positive"
        )
    diff = mean_a - mean_b
    per_coord = (
        order * diff * diff / (2.0 * mixed)
        + 0.5 * np.log(var_b / var_a)
        + np.log(var_b / mixed) / (2.0 * (order - 1.0))
    )
    return float(np.sum(per_coord))


def log_moment_subsampled(d, cfg, lam):
    """
    Both directional log-moments of the subsampled Gaussian mechanism.

    Args:
        d (float): Neighbour distance ||g - g'||
        cfg (MechanismConfig): Mechanism parameters
        lam (int): Moment order

    Returns:
        DirectionalMoment: left and right log-moments
    """
    lam = _check_lambda(lam)
    a = _half_snr_squared(d, cfg)
    if a.ndim:
        raise DomainError("log_moment_subsampled takes a single distance; use sample_log_moments")
    left = _log_binomial_moment(a, lam + 1, cfg.q, -1)
    right = _log_binomial_moment(a, lam, cfg.q, +1)
    return DirectionalMoment(left=float(left), right=float(right))


def sample_log_moments(distances, cfg, lambda_grid):
    """
    Per-sample log-moments max(left, right) for every order of a grid.

    Args:
        distances: Sequence of m neighbour distances
        cfg (MechanismConfig): Mechanism parameters
        lambda_grid: Ascending positive integer orders

    Returns:
        numpy.ndarray: Shape (len(lambda_grid), m)
    """
    a = np.atleast_1d(_half_snr_squared(distances, cfg))
    rows = []
    for lam in lambda_grid:
        lam = _check_lambda(lam)
        left = _log_binomial_moment(a, lam + 1, cfg.q, -1)
        right = _log_binomial_moment(a, lam, cfg.q, +1)
        rows.append(np.maximum(left, right))
    return np.vstack(rows) if rows else np.empty((0, a.size))


def sample_moment_ratios(distances, cfg, lambda_grid):
    """
    Largest per-sample log-moment of every order and each sample's moment
    relative to it.

    Gives the same result as exponentiating :func:`sample_log_moments` after
    subtracting each row's maximum, evaluated as two matrix products over the
    shared binomial index. Terms more than ``NEGLIGIBLE_LOG_TERM`` below an
    order's largest term at the largest distance are skipped; the ratios
    average at least 1/m, so the skipped mass stays below double precision.

    Args:
        distances: Sequence of m neighbour distances
        cfg (MechanismConfig): Mechanism parameters
        lambda_grid: Ascending positive integer orders

    Returns:
        tuple: (peak, ratios) with ``peak`` of shape (n_orders,) and
        ``ratios`` of shape (n_orders, m), every ratio in [0, 1]
    """
    a = np.atleast_1d(_half_snr_squared(distances, cfg))
    grid = tuple(_check_lambda(lam) for lam in lambda_grid)
    if not grid or not a.size:
        return np.zeros(len(grid)), np.ones((len(grid), a.size))
    a_max = float(a.max())
    if cfg.q == 0.0 or a_max == 0.0:
        return np.zeros(len(grid)), np.ones((len(grid), a.size))

    exponents, left, right = _grid_log_weights(grid, float(cfg.q))
    top_left = left + exponents * a_max
    top_right = right + exponents * a_max
    scale = np.maximum(top_left.max(axis=1), top_right.max(axis=1))[:, None]
    top_left = top_left - scale
    top_right = top_right - scale
    keep = np.maximum(top_left.max(axis=0), top_right.max(axis=0)) >= NEGLIGIBLE_LOG_TERM

    # exp((j^2 - j)(a_i - a_max)) never exceeds one
    shrink = np.exp(np.outer(exponents[keep], a - a_max))
    moments = np.maximum(np.exp(top_left[:, keep]) @ shrink, np.exp(top_right[:, keep]) @ shrink)
    peak_moment = moments.max(axis=1)
    peak = scale[:, 0] + np.log(peak_moment)
    return peak, moments / peak_moment[:, None]


def ma_privacy_cost(cfg, lam):
    """
    Data-independent per-step cost of the moments accountant.

    The worst-case neighbour distance (the clip bound) replaces the observed
    gradient distance.

    Args:
        cfg (MechanismConfig): Mechanism parameters with a clip bound
        lam (int): Moment order

    Returns:
        float: Log-moment cost
    """
    if cfg.clip is None:
        raise ConfigurationError("moments accountant needs a clip bound")
    return log_moment_subsampled(cfg.worst_case_distance, cfg, lam).cost


def ma_privacy_costs(cfg, lambda_grid):
    """
    Vector of :func:`ma_privacy_cost` over a grid of orders.
    """
    if cfg.clip is None:
        raise ConfigurationError("moments accountant needs a clip bound")
    return sample_log_moments([cfg.worst_case_distance], cfg, lambda_grid)[:, 0]
