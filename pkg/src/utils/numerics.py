"""
Special functions and log-space primitives shared by the accountant.

Everything here is pure and safe to call concurrently.
"""
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, NumericError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ToleranceConfig:
    """
    Convergence tolerances for quantile inversion and quadrature.
    """
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_iter: int = 200

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise DomainError(f"abs_tol must be positive, got {self.abs_tol}")
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_iter < 1:
            raise DomainError(f"max_iter must be at least 1, got {self.max_iter}")


DEFAULT_TOLERANCE = ToleranceConfig()


def log_sum_exp(terms):
    """
    Compute log(sum(exp(terms))) without overflow.

    Args:
        terms: Sequence of log-domain values, entries may be -inf

    Returns:
        float: The log of the summed exponentials
    """
    values = np.asarray(terms, dtype=float)
    if values.size == 0:
        raise DomainError("log_sum_exp needs at least one term")
    if np.all(np.isneginf(values)):
        return -math.inf
    return float(special.logsumexp(values))


def log_binomial_coeff(n, k):
    """
    Natural log of the binomial coefficient C(n, k) via log-gamma.

    Args:
        n (int): Number of trials
        k (int): Number of successes

    Returns:
        float: ln C(n, k)
    """
    if n < 0 or k < 0 or k > n:
        raise DomainError(f"binomial coefficient undefined for n={n}, k={k}")
    return float(special.gammaln(n + 1) - special.gammaln(k + 1) - special.gammaln(n - k + 1))


def _check_shapes(a, b):
    if not (a > 0 and b > 0):
        raise DomainError(f"beta shapes must be positive, got a={a}, b={b}")


def reg_incomplete_beta(a, b, x):
    """
    Regularized incomplete beta function I_x(a, b).

    Args:
        a (float): First shape parameter
        b (float): Second shape parameter
        x (float): Evaluation point in [0, 1]

    Returns:
        float: The Beta(a, b) CDF at x
    """
    _check_shapes(a, b)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    return float(special.betainc(a, b, x))


def beta_inv_cdf(p, a, b, tol=DEFAULT_TOLERANCE):
    """
    Quantile function of the Beta(a, b) distribution.

    The scipy inverse is checked against the CDF and, when it misses the
    tolerance, refined by a bracketed root search on [0, 1].

    Args:
        p (float): Probability in [0, 1]
        a (float): First shape parameter
        b (float): Second shape parameter
        tol (ToleranceConfig): Convergence tolerances

    Returns:
        float: x with I_x(a, b) = p
    """
    _check_shapes(a, b)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0

    x = float(special.betaincinv(a, b, p))
    if 0.0 <= x <= 1.0 and abs(special.betainc(a, b, x) - p) <= tol.abs_tol + tol.rel_tol * p:
        return x

    logger.debug("betaincinv missed tolerance at p=%r, a=%r, b=%r; refining", p, a, b)
    try:
        x, result = optimize.brentq(
            lambda z: special.betainc(a, b, z) - p,
            0.0,
            1.0,
            xtol=tol.abs_tol,
            rtol=max(tol.rel_tol, 4 * np.finfo(float).eps),
            maxiter=tol.max_iter,
            full_output=True,
            disp=False,
        )
    except ValueError as exc:
        raise NumericError(f"beta quantile bracket invalid: {exc}", bracket=(0.0, 1.0)) from exc
    if not result.converged:
        raise NumericError(
            f"beta quantile did not converge in {tol.max_iter} iterations",
            bracket=(x - tol.abs_tol, x + tol.abs_tol),
        )
    return float(x)


def student_t_inv_cdf(p, dof):
    """
    Quantile function of Student's t distribution.

    Args:
        p (float): Probability strictly inside (0, 1)
        dof (float): Degrees of freedom, at least 1

    Returns:
        float: t with CDF(t; dof) = p
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"Student-t quantile is infinite at p={p}")
    if dof < 1:
        raise DomainError(f"degrees of freedom must be at least 1, got {dof}")
    if p == 0.5:
        return 0.0
    # antisymmetry, so t(p) + t(1 - p) cancels exactly
    if p > 0.5:
        return -float(special.stdtrit(dof, 1.0 - p))
    return float(special.stdtrit(dof, p))


def _log_mixture_ratio(z, q):
    # log((1 - q) + q * exp(z))
    if q == 1.0:
        return z
    if z < 30.0:
        return math.log1p(q * math.expm1(z))
    return float(np.logaddexp(math.log1p(-q), math.log(q) + z))


def gauss_mixture_renyi_numeric(d, sigma, q, order, reverse=False, tol=DEFAULT_TOLERANCE):
    """
    Rényi divergence between (1-q)N(0, s^2) + qN(d, s^2) and N(0, s^2) by quadrature.

    The forward direction is D(mixture || N(0, s^2)); ``reverse=True`` swaps the
    arguments. The integrand is written as N(0, s^2) * (ratio**power - 1) so that
    small divergences keep their relative precision.

    Args:
        d (float): Distance between the component means
        sigma (float): Shared standard deviation
        q (float): Mixture weight of the shifted component
        order (float): Rényi order, strictly above 1
        reverse (bool): Compute D(N(0, s^2) || mixture) instead
        tol (ToleranceConfig): Quadrature tolerances

    Returns:
        float: Divergence in nats
    """
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must lie in [0, 1], got {q}")
    if not order > 1:
        raise DomainError(f"Rényi order must exceed 1, got {order}")
    if d < 0:
        raise DomainError(f"distance must be non-negative, got {d}")
    if d == 0 or q == 0:
        return 0.0

    power = (1.0 - order) if reverse else order
    var = sigma * sigma
    log_norm = -0.5 * math.log(2.0 * math.pi * var)

    def integrand(x):
        log_pdf = log_norm - x * x / (2.0 * var)
        z = (2.0 * x * d - d * d) / (2.0 * var)
        log_ratio = power * _log_mixture_ratio(z, q)
        if log_ratio > 1.0:
            return math.exp(log_pdf + log_ratio) - math.exp(log_pdf)
        return math.exp(log_pdf) * math.expm1(log_ratio)

    half_width = 12.0 * sigma + order * d
    breakpoints = sorted({k * d for k in range(-math.ceil(order), math.ceil(order) + 1)
                          if -half_width < k * d < half_width})
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            value, abserr = integrate.quad(
                integrand,
                -half_width,
                half_width,
                points=breakpoints,
                epsabs=0.0,
                epsrel=tol.rel_tol,
                limit=tol.max_iter,
            )
    except OverflowError as exc:
        raise NumericError("mixture integrand overflowed", bracket=(-half_width, half_width)) from exc
    if not math.isfinite(value) or abserr > 1e-8 * abs(value) + 1e-300:
        raise NumericError(
            f"quadrature did not reach 1e-8 relative accuracy (estimate {value!r}, error {abserr!r})",
            bracket=(-half_width, half_width),
        )
    return math.log1p(max(value, 0.0)) / (order - 1.0)
