"""
Privacy ledger: accumulates per-step costs over a grid of orders and converts
them to (epsilon, delta) guarantees.
"""
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Optional

import numpy as np
from scipy import optimize

from ..utils.errors import BudgetExhaustedError, ConfigurationError, DataError, DomainError, NumericError
from .estimator import DEFAULT_GAMMA
from .mechanisms import MechanismConfig, ma_privacy_costs

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = tuple(range(1, 65)) + (96, 128, 192, 256, 384, 512)


class LedgerMode(str, Enum):
    """
    Which accountant a ledger belongs to.
    """
    MA = "ma"
    BDP = "bdp"


def build_lambda_grid(lambda_max=None, extra=()):
    """
    Default order grid, optionally truncated at ``lambda_max`` and extended.

    Args:
        lambda_max (int): Largest order to keep
        extra: Additional positive integer orders

    Returns:
        tuple: Ascending, de-duplicated orders
    """
    grid = set(DEFAULT_LAMBDA_GRID) | {int(x) for x in extra}
    if lambda_max is not None:
        grid = {lam for lam in grid if lam <= lambda_max}
    if not grid:
        raise ConfigurationError(f"lambda grid is empty for lambda_max={lambda_max}")
    return tuple(sorted(grid))


def attack_success_probability(epsilon):
    """
    Upper bound on a membership attacker's success probability.

    Args:
        epsilon (float): Privacy loss bound in nats

    Returns:
        float: 1 / (1 + e^-epsilon)
    """
    if epsilon < 0:
        raise DomainError(f"epsilon must be non-negative, got {epsilon}")
    return 1.0 / (1.0 + math.exp(-epsilon))


def compose_basic(epsilon, delta, k):
    """
    Basic composition of k mechanisms with the same guarantee.

    Returns:
        tuple: (k * epsilon, k * delta)
    """
    if k < 0:
        raise DomainError(f"k must be non-negative, got {k}")
    return k * epsilon, k * delta


def group_privacy(epsilon, delta, k):
    """
    Guarantee for datasets differing in k records.

    Returns:
        tuple: (k * epsilon, k * delta)
    """
    if k < 0:
        raise DomainError(f"k must be non-negative, got {k}")
    return k * epsilon, k * delta


@dataclass(frozen=True)
class PrivacyReport:
    """
    One (epsilon, delta) guarantee and the order that attains it.
    """
    epsilon: float
    delta: float
    lambda_star: int
    attack_success: float
    mode: LedgerMode
    steps: int

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "delta": self.delta,
            "lambda_star": self.lambda_star,
            "attack_success": self.attack_success,
            "mode": self.mode.value,
            "steps": self.steps,
        }


@dataclass(eq=False)
class Ledger:
    """
    Cumulative privacy cost per order.

    In BDP mode each recorded step also spends ``gamma`` of the δ budget for
    the chance that its estimate undershot the true cost.
    """
    mode: LedgerMode = LedgerMode.BDP
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    gamma: float = DEFAULT_GAMMA
    cum_cost: Optional[np.ndarray] = None
    steps: int = 0
    saved_at: Optional[datetime] = field(default=None, compare=False)

    def __post_init__(self):
        self.mode = LedgerMode(self.mode)
        grid = tuple(int(lam) for lam in self.lambda_grid)
        if not grid:
            raise ConfigurationError("lambda grid must not be empty")
        if any(lam < 1 for lam in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("lambda grid must be ascending positive integers")
        self.lambda_grid = grid
        if self.cum_cost is None:
            self.cum_cost = np.zeros(len(grid))
        else:
            self.cum_cost = np.array(self.cum_cost, dtype=float)
        if self.cum_cost.shape != (len(grid),):
            raise ConfigurationError("cumulative costs are not aligned with the lambda grid")
        if np.any(self.cum_cost < 0):
            raise DataError("cumulative costs must be non-negative")
        if self.steps < 0:
            raise DataError("step count must be non-negative")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigurationError(f"gamma must lie in [0, 1), got {self.gamma}")

    @property
    def lambdas(self):
        return np.asarray(self.lambda_grid, dtype=float)

    @property
    def gamma_mass(self):
        """Estimator failure probability charged so far."""
        if self.mode is LedgerMode.MA:
            return 0.0
        return self.steps * self.gamma

    def record_step(self, costs):
        """
        Add one step's per-order costs.

        Args:
            costs: One non-negative cost per grid order

        Returns:
            Ledger: self
        """
        costs = np.asarray(costs, dtype=float)
        if costs.shape != self.cum_cost.shape:
            raise ConfigurationError(
                f"costs of shape {costs.shape} are not aligned with a grid of {len(self.lambda_grid)} orders"
            )
        if not np.all(np.isfinite(costs)):
            raise DataError("privacy costs must be finite")
        if np.any(costs < 0):
            raise DataError("privacy costs must be non-negative")
        self.cum_cost = self.cum_cost + costs
        self.steps += 1
        return self

    def _report(self, epsilon, delta, index):
        epsilon = max(float(epsilon), 0.0)
        return PrivacyReport(
            epsilon=epsilon,
            delta=float(delta),
            lambda_star=self.lambda_grid[index],
            attack_success=attack_success_probability(epsilon),
            mode=self.mode,
            steps=self.steps,
        )

    def epsilon_curve(self, delta):
        """
        ε bound at every order for a total δ.

        Args:
            delta (float): Total δ, including estimator failure mass

        Returns:
            numpy.ndarray: One ε per grid order
        """
        if not 0.0 < delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {delta}")
        beta = delta - self.gamma_mass
        if beta <= 0:
            raise BudgetExhaustedError(delta, self.gamma_mass)
        return (self.cum_cost - math.log(beta)) / self.lambdas

    def epsilon_at(self, delta):
        """
        Smallest ε over the grid for a fixed total δ.

        Ties go to the smaller order.

        Args:
            delta (float): Total δ, including estimator failure mass

        Returns:
            PrivacyReport: The guarantee
        """
        curve = self.epsilon_curve(delta)
        index = int(np.argmin(curve))
        return self._report(curve[index], delta, index)

    def delta_at(self, epsilon):
        """
        Smallest δ over the grid for a fixed ε.

        Args:
            epsilon (float): Privacy loss bound in nats

        Returns:
            PrivacyReport: The guarantee
        """
        if epsilon < 0:
            raise DomainError(f"epsilon must be non-negative, got {epsilon}")
        log_beta = self.cum_cost - self.lambdas * epsilon
        index = int(np.argmin(log_beta))
        delta = min(math.exp(min(log_beta[index], 0.0)) + self.gamma_mass, 1.0)
        return self._report(epsilon, delta, index)


def find_noise_multiplier(q, steps, target_epsilon, delta, lambda_grid=DEFAULT_LAMBDA_GRID,
                          noise_multiplier_factor=1.0, sigma_bounds=(1e-2, 1e3)):
    """
    Smallest noise multiplier whose moments-accountant ε meets a target.

    Args:
        q (float): Sampling probability
        steps (int): Number of mechanism invocations
        target_epsilon (float): Desired ε
        delta (float): Desired δ
        lambda_grid: Orders to optimise over
        noise_multiplier_factor (float): Scale of noise relative to sigma * C
        sigma_bounds (tuple): Search interval for sigma

    Returns:
        float: Noise multiplier sigma
    """
    if not target_epsilon > 0:
        raise DomainError(f"target epsilon must be positive, got {target_epsilon}")

    def epsilon_for(sigma):
        cfg = MechanismConfig(sigma=sigma, q=q, clip=1.0, noise_multiplier_factor=noise_multiplier_factor)
        ledger = Ledger(mode=LedgerMode.MA, lambda_grid=lambda_grid, gamma=0.0)
        ledger.cum_cost = steps * ma_privacy_costs(cfg, ledger.lambda_grid)
        ledger.steps = steps
        return ledger.epsilon_at(delta).epsilon

    low, high = sigma_bounds
    gap_low = epsilon_for(low) - target_epsilon
    gap_high = epsilon_for(high) - target_epsilon
    if gap_high > 0:
        raise NumericError(f"target epsilon {target_epsilon} unreachable below sigma={high}", bracket=sigma_bounds)
    if gap_low <= 0:
        return low
    sigma = optimize.brentq(lambda s: epsilon_for(s) - target_epsilon, low, high, xtol=1e-6)
    # brentq may land a hair below the target crossing
    while epsilon_for(sigma) > target_epsilon:
        sigma *= 1.0 + 1e-6
    logger.info("noise multiplier %.6g reaches epsilon %.4g at delta %.3g", sigma, target_epsilon, delta)
    return sigma
