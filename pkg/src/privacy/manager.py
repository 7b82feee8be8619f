"""
Parallel accounting of one mechanism under the moments accountant and the
Bayesian accountant.
"""
import logging
from dataclasses import replace

import numpy as np

from ..utils.errors import AccountingError, ConfigurationError
from .accountant import DEFAULT_LAMBDA_GRID, Ledger, LedgerMode
from .estimator import EstimatorConfig, estimate_from_ratios
from .mechanisms import ma_privacy_costs, sample_moment_ratios

logger = logging.getLogger(__name__)

# relative slack when deciding whether a distance lies within the clip bound
CLIP_TOLERANCE = 1e-12


class ParallelAccountant:
    """
    Owns the MA and BDP ledgers of one run and feeds both from distance samples.
    """
    MODES = ("ma", "bdp", "both")

    def __init__(self, mechanism, estimator=None, lambda_grid=DEFAULT_LAMBDA_GRID, mode="both"):
        """
        Initialize the accountant.

        Args:
            mechanism (MechanismConfig): Noise and sampling of the mechanism
            estimator (EstimatorConfig): Settings of the BDP estimator
            lambda_grid: Orders to account at
            mode (str): "ma", "bdp" or "both"
        """
        if mode not in self.MODES:
            raise ConfigurationError(f"mode must be one of {self.MODES}, got {mode!r}")
        if mode in ("ma", "both") and mechanism.clip is None:
            raise ConfigurationError("moments accountant needs a clip bound")
        self.mechanism = mechanism
        self.estimator = estimator or EstimatorConfig()
        self.mode = mode

        self.ma_ledger = None
        self.bdp_ledger = None
        if mode in ("ma", "both"):
            self.ma_ledger = Ledger(mode=LedgerMode.MA, lambda_grid=lambda_grid, gamma=0.0)
        if mode in ("bdp", "both"):
            self.bdp_ledger = Ledger(mode=LedgerMode.BDP, lambda_grid=lambda_grid, gamma=self.estimator.gamma)
        self.lambda_grid = (self.ma_ledger or self.bdp_ledger).lambda_grid

        self._ma_costs = ma_privacy_costs(mechanism, self.lambda_grid) if mechanism.clip is not None else None
        self._last_distances = None
        self._last_bdp_costs = None
        self.bdp_within_clip = mechanism.clip is not None
        self._clamp_skipped = False

    @property
    def steps(self):
        return (self.ma_ledger or self.bdp_ledger).steps

    @property
    def ma_costs(self):
        """Per-order MA cost of one step, or None without a clip bound."""
        return None if self._ma_costs is None else self._ma_costs.copy()

    def _within_clip(self, distances):
        clip = self.mechanism.clip
        return clip is not None and bool(np.all(distances <= clip * (1.0 + CLIP_TOLERANCE)))

    def bdp_costs(self, distances):
        """
        Estimated per-order BDP costs of one step.

        Args:
            distances: The step's m neighbour distances

        Returns:
            numpy.ndarray: One cost per grid order
        """
        distances = np.asarray(distances, dtype=float)
        if self._last_distances is not None and np.array_equal(distances, self._last_distances):
            return self._last_bdp_costs

        cfg = self.estimator
        if distances.size != cfg.m:
            cfg = replace(cfg, m=distances.size)
        within = self._within_clip(distances)
        caps = None
        if cfg.clamp_to_ma and self._ma_costs is not None:
            if within:
                caps = self._ma_costs
            elif not self._clamp_skipped:
                self._clamp_skipped = True
                logger.warning("a distance exceeds the clip bound %.6g; MA clamp skipped for such steps",
                               self.mechanism.clip)

        peak, ratios = sample_moment_ratios(distances, self.mechanism, self.lambda_grid)
        costs = estimate_from_ratios(peak, ratios, cfg, caps)
        self._last_distances = distances.copy()
        self._last_bdp_costs = costs
        return costs

    def record_step(self, distances=None):
        """
        Record one invocation of the mechanism in every maintained ledger.

        Args:
            distances: The step's neighbour distances (needed for BDP)
        """
        step = self.steps + 1
        try:
            if self.bdp_ledger is not None:
                if distances is None:
                    raise ConfigurationError("BDP accounting needs the step's distances")
                distances = np.asarray(distances, dtype=float)
                if not self._within_clip(distances):
                    self.bdp_within_clip = False
                self.bdp_ledger.record_step(self.bdp_costs(distances))
            if self.ma_ledger is not None:
                self.ma_ledger.record_step(self._ma_costs)
        except AccountingError as exc:
            raise exc.at_step(step)
        logger.debug("recorded step %d", step)

    def reports(self, delta):
        """
        (ε, δ) reports of every maintained ledger.

        With both ledgers and every BDP step inside the clip bound, the DP
        guarantee of the same mechanism is also a BDP guarantee, so the BDP
        report is the better of the two.

        Args:
            delta (float): Total δ

        Returns:
            dict: Mode name to PrivacyReport
        """
        reports = {}
        if self.ma_ledger is not None:
            reports["ma"] = self.ma_ledger.epsilon_at(delta)
        if self.bdp_ledger is not None:
            bdp = self.bdp_ledger.epsilon_at(delta)
            if ("ma" in reports and self.bdp_within_clip and self.estimator.clamp_to_ma
                    and reports["ma"].epsilon < bdp.epsilon):
                bdp = replace(reports["ma"], delta=bdp.delta, mode=LedgerMode.BDP, steps=bdp.steps)
            reports["bdp"] = bdp
        return reports

    def epsilon_curves(self, delta):
        """
        Per-order ε of every maintained ledger.
        """
        curves = {}
        if self.ma_ledger is not None:
            curves["ma"] = self.ma_ledger.epsilon_curve(delta)
        if self.bdp_ledger is not None:
            curves["bdp"] = self.bdp_ledger.epsilon_curve(delta)
        return curves
