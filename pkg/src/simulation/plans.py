"""
Simulation plans, clipping/noise policies and privacy traces.
"""
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Optional

from ..privacy.accountant import DEFAULT_LAMBDA_GRID
from ..privacy.estimator import EstimatorConfig
from ..privacy.mechanisms import MechanismConfig
from ..utils.errors import ConfigurationError
from .models import GradientModel, quantile_of_norms

# How a training step aggregates clipped per-example gradients. "mean" divides
# the noisy sum by the expected batch size L, shrinking the noise and every
# leave-one-out distance by 1/L; "sum" applies the noisy sum as it is. Synthetic
# runs draw distances directly in the units of the noise.
AGGREGATION_SUM = "sum"
AGGREGATION_MEAN = "mean"


class ClipKind(str, Enum):
    NONE = "none"
    QUANTILE = "quantile"
    ABSOLUTE = "absolute"


class NoiseKind(str, Enum):
    RELATIVE = "relative"
    QUANTILE = "quantile"
    ABSOLUTE = "absolute"


def _check_level(p):
    if not 0.0 < p < 1.0:
        raise ConfigurationError(f"quantile level must lie in (0, 1), got {p}")


@dataclass(frozen=True)
class ClipPolicy:
    """
    Where gradients are clipped: nowhere, at a norm quantile, or at a constant.
    """
    kind: ClipKind = ClipKind.NONE
    value: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ClipKind(self.kind))
        if self.kind is ClipKind.QUANTILE:
            _check_level(self.value)
        elif self.kind is ClipKind.ABSOLUTE and not (self.value and self.value > 0):
            raise ConfigurationError(f"absolute clip bound must be positive, got {self.value}")

    def bound(self, model):
        """Clip bound C for the model, or None."""
        if self.kind is ClipKind.QUANTILE:
            return quantile_of_norms(model, self.value)
        if self.kind is ClipKind.ABSOLUTE:
            return float(self.value)
        return None


@dataclass(frozen=True)
class NoisePolicy:
    """
    What the noise multiplier scales.

    ``relative`` scales the clip bound, ``quantile`` a norm quantile and
    ``absolute`` nothing (sigma is the standard deviation itself).
    """
    kind: NoiseKind = NoiseKind.RELATIVE
    value: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if self.kind is NoiseKind.QUANTILE:
            _check_level(self.value)

    def reference(self, model, clip):
        """Distance the multiplier is applied to."""
        if self.kind is NoiseKind.QUANTILE:
            return quantile_of_norms(model, self.value)
        if self.kind is NoiseKind.RELATIVE:
            if clip is None:
                raise ConfigurationError("relative noise needs a clip bound")
            return clip
        return 1.0


@dataclass(frozen=True)
class SimulationPlan:
    """
    Everything that determines one accounting run.
    """
    model: GradientModel = field(default_factory=GradientModel)
    steps: int = 1000
    q: float = 0.01
    sigma: float = 1.0
    noise_multiplier_factor: float = 1.0
    clip_policy: ClipPolicy = field(default_factory=ClipPolicy)
    noise_policy: NoisePolicy = field(default_factory=NoisePolicy)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    delta: float = 1e-5
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    seed: int = 0
    aggregation: str = AGGREGATION_MEAN

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigurationError(f"a plan needs at least one step, got {self.steps}")
        if not 0.0 <= self.q <= 1.0:
            raise ConfigurationError(f"q must lie in [0, 1], got {self.q}")
        if not self.sigma > 0:
            raise ConfigurationError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigurationError(f"delta must lie in (0, 1), got {self.delta}")
        if self.seed < 0:
            raise ConfigurationError(f"seed must be non-negative, got {self.seed}")
        if self.aggregation not in (AGGREGATION_SUM, AGGREGATION_MEAN):
            raise ConfigurationError(f"unknown aggregation {self.aggregation!r}")
        object.__setattr__(self, "lambda_grid", tuple(int(lam) for lam in self.lambda_grid))

    @property
    def clip_bound(self):
        """Clip bound applied to BDP distances, or None when BDP is unclipped."""
        return self.clip_policy.bound(self.model)

    @property
    def dp_clip_bound(self):
        """
        Clip bound of the moments accountant.

        Without a clip policy the DP side clips at the noise reference, i.e.
        the gradients get clipped at the noise level.
        """
        clip = self.clip_bound
        if clip is not None:
            return clip
        if self.noise_policy.kind is NoiseKind.QUANTILE:
            return self.noise_policy.reference(self.model, None)
        raise ConfigurationError("the moments accountant needs a clip policy or quantile noise")

    @property
    def effective_sigma(self):
        """Standard deviation of the added noise in distance units."""
        reference = self.noise_policy.reference(self.model, self.dp_clip_bound)
        return self.noise_multiplier_factor * self.sigma * reference

    def mechanism(self, scale=1.0):
        """
        MechanismConfig with the noise already resolved to an absolute scale.

        Args:
            scale (float): Factor applied to both the noise and the clip bound,
                e.g. 1/L when the noisy sum is divided by L
        """
        return MechanismConfig(
            sigma=self.effective_sigma * scale,
            q=self.q,
            clip=self.dp_clip_bound * scale,
            noise_multiplier_factor=1.0,
            noise_relative_to_clip=False,
        )

    def describe(self):
        """Plain dict echo of the plan for run metadata."""
        echo = asdict(self)
        echo["model"] = self.model.describe()
        echo["clip_policy"] = {"kind": self.clip_policy.kind.value, "value": self.clip_policy.value}
        echo["noise_policy"] = {"kind": self.noise_policy.kind.value, "value": self.noise_policy.value}
        echo["lambda_grid"] = list(self.lambda_grid)
        try:
            echo["resolved"] = {
                "clip_bound": self.clip_bound,
                "dp_clip_bound": self.dp_clip_bound,
                "effective_sigma": self.effective_sigma,
            }
        except ConfigurationError:
            # plans without any clip only drive non-private runs
            echo["resolved"] = {"clip_bound": None, "dp_clip_bound": None, "effective_sigma": None}
        return echo


@dataclass(frozen=True)
class TraceRecord:
    """
    Both guarantees after one step.
    """
    step: int
    epsilon_dp: float
    epsilon_bdp: float
    delta: float
    lambda_star_dp: int
    lambda_star_bdp: int

    def as_row(self):
        return (self.step, self.epsilon_dp, self.epsilon_bdp, self.delta,
                self.lambda_star_dp, self.lambda_star_bdp)


@dataclass
class PrivacyTrace:
    """
    Per-step guarantees of one run plus the metadata needed to reproduce it.
    """
    records: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def append(self, record):
        self.records.append(record)

    @property
    def final(self):
        if not self.records:
            return None
        return self.records[-1]

    def is_monotone(self):
        """True when both ε columns never decrease."""
        pairs = zip(self.records, self.records[1:])
        return all(b.epsilon_dp >= a.epsilon_dp and b.epsilon_bdp >= a.epsilon_bdp for a, b in pairs)
