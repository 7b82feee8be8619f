"""
Named plans reproducing the privacy-vs-noise, privacy-vs-steps and
privacy-vs-order studies on a Weibull(0.5) norm model.
"""
from dataclasses import dataclass, replace

from ..utils.errors import ConfigurationError
from .models import GradientModel, ModelKind
from .plans import ClipKind, ClipPolicy, NoiseKind, NoisePolicy, SimulationPlan

# output shapes of a preset run
OUTPUT_FINAL = "final"        # one row per sigma point after the last step
OUTPUT_TRACE = "trace"        # one row per step, one block per noise level
OUTPUT_LAMBDA = "lambda"      # epsilon over the order grid after the last step

SIGMA_GRID = (0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0)
WEIBULL = GradientModel(kind=ModelKind.WEIBULL, shape=0.5, scale=1.0)
MNIST_Q = 64 / 60000


@dataclass(frozen=True)
class Preset:
    """
    A named family of plans.

    Attributes:
        name (str): Preset name used on the command line
        description (str): One line shown in listings
        output (str): One of the OUTPUT_* shapes
        points (tuple): (label, SimulationPlan) pairs
    """
    name: str
    description: str
    output: str
    points: tuple

    def with_seed(self, seed):
        return replace(self, points=tuple((label, replace(plan, seed=seed)) for label, plan in self.points))

    def with_steps(self, steps):
        return replace(self, points=tuple((label, replace(plan, steps=steps)) for label, plan in self.points))


def _clip_sweep(name, level):
    base = SimulationPlan(
        model=WEIBULL,
        steps=1000,
        q=0.01,
        clip_policy=ClipPolicy(ClipKind.QUANTILE, level),
        noise_policy=NoisePolicy(NoiseKind.RELATIVE),
    )
    points = tuple((f"sigma={s:g}", replace(base, sigma=s)) for s in SIGMA_GRID)
    return Preset(name, f"both accountants clipped at the {level:g}-quantile, sigma sweep", OUTPUT_FINAL, points)


def _noise_sweep(name, level):
    base = SimulationPlan(
        model=WEIBULL,
        steps=1000,
        q=0.01,
        noise_policy=NoisePolicy(NoiseKind.QUANTILE, level),
    )
    points = tuple((f"sigma={s:g}", replace(base, sigma=s)) for s in SIGMA_GRID)
    return Preset(name, f"noise at the {level:g}-quantile, unclipped BDP, sigma sweep", OUTPUT_FINAL, points)


def _steps_trace(name, levels):
    points = tuple(
        (f"p={p:g}", SimulationPlan(model=WEIBULL, steps=1000, q=0.01, sigma=1.0,
                                    noise_policy=NoisePolicy(NoiseKind.QUANTILE, p)))
        for p in levels
    )
    return Preset(name, "epsilon over steps for several noise quantiles", OUTPUT_TRACE, points)


def _order_study(name, clips):
    points = tuple(
        (f"C={c:g}", SimulationPlan(
            model=GradientModel(kind=ModelKind.CONSTANT, scale=c),
            steps=10**4,
            q=MNIST_Q,
            sigma=1.0,
            clip_policy=ClipPolicy(ClipKind.ABSOLUTE, c),
            noise_policy=NoisePolicy(NoiseKind.ABSOLUTE),
        ))
        for c in clips
    )
    return Preset(name, "epsilon over the order grid for two clip bounds", OUTPUT_LAMBDA, points)


PRESETS = {
    preset.name: preset
    for preset in (
        _clip_sweep("fig1a", 0.01),
        _clip_sweep("fig1b", 0.5),
        _clip_sweep("fig1c", 0.99),
        _noise_sweep("fig2a", 0.05),
        _noise_sweep("fig2b", 0.5),
        _noise_sweep("fig2c", 0.95),
        _steps_trace("fig3", (0.05, 0.25, 0.75, 0.95)),
        _order_study("fig6", (0.1, 1.0)),
    )
}


def get_preset(name):
    """
    Look up a preset by name.

    Raises:
        ConfigurationError: Unknown name; the message lists the known presets
    """
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
