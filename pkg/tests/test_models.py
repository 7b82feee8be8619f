"""
Tests for gradient-distance models and random streams.
"""
import math

import numpy as np
import pytest

from src.simulation.models import GradientModel, ModelKind, quantile_of_norms, sample_pair_distances
from src.utils.errors import ConfigurationError, DomainError
from src.utils.rng import Stream, derive_rng


class TestSampling:

    def test_constant(self, rng):
        model = GradientModel(kind=ModelKind.CONSTANT, scale=0.7)
        np.testing.assert_array_equal(sample_pair_distances(model, 5, rng), np.full(5, 0.7))

    def test_weibull_mean(self, weibull):
        draws = sample_pair_distances(weibull, 10**6, derive_rng(3, Stream.DISTANCES))
        # Gamma(1 + 1/0.5) = 2
        assert np.mean(draws) == pytest.approx(2.0, rel=0.01)

    def test_determinism(self, weibull):
        first = sample_pair_distances(weibull, 50, derive_rng(11, Stream.DISTANCES))
        second = sample_pair_distances(weibull, 50, derive_rng(11, Stream.DISTANCES))
        np.testing.assert_array_equal(first, second)

    def test_streams_are_independent(self, weibull):
        distances = sample_pair_distances(weibull, 50, derive_rng(11, Stream.DISTANCES))
        noise = sample_pair_distances(weibull, 50, derive_rng(11, Stream.NOISE))
        assert not np.array_equal(distances, noise)

    def test_empirical_resamples_recorded_values(self, rng):
        model = GradientModel(kind=ModelKind.EMPIRICAL, samples=(0.1, 0.2, 0.3))
        assert set(sample_pair_distances(model, 100, rng)) <= {0.1, 0.2, 0.3}

    def test_needs_two_samples(self, weibull, rng):
        with pytest.raises(DomainError):
            sample_pair_distances(weibull, 1, rng)


class TestQuantiles:

    def test_weibull_median(self, weibull):
        assert quantile_of_norms(weibull, 0.5) == pytest.approx(math.log(2) ** 2, rel=1e-12)

    def test_sampling_agrees_with_closed_form(self, weibull):
        assert quantile_of_norms(weibull, 0.5, method="sampling") == pytest.approx(math.log(2) ** 2, rel=0.01)

    def test_lognormal_median_is_scale(self):
        model = GradientModel(kind=ModelKind.LOGNORMAL, shape=0.3, scale=1.7)
        assert quantile_of_norms(model, 0.5) == pytest.approx(1.7, rel=1e-12)

    def test_constant(self):
        assert quantile_of_norms(GradientModel(kind=ModelKind.CONSTANT, scale=2.5), 0.99) == 2.5

    def test_empirical_nearest_rank(self):
        model = GradientModel(kind=ModelKind.EMPIRICAL, samples=(5.0, 1.0, 4.0, 2.0, 3.0))
        assert quantile_of_norms(model, 0.5) == 3.0
        assert quantile_of_norms(model, 0.2) == 1.0
        assert quantile_of_norms(model, 0.21) == 2.0

    @pytest.mark.parametrize("p", [0.0, 1.0])
    def test_level_domain(self, weibull, p):
        with pytest.raises(DomainError):
            quantile_of_norms(weibull, p)


class TestModelValidation:

    @pytest.mark.parametrize("kwargs", [
        {"shape": 0.0}, {"scale": -1.0}, {"calibration_draws": 1},
        {"kind": ModelKind.EMPIRICAL}, {"kind": ModelKind.EMPIRICAL, "samples": (1.0, -2.0)},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            GradientModel(**kwargs)

    def test_kind_from_string(self):
        assert GradientModel(kind="lognormal").kind is ModelKind.LOGNORMAL
