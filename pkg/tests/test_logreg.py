"""
Tests for the desk-scale DP-SGD logistic regression.
"""
from pathlib import Path

import numpy as np
import pytest

from src.privacy.estimator import EstimatorConfig
from src.simulation.logreg import (clip_gradients, leave_one_out_distances, per_example_gradients,
                                   run_logreg_csv, run_logreg_dpsgd)
from src.simulation.plans import (AGGREGATION_MEAN, AGGREGATION_SUM, ClipKind, ClipPolicy, NoiseKind, NoisePolicy,
                                  SimulationPlan)
from src.utils.errors import ConfigurationError, DataError, StreamParseError

DATASET = str(Path(__file__).resolve().parent.parent / "data" / "synthetic_binary.csv")


def training_plan(**kwargs):
    defaults = dict(
        steps=160,
        q=50 / 800,
        sigma=2.0,
        clip_policy=ClipPolicy(ClipKind.ABSOLUTE, 1.0),
        noise_policy=NoisePolicy(NoiseKind.RELATIVE),
        estimator=EstimatorConfig(m=100),
        delta=1e-5,
        seed=3,
        aggregation=AGGREGATION_MEAN,
    )
    defaults.update(kwargs)
    return SimulationPlan(**defaults)


class TestGradients:

    def test_clipping_caps_norms(self, rng):
        gradients = rng.normal(size=(20, 3)) * 5
        clipped, norms = clip_gradients(gradients, 1.0)
        assert np.all(np.linalg.norm(clipped, axis=1) <= 1.0 + 1e-12)
        np.testing.assert_allclose(norms, np.linalg.norm(clipped, axis=1))

    def test_small_gradients_untouched(self):
        gradients = np.array([[0.1, 0.2], [0.0, 0.0]])
        clipped, _ = clip_gradients(gradients, 1.0)
        np.testing.assert_array_equal(clipped, gradients)

    def test_leave_one_out_matches_recomputation(self, rng):
        features = np.hstack([rng.normal(size=(30, 3)), np.ones((30, 1))])
        labels = (rng.random(30) < 0.5).astype(float)
        weights = rng.normal(size=4)
        clip, normaliser = 0.5, 12.5

        clipped, _ = clip_gradients(per_example_gradients(weights, features, labels), clip)
        batch_gradient = clipped.sum(axis=0) / normaliser
        direct = [np.linalg.norm(batch_gradient - np.delete(clipped, i, axis=0).sum(axis=0) / normaliser)
                  for i in range(30)]
        distances = leave_one_out_distances(clipped, normaliser)
        np.testing.assert_allclose(distances, direct, rtol=1e-10, atol=1e-14)
        assert np.all(distances <= clip / normaliser + 1e-12)


class TestTraining:

    def test_separable_baseline(self, separable_dataset):
        features, labels = separable_dataset
        plan = SimulationPlan(steps=50 * 10, q=0.1, seed=1)
        result = run_logreg_dpsgd(features, labels, plan, private=False)
        assert result.history[-1].train_accuracy >= 0.99
        assert result.trace.records == []

    def test_private_run_on_bundled_dataset(self):
        plan = training_plan()
        baseline = run_logreg_csv(DATASET, plan, label_column="label", private=False)
        private = run_logreg_csv(DATASET, plan, label_column="label")

        final = private.trace.final
        assert final.epsilon_dp <= 8.0
        assert final.epsilon_bdp < final.epsilon_dp
        assert private.final_accuracy >= 0.9 * baseline.final_accuracy
        assert private.trace.is_monotone()
        assert len(private.history) == 10

    def test_deterministic(self, separable_dataset):
        features, labels = separable_dataset
        plan = training_plan(steps=20)
        first = run_logreg_dpsgd(features, labels, plan)
        second = run_logreg_dpsgd(features, labels, plan)
        np.testing.assert_array_equal(first.weights, second.weights)
        assert first.trace.records == second.trace.records

    def test_private_needs_absolute_clip(self, separable_dataset):
        features, labels = separable_dataset
        with pytest.raises(ConfigurationError):
            run_logreg_dpsgd(features, labels, training_plan(clip_policy=ClipPolicy()))

    def test_too_few_rows(self):
        with pytest.raises(DataError):
            run_logreg_dpsgd(np.zeros((10, 2)), np.zeros(10), training_plan())

    def test_non_binary_labels(self, separable_dataset):
        features, labels = separable_dataset
        labels = labels.copy()
        labels[0] = 2.0
        with pytest.raises(DataError):
            run_logreg_dpsgd(features, labels, training_plan())


class TestAggregation:

    def test_sum_takes_larger_steps(self, separable_dataset):
        features, labels = separable_dataset
        mean = run_logreg_dpsgd(features, labels, training_plan(steps=20))
        summed = run_logreg_dpsgd(features, labels, training_plan(steps=20, aggregation=AGGREGATION_SUM))
        assert summed.trace.metadata["aggregation"] == AGGREGATION_SUM
        assert not np.allclose(mean.weights, summed.weights)

    def test_sum_with_scaled_rate_reproduces_mean(self, separable_dataset):
        features, labels = separable_dataset
        mean = run_logreg_dpsgd(features, labels, training_plan(steps=20), learning_rate=0.5)
        normaliser = mean.trace.metadata["normaliser"]
        assert normaliser > 1.0
        summed = run_logreg_dpsgd(features, labels, training_plan(steps=20, aggregation=AGGREGATION_SUM),
                                  learning_rate=0.5 / normaliser)
        np.testing.assert_allclose(summed.weights, mean.weights, rtol=1e-8, atol=1e-12)
        # dividing by a public constant scales noise and distances alike
        for a, b in zip(mean.trace.records, summed.trace.records):
            assert a.epsilon_dp == pytest.approx(b.epsilon_dp, rel=1e-9)
            assert a.epsilon_bdp == pytest.approx(b.epsilon_bdp, rel=1e-9)


class TestDatasetErrors:

    def test_bad_cell_reports_row_and_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x1,label\n0.5,1\noops,0\n", encoding="utf-8")
        with pytest.raises(StreamParseError) as info:
            run_logreg_csv(str(path), training_plan())
        assert info.value.row == 3
        assert info.value.column == "x1"

    def test_non_binary_label_in_file(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("x1,label\n0.5,1\n0.2,3\n", encoding="utf-8")
        with pytest.raises(DataError):
            run_logreg_csv(str(path), training_plan())
