"""
Desk-scale DP-SGD: logistic regression with per-example clipping, Gaussian
noise and both accountants running alongside training.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..data.streams import read_dataset
from ..privacy.manager import ParallelAccountant
from ..utils.errors import AccountingError, ConfigurationError, DataError
from ..utils.rng import Stream, derive_rng
from .plans import AGGREGATION_MEAN, ClipKind, NoiseKind, PrivacyTrace
from .simulator import trace_record

logger = logging.getLogger(__name__)

MIN_ROWS = 100


@dataclass(frozen=True)
class EpochAccuracy:
    epoch: int
    step: int
    train_accuracy: float
    test_accuracy: float


@dataclass
class LogregResult:
    """
    Outcome of one training run.
    """
    trace: PrivacyTrace
    history: list = field(default_factory=list)
    weights: np.ndarray = None

    @property
    def final_accuracy(self):
        return self.history[-1].test_accuracy if self.history else None


def _with_bias(features):
    return np.hstack([features, np.ones((features.shape[0], 1))])


def standardise(train, test):
    """
    Scale features to zero mean and unit variance using training statistics.
    """
    mean = train.mean(axis=0)
    scale = train.std(axis=0)
    scale[scale == 0] = 1.0
    return (train - mean) / scale, (test - mean) / scale


def split_dataset(features, labels, test_fraction, rng):
    """
    Shuffle and split rows into train and test parts.

    Returns:
        tuple: (train features, train labels, test features, test labels)
    """
    if not 0.0 <= test_fraction < 1.0:
        raise ConfigurationError(f"test_fraction must lie in [0, 1), got {test_fraction}")
    order = rng.permutation(len(labels))
    n_test = int(round(test_fraction * len(labels)))
    test, train = order[:n_test], order[n_test:]
    return features[train], labels[train], features[test], labels[test]


def per_example_gradients(weights, features, labels):
    """Logistic-loss gradient of every row, shape (n, k)."""
    residual = expit(features @ weights) - labels
    return residual[:, None] * features


def clip_gradients(gradients, clip):
    """
    Scale every row to norm at most ``clip``.

    Returns:
        tuple: (clipped gradients, clipped norms)
    """
    norms = np.linalg.norm(gradients, axis=1)
    factors = np.minimum(1.0, clip / np.maximum(norms, np.finfo(float).tiny))
    return gradients * factors[:, None], norms * factors


def leave_one_out_distances(clipped, normaliser):
    """
    ||g(B) - g(B without x)|| for each clipped per-example gradient x.

    With a fixed normaliser the batch gradient is linear in its members, so
    removing x moves it by exactly clip(g_x) / normaliser.
    """
    return np.linalg.norm(clipped, axis=1) / normaliser


def accuracy(weights, features, labels):
    if len(labels) == 0:
        return float("nan")
    return float(np.mean((features @ weights > 0) == (labels == 1)))


def _check_plan(plan, private):
    if not plan.q > 0:
        raise ConfigurationError(f"q must lie in (0, 1] for training, got {plan.q}")
    if not private:
        return None
    if plan.clip_policy.kind is not ClipKind.ABSOLUTE:
        raise ConfigurationError("private training needs an absolute clip bound")
    if plan.noise_policy.kind is NoiseKind.QUANTILE:
        raise ConfigurationError("quantile noise needs a norm model; use relative or absolute noise")
    return plan.clip_bound


def _candidates(batch, size, m, rng):
    pool = batch if batch.size else np.arange(size)
    return rng.choice(pool, size=m, replace=pool.size < m)


def run_logreg_dpsgd(features, labels, plan, learning_rate=0.5, test_fraction=0.2, private=True):
    """
    Train logistic regression by Poisson-subsampled minibatch SGD.

    Each step includes every training row with probability ``plan.q``. The
    private path clips every per-example gradient to C and adds N(0, σ_eff²)
    to the clipped sum. Under the mean convention the noisy sum is divided by
    the expected batch size L = q·N, and the accountants see the noise, the
    clip bound and the m leave-one-out distances drawn from the batch in those
    same units; under the sum convention nothing is divided. Accuracy is
    recorded at every epoch boundary (1/q steps).

    Args:
        features (numpy.ndarray): Rows of numeric features
        labels (numpy.ndarray): Binary labels
        plan (SimulationPlan): q, σ, clip, estimator, δ, grid, seed and step count
        learning_rate (float): SGD step size
        test_fraction (float): Share of rows held out
        private (bool): False trains the noiseless, unclipped baseline

    Returns:
        LogregResult: Privacy trace (empty for the baseline), accuracy history, weights
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if len(labels) < MIN_ROWS:
        raise DataError(f"need at least {MIN_ROWS} rows, got {len(labels)}")
    if not np.all(np.isin(labels, (0.0, 1.0))):
        raise DataError("labels must be 0 or 1")
    clip = _check_plan(plan, private)

    train_x, train_y, test_x, test_y = split_dataset(
        features, labels, test_fraction, derive_rng(plan.seed, Stream.SPLIT))
    train_x, test_x = standardise(train_x, test_x)
    train_x, test_x = _with_bias(train_x), _with_bias(test_x)

    n_train = len(train_y)
    normaliser = max(plan.q * n_train, 1.0)
    steps_per_epoch = max(int(round(1.0 / plan.q)), 1)
    sampling_rng = derive_rng(plan.seed, Stream.SUBSAMPLING)
    noise_rng = derive_rng(plan.seed, Stream.NOISE)
    candidate_rng = derive_rng(plan.seed, Stream.CANDIDATES)

    # the applied gradient is the noisy sum divided by this
    divisor = normaliser if plan.aggregation == AGGREGATION_MEAN else 1.0
    accountant = None
    sigma_eff = 0.0
    if private:
        mechanism = plan.mechanism(scale=1.0 / divisor)
        accountant = ParallelAccountant(mechanism, plan.estimator, plan.lambda_grid, mode="both")
        sigma_eff = plan.effective_sigma
    trace = PrivacyTrace(metadata={
        "plan": plan.describe(), "seed": plan.seed, "private": private,
        "normaliser": normaliser, "aggregation": plan.aggregation, "n_train": n_train, "n_test": len(test_y),
    })
    result = LogregResult(trace=trace, weights=np.zeros(train_x.shape[1]))
    logger.info("training on %d rows for %d steps (L=%.4g, private=%s)", n_train, plan.steps, normaliser, private)

    weights = result.weights
    for step in range(1, plan.steps + 1):
        batch = np.flatnonzero(sampling_rng.random(n_train) < plan.q)
        gradients = per_example_gradients(weights, train_x[batch], train_y[batch])
        if private:
            gradients, _ = clip_gradients(gradients, clip)
            total = gradients.sum(axis=0) + noise_rng.normal(0.0, sigma_eff, size=weights.shape)
            candidates = _candidates(batch, n_train, plan.estimator.m, candidate_rng)
            clipped, _ = clip_gradients(per_example_gradients(weights, train_x[candidates], train_y[candidates]), clip)
            distances = leave_one_out_distances(clipped, divisor)
            try:
                accountant.record_step(distances)
                trace.append(trace_record(step, accountant, plan.delta))
            except AccountingError as exc:
                raise exc.at_step(step)
        else:
            total = gradients.sum(axis=0)
        weights = weights - learning_rate * total / divisor

        if step % steps_per_epoch == 0 or step == plan.steps:
            entry = EpochAccuracy(
                epoch=len(result.history) + 1,
                step=step,
                train_accuracy=accuracy(weights, train_x, train_y),
                test_accuracy=accuracy(weights, test_x, test_y),
            )
            result.history.append(entry)
            logger.debug("epoch %d: train %.4f test %.4f", entry.epoch, entry.train_accuracy, entry.test_accuracy)

    result.weights = weights
    return result


def run_logreg_csv(path, plan, label_column="label", **kwargs):
    """
    Read a CSV dataset and train on it with :func:`run_logreg_dpsgd`.
    """
    features, labels, names = read_dataset(path, label_column)
    result = run_logreg_dpsgd(features, labels, plan, **kwargs)
    result.trace.metadata.update({"dataset": path, "label_column": label_column, "features": names})
    return result
