"""
Synthetic DP-SGD accounting runs driven by a gradient-distance model.
"""
import logging
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..privacy.manager import ParallelAccountant
from ..utils.errors import AccountingError
from ..utils.rng import Stream, derive_rng
from .models import sample_pair_distances
from .plans import PrivacyTrace, TraceRecord

logger = logging.getLogger(__name__)


def trace_record(step, accountant, delta):
    """
    Current guarantees of both ledgers as one trace row.

    Args:
        step (int): Step just recorded
        accountant (ParallelAccountant): Accountant with both ledgers
        delta (float): Total δ

    Returns:
        TraceRecord: The row
    """
    reports = accountant.reports(delta)
    return TraceRecord(
        step=step,
        epsilon_dp=reports["ma"].epsilon,
        epsilon_bdp=reports["bdp"].epsilon,
        delta=delta,
        lambda_star_dp=reports["ma"].lambda_star,
        lambda_star_bdp=reports["bdp"].lambda_star,
    )


def _accountant_for(plan):
    return ParallelAccountant(plan.mechanism(), plan.estimator, plan.lambda_grid, mode="both")


def _run_steps(plan, on_step):
    accountant = _accountant_for(plan)
    rng = derive_rng(plan.seed, Stream.DISTANCES)
    clip = plan.clip_bound
    for step in range(1, plan.steps + 1):
        distances = sample_pair_distances(plan.model, plan.estimator.m, rng)
        if clip is not None:
            distances = np.minimum(distances, clip)
        try:
            accountant.record_step(distances)
            on_step(step, accountant)
        except AccountingError as exc:
            raise exc.at_step(step)
    return accountant


def run_simulation(plan, sink=None):
    """
    Account a synthetic run step by step under both accountants.

    Each step draws m distances, caps them at the clip bound when BDP is
    clipped, and records both ledgers; the guarantees at ``plan.delta`` are
    appended to the trace after every step.

    Args:
        plan (SimulationPlan): The run
        sink: Optional callable receiving every TraceRecord as it is produced

    Returns:
        PrivacyTrace: One record per step
    """
    trace = PrivacyTrace(metadata={"plan": plan.describe(), "seed": plan.seed})
    logger.info("simulating %d steps (q=%.4g, sigma_eff=%.4g)", plan.steps, plan.q, plan.effective_sigma)

    def on_step(step, accountant):
        record = trace_record(step, accountant, plan.delta)
        trace.append(record)
        if sink is not None:
            sink(record)

    _run_steps(plan, on_step)
    return trace


def final_record(plan):
    """
    Guarantees after the last step of a plan, without keeping the full trace.
    """
    accountant = _run_steps(plan, lambda step, accountant: None)
    return trace_record(plan.steps, accountant, plan.delta)


def run_sweep(points, workers=1):
    """
    Final guarantees for a grid of labelled plans (e.g. a sweep over sigma).

    Points are independent, each with its own seed, so they may run in
    separate processes without changing any result.

    Args:
        points: Sequence of (label, SimulationPlan)
        workers (int): Worker processes; 1 runs in-process

    Returns:
        list: (label, TraceRecord) in input order
    """
    labels = [label for label, _ in points]
    plans = [plan for _, plan in points]
    if workers > 1 and len(plans) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            finals = list(pool.map(final_record, plans))
    else:
        finals = [final_record(plan) for plan in plans]
    return list(zip(labels, finals))


def lambda_curve(plan):
    """
    ε at every order of the grid after the last step of a plan.

    Args:
        plan (SimulationPlan): The run

    Returns:
        list: (lambda, epsilon_dp, epsilon_bdp) per grid order
    """
    accountant = _run_steps(plan, lambda step, accountant: None)
    curves = accountant.epsilon_curves(plan.delta)
    return list(zip(accountant.lambda_grid, curves["ma"], curves["bdp"]))
