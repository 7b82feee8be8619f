"""
Command-line surface: account, simulate, convert, attack-prob and calibrate.
"""
import argparse
import logging
import os
import sys
from contextlib import nullcontext

from ..data.json_handler import JsonHandler, load_ledger, save_ledger
from ..data.streams import TRACE_HEADER, TraceWriter, open_text, read_distance_stream, write_rows
from ..privacy.accountant import (DEFAULT_LAMBDA_GRID, attack_success_probability, build_lambda_grid,
                                  find_noise_multiplier)
from ..privacy.estimator import DEFAULT_GAMMA, EstimatorConfig
from ..privacy.manager import ParallelAccountant
from ..privacy.mechanisms import MechanismConfig
from ..simulation.models import GradientModel
from ..simulation.plans import ClipKind, ClipPolicy, NoiseKind, NoisePolicy, SimulationPlan, TraceRecord
from ..simulation.presets import OUTPUT_FINAL, OUTPUT_LAMBDA, OUTPUT_TRACE, PRESETS, Preset, get_preset
from ..simulation.simulator import lambda_curve, run_simulation, run_sweep
from ..utils.errors import AccountingError
from ..utils.helpers import format_percent, significant, utc_now_iso
from .config import resolve

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2

ACCOUNT_DEFAULTS = {
    "mode": "bdp",
    "gamma": DEFAULT_GAMMA,
    "noise_multiplier_factor": 1.0,
    "absolute_noise": False,
    "clamp_to_ma": True,
    "out": "-",
}

SIMULATE_DEFAULTS = {
    "model": "weibull",
    "shape": 0.5,
    "scale": 1.0,
    "q": 0.01,
    "sigma": 1.0,
    "noise_multiplier_factor": 1.0,
    "m": 100,
    "gamma": DEFAULT_GAMMA,
    "delta": 1e-5,
    "seed": 0,
    "workers": 1,
    "out": "-",
}

CALIBRATE_DEFAULTS = {
    "noise_multiplier_factor": 1.0,
}


def _grid(config):
    lambda_max = config.get("lambda_max")
    return DEFAULT_LAMBDA_GRID if lambda_max is None else build_lambda_grid(lambda_max)


def _write_report(config, reports, **extra):
    JsonHandler(config.get("out", "-")).save_data({
        "config": config.echo(),
        **extra,
        "reports": [report.to_dict() for report in reports],
    })


def _ledger_path(path, mode, both):
    if not both:
        return path
    stem, ext = os.path.splitext(path)
    return f"{stem}.{mode}{ext or '.json'}"


def cmd_account(config):
    """
    Account over a recorded distance stream and report (ε, δ).
    """
    config.require("input", "sigma", "q", "delta")
    mechanism = MechanismConfig(
        sigma=config["sigma"],
        q=config["q"],
        clip=config.get("clip"),
        noise_multiplier_factor=config["noise_multiplier_factor"],
        noise_relative_to_clip=not config["absolute_noise"],
    )
    estimator = EstimatorConfig(gamma=config["gamma"], clamp_to_ma=config["clamp_to_ma"])
    accountant = ParallelAccountant(mechanism, estimator, _grid(config), mode=config["mode"])

    trace_path = config.get("trace")
    with open_text(trace_path, "w") if trace_path else nullcontext() as handle:
        writer = TraceWriter(handle) if trace_path else None
        for step, distances in read_distance_stream(config["input"]):
            try:
                accountant.record_step(distances)
            except AccountingError as exc:
                raise exc.at_step(step)
            if writer is not None:
                reports = accountant.reports(config["delta"])
                ma, bdp = reports.get("ma"), reports.get("bdp")
                writer.write(TraceRecord(
                    step=step,
                    epsilon_dp=ma.epsilon if ma else None,
                    epsilon_bdp=bdp.epsilon if bdp else None,
                    delta=config["delta"],
                    lambda_star_dp=ma.lambda_star if ma else None,
                    lambda_star_bdp=bdp.lambda_star if bdp else None,
                ))

    reports = accountant.reports(config["delta"])
    _write_report(config, reports.values())

    ledger_out = config.get("ledger_out")
    if ledger_out:
        ledgers = [ledger for ledger in (accountant.ma_ledger, accountant.bdp_ledger) if ledger is not None]
        for ledger in ledgers:
            save_ledger(ledger, _ledger_path(ledger_out, ledger.mode.value, len(ledgers) > 1))
    return EXIT_OK


def _custom_plan(config):
    clip_policy = ClipPolicy()
    if config.get("clip_quantile") is not None:
        clip_policy = ClipPolicy(ClipKind.QUANTILE, config["clip_quantile"])
    elif config.get("clip") is not None:
        clip_policy = ClipPolicy(ClipKind.ABSOLUTE, config["clip"])

    if config.get("noise_quantile") is not None:
        noise_policy = NoisePolicy(NoiseKind.QUANTILE, config["noise_quantile"])
    elif config.get("absolute_noise"):
        noise_policy = NoisePolicy(NoiseKind.ABSOLUTE)
    else:
        noise_policy = NoisePolicy(NoiseKind.RELATIVE)

    return SimulationPlan(
        model=GradientModel(kind=config["model"], shape=config["shape"], scale=config["scale"], seed=config["seed"]),
        steps=config.get("steps", 1000),
        q=config["q"],
        sigma=config["sigma"],
        noise_multiplier_factor=config["noise_multiplier_factor"],
        clip_policy=clip_policy,
        noise_policy=noise_policy,
        estimator=EstimatorConfig(m=config["m"], gamma=config["gamma"]),
        delta=config["delta"],
        lambda_grid=_grid(config),
        seed=config["seed"],
    )


def _resolve_preset(config):
    name = config.get("preset")
    if name is None:
        return Preset("custom", "plan given by flags", OUTPUT_TRACE, (("custom", _custom_plan(config)),))
    preset = get_preset(name).with_seed(config["seed"])
    if config.get("steps") is not None:
        preset = preset.with_steps(config["steps"])
    return preset


def _write_simulation(preset, handle, workers):
    if preset.output == OUTPUT_FINAL:
        writer = TraceWriter(handle, leading=("point",))
        for label, record in run_sweep(preset.points, workers=workers):
            writer.write(record, leading=(label,))
    elif preset.output == OUTPUT_LAMBDA:
        rows = [(label, *row) for label, plan in preset.points for row in lambda_curve(plan)]
        write_rows(handle, ("point", "lambda", "epsilon_dp", "epsilon_bdp"), rows)
    else:
        writer = TraceWriter(handle, leading=("point",))
        for label, plan in preset.points:
            run_simulation(plan, sink=lambda record, label=label: writer.write(record, leading=(label,)))


def cmd_simulate(config):
    """
    Run a preset or a custom plan and write its CSV output.
    """
    preset = _resolve_preset(config)
    out = config["out"]
    logger.info("running %s (%d point(s), output %s)", preset.name, len(preset.points), preset.output)
    with open_text(out, "w") as handle:
        _write_simulation(preset, handle, config["workers"])

    if out != "-":
        JsonHandler(out + ".meta.json").save_data({
            "config": config.echo(),
            "preset": preset.name,
            "output": preset.output,
            "columns": list(TRACE_HEADER),
            "points": [{"label": label, "plan": plan.describe()} for label, plan in preset.points],
            "seed": config["seed"],
            "created_at": utc_now_iso(),
        })
    return EXIT_OK


def cmd_convert(config):
    """
    Convert a saved ledger between fixed-δ and fixed-ε reports.
    """
    config.require("ledger")
    ledger = load_ledger(config["ledger"])
    if config.get("delta") is not None:
        report = ledger.epsilon_at(config["delta"])
    else:
        report = ledger.delta_at(config["epsilon"])
    saved_at = ledger.saved_at.isoformat() if ledger.saved_at else None
    _write_report(config, [report], ledger_saved_at=saved_at)
    return EXIT_OK


def cmd_attack_prob(config):
    """
    Print the attacker success bound for an ε.
    """
    probability = attack_success_probability(config["epsilon"])
    text = format_percent(probability) if config.get("percent") else significant(probability)
    sys.stdout.write(text + "\n")
    return EXIT_OK


def cmd_calibrate(config):
    """
    Print the noise multiplier needed for a target ε under the moments accountant.
    """
    config.require("q", "steps", "target_epsilon", "delta")
    sigma = find_noise_multiplier(
        q=config["q"],
        steps=config["steps"],
        target_epsilon=config["target_epsilon"],
        delta=config["delta"],
        lambda_grid=_grid(config),
        noise_multiplier_factor=config["noise_multiplier_factor"],
    )
    JsonHandler(config.get("out", "-")).save_data({"config": config.echo(), "sigma": sigma})
    return EXIT_OK


def _add_common(parser):
    parser.add_argument("--config", help="JSON file of option values; flags take precedence")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")


def build_parser():
    """
    Build the argument parser with one subcommand per operation.

    Option defaults are left as None so that config-file values can fill
    what the command line does not set.
    """
    parser = argparse.ArgumentParser(prog="bdp-accountant", description="Bayesian and moments privacy accounting")
    sub = parser.add_subparsers(dest="command", required=True)

    account = sub.add_parser("account", help="account over a recorded distance stream")
    _add_common(account)
    account.add_argument("input", nargs="?", help="JSON-lines distance stream, '-' for stdin")
    account.add_argument("--sigma", type=float, help="noise multiplier")
    account.add_argument("--q", type=float, help="sampling probability")
    account.add_argument("--delta", type=float, help="total delta")
    account.add_argument("--clip", type=float, help="clip bound C (needed for ma and both)")
    account.add_argument("--gamma", type=float, help=f"estimator failure probability (default {DEFAULT_GAMMA:g})")
    account.add_argument("--mode", choices=ParallelAccountant.MODES, help="accountant(s) to run (default bdp)")
    account.add_argument("--lambda-max", type=int, help="largest order of the grid")
    account.add_argument("--noise-multiplier-factor", type=float, help="noise std is factor * sigma * C")
    account.add_argument("--absolute-noise", action="store_true", default=None, help="sigma is the noise std itself")
    account.add_argument("--no-clamp", dest="clamp_to_ma", action="store_false", default=None,
                         help="do not cap BDP costs at the MA cost")
    account.add_argument("--out", help="report JSON path (default stdout)")
    account.add_argument("--trace", help="per-step trace CSV path")
    account.add_argument("--ledger-out", help="write the ledger(s) to this JSON path")
    account.set_defaults(handler=cmd_account)

    simulate = sub.add_parser("simulate", help="run a preset or custom synthetic plan")
    _add_common(simulate)
    simulate.add_argument("--preset", choices=sorted(PRESETS), metavar="{" + ",".join(PRESETS) + "}")
    simulate.add_argument("--model", choices=("weibull", "lognormal", "constant"))
    simulate.add_argument("--shape", type=float)
    simulate.add_argument("--scale", type=float)
    simulate.add_argument("--steps", type=int)
    simulate.add_argument("--q", type=float)
    simulate.add_argument("--sigma", type=float)
    simulate.add_argument("--noise-multiplier-factor", type=float)
    clip = simulate.add_mutually_exclusive_group()
    clip.add_argument("--clip-quantile", type=float, help="clip at this quantile of the norm model")
    clip.add_argument("--clip", type=float, help="clip at this absolute bound")
    noise = simulate.add_mutually_exclusive_group()
    noise.add_argument("--noise-quantile", type=float, help="noise std is sigma times this norm quantile")
    noise.add_argument("--absolute-noise", action="store_true", default=None)
    simulate.add_argument("--m", type=int, help="distance samples per step")
    simulate.add_argument("--gamma", type=float)
    simulate.add_argument("--delta", type=float)
    simulate.add_argument("--lambda-max", type=int)
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--workers", type=int, help="processes for sweep presets")
    simulate.add_argument("--out", help="CSV path (default stdout); a .meta.json sidecar is written next to it")
    simulate.set_defaults(handler=cmd_simulate)

    convert = sub.add_parser("convert", help="fixed-delta <-> fixed-epsilon from a saved ledger")
    _add_common(convert)
    convert.add_argument("--ledger", help="ledger JSON path")
    target = convert.add_mutually_exclusive_group(required=True)
    target.add_argument("--delta", type=float)
    target.add_argument("--epsilon", type=float)
    convert.add_argument("--out", help="report JSON path (default stdout)")
    convert.set_defaults(handler=cmd_convert)

    attack = sub.add_parser("attack-prob", help="attacker success bound for an epsilon")
    _add_common(attack)
    attack.add_argument("--epsilon", type=float, required=True)
    attack.add_argument("--percent", action="store_true", default=None, help="print as a percentage")
    attack.set_defaults(handler=cmd_attack_prob)

    calibrate = sub.add_parser("calibrate", help="noise multiplier for a target epsilon")
    _add_common(calibrate)
    calibrate.add_argument("--q", type=float)
    calibrate.add_argument("--steps", type=int)
    calibrate.add_argument("--target-epsilon", type=float)
    calibrate.add_argument("--delta", type=float)
    calibrate.add_argument("--lambda-max", type=int)
    calibrate.add_argument("--noise-multiplier-factor", type=float)
    calibrate.add_argument("--out", help="result JSON path (default stdout)")
    calibrate.set_defaults(handler=cmd_calibrate)
    return parser


_DEFAULTS = {
    "account": ACCOUNT_DEFAULTS,
    "simulate": SIMULATE_DEFAULTS,
    "calibrate": CALIBRATE_DEFAULTS,
}


def main(argv=None):
    """
    Parse arguments, run one command and map errors to exit codes.

    Returns:
        int: 0 on success, 2 usage or parse errors, 3 infeasible budget,
        4 numeric failure
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    handler = args.handler
    try:
        config = resolve(args, _DEFAULTS.get(args.command, {}))
        return handler(config)
    except AccountingError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("file error on %s: %s", exc.filename or "output", exc.strerror or exc)
        return EXIT_USAGE
