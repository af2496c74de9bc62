"""
Single-qubit experiments: reset by feedback, repeated initialization and
relaxation of the three-level populations.
"""

import math
from typing import Any

import numpy as np

from ..config import (
    FeedbackConfig,
    RatesConfig,
    ReadoutConfig,
    RelaxationConfig,
    RepeatedInitConfig,
    ResetSweepConfig,
)
from ..feedback.engine import (
    Algorithm,
    RepeatedInitResult,
    ResetResult,
    passive_populations,
    predict_reset_error,
    run_repeated_init,
    run_reset,
)
from ..feedback.timing import FeedbackProtocol
from ..qubit.dynamics import (
    LevelPopulations,
    NoPositiveTemperatureError,
    TransitionRates,
    effective_temperature,
    relaxation_trace,
    steady_state,
)
from ..qubit.readout import error_model
from ..utils.pool import Batch
from .registry import RunContext, register

SWEEP_COLUMNS = (
    "theta_rad",
    "protocol_id",
    "p_err",
    "p_err_stderr",
    "p_err_predicted",
    "n_shots",
)
INIT_COLUMNS = (
    "tau_init_us",
    "algorithm",
    "protocol_id",
    "p_err",
    "p_err_stderr",
    "n_samples",
)
# Chains are long serial loops; small batches keep all threads busy
CHAINS_PER_BATCH = 4


@register(
    "reset-sweep",
    "Reset error against initial rotation angle for no feedback, Fb0, Fb1 and two rounds",
    ("rates", "readout", "feedback", "reset_sweep"),
)
def reset_sweep(ctx: RunContext) -> None:
    cfg = ctx.config
    sweep = cfg.block("reset_sweep", ResetSweepConfig)
    readout = cfg.block("readout", ReadoutConfig)
    feedback = cfg.block("feedback", FeedbackConfig)
    rates = cfg.block("rates", RatesConfig).rates()
    model = readout.shot_model()
    threshold = readout.threshold()
    err = error_model(model, rates, threshold)

    protocols: dict[str, FeedbackProtocol] = {
        "fb0": feedback.protocol(threshold, model.t_meas, target=0),
        "fb1": feedback.protocol(threshold, model.t_meas, target=1),
        "fb0x2": feedback.protocol(threshold, model.t_meas, target=0, rounds=2),
    }
    thetas = np.linspace(0.0, math.pi, sweep.n_theta)

    rows: list[dict[str, Any]] = []
    for variant in sweep.variants:
        protocol = protocols.get(variant)
        for k, value in enumerate(thetas):
            theta = float(value)

            def work(
                batch: Batch,
                rng: np.random.Generator,
                theta: float = theta,
                protocol: FeedbackProtocol | None = protocol,
            ) -> ResetResult:
                if protocol is None:
                    return passive_populations(theta, batch.size, rng)
                return run_reset(theta, protocol, model, rates, rng, batch.size)

            result = ResetResult.merge(ctx.map(work, ctx.n_shots, f"{variant}/theta={k}"))
            predicted: float | None
            if protocol is None:
                predicted = math.sin(theta / 2.0) ** 2
            elif protocol.target == 0:
                predicted = predict_reset_error(
                    theta, rates, err, protocol.timing, rounds=protocol.rounds
                )
            else:
                predicted = None
            rows.append(
                {
                    "theta_rad": theta,
                    "protocol_id": protocol.protocol_id if protocol else "none",
                    "p_err": result.p_err,
                    "p_err_stderr": result.stderr,
                    "p_err_predicted": predicted,
                    "n_shots": result.n_shots,
                }
            )
        first, last = rows[-len(thetas)], rows[-1]
        ctx.log.info("%s: P_err(0)=%.4f P_err(pi)=%.4f", variant, first["p_err"], last["p_err"])

    ctx.write_rows("reset_sweep.csv", SWEEP_COLUMNS, rows)


@register(
    "repeated-init",
    "Initialization error of a looped experiment against the wait before initialization",
    ("rates", "readout", "feedback", "repeated_init"),
)
def repeated_init(ctx: RunContext) -> None:
    cfg = ctx.config
    loop = cfg.block("repeated_init", RepeatedInitConfig)
    readout = cfg.block("readout", ReadoutConfig)
    feedback = cfg.block("feedback", FeedbackConfig)
    rates = cfg.block("rates", RatesConfig).rates()
    model = readout.shot_model()
    protocol = feedback.protocol(
        readout.threshold(),
        model.t_meas,
        target=0,
        rounds=loop.rounds,
        recover_12=loop.recover_12,
    )

    variants: list[tuple[str, FeedbackProtocol | None, TransitionRates]] = [
        (protocol.protocol_id, protocol, rates),
        ("none", None, rates),
    ]
    if loop.zero_excitation:
        variants.append(("none-zero-excitation", None, rates.without_excitation()))

    rows: list[dict[str, Any]] = []
    for k, tau in enumerate(loop.tau_init):
        per_variant: dict[str, list[RepeatedInitResult]] = {}
        for label, chosen, variant_rates in variants:
            for algorithm in loop.algorithms:

                def work(
                    batch: Batch,
                    rng: np.random.Generator,
                    tau: float = tau,
                    algorithm: Algorithm = algorithm,
                    chosen: FeedbackProtocol | None = chosen,
                    variant_rates: TransitionRates = variant_rates,
                ) -> RepeatedInitResult:
                    return run_repeated_init(
                        tau,
                        algorithm,
                        chosen,
                        variant_rates,
                        model,
                        rng,
                        n_cycles=loop.n_cycles,
                        n_chains=batch.size,
                        burn_in=loop.burn_in,
                        pulse_error=feedback.pulse_error,
                    )

                stage = f"{label}/{algorithm}/tau={k}"
                batches = ctx.map(work, loop.n_chains, stage, batch_size=CHAINS_PER_BATCH)
                result = RepeatedInitResult.merge(batches)
                per_variant.setdefault(label, []).append(result)
                rows.append(
                    {
                        "tau_init_us": tau,
                        "algorithm": algorithm,
                        "protocol_id": label,
                        "p_err": result.p_err,
                        "p_err_stderr": result.stderr,
                        "n_samples": result.n_samples,
                    }
                )

            if len(loop.algorithms) > 1:
                results = per_variant[label]
                mean = sum(r.p_err for r in results) / len(results)
                stderr = math.sqrt(sum(r.stderr**2 for r in results)) / len(results)
                rows.append(
                    {
                        "tau_init_us": tau,
                        "algorithm": "average",
                        "protocol_id": label,
                        "p_err": mean,
                        "p_err_stderr": stderr,
                        "n_samples": sum(r.n_samples for r in results),
                    }
                )
        ctx.log.info("tau_init=%.3g us done", tau)

    ctx.write_rows("repeated_init.csv", INIT_COLUMNS, rows)


@register(
    "relaxation",
    "Three-level population relaxation, steady state and effective temperature",
    ("rates", "relaxation"),
)
def relaxation(ctx: RunContext) -> None:
    cfg = ctx.config
    params = cfg.block("relaxation", RelaxationConfig)
    rates = cfg.block("rates", RatesConfig).rates()

    times = np.linspace(0.0, params.t_max, params.n_points)
    trace = relaxation_trace(LevelPopulations.pure(params.initial_level), rates, times)
    rows = (
        {"t_us": t, "p0": p[0], "p1": p[1], "p2": p[2]} for t, p in zip(times, trace, strict=True)
    )
    ctx.write_rows("relaxation.csv", ("t_us", "p0", "p1", "p2"), rows)

    steady = steady_state(rates)
    summary: dict[str, Any] = {
        "initial_level": params.initial_level,
        "steady_state": {"p0": steady.p0, "p1": steady.p1, "p2": steady.p2},
        "temperature_mk": None,
    }
    if cfg.frequencies is not None:
        try:
            fit = effective_temperature(steady, cfg.frequencies)
            summary["temperature_mk"] = fit.temperature_mk
            summary["temperature_levels"] = fit.levels_used
        except NoPositiveTemperatureError as e:
            ctx.log.warning("No effective temperature: %s", e)
    ctx.log.info("Steady state P1=%.4f P2=%.4f", steady.p1, steady.p2)
    ctx.write_json("relaxation_summary.json", summary)
