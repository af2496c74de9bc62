"""
Readout benchmarks: contrast with and without postselection on a
pre-measurement, the Rabi-visibility check, and repeatability of
consecutive measurements.
"""

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from ..config import QndBenchConfig, RatesConfig, ReadoutBenchConfig, ReadoutConfig
from ..qubit.dynamics import (
    LevelPopulations,
    Transition,
    TransitionRates,
    rotate_levels,
    sample_evolution,
    sample_levels,
    steady_state,
)
from ..qubit.readout import (
    ShotModel,
    Threshold,
    assignment_errors,
    digitize_many,
    generate_shots,
    histogram,
    optimal_threshold,
    postselect_ground,
    qnd_correlations,
    rabi_visibility,
    sample_jumps,
)
from ..utils.pool import Batch
from .registry import RunContext, register

QND_COLUMNS = ("tau_us", "p_h_given_h", "p_l_given_l", "n_h", "n_l")
RABI_COLUMNS = ("theta_rad", "p_high", "p_high_postselected", "n_shots", "n_kept")


@dataclass(frozen=True)
class BenchShots:
    """Pre-measurement results and main-measurement voltages of one preparation."""

    m_a_high: NDArray[np.bool_]
    v_b: NDArray[np.float64]

    @classmethod
    def merge(cls, parts: list["BenchShots"]) -> "BenchShots":
        return cls(
            m_a_high=np.concatenate([p.m_a_high for p in parts]),
            v_b=np.concatenate([p.v_b for p in parts]),
        )


def spectator_offset(
    levels: NDArray[np.int64],
    model: ShotModel,
    rates: TransitionRates,
    shift: float,
    rng: np.random.Generator,
) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    """Voltage added by a spectator read through the same channel, and its post levels."""
    jump_times, post = sample_jumps(levels, model, rates, rng)
    before = model.before_fraction(jump_times)
    excited_before = (levels >= 1).astype(float)
    excited_after = (post >= 1).astype(float)
    return shift * (before * excited_before + (1.0 - before) * excited_after), post


def bench_shots(
    n: int,
    theta: float,
    params: ReadoutBenchConfig,
    model: ShotModel,
    threshold: Threshold,
    rates: TransitionRates,
    start: LevelPopulations,
    rng: np.random.Generator,
) -> BenchShots:
    """
    Pre-measurement M_A, wait tau, rotation by theta, measurement M_B.

    Both qubits start in `start`; the spectator (if enabled) shifts every
    voltage by `shift` while excited.
    """
    shift = params.spectator_shift if params.spectator_shift is not None else model.mu1 - model.mu0
    main = sample_levels(start, n, rng)
    spectator = sample_levels(start, n, rng) if params.spectator else np.zeros(n, dtype=np.int64)

    m_a = generate_shots(main, model, rates, rng)
    v_a = m_a.voltages
    if params.spectator:
        offset, spectator = spectator_offset(spectator, model, rates, shift, rng)
        v_a = v_a + offset
    high_a = digitize_many(v_a, threshold)

    main = sample_evolution(m_a.post_levels, rates, params.tau, rng)
    if params.spectator:
        spectator = sample_evolution(spectator, rates, params.tau, rng)
    main = rotate_levels(main, theta, Transition.GE, params.prep_error, rng)

    m_b = generate_shots(main, model, rates, rng)
    v_b = m_b.voltages
    if params.spectator:
        offset, _ = spectator_offset(spectator, model, rates, shift, rng)
        v_b = v_b + offset
    return BenchShots(m_a_high=high_a, v_b=v_b)


@register(
    "readout-bench",
    "Unconditioned and postselected readout contrast, histograms and Rabi visibility",
    ("rates", "readout", "readout_bench"),
)
def readout_bench(ctx: RunContext) -> None:
    cfg = ctx.config
    params = cfg.block("readout_bench", ReadoutBenchConfig)
    readout = cfg.block("readout", ReadoutConfig)
    rates = cfg.block("rates", RatesConfig).rates()
    model = readout.shot_model()
    threshold = readout.threshold()
    start = steady_state(rates)

    def collect(theta: float, n: int, stage: str) -> BenchShots:
        def work(batch: Batch, rng: np.random.Generator) -> BenchShots:
            return bench_shots(batch.size, theta, params, model, threshold, rates, start, rng)

        return BenchShots.merge(ctx.map(work, n, stage))

    prep0 = collect(0.0, ctx.n_shots, "prep0")
    prep1 = collect(math.pi, ctx.n_shots, "prep1")

    best, contrast = optimal_threshold(prep0.v_b, prep1.v_b)
    eps0, eps1 = assignment_errors(prep0.v_b, prep1.v_b, best)
    edges, counts0, counts1 = histogram(prep0.v_b, prep1.v_b, params.bins)
    ctx.write_histogram("readout_histogram.csv", edges, counts0, counts1)

    kept0 = postselect_ground(prep0.m_a_high, prep0.v_b)
    kept1 = postselect_ground(prep1.m_a_high, prep1.v_b)
    kept_fraction = (kept0.kept.size + kept1.kept.size) / (2 * ctx.n_shots)
    best_ps: Threshold | None = None
    contrast_ps: float | None = None
    eps_ps: tuple[float, float] | None = None
    if kept0.empty or kept1.empty:
        ctx.log.warning("Postselection left an empty preparation; no postselected contrast")
    else:
        best_ps, contrast_ps = optimal_threshold(kept0.kept, kept1.kept)
        eps_ps = assignment_errors(kept0.kept, kept1.kept, best_ps)
        edges_ps, c0, c1 = histogram(kept0.kept, kept1.kept, params.bins)
        ctx.write_histogram("readout_histogram_postselected.csv", edges_ps, c0, c1)

    thetas = np.linspace(0.0, 2.0 * math.pi, params.n_theta)
    p_high: list[float] = []
    p_high_ps: list[float | None] = []
    rabi_rows: list[dict[str, Any]] = []
    for k, theta in enumerate(thetas):
        shots = collect(float(theta), params.rabi_shots, f"rabi/theta={k}")
        p_high.append(float(np.mean(digitize_many(shots.v_b, best))))
        kept = shots.v_b[shots.m_a_high]
        p_ps = (
            float(np.mean(digitize_many(kept, best_ps)))
            if best_ps is not None and kept.size
            else None
        )
        p_high_ps.append(p_ps)
        rabi_rows.append(
            {
                "theta_rad": theta,
                "p_high": p_high[-1],
                "p_high_postselected": p_ps,
                "n_shots": shots.v_b.size,
                "n_kept": kept.size,
            }
        )
    ctx.write_rows("rabi.csv", RABI_COLUMNS, rabi_rows)

    visibility = rabi_visibility(thetas, np.array(p_high)).visibility
    visibility_ps: float | None = None
    if all(p is not None for p in p_high_ps):
        values = np.array(p_high_ps, dtype=float)
        visibility_ps = rabi_visibility(thetas, values).visibility

    ctx.log.info(
        "Contrast %.4f unconditioned, %s postselected (kept %.3f)",
        contrast,
        "n/a" if contrast_ps is None else f"{contrast_ps:.4f}",
        kept_fraction,
    )
    ctx.write_json(
        "readout_summary.json",
        {
            "steady_state_excitation": start.excitation,
            "threshold": best.v_th,
            "contrast": contrast,
            "eps_0": eps0,
            "eps_1": eps1,
            "rabi_visibility": visibility,
            "kept_fraction": kept_fraction,
            "threshold_postselected": None if best_ps is None else best_ps.v_th,
            "contrast_postselected": contrast_ps,
            "eps_0_postselected": None if eps_ps is None else eps_ps[0],
            "eps_1_postselected": None if eps_ps is None else eps_ps[1],
            "rabi_visibility_postselected": visibility_ps,
        },
    )


@register(
    "qnd-bench",
    "Repeatability P(H|H), P(L|L) of two measurements against their separation",
    ("rates", "readout", "qnd_bench"),
)
def qnd_bench(ctx: RunContext) -> None:
    cfg = ctx.config
    params = cfg.block("qnd_bench", QndBenchConfig)
    readout = cfg.block("readout", ReadoutConfig)
    rates = cfg.block("rates", RatesConfig).rates()
    model = readout.shot_model()
    threshold = readout.threshold()
    start = steady_state(rates)

    rows: list[dict[str, Any]] = []
    for k, tau in enumerate(params.taus):

        def work(
            batch: Batch, rng: np.random.Generator, tau: float = tau
        ) -> tuple[NDArray[np.bool_], NDArray[np.bool_]]:
            levels = sample_levels(start, batch.size, rng)
            levels = rotate_levels(levels, params.prep_theta, Transition.GE, 0.0, rng)
            m_b = generate_shots(levels, model, rates, rng)
            levels = sample_evolution(m_b.post_levels, rates, tau, rng)
            m_c = generate_shots(levels, model, rates, rng)
            return digitize_many(m_b.voltages, threshold), digitize_many(m_c.voltages, threshold)

        parts = ctx.map(work, ctx.n_shots, f"tau={k}")
        high_b = np.concatenate([p[0] for p in parts])
        high_c = np.concatenate([p[1] for p in parts])
        corr = qnd_correlations(high_b, high_c)
        rows.append(
            {
                "tau_us": tau,
                "p_h_given_h": corr.p_h_given_h,
                "p_l_given_l": corr.p_l_given_l,
                "n_h": corr.n_h,
                "n_l": corr.n_l,
            }
        )
        ctx.log.info("tau=%.3g us: P(L|L)=%s", tau, corr.p_l_given_l)

    ctx.write_rows("qnd.csv", QND_COLUMNS, rows)
