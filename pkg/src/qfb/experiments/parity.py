"""
Parity-measurement experiments: coherence suppression against pulse length
and parity fidelity against pulse length and detection efficiency.
"""

from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from ..config import ParityConfig, ParityDephasingConfig, ParityFidelityConfig
from ..parity.cavity import (
    CavityConfig,
    CoherenceFactors,
    PointerTrajectory,
    SignalStats,
    coherence_factors,
    evolve_pointer,
    signal_stats,
)
from ..parity.channel import (
    ParityShotBatch,
    ParityThreshold,
    apply_kraus,
    conditioned_parity_shots,
    damping_kraus,
    decay_probability,
    optimal_parity_threshold,
    parity_fidelity,
    unconditioned_parity_map,
)
from ..parity.states import TwoQubitDensityMatrix, psi0
from ..utils.pool import Batch
from .registry import RunContext, register

DEPHASING_COLUMNS = (
    "tau_p_us",
    "abs_rho_11_10",
    "abs_rho_01_10",
    "abs_rho_00_11",
    "phase_01_10",
    "phase_00_11",
    "decay_odd",
    "decay_even",
    "parity_fidelity",
)
FIDELITY_COLUMNS = ("tau_p_us", "eta", "separation", "sigma", "v_th", "parity_fidelity")


@dataclass(frozen=True, eq=False)
class ParityChannel:
    """Everything derived from one parity pulse: pointer, voltages, factors, threshold."""

    tau_p: float
    trajectory: PointerTrajectory
    stats: SignalStats
    factors: CoherenceFactors
    threshold: ParityThreshold
    fidelity: float
    kraus: list[NDArray[np.complex128]] | None = None

    def unconditioned(self, rho: TwoQubitDensityMatrix) -> TwoQubitDensityMatrix:
        out = unconditioned_parity_map(rho, self.factors)
        if self.kraus is not None:
            out = apply_kraus(out, self.kraus)
        return out

    def shots(
        self, rho: TwoQubitDensityMatrix, rng: np.random.Generator, n: int
    ) -> ParityShotBatch:
        batch = conditioned_parity_shots(rho, self.stats, self.factors, self.threshold, rng, n)
        return batch if self.kraus is None else batch.apply_kraus(self.kraus)


def parity_channel(
    cavity: CavityConfig, parity: ParityConfig, tau_p: float | None = None
) -> ParityChannel:
    """
    Build the channel of a parity pulse of length tau_p (default: the configured one).

    A numeric `threshold` is used as given, with the odd side on whichever
    side the odd means lie; "optimal" maximizes F_p. Intrinsic T1 decay
    during the pulse is attached when t1_a or t1_b is set.
    """
    tau = parity.tau_p if tau_p is None else tau_p
    traj = evolve_pointer(cavity, tau, dt=parity.dt)
    stats = signal_stats(traj, cavity, parity.window_for(tau))
    factors = coherence_factors(traj, cavity, tau)

    if parity.threshold == "optimal":
        threshold, fidelity = optimal_parity_threshold(stats)
    else:
        even, odd = stats.parity_means()
        threshold = ParityThreshold(v_th=parity.threshold, odd_high=odd >= even)
        fidelity = parity_fidelity(stats, threshold)

    kraus = None
    if parity.t1_a is not None or parity.t1_b is not None:
        kraus = damping_kraus(
            decay_probability(tau, parity.t1_a), decay_probability(tau, parity.t1_b)
        )
    return ParityChannel(
        tau_p=tau,
        trajectory=traj,
        stats=stats,
        factors=factors,
        threshold=threshold,
        fidelity=fidelity,
        kraus=kraus,
    )


def collect_shots(
    ctx: RunContext, channel: ParityChannel, rho: TwoQubitDensityMatrix, stage: str
) -> ParityShotBatch:
    """n_shots conditioned parity shots of rho, sampled in seeded batches."""

    def work(batch: Batch, rng: np.random.Generator) -> ParityShotBatch:
        return channel.shots(rho, rng, batch.size)

    return ParityShotBatch.merge(ctx.map(work, ctx.n_shots, stage))


def _coherence_row(channel: ParityChannel) -> dict[str, Any]:
    m = channel.unconditioned(psi0()).matrix
    return {
        "tau_p_us": channel.tau_p,
        "abs_rho_11_10": abs(m[3, 2]),
        "abs_rho_01_10": abs(m[1, 2]),
        "abs_rho_00_11": abs(m[0, 3]),
        "phase_01_10": float(np.angle(m[1, 2])),
        "phase_00_11": float(np.angle(m[0, 3])),
        "decay_odd": channel.factors[(1, 2)].decay,
        "decay_even": channel.factors[(0, 3)].decay,
        "parity_fidelity": channel.fidelity,
    }


@register(
    "parity-dephasing",
    "Coherences of the equal superposition after the parity pulse against its length",
    ("cavity", "parity", "parity_dephasing"),
)
def parity_dephasing(ctx: RunContext) -> None:
    cfg = ctx.config
    params = cfg.block("parity_dephasing", ParityDephasingConfig)
    cavity = cfg.block("cavity", CavityConfig)
    parity = cfg.block("parity", ParityConfig)

    rows: list[dict[str, Any]] = []
    for tau_p in params.tau_p:
        row = _coherence_row(parity_channel(cavity, parity, tau_p))
        rows.append(row)
        ctx.log.debug(
            "tau_p=%.3f us: |rho_01,10|=%.4f |rho_00,11|=%.4f",
            tau_p,
            row["abs_rho_01_10"],
            row["abs_rho_00_11"],
        )
    ctx.write_rows("parity_dephasing.csv", DEPHASING_COLUMNS, rows)

    channel = parity_channel(cavity, parity)
    ctx.write_trajectory("pointer_trajectory.csv", channel.trajectory)

    expected = channel.unconditioned(psi0())
    shots = collect_shots(ctx, channel, psi0(), "ensemble")
    ensemble = shots.average()
    deviation = float(np.max(np.abs(ensemble.matrix - expected.matrix)))
    ctx.log.info("Ensemble average deviates from the channel by %.2e", deviation)

    summary = _coherence_row(channel)
    summary.update(
        {
            "threshold": channel.threshold.v_th,
            "odd_high": channel.threshold.odd_high,
            "means": channel.stats.means,
            "sigma": channel.stats.sigma,
            "p_odd": shots.fraction(-1),
            "ensemble_max_deviation": deviation,
            "n_shots": len(shots),
        }
    )
    ctx.write_json("parity_summary.json", summary)
    ctx.write_state("parity_unconditioned.json", expected, label="unconditioned")


@register(
    "parity-fidelity",
    "Parity fidelity F_p against pulse length for several detection efficiencies",
    ("cavity", "parity", "parity_fidelity"),
)
def parity_fidelity_sweep(ctx: RunContext) -> None:
    cfg = ctx.config
    params = cfg.block("parity_fidelity", ParityFidelityConfig)
    cavity = cfg.block("cavity", CavityConfig)
    parity = cfg.block("parity", ParityConfig)

    rows: list[dict[str, Any]] = []
    for eta in params.etas:
        detector = cavity.model_copy(update={"eta": eta})
        for tau_p in params.tau_p:
            channel = parity_channel(detector, parity, tau_p)
            rows.append(
                {
                    "tau_p_us": tau_p,
                    "eta": eta,
                    "separation": channel.stats.parity_separation(),
                    "sigma": channel.stats.sigma,
                    "v_th": channel.threshold.v_th,
                    "parity_fidelity": channel.fidelity,
                }
            )
        best = max(r["parity_fidelity"] for r in rows if r["eta"] == eta)
        ctx.log.info("eta=%.2f: best F_p %.4f", eta, best)
    ctx.write_rows("parity_fidelity.csv", FIDELITY_COLUMNS, rows)

