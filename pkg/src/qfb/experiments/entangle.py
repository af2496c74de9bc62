"""
Entanglement by parity measurement: postselection on the odd outcome and
deterministic generation with a conditional pi pulse on qubit A.
"""

import math
from typing import Any

import numpy as np
from numpy.typing import NDArray

from ..config import EntangleFeedbackConfig, EntanglePostselectConfig, ParityConfig
from ..parity.cavity import CavityConfig
from ..parity.channel import (
    EVEN,
    ODD,
    ParityShotBatch,
    ParityThreshold,
    even_phase,
    feedback_entangle,
    feedback_phase,
    odd_frame_rotation,
    odd_phase,
    postselect,
)
from ..parity.metrics import EntanglementMetrics
from ..parity.states import PHI_PLUS, TwoQubitDensityMatrix, psi0
from ..qubit.readout import EmptySelectionError
from .parity import collect_shots, parity_channel
from .registry import RunContext, register

POSTSELECT_COLUMNS = (
    "threshold_offset_sigma",
    "v_th",
    "p_success",
    "n_kept",
    "concurrence",
    "log_negativity",
    "bell_fidelity",
    "efficiency",
)
FEEDBACK_COLUMNS = (
    "phi_e_offset",
    "phi_e",
    "phi_rad",
    "bell_fidelity",
    "concurrence",
    "log_negativity",
    "efficiency",
    "is_argmax",
    "phi_predicted",
)


def compensated_postselection(
    shots: ParityShotBatch, threshold: ParityThreshold | None = None
) -> tuple[TwoQubitDensityMatrix, EntanglementMetrics, float]:
    """
    Odd-outcome average rotated so that rho_{01,10} is real and positive.

    Returns:
        (state, metrics against Phi+, frame angle)

    Raises:
        EmptySelectionError: If no shot is read as odd
    """
    kept = postselect(shots, ODD, threshold)
    theta = odd_phase(kept.rho)
    rho = odd_frame_rotation(kept.rho, theta)
    return rho, EntanglementMetrics.of(rho, kept.p_success, PHI_PLUS), theta


def even_offset(delta: float) -> NDArray[np.complex128]:
    """Common Z rotation of both qubits adding delta to the phase of rho_{00,11}."""
    half = np.diag([1.0, np.exp(-0.5j * delta)])
    return np.kron(half, half)


def phase_distance(a: float, b: float) -> float:
    """Distance between two pulse phases modulo pi (phi and phi + pi act alike)."""
    return abs((a - b + math.pi / 2) % math.pi - math.pi / 2)


@register(
    "entangle-postselect",
    "Entanglement of the odd-parity postselected state, with stricter thresholds",
    ("cavity", "parity", "entangle_postselect"),
)
def entangle_postselect(ctx: RunContext) -> None:
    cfg = ctx.config
    params = cfg.block("entangle_postselect", EntanglePostselectConfig)
    channel = parity_channel(cfg.block("cavity", CavityConfig), cfg.block("parity", ParityConfig))
    shots = collect_shots(ctx, channel, psi0(), "shots")

    rho, metrics, theta = compensated_postselection(shots)
    ctx.log.info(
        "Postselected: p=%.3f C=%.3f E_N=%.3f efficiency=%.3f",
        metrics.p_success,
        metrics.concurrence,
        metrics.log_negativity,
        metrics.efficiency,
    )
    ctx.write_state(
        "postselected.json",
        rho,
        metrics,
        label="postselected",
        extra={
            "frame_theta": theta,
            "v_th": channel.threshold.v_th,
            "parity_fidelity": channel.fidelity,
        },
    )

    rows: list[dict[str, Any]] = []
    for offset in params.threshold_offsets:
        threshold = channel.threshold.shifted(offset * channel.stats.sigma)
        row: dict[str, Any] = {"threshold_offset_sigma": offset, "v_th": threshold.v_th}
        try:
            _, m, _ = compensated_postselection(shots, threshold)
        except EmptySelectionError:
            ctx.log.warning("No shots kept at threshold offset %s sigma", offset)
            row.update(dict.fromkeys(POSTSELECT_COLUMNS[2:]))
            row.update({"p_success": 0.0, "n_kept": 0})
        else:
            row.update(m.to_dict())
            row["n_kept"] = round(m.p_success * len(shots))
        rows.append(row)
    ctx.write_rows("postselect_thresholds.csv", POSTSELECT_COLUMNS, rows)


@register(
    "entangle-feedback",
    "Deterministic entanglement: Bell fidelity and efficiency against the feedback pulse phase",
    ("cavity", "parity", "entangle_feedback"),
)
def entangle_feedback(ctx: RunContext) -> None:
    cfg = ctx.config
    params = cfg.block("entangle_feedback", EntangleFeedbackConfig)
    channel = parity_channel(cfg.block("cavity", CavityConfig), cfg.block("parity", ParityConfig))
    base = collect_shots(ctx, channel, psi0(), "shots")

    phis = 2.0 * math.pi * np.arange(params.n_phi) / params.n_phi
    spacing = 2.0 * math.pi / params.n_phi
    rows: list[dict[str, Any]] = []
    cases: list[dict[str, Any]] = []

    for index, delta in enumerate(params.phi_e_offsets):
        shots = base if delta == 0.0 else base.transform(even_offset(delta))
        theta = odd_phase(shots.average(shots.m_p == ODD))
        phi_e = even_phase(odd_frame_rotation(shots.average(shots.m_p == EVEN), theta))
        predicted = feedback_phase(phi_e)

        sweep = [feedback_entangle(shots, float(phi), frame_theta=theta) for phi in phis]
        fidelities = np.array([r.metrics.bell_fidelity for r in sweep])
        best = int(np.argmax(fidelities))
        for k, result in enumerate(sweep):
            m = result.metrics
            rows.append(
                {
                    "phi_e_offset": delta,
                    "phi_e": phi_e,
                    "phi_rad": result.phi,
                    "bell_fidelity": m.bell_fidelity,
                    "concurrence": m.concurrence,
                    "log_negativity": m.log_negativity,
                    "efficiency": m.efficiency,
                    "is_argmax": k == best,
                    "phi_predicted": predicted,
                }
            )

        optimum = feedback_entangle(shots, predicted, frame_theta=theta)
        _, posted, _ = compensated_postselection(shots)
        distance = phase_distance(float(phis[best]), predicted)
        if distance > spacing:
            ctx.log.warning(
                "Sweep maximum at %.4f rad is %.4f rad from the predicted phase %.4f",
                phis[best],
                distance,
                predicted,
            )
        if index == 0:
            ctx.write_state(
                "feedback_state.json",
                optimum.rho,
                optimum.metrics,
                label="feedback",
                extra={"phi": predicted, "phi_e": phi_e, "frame_theta": theta},
            )
        cases.append(
            {
                "phi_e_offset": delta,
                "phi_e": phi_e,
                "phi_predicted": predicted,
                "phi_argmax": float(phis[best]),
                "argmax_within_grid": distance <= spacing,
                "feedback": optimum.metrics.to_dict(),
                "postselected": posted.to_dict(),
                "feedback_exceeds_postselected": (
                    optimum.metrics.efficiency > posted.efficiency
                ),
            }
        )
        ctx.log.info(
            "phi_e=%.4f: efficiency %.3f with feedback, %.3f postselected",
            phi_e,
            optimum.metrics.efficiency,
            posted.efficiency,
        )

    ctx.write_rows("feedback_phase_sweep.csv", FEEDBACK_COLUMNS, rows)
    ctx.write_json(
        "feedback_summary.json",
        {"grid_spacing": spacing, "p_odd": base.fraction(ODD), "cases": cases},
    )
