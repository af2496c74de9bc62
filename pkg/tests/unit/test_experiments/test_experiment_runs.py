"""
Tests running every experiment on reduced configs.

These tests verify:
- Each experiment writes its documented artifacts
- Headline numbers land near their reference values
- Failure modes surface as the right exceptions
"""

import csv
import json
import math
from pathlib import Path

import pytest

from qfb.experiments import NonConvergenceError, run_experiment
from qfb.experiments.entangle import even_offset, phase_distance
from qfb.parity.states import psi0


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def read_json(path: Path) -> dict:
    return json.loads(path.read_text(encoding="utf-8"))


def artifacts(out: Path) -> set[str]:
    return {p.name for p in out.iterdir()}


def test_reset_sweep(configured):
    cfg = configured("reset_sweep", reset_sweep={"n_theta": 3})

    run_experiment("reset-sweep", cfg)

    rows = read_csv(cfg.run.out_dir / "reset_sweep.csv")
    assert [r["protocol_id"] for r in rows[::3]] == ["none", "fb0", "fb1", "fb0x2"]
    passive = rows[:3]
    assert float(passive[0]["p_err"]) == 0.0
    assert float(passive[2]["p_err"]) == 1.0
    fb0_pi = rows[5]
    assert float(fb0_pi["p_err"]) < 0.2
    assert float(fb0_pi["p_err_predicted"]) == pytest.approx(0.08, abs=0.02)
    assert rows[8]["p_err_predicted"] == ""


def test_repeated_init(configured):
    cfg = configured(
        "repeated_init",
        repeated_init={"tau_init": [0.0], "n_cycles": 100, "n_chains": 8, "burn_in": 5},
    )

    run_experiment("repeated-init", cfg)

    rows = read_csv(cfg.run.out_dir / "repeated_init.csv")
    labels = {(r["protocol_id"], r["algorithm"]) for r in rows}
    assert ("fb0x3+r12", "average") in labels
    assert ("none-zero-excitation", "leave-1") in labels
    assert len(rows) == 9
    assert all(int(r["n_samples"]) in (800, 1600) for r in rows)


def test_readout_bench(configured):
    cfg = configured(
        "readout_bench", n_shots=4000, readout_bench={"n_theta": 5, "rabi_shots": 1000}
    )

    run_experiment("readout-bench", cfg)

    out = cfg.run.out_dir
    expected = {"readout_histogram.csv", "readout_histogram_postselected.csv", "rabi.csv"}
    assert expected <= artifacts(out)
    summary = read_json(out / "readout_summary.json")
    assert 0.7 < summary["contrast"] < summary["contrast_postselected"] <= 1.0
    assert 0.85 < summary["kept_fraction"] < 0.95
    assert len(read_csv(out / "rabi.csv")) == 5


def test_qnd_bench(configured):
    cfg = configured("qnd_bench", n_shots=5000, qnd_bench={"taus": [0.0, 2.4]})

    run_experiment("qnd-bench", cfg)

    rows = read_csv(cfg.run.out_dir / "qnd.csv")
    assert [float(r["tau_us"]) for r in rows] == [0.0, 2.4]
    assert float(rows[0]["p_l_given_l"]) > float(rows[1]["p_l_given_l"])
    assert float(rows[0]["p_h_given_h"]) > 0.95


def test_parity_dephasing(configured):
    cfg = configured("parity_dephasing", parity_dephasing={"tau_p": [0.2, 0.4]})

    run_experiment("parity-dephasing", cfg)

    out = cfg.run.out_dir
    rows = read_csv(out / "parity_dephasing.csv")
    assert float(rows[1]["abs_rho_11_10"]) < float(rows[0]["abs_rho_11_10"])
    summary = read_json(out / "parity_summary.json")
    assert summary["ensemble_max_deviation"] < 0.05
    assert summary["n_shots"] == 2000
    assert "pointer_trajectory.csv" in artifacts(out)
    assert read_json(out / "parity_unconditioned.json")["label"] == "unconditioned"


def test_parity_fidelity(configured):
    cfg = configured("parity_fidelity", parity_fidelity={"tau_p": [0.2, 0.4], "etas": [0.5, 1.0]})

    run_experiment("parity-fidelity", cfg)

    rows = read_csv(cfg.run.out_dir / "parity_fidelity.csv")
    assert len(rows) == 4
    # eta outer, tau_p inner
    assert [float(r["eta"]) for r in rows] == [0.5, 0.5, 1.0, 1.0]
    assert float(rows[3]["parity_fidelity"]) > float(rows[1]["parity_fidelity"])


def test_entangle_postselect(configured):
    cfg = configured("entangle_postselect", entangle_postselect={"threshold_offsets": [0.0, 50.0]})

    run_experiment("entangle-postselect", cfg)

    out = cfg.run.out_dir
    state = read_json(out / "postselected.json")
    assert 0.4 < state["metrics"]["p_success"] < 0.6
    assert state["metrics"]["concurrence"] > 0.3
    rows = read_csv(out / "postselect_thresholds.csv")
    assert rows[1]["n_kept"] == "0"
    assert rows[1]["concurrence"] == ""


def test_entangle_feedback(configured):
    """Test the phase law for three even-subspace offsets and the gain over postselection."""
    cfg = configured("entangle_feedback", entangle_feedback={"n_phi": 36})

    run_experiment("entangle-feedback", cfg)

    out = cfg.run.out_dir
    summary = read_json(out / "feedback_summary.json")
    assert len(summary["cases"]) == 3
    for case in summary["cases"]:
        assert case["argmax_within_grid"]
        assert case["feedback_exceeds_postselected"]
        assert case["feedback"]["p_success"] == 1.0
    rows = read_csv(out / "feedback_phase_sweep.csv")
    assert len(rows) == 3 * 36
    assert sum(r["is_argmax"] == "true" for r in rows) == 3


def test_even_offset_shifts_even_phase():
    """Test that the offset adds delta to the phase of rho_00,11 only."""
    rho = psi0().transform(even_offset(0.7))

    assert math.atan2(rho[0, 3].imag, rho[0, 3].real) == pytest.approx(0.7)
    assert rho[1, 2] == pytest.approx(0.25)


def test_phase_distance_modulo_pi():
    assert phase_distance(0.1, 0.1 + math.pi) == pytest.approx(0.0, abs=1e-12)
    assert phase_distance(0.0, 3.0) == pytest.approx(math.pi - 3.0)


@pytest.mark.parametrize("state", ["phi+", "werner", "random"])
def test_tomo_demo(configured, state):
    cfg = configured("tomo_demo", tomo_demo={"state": state})

    run_experiment("tomo-demo", cfg)

    out = cfg.run.out_dir
    summary = read_json(out / "tomography_summary.json")
    assert summary["mle_converged"]
    assert summary["fidelity_mle"] > 0.95
    assert summary["concurrence_difference"] < 0.1
    assert len(read_csv(out / "tomography_records.csv")) == 36
    assert read_json(out / "state_mle.json")["converged"] is True


def test_tomo_demo_non_convergence(configured):
    """Test that an iteration limit of one stops the run after writing artifacts."""
    cfg = configured("tomo_demo", tomo_demo={"max_iter": 1})

    with pytest.raises(NonConvergenceError):
        run_experiment("tomo-demo", cfg)

    out = cfg.run.out_dir
    assert read_json(out / "tomography_summary.json")["mle_converged"] is False
    assert "manifest.json" in artifacts(out)


def test_missing_block_is_reported(configured):
    cfg = configured("parity_dephasing")
    cfg = cfg.model_copy(update={"cavity": None})

    with pytest.raises(ValueError, match=r"\[cavity\]"):
        run_experiment("parity-dephasing", cfg)
