"""
Tests for configuration loading and overrides.

These tests verify:
- Every shipped config validates
- Unknown keys, bad TOML and missing files are reported
- Canonical hashing ignores key order
- Precedence flag > environment > file
- Derived objects built from config blocks
"""

from pathlib import Path

import pytest
from pydantic import ValidationError

from qfb.config import (
    ExperimentConfig,
    FeedbackConfig,
    QfbSettings,
    RatesConfig,
    ReadoutConfig,
    TomographyConfig,
    apply_overrides,
    config_hash,
    load_config,
)
from qfb.parity.cavity import CavityConfig
from qfb.qubit.readout import Polarity


def write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


def test_shipped_configs_validate(configs_dir):
    """Test that every config under configs/ loads and names its experiment."""
    paths = sorted(configs_dir.glob("*.toml"))

    assert len(paths) == 10
    for path in paths:
        cfg = load_config(path)
        assert cfg.run.experiment is not None
        assert cfg.run.experiment.replace("-", "_") == path.stem


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "absent.toml")


def test_unknown_key_rejected(tmp_path):
    path = write(tmp_path / "c.toml", "[run]\nseed = 1\nshots = 5\n")

    with pytest.raises(ValueError, match="Invalid configuration"):
        load_config(path)


@pytest.mark.parametrize(
    "text",
    [
        "[cavity]\nkappa_mhz = 1.5\nchi_a_mhz = 3.0\nchi_b_mhz = 3.0\nn_ss = 2.5\nkapa_mhz = 1.0\n",
        "[frequencies]\nf01 = 5.606\nanharmonicty = 0.3\n",
    ],
)
def test_unknown_key_in_physics_block_rejected(tmp_path, text):
    """Test that misspelled keys under [cavity] and [frequencies] are errors."""
    path = write(tmp_path / "c.toml", text)

    with pytest.raises(ValueError, match="Invalid configuration"):
        load_config(path)


def test_malformed_toml(tmp_path):
    path = write(tmp_path / "c.toml", "[run\nseed = 1\n")

    with pytest.raises(ValueError, match="Invalid configuration"):
        load_config(path)


def test_hash_ignores_key_order(tmp_path):
    a = write(tmp_path / "a.toml", "[run]\nseed = 3\nn_shots = 10\n[rates]\nt10 = 50.0\n")
    b = write(tmp_path / "b.toml", "[rates]\nt10 = 50.0\n[run]\nn_shots = 10\nseed = 3\n")
    c = write(tmp_path / "c.toml", "[run]\nseed = 4\nn_shots = 10\n[rates]\nt10 = 50.0\n")

    assert config_hash(load_config(a)) == config_hash(load_config(b))
    assert config_hash(load_config(a)) != config_hash(load_config(c))


def test_override_precedence(monkeypatch, tmp_path):
    """Test flag > QFB_* environment > file."""
    monkeypatch.setenv("QFB_THREADS", "3")
    monkeypatch.setenv("QFB_OUT_DIR", str(tmp_path / "env"))
    cfg = ExperimentConfig.model_validate({"run": {"seed": 1, "threads": 8}})

    merged = apply_overrides(cfg, QfbSettings(), seed=9, out_dir=tmp_path / "flag")

    assert merged.run.seed == 9
    assert merged.run.threads == 3
    assert merged.run.out_dir == tmp_path / "flag"


def test_no_overrides_returns_same_config(monkeypatch):
    for key in ("QFB_THREADS", "QFB_OUT_DIR", "QFB_BATCH_SIZE"):
        monkeypatch.delenv(key, raising=False)
    cfg = ExperimentConfig()

    assert apply_overrides(cfg, QfbSettings()) is cfg


def test_out_of_range_override():
    with pytest.raises(ValueError, match="Invalid configuration"):
        apply_overrides(ExperimentConfig(), QfbSettings(), seed=-1)


def test_missing_block():
    with pytest.raises(ValueError, match=r"missing \[cavity\] block"):
        ExperimentConfig().block("cavity", CavityConfig)


def test_rates_from_lifetimes():
    """Test that omitted lifetimes switch the transition off."""
    rates = RatesConfig(t10=50.0, t01=324.0).rates()

    assert rates.g10 == pytest.approx(0.02)
    assert rates.g12 == 0.0


def test_readout_threshold():
    readout = ReadoutConfig(mu0=-1.0, mu1=1.0, sigma=0.2, t_meas=0.4)

    assert readout.threshold().v_th == pytest.approx(0.0)
    assert readout.threshold().polarity == Polarity.GROUND_LOW
    assert ReadoutConfig(sigma=0.2, t_meas=0.4, v_th=0.3).threshold().v_th == 0.3


def test_feedback_latency():
    assert FeedbackConfig().timing(0.2).tau_fb == pytest.approx(2.4)
    assert FeedbackConfig(controller=None, tau_fb=1.0).timing(0.2).tau_fb == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        FeedbackConfig(controller="fpga")
    with pytest.raises(ValidationError):
        FeedbackConfig(controller=None)


def test_feedback_protocol_from_config():
    readout = ReadoutConfig(sigma=0.377, t_meas=0.2)
    protocol = FeedbackConfig(pulse_error=0.01).protocol(
        readout.threshold(), 0.2, rounds=3, recover_12=True
    )

    assert protocol.protocol_id == "fb0x3+r12"
    assert protocol.pulse_error == 0.01


def test_tomography_rotation_sets():
    assert len(TomographyConfig().settings()) == 36
    assert len(TomographyConfig(rotation_set="minimal").settings()) == 16
