"""
Configuration loading and validation for qfb.

Loads experiment TOML files and validates every block with Pydantic.
Environment variables prefixed with QFB_ override run settings.
"""

import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Literal

try:
    import tomllib  # Python 3.11+
except ImportError:
    import tomli as tomllib  # type: ignore

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .feedback.timing import DEFAULT_PULSE_US, FeedbackProtocol, LoopTiming, controller
from .parity.cavity import CavityConfig
from .qubit.dynamics import QubitFrequencies, TransitionRates
from .qubit.readout import ShotModel, Threshold
from .tomography.reconstruct import MLE_MAX_ITER
from .tomography.records import TomographySettings
from .utils.pool import DEFAULT_BATCH_SIZE
from .utils.rng import MAX_SEED

logger = logging.getLogger(__name__)


class Block(BaseModel):
    """Base for config blocks: unknown keys are errors."""

    model_config = ConfigDict(extra="forbid", frozen=True)


class RunConfig(Block):
    """Run-wide settings."""

    experiment: str | None = None
    seed: int = Field(default=0, ge=0, le=MAX_SEED)
    n_shots: int = Field(default=100_000, ge=1)
    out_dir: Path = Path("results")
    threads: int | None = Field(default=None, ge=1)
    batch_size: int = Field(default=DEFAULT_BATCH_SIZE, ge=1)


class RatesConfig(Block):
    """Inverse transition rates in us; omit a key to switch the transition off."""

    t01: float | None = Field(default=None, gt=0.0)
    t10: float | None = Field(default=None, gt=0.0)
    t12: float | None = Field(default=None, gt=0.0)
    t21: float | None = Field(default=None, gt=0.0)

    def rates(self) -> TransitionRates:
        def lifetime(t: float | None) -> float:
            return math.inf if t is None else t

        return TransitionRates.from_lifetimes(
            lifetime(self.t01), lifetime(self.t10), lifetime(self.t12), lifetime(self.t21)
        )


class ReadoutConfig(ShotModel):
    """Shot model plus the digitization threshold (midpoint of mu0 and mu1 if unset)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    v_th: float | None = None

    def shot_model(self) -> ShotModel:
        return ShotModel.model_validate(self.model_dump(exclude={"v_th"}))

    def threshold(self) -> Threshold:
        if self.v_th is None:
            return self.midpoint()
        return Threshold(v_th=self.v_th, polarity=self.ground_polarity())


class FeedbackConfig(Block):
    """Controller latency and conditional pulse settings."""

    controller: str | None = Field(default="adwin", description="Preset name")
    tau_fb: float | None = Field(default=None, gt=0.0, description="Overrides the preset")
    t_pulse: float = Field(default=DEFAULT_PULSE_US, ge=0.0)
    jitter: float = Field(default=0.0, ge=0.0)
    pulse_error: float = Field(default=0.005, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def check_latency(self) -> "FeedbackConfig":
        if self.controller is None and self.tau_fb is None:
            raise ValueError("either controller or tau_fb is required")
        if self.controller is not None:
            controller(self.controller)
        return self

    def timing(self, t_meas: float) -> LoopTiming:
        tau_fb = self.tau_fb
        if tau_fb is None:
            assert self.controller is not None
            tau_fb = controller(self.controller).tau_fb
        base = LoopTiming.from_tau_fb(tau_fb, t_meas=t_meas, t_pulse=self.t_pulse)
        return base.model_copy(update={"jitter": self.jitter})

    def protocol(
        self,
        threshold: Threshold,
        t_meas: float,
        target: Literal[0, 1] = 0,
        rounds: int = 1,
        recover_12: bool = False,
    ) -> FeedbackProtocol:
        return FeedbackProtocol(
            target=target,
            rounds=rounds,
            recover_12=recover_12,
            threshold=threshold,
            timing=self.timing(t_meas),
            pulse_error=self.pulse_error,
        )


class ParityConfig(Block):
    """Parity pulse, integration window and digitization."""

    tau_p: float = Field(default=0.4, gt=0.0, description="Pulse length in us")
    window: tuple[float, float] | None = Field(default=None, description="Defaults to [0, tau_p]")
    dt: float | None = Field(default=None, gt=0.0)
    threshold: float | Literal["optimal"] = "optimal"
    t1_a: float | None = Field(default=None, gt=0.0, description="Intrinsic T1 of qubit A, us")
    t1_b: float | None = Field(default=None, gt=0.0, description="Intrinsic T1 of qubit B, us")

    @field_validator("window")
    @classmethod
    def check_window(cls, v: tuple[float, float] | None) -> tuple[float, float] | None:
        if v is not None and not 0.0 <= v[0] < v[1]:
            raise ValueError(f"window must satisfy 0 <= t_i < t_f, got {v}")
        return v

    def window_for(self, tau_p: float) -> tuple[float, float]:
        return self.window if self.window is not None else (0.0, tau_p)


class TomographyConfig(Block):
    """Tomography settings; `rotation_set` picks the 36- or 16-setting set."""

    rotation_set: Literal["full", "minimal"] = "full"
    b0: float = 0.0
    b_a: float = 1.0
    b_b: float = 1.0
    b_ba: float = 1.0
    shots: int = Field(default=1000, ge=1)
    noise_std: float = Field(default=1.0, gt=0.0)

    def settings(self) -> TomographySettings:
        values = self.model_dump(exclude={"rotation_set"})
        if self.rotation_set == "minimal":
            return TomographySettings.minimal(**values)
        return TomographySettings.full(**values)


# Experiment blocks


class ResetSweepConfig(Block):
    """Reset error against the initial rotation angle."""

    n_theta: int = Field(default=13, ge=2)
    variants: list[Literal["none", "fb0", "fb1", "fb0x2"]] = Field(
        default_factory=lambda: ["none", "fb0", "fb1", "fb0x2"]
    )


class RepeatedInitConfig(Block):
    """Looped experiment initialized by feedback or passively."""

    tau_init: list[float] = Field(default_factory=lambda: [0.0, 2.0, 5.0, 10.0, 20.0, 50.0])
    algorithms: list[Literal["leave-0", "leave-1"]] = Field(
        default_factory=lambda: ["leave-0", "leave-1"]
    )
    rounds: int = Field(default=3, ge=1)
    recover_12: bool = True
    n_cycles: int = Field(default=2000, ge=100)
    n_chains: int = Field(default=50, ge=1)
    burn_in: int = Field(default=20, ge=0)
    zero_excitation: bool = Field(
        default=True, description="Also run the no-feedback loop without upward rates"
    )

    @field_validator("tau_init")
    @classmethod
    def check_tau(cls, v: list[float]) -> list[float]:
        if not v or any(t < 0 for t in v):
            raise ValueError("tau_init needs at least one non-negative value")
        return v


class ReadoutBenchConfig(Block):
    """Pre-measurement, wait, preparation and measurement with a spectator qubit."""

    tau: float = Field(default=2.4, ge=0.0, description="Wait between M_A and the pulse")
    prep_error: float = Field(default=0.01, ge=0.0, le=1.0)
    spectator: bool = True
    spectator_shift: float | None = Field(
        default=None, description="Voltage shift of an excited spectator (mu1 - mu0 if unset)"
    )
    bins: int = Field(default=100, ge=2)
    n_theta: int = Field(default=21, ge=3, description="Points of the Rabi sweep")
    rabi_shots: int = Field(default=20_000, ge=1, description="Shots per Rabi point")


class QndBenchConfig(Block):
    """Repeated measurements separated by tau."""

    taus: list[float] = Field(default_factory=lambda: [0.0, 0.6, 1.2, 2.4, 4.8])
    prep_theta: float = Field(default=math.pi / 2, ge=0.0, le=math.pi)


class ParityDephasingConfig(Block):
    """Coherences of the parity channel against pulse length."""

    tau_p: list[float] = Field(default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.5, 0.6])


class ParityFidelityConfig(Block):
    """Parity fidelity against pulse length for several efficiencies."""

    tau_p: list[float] = Field(default_factory=lambda: [0.1, 0.2, 0.3, 0.4, 0.6, 0.8])
    etas: list[float] = Field(default_factory=lambda: [0.4, 0.6, 0.8, 1.0])

    @field_validator("etas")
    @classmethod
    def check_etas(cls, v: list[float]) -> list[float]:
        if not v or any(not 0.0 < e <= 1.0 for e in v):
            raise ValueError("etas must lie in (0, 1]")
        return v


class EntanglePostselectConfig(Block):
    """Postselection on odd parity, with stricter thresholds."""

    threshold_offsets: list[float] = Field(
        default_factory=lambda: [0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
        description="Shifts towards the odd side, in units of sigma",
    )


class EntangleFeedbackConfig(Block):
    """Deterministic entanglement: conditional pi pulse phase sweep."""

    n_phi: int = Field(default=72, ge=4)
    phi_e_offsets: list[float] = Field(
        default_factory=lambda: [0.0],
        description="Extra even-subspace phases added before the sweep",
    )


class TomoDemoConfig(Block):
    """Tomography of a known state from synthetic records."""

    state: Literal["phi+", "psi+", "psi0", "werner", "random"] = "phi+"
    werner_p: float = Field(default=0.8, ge=0.0, le=1.0)
    noiseless: bool = False
    require_convergence: bool = True
    max_iter: int = Field(default=MLE_MAX_ITER, ge=1, description="BFGS iteration limit")


class RelaxationConfig(Block):
    """Population relaxation after preparing one level."""

    initial_level: Literal[0, 1, 2] = 1
    t_max: float = Field(default=500.0, gt=0.0)
    n_points: int = Field(default=101, ge=2)


class ExperimentConfig(Block):
    """Complete, validated experiment configuration."""

    run: RunConfig = Field(default_factory=RunConfig)
    rates: RatesConfig | None = None
    frequencies: QubitFrequencies | None = None
    readout: ReadoutConfig | None = None
    feedback: FeedbackConfig | None = None
    cavity: CavityConfig | None = None
    parity: ParityConfig | None = None
    tomography: TomographyConfig | None = None

    reset_sweep: ResetSweepConfig | None = None
    repeated_init: RepeatedInitConfig | None = None
    readout_bench: ReadoutBenchConfig | None = None
    qnd_bench: QndBenchConfig | None = None
    parity_dephasing: ParityDephasingConfig | None = None
    parity_fidelity: ParityFidelityConfig | None = None
    entangle_postselect: EntanglePostselectConfig | None = None
    entangle_feedback: EntangleFeedbackConfig | None = None
    tomo_demo: TomoDemoConfig | None = None
    relaxation: RelaxationConfig | None = None

    def missing(self, blocks: tuple[str, ...]) -> list[str]:
        """Names of required blocks absent from this config."""
        return [name for name in blocks if getattr(self, name) is None]

    def block[B: BaseModel](self, name: str, kind: type[B]) -> B:
        """Return a required block, raising ValueError if absent."""
        value = getattr(self, name)
        if value is None:
            raise ValueError(f"Invalid configuration: missing [{name}] block")
        if not isinstance(value, kind):
            raise TypeError(f"[{name}] is {type(value).__name__}, not {kind.__name__}")
        return value

    def canonical(self) -> dict[str, Any]:
        """JSON-compatible dump of the validated config, without empty blocks."""
        return self.model_dump(mode="json", exclude_none=True)


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON form; independent of key order in the file."""
    text = json.dumps(config.canonical(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class QfbSettings(BaseSettings):
    """Environment overrides (QFB_LOG_LEVEL, QFB_THREADS, QFB_OUT_DIR, QFB_BATCH_SIZE)."""

    model_config = SettingsConfigDict(env_prefix="QFB_", extra="ignore")

    log_level: str = "INFO"
    threads: int | None = Field(default=None, ge=1)
    out_dir: Path | None = None
    batch_size: int | None = Field(default=None, ge=1)


def load_config(config_path: Path) -> ExperimentConfig:
    """
    Load an experiment configuration from a TOML file.

    Args:
        config_path: Path to the TOML file

    Returns:
        Validated ExperimentConfig

    Raises:
        FileNotFoundError: If config file doesn't exist
        ValueError: If config is invalid
    """
    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    try:
        with open(config_path, "rb") as f:
            config_data = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ValueError(f"Invalid configuration: {e}") from e

    try:
        config = ExperimentConfig(**config_data)
    except ValidationError as e:
        raise ValueError(f"Invalid configuration: {e}") from e

    logger.debug("Loaded configuration %s (%s)", config_path, config_hash(config)[:12])
    return config


def apply_overrides(
    config: ExperimentConfig,
    settings: QfbSettings,
    seed: int | None = None,
    threads: int | None = None,
    out_dir: Path | None = None,
) -> ExperimentConfig:
    """
    Merge run settings with precedence CLI flag > environment > file.

    Raises:
        ValueError: If an override is out of range
    """
    update: dict[str, Any] = {}
    for key, flag, env in (
        ("seed", seed, None),
        ("threads", threads, settings.threads),
        ("out_dir", out_dir, settings.out_dir),
        ("batch_size", None, settings.batch_size),
    ):
        value = flag if flag is not None else env
        if value is not None:
            update[key] = value
    if not update:
        return config

    try:
        run = RunConfig.model_validate({**config.run.model_dump(), **update})
    except ValidationError as e:
        raise ValueError(f"Invalid configuration: {e}") from e
    return config.model_copy(update={"run": run})

