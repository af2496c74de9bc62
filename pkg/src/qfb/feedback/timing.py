"""
Feedback loop timing, controller presets and protocol definitions.

tau_fb is the time from the end of the measurement pulse to the end of the
conditional pulse: controller processing plus the pulse itself. It is the
duration during which the rate model keeps acting before the correction lands.
"""

import logging
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from ..qubit.readout import Threshold

logger = logging.getLogger(__name__)

DEFAULT_PULSE_US = 0.032


class LoopTiming(BaseModel):
    """Durations (us) of one measure-decide-act cycle."""

    model_config = ConfigDict(frozen=True)

    t_meas: float = Field(ge=0.0, description="Measurement pulse duration")
    t_process: float = Field(ge=0.0, description="Controller latency")
    t_pulse: float = Field(default=DEFAULT_PULSE_US, ge=0.0, description="Conditional pulse")
    jitter: float = Field(default=0.0, ge=0.0, description="Std of tau_fb across shots")

    @property
    def tau_fb(self) -> float:
        return self.t_process + self.t_pulse

    @property
    def total(self) -> float:
        """Full loop time from the start of the measurement."""
        return self.t_meas + self.tau_fb

    @classmethod
    def from_tau_fb(
        cls, tau_fb: float, t_meas: float, t_pulse: float = DEFAULT_PULSE_US
    ) -> "LoopTiming":
        if tau_fb < t_pulse:
            raise ValueError(f"tau_fb={tau_fb} is shorter than the pulse ({t_pulse})")
        return cls(t_meas=t_meas, t_process=tau_fb - t_pulse, t_pulse=t_pulse)


class ControllerProfile(BaseModel):
    """A named feedback controller with its latency preset."""

    model_config = ConfigDict(frozen=True)

    name: str
    tau_fb: float = Field(gt=0.0)
    t_meas: float = Field(default=0.2, gt=0.0)
    t_pulse: float = Field(default=DEFAULT_PULSE_US, ge=0.0)

    def timing(self) -> LoopTiming:
        return LoopTiming.from_tau_fb(self.tau_fb, t_meas=self.t_meas, t_pulse=self.t_pulse)


# Processor-based controller (~2.6 us loop), fast logic device (0.11 us
# response), and the logic device with a wait for the cavity to empty.
CONTROLLERS: dict[str, ControllerProfile] = {
    "adwin": ControllerProfile(name="adwin", tau_fb=2.4, t_meas=0.2),
    "cpld": ControllerProfile(name="cpld", tau_fb=0.11 + DEFAULT_PULSE_US, t_meas=0.2),
    "cpld-delayed": ControllerProfile(name="cpld-delayed", tau_fb=2.0, t_meas=0.4),
}


def controller(name: str) -> ControllerProfile:
    """Look up a controller preset by name."""
    try:
        return CONTROLLERS[name]
    except KeyError:
        valid = ", ".join(sorted(CONTROLLERS))
        raise ValueError(f"Unknown controller '{name}'. Valid controllers: {valid}") from None


class FeedbackProtocol(BaseModel):
    """Reset protocol Fb0 (target |0>) or Fb1 (target |1>), possibly repeated."""

    model_config = ConfigDict(frozen=True)

    target: Literal[0, 1] = 0
    rounds: int = Field(default=1, ge=1)
    recover_12: bool = Field(
        default=False, description="Unconditional 1<->2 pi pulse before the final round"
    )
    threshold: Threshold
    timing: LoopTiming
    pulse_error: float = Field(default=0.005, ge=0.0, le=1.0)

    @property
    def protocol_id(self) -> str:
        label = f"fb{self.target}"
        if self.rounds > 1:
            label += f"x{self.rounds}"
        if self.recover_12:
            label += "+r12"
        return label
