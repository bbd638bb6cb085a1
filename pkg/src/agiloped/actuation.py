"""Quasi-direct-drive actuator model and per-joint impedance control.

The impedance law runs motor-side: torque from position/velocity errors
with stiffness and damping gains plus a feedforward term, saturated to a
commanded maximum.  The simulated actuator adds the speed-torque envelope,
encoder quantization, a filtered velocity estimate, and a first-order
thermal model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

TWO_PI = 2.0 * math.pi


class ActuationError(ValueError):
    pass


class InvalidCommandError(ActuationError):
    pass


class CalibrationAmbiguityError(ActuationError):
    """Raised when a calibration offset exceeds half an output revolution;
    the multi-turn count inferred from the single-turn motor encoder can no
    longer be trusted."""

    def __init__(self, joint, offset):
        self.joint = joint
        self.offset = offset
        super().__init__(
            f"{joint}: offset {offset:.3f} rad exceeds half an output revolution"
        )


@dataclass(frozen=True)
class ActuatorParams:
    """X6-40-class actuator constants.

    rotor_inertia is the output-side (reflected) figure of 28.8 kg cm^2;
    thermal constants are chosen so rated torque at stall settles near
    70 C from a 25 C ambient.
    """

    rated_torque: float = 18.0
    peak_torque: float = 40.0
    no_load_speed_48v: float = 11.5
    gear_ratio: float = 36.0
    encoder_bits: int = 16
    rotor_inertia: float = 28.8e-4
    voltage_min: float = 20.0
    voltage_max: float = 52.0
    link_inertia: float = 0.09
    viscous_friction: float = 0.05
    torque_constant: float = 6.0   # output Nm per amp
    winding_resistance: float = 10.0 / 3.0
    thermal_resistance: float = 1.5    # K/W
    thermal_time_constant: float = 120.0
    ambient_temperature: float = 25.0
    envelope_knee: float = 0.7     # fraction of no-load speed at full torque

    def __post_init__(self):
        if not (self.peak_torque >= self.rated_torque > 0):
            raise ValueError("need peak_torque >= rated_torque > 0")
        if self.gear_ratio < 1:
            raise ValueError("gear_ratio must be >= 1")
        for name in ("no_load_speed_48v", "rotor_inertia", "torque_constant"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def max_speed(self, bus_voltage):
        """No-load speed scales proportionally with bus voltage."""
        return self.no_load_speed_48v * (bus_voltage / 48.0)

    def available_torque(self, velocity, bus_voltage):
        """Speed-torque envelope: flat at peak torque up to the knee, then
        tapering linearly to zero at the no-load speed."""
        w_max = self.max_speed(bus_voltage)
        w_knee = self.envelope_knee * w_max
        w = abs(velocity)
        if w <= w_knee:
            return self.peak_torque
        if w >= w_max:
            return 0.0
        return self.peak_torque * (w_max - w) / (w_max - w_knee)


@dataclass(frozen=True)
class ImpedanceCommand:
    q_set: float = 0.0
    qd_set: float = 0.0
    kp: float = 0.0
    kd: float = 0.0
    tau_ff: float = 0.0
    tau_max: float = 40.0

    def validate(self, peak_torque=None):
        values = (self.q_set, self.qd_set, self.kp, self.kd, self.tau_ff, self.tau_max)
        if not all(math.isfinite(v) for v in values):
            raise InvalidCommandError(f"non-finite field in {self}")
        if self.kp < 0 or self.kd < 0:
            raise InvalidCommandError("gains must be non-negative")
        if self.tau_max <= 0:
            raise InvalidCommandError("tau_max must be positive")
        if peak_torque is not None and self.tau_max > peak_torque:
            raise InvalidCommandError(
                f"tau_max {self.tau_max} exceeds peak torque {peak_torque}"
            )


@dataclass
class ActuatorState:
    position: float = 0.0
    velocity: float = 0.0
    torque: float = 0.0
    temperature: float = 25.0
    bus_voltage: float = 52.2
    enabled: bool = True
    timestamp: float = 0.0


def impedance_torque(cmd: ImpedanceCommand, st: ActuatorState) -> float:
    """Impedance law with a symmetric saturation at tau_max."""
    cmd.validate()
    if not (math.isfinite(st.position) and math.isfinite(st.velocity)):
        raise InvalidCommandError("non-finite actuator state")
    raw = cmd.kp * (cmd.q_set - st.position) + cmd.kd * (cmd.qd_set - st.velocity) + cmd.tau_ff
    return max(-cmd.tau_max, min(cmd.tau_max, raw))


def encoder_quantize(angle_motor_shaft, bits=16):
    """Motor-shaft angle to encoder ticks (single revolution)."""
    n = 1 << bits
    return int(round(angle_motor_shaft / TWO_PI * n)) % n


def encoder_dequantize(ticks, bits=16):
    n = 1 << bits
    return (ticks % n) / n * TWO_PI


class Actuator:
    """One simulated joint drive: impedance tracking against a load torque.

    Owns its state; stepped by exactly one simulation loop.  Feedback
    position goes through encoder quantization (the multi-turn count is
    known to the simulation); the velocity estimate is a backward
    difference of quantized position through a single-pole low-pass.
    """

    def __init__(self, name, params: ActuatorParams = None, bus_voltage=52.2,
                 velocity_cutoff_hz=100.0):
        self.name = name
        self.params = params or ActuatorParams()
        self.state = ActuatorState(bus_voltage=bus_voltage,
                                   temperature=self.params.ambient_temperature)
        self.command = ImpedanceCommand(tau_max=self.params.peak_torque)
        self._true_position = 0.0
        self._true_velocity = 0.0
        self._prev_quantized = 0.0
        self._velocity_cutoff = velocity_cutoff_hz
        self._velocity_estimate = 0.0
        self.electrical_power = 0.0

    def reset_position(self, position):
        self._true_position = position
        self._true_velocity = 0.0
        self._velocity_estimate = 0.0
        self._prev_quantized = self._quantized_position()
        self.state.position = self._prev_quantized
        self.state.velocity = 0.0

    def apply_command(self, cmd: ImpedanceCommand):
        cmd.validate(self.params.peak_torque)
        self.command = cmd

    def _quantized_position(self):
        g = self.params.gear_ratio
        n = 1 << self.params.encoder_bits
        motor = self._true_position * g
        return round(motor / TWO_PI * n) / n * TWO_PI / g

    def step(self, load_torque, dt, now=None):
        """Advance one substep: impedance torque -> envelope -> dynamics.

        Returns the applied (post-envelope) torque; zero while disabled.
        """
        if not (0.0 < dt <= 0.01):
            raise ValueError("dt must be in (0, 0.01]")
        p = self.params
        st = self.state
        if st.enabled:
            commanded = impedance_torque(self.command, st)
        else:
            commanded = 0.0
        avail = p.available_torque(self._true_velocity, st.bus_voltage)
        applied = max(-avail, min(avail, commanded))

        inertia = p.rotor_inertia + p.link_inertia
        accel = (applied - load_torque - p.viscous_friction * self._true_velocity) / inertia
        self._true_velocity += accel * dt
        self._true_position += self._true_velocity * dt

        # Feedback path: quantized position, filtered backward difference.
        q_meas = self._quantized_position()
        v_raw = (q_meas - self._prev_quantized) / dt
        alpha = 1.0 - math.exp(-TWO_PI * self._velocity_cutoff * dt)
        self._velocity_estimate += alpha * (v_raw - self._velocity_estimate)
        self._prev_quantized = q_meas

        # First-order thermal response, exact for constant loss over dt.
        loss = (applied / p.torque_constant) ** 2 * p.winding_resistance
        t_ss = p.ambient_temperature + p.thermal_resistance * loss
        st.temperature += (t_ss - st.temperature) * (1.0 - math.exp(-dt / p.thermal_time_constant))
        self.electrical_power = loss + applied * self._true_velocity

        st.position = q_meas
        st.velocity = self._velocity_estimate
        st.torque = applied
        if now is not None:
            st.timestamp = now
        return applied

    @property
    def true_position(self):
        return self._true_position

    @property
    def true_velocity(self):
        return self._true_velocity


def calibrate(raw_angles: dict, calibration_pose: dict) -> dict:
    """Per-joint offsets from readings taken in the calibration pose.

    offset = raw - pose; afterwards joint position = raw - offset.  An
    offset beyond half an output revolution means the turn count implied
    by the pose cannot be trusted and is rejected.
    """
    offsets = {}
    for joint, pose in calibration_pose.items():
        if joint not in raw_angles:
            raise ActuationError(f"no raw reading for joint {joint}")
        raw = raw_angles[joint]
        if not (math.isfinite(raw) and math.isfinite(pose)):
            raise ActuationError(f"non-finite calibration input for {joint}")
        offset = raw - pose
        if abs(offset) > math.pi:
            raise CalibrationAmbiguityError(joint, offset)
        offsets[joint] = offset
    return offsets


def apply_calibration(raw_angles: dict, offsets: dict) -> dict:
    return {j: raw_angles[j] - offsets[j] for j in offsets}


def save_calibration(path, offsets: dict):
    with open(path, "w", encoding="utf-8") as f:
        for joint in sorted(offsets):
            f.write(f"{joint} {offsets[joint]:.9f}\n")


def load_calibration(path) -> dict:
    offsets = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ActuationError(f"{path}:{lineno}: expected 'joint offset'")
            offsets[parts[0]] = float(parts[1])
    return offsets
