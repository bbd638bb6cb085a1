import math

import numpy as np
import pytest

from agiloped.actuation import (
    Actuator,
    ActuatorParams,
    ActuatorState,
    CalibrationAmbiguityError,
    ImpedanceCommand,
    InvalidCommandError,
    apply_calibration,
    calibrate,
    encoder_dequantize,
    encoder_quantize,
    impedance_torque,
    load_calibration,
    save_calibration,
)
from agiloped.model import ParallelCoords, parallel_to_serial

RNG = np.random.default_rng(7)
PARAMS = ActuatorParams()


class TestImpedanceTorque:
    def test_worked_example(self):
        cmd = ImpedanceCommand(q_set=0.1, kp=10.0, kd=0.0, tau_ff=0.0, tau_max=40.0)
        st = ActuatorState(position=0.0, velocity=0.0)
        assert impedance_torque(cmd, st) == pytest.approx(1.0, abs=1e-15)

    def test_saturates_at_tau_max(self):
        cmd = ImpedanceCommand(q_set=1.0, kp=100.0, tau_max=40.0)
        st = ActuatorState()
        assert impedance_torque(cmd, st) == 40.0

    def test_odd_symmetry(self):
        for _ in range(200):
            q_err, qd_err, tau_ff = RNG.uniform(-1.0, 1.0, size=3)
            kp, kd = RNG.uniform(0.0, 120.0, size=2)
            cmd = ImpedanceCommand(q_set=q_err, qd_set=qd_err, kp=kp, kd=kd,
                                   tau_ff=tau_ff, tau_max=25.0)
            mirrored = ImpedanceCommand(q_set=-q_err, qd_set=-qd_err, kp=kp, kd=kd,
                                        tau_ff=-tau_ff, tau_max=25.0)
            st = ActuatorState()
            assert impedance_torque(mirrored, st) == pytest.approx(
                -impedance_torque(cmd, st), abs=1e-12)

    def test_always_within_bounds(self):
        for _ in range(500):
            cmd = ImpedanceCommand(
                q_set=RNG.uniform(-6, 6), qd_set=RNG.uniform(-20, 20),
                kp=RNG.uniform(0, 400), kd=RNG.uniform(0, 5),
                tau_ff=RNG.uniform(-40, 40), tau_max=RNG.uniform(0.5, 40))
            st = ActuatorState(position=RNG.uniform(-6, 6),
                               velocity=RNG.uniform(-20, 20))
            tau = impedance_torque(cmd, st)
            assert abs(tau) <= cmd.tau_max + 1e-12

    def test_monotone_in_position_error(self):
        st = ActuatorState()
        taus = [
            impedance_torque(ImpedanceCommand(q_set=e, kp=30.0, tau_max=40.0), st)
            for e in np.linspace(-3, 3, 101)
        ]
        assert all(b >= a for a, b in zip(taus, taus[1:]))

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidCommandError):
            impedance_torque(ImpedanceCommand(q_set=float("nan")), ActuatorState())
        with pytest.raises(InvalidCommandError):
            impedance_torque(ImpedanceCommand(), ActuatorState(position=float("inf")))


class TestEnvelope:
    def test_flat_region(self):
        assert PARAMS.available_torque(0.0, 48.0) == 40.0
        assert PARAMS.available_torque(0.69 * 11.5, 48.0) == 40.0

    def test_zero_at_no_load_speed(self):
        assert PARAMS.available_torque(11.5, 48.0) == 0.0
        assert PARAMS.available_torque(-11.5, 48.0) == 0.0

    def test_voltage_scaling(self):
        assert PARAMS.max_speed(48.0) == pytest.approx(11.5)
        assert PARAMS.max_speed(52.2) == pytest.approx(12.50625)
        # Spec quotes 12.51 for the 52.2 V supply.
        assert PARAMS.max_speed(52.2) == pytest.approx(12.51, abs=5e-3)

    def test_linear_taper(self):
        mid = 0.85 * 11.5
        assert PARAMS.available_torque(mid, 48.0) == pytest.approx(20.0)


class TestActuatorStep:
    def test_equilibrium_only_thermal_decay(self):
        act = Actuator("knee")
        act.state.temperature = 60.0
        for _ in range(100):
            act.step(load_torque=0.0, dt=0.001)
        assert abs(act.true_position) < 1e-9
        assert abs(act.true_velocity) < 1e-9
        assert act.state.temperature < 60.0
        assert act.state.temperature > PARAMS.ambient_temperature

    def test_disabled_applies_zero(self):
        act = Actuator("knee")
        act.state.enabled = False
        act.apply_command(ImpedanceCommand(q_set=1.0, kp=100.0, tau_max=40.0))
        applied = act.step(load_torque=0.0, dt=0.001)
        assert applied == 0.0

    def test_envelope_never_exceeded(self):
        act = Actuator("knee")
        act.apply_command(ImpedanceCommand(qd_set=50.0, kd=5.0, tau_max=40.0))
        for _ in range(4000):
            v_before = act.true_velocity
            applied = act.step(load_torque=0.0, dt=0.0005)
            avail = PARAMS.available_torque(v_before, act.state.bus_voltage)
            assert abs(applied) <= avail + 1e-9
        # Driven against the envelope the joint cannot pass no-load speed.
        assert abs(act.true_velocity) <= PARAMS.max_speed(act.state.bus_voltage) + 1e-6

    def test_locked_rotor_thermal_closed_form(self):
        # 18 Nm against a locked output for 60 s; compare to the analytic
        # first-order response of the thermal ODE.
        act = Actuator("knee")
        act.apply_command(ImpedanceCommand(q_set=10.0, kp=1e4, tau_max=18.0))
        dt = 0.002
        t = 0.0
        while t < 60.0:
            act.step(load_torque=act.state.torque, dt=dt)  # load balances: locked
            act._true_velocity = 0.0
            act._true_position = 0.0
            t += dt
        p = PARAMS
        power = (18.0 / p.torque_constant) ** 2 * p.winding_resistance
        expected = p.ambient_temperature + p.thermal_resistance * power * (
            1.0 - math.exp(-60.0 / p.thermal_time_constant)
        )
        assert act.state.temperature == pytest.approx(expected, rel=0.01)

    def test_rated_torque_stall_steady_state_near_70C(self):
        p = PARAMS
        power = (p.rated_torque / p.torque_constant) ** 2 * p.winding_resistance
        assert p.ambient_temperature + p.thermal_resistance * power == pytest.approx(70.0, abs=1.0)

    def test_mechanical_power_bounded_by_electrical_model(self):
        act = Actuator("knee")
        act.apply_command(ImpedanceCommand(q_set=2.0, kp=60.0, kd=0.5, tau_max=40.0))
        for _ in range(2000):
            applied = act.step(load_torque=1.0, dt=0.0005)
            mech = applied * act.true_velocity
            assert mech <= act.electrical_power + 1e-9

    def test_rejects_bad_dt(self):
        act = Actuator("knee")
        with pytest.raises(ValueError):
            act.step(0.0, dt=0.02)


class TestEncoder:
    def test_zero(self):
        assert encoder_quantize(0.0) == 0

    def test_half_revolution(self):
        assert encoder_quantize(math.pi) == 32768

    def test_round_trip_bound(self):
        for angle in RNG.uniform(-50.0, 50.0, size=2000):
            ticks = encoder_quantize(angle)
            back = encoder_dequantize(ticks)
            err = abs((back - angle + math.pi) % (2 * math.pi) - math.pi)
            assert err <= math.pi / 65536 + 1e-12

    def test_output_side_resolution(self):
        step = 2 * math.pi / (65536 * 36)
        assert step == pytest.approx(2.664e-6, rel=1e-3)


COLLAPSE_POSE = {
    "l_hip_pitch": -1.8, "l_knee": 0.6,
    "r_hip_pitch": -1.8, "r_knee": 0.6,
}


class TestCalibration:
    def test_exact_pose_zero_offsets(self):
        offsets = calibrate(dict(COLLAPSE_POSE), COLLAPSE_POSE)
        assert all(v == 0.0 for v in offsets.values())

    def test_uniform_offset(self):
        raw = {k: v + 0.25 for k, v in COLLAPSE_POSE.items()}
        offsets = calibrate(raw, COLLAPSE_POSE)
        assert all(v == pytest.approx(0.25, abs=1e-12) for v in offsets.values())

    def test_ambiguity_error(self):
        raw = dict(COLLAPSE_POSE)
        raw["l_knee"] += 3.5
        with pytest.raises(CalibrationAmbiguityError) as err:
            calibrate(raw, COLLAPSE_POSE)
        assert err.value.joint == "l_knee"

    def test_collapse_pose_consistency_with_model(self):
        # Calibrated readings map back onto the documented collapse
        # configuration through the parallelogram relations.
        raw = {k: v + 0.1 for k, v in COLLAPSE_POSE.items()}
        offsets = calibrate(raw, COLLAPSE_POSE)
        joints = apply_calibration(raw, offsets)
        p = ParallelCoords(joints["l_hip_pitch"], joints["l_knee"])
        s = parallel_to_serial(p)
        assert s.q_h == pytest.approx(-1.8, abs=1e-9)
        assert s.q_k == pytest.approx(2.4, abs=1e-9)
        assert s.q_a == pytest.approx(-0.6, abs=1e-9)

    def test_file_round_trip(self, tmp_path):
        offsets = {"l_knee": 0.125, "r_hip_pitch": -0.5}
        path = tmp_path / "calibration.txt"
        save_calibration(path, offsets)
        assert load_calibration(path) == pytest.approx(offsets)
