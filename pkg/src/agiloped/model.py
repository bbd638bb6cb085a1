"""Robot parameterization and hybrid serial-parallel leg kinematics.

Each leg has four actuated coordinates: hip yaw, hip roll, and the two
parallelogram drives (thigh pitch q_th, shank pitch q_sh).  The double
four-bar transmission makes the serial joint angles an affine function of
the actuated pair, so the sagittal chain is fully described by the two
absolute segment pitches.  Torso frame: x forward, y left, z up, origin at
the midpoint of the hip line.  Positive pitch swings a segment forward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

GRAVITY = 9.81

# Serial rates/torques from actuated rates/torques; constant for the
# parallelogram transmission (rows: hip, knee, ankle).
PARALLEL_JACOBIAN = np.array([[1.0, 0.0], [-1.0, 1.0], [0.0, -1.0]])

LEFT = "left"
RIGHT = "right"


class KinematicsError(ValueError):
    pass


class JointLimitError(KinematicsError):
    """A coordinate left its configured range; names the offender."""

    def __init__(self, joint, value, lo, hi):
        self.joint = joint
        self.value = value
        super().__init__(f"{joint}={value:.4f} rad outside [{lo:.3f}, {hi:.3f}]")


@dataclass(frozen=True)
class JointLimits:
    thigh: tuple = (-2.0, 2.0)
    shank: tuple = (-2.4, 2.4)
    hip_yaw: tuple = (-1.2, 1.2)
    hip_roll: tuple = (-1.2, 1.2)

    def check(self, name, lo_hi, value):
        lo, hi = lo_hi
        if not (lo <= value <= hi):
            raise JointLimitError(name, value, lo, hi)


@dataclass(frozen=True)
class ParallelCoords:
    """Actuated sagittal pair: absolute thigh and shank pitch."""

    q_th: float
    q_sh: float

    @property
    def ankle(self):
        """Implied passive ankle pitch (foot locked parallel to torso)."""
        return -self.q_sh


@dataclass(frozen=True)
class SagittalJoints:
    q_h: float
    q_k: float
    q_a: float


@dataclass(frozen=True)
class LegConfiguration:
    """One leg: hip yaw/roll plus the actuated parallelogram pair.

    The three hip axes intersect at the hip origin, so the composition is
    a pure rotation (yaw about z, then roll about x, then pitch).
    """

    hip_yaw: float
    hip_roll: float
    parallel: ParallelCoords

    @staticmethod
    def from_angles(hip_yaw, hip_roll, q_th, q_sh):
        return LegConfiguration(hip_yaw, hip_roll, ParallelCoords(q_th, q_sh))


@dataclass(frozen=True)
class RobotPose:
    """Whole-robot actuated configuration (10 motors)."""

    left: LegConfiguration
    right: LegConfiguration
    left_arm: float = 0.0
    right_arm: float = 0.0

    @staticmethod
    def neutral():
        zero = LegConfiguration.from_angles(0.0, 0.0, 0.0, 0.0)
        return RobotPose(zero, zero)


@dataclass
class RobotModel:
    """Geometric and mass parameters of the biped.

    Lengths/masses carrying paper-backed defaults: total mass 14.5 kg, leg
    mass 3.51 kg with its center 0.16 m from the hip along the thigh, leg
    length 0.620 m.  Link split, hip width, foot length and the upper-body
    geometry are plausible invented defaults (marked in the config file).
    """

    thigh_length: float = 0.310
    shank_length: float = 0.310
    hip_width: float = 0.17
    foot_length: float = 0.16
    torso_mass: float = 6.48
    leg_mass: float = 3.51
    leg_com_offset: float = 0.16
    arm_mass: float = 0.5
    total_mass: float = 14.5
    torso_com: tuple = (0.0, 0.0, 0.20)
    shoulder_height: float = 0.30
    shoulder_width: float = 0.28
    arm_com_offset: float = 0.12
    limits: JointLimits = field(default_factory=JointLimits)

    def __post_init__(self):
        parts = self.torso_mass + 2.0 * self.leg_mass + 2.0 * self.arm_mass
        if abs(parts - self.total_mass) > 1e-9:
            raise ValueError(
                f"part masses sum to {parts:.9f} kg, expected {self.total_mass} kg"
            )
        for name in ("thigh_length", "shank_length", "hip_width", "total_mass"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def leg_length(self):
        return self.thigh_length + self.shank_length

    def hip_origin(self, side):
        sign = 1.0 if side == LEFT else -1.0
        return np.array([0.0, sign * 0.5 * self.hip_width, 0.0])

    def shoulder_origin(self, side):
        sign = 1.0 if side == LEFT else -1.0
        return np.array([0.0, sign * 0.5 * self.shoulder_width, self.shoulder_height])


def parallel_to_serial(p: ParallelCoords) -> SagittalJoints:
    """Serial joint angles driven by the actuated pair."""
    return SagittalJoints(q_h=p.q_th, q_k=p.q_sh - p.q_th, q_a=-p.q_sh)


def serial_to_parallel(q_h, q_k, limits: JointLimits | None = None) -> ParallelCoords:
    """Inverse of parallel_to_serial on the actuated coordinates.

    The implied ankle is available as the returned pair's ``ankle``
    property.  Raises JointLimitError if the resulting drive angles leave
    their range.
    """
    p = ParallelCoords(q_th=q_h, q_sh=q_h + q_k)
    if limits is not None:
        limits.check("q_th", limits.thigh, p.q_th)
        limits.check("q_sh", limits.shank, p.q_sh)
    return p


def map_rates(qd_th, qd_sh):
    """Serial joint rates (hip, knee, ankle) from actuated rates."""
    return (qd_th, qd_sh - qd_th, -qd_sh)


def map_torques(tau_th, tau_sh):
    """Serial joint torques delivered by the actuated pair; the knee share
    is tau_sh - tau_th."""
    return (tau_th, tau_sh - tau_th, -tau_sh)


def pullback_torques(tau_h, tau_k, tau_a):
    """Actuated torques statically equivalent to serial joint loads.

    Transpose of the rate map, so for any serial load g and actuated rates
    qd the adjoint identity pullback(g) . qd == g . map_rates(qd) holds
    exactly (virtual-work duality).
    """
    return (tau_h - tau_k, tau_k - tau_a)


def _segment_dir(pitch):
    # Unit vector of a leg segment in its pitch plane; hangs along -z at 0.
    return np.array([math.sin(pitch), 0.0, -math.cos(pitch)])


def _hip_rotation(leg: LegConfiguration):
    cy, sy = math.cos(leg.hip_yaw), math.sin(leg.hip_yaw)
    cr, sr = math.cos(leg.hip_roll), math.sin(leg.hip_roll)
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ rx, rz


@dataclass(frozen=True)
class FootPose:
    position: np.ndarray
    pitch: float


def leg_fk(leg: LegConfiguration, m: RobotModel, side=LEFT) -> FootPose:
    """Ankle/foot origin in the torso frame.

    Foot pitch relative to torso is the serial chain sum q_h + q_k + q_a,
    identically zero by the parallelogram constraint.
    """
    p = leg.parallel
    local = m.thigh_length * _segment_dir(p.q_th) + m.shank_length * _segment_dir(p.q_sh)
    rot, _ = _hip_rotation(leg)
    position = m.hip_origin(side) + rot @ local
    s = parallel_to_serial(p)
    return FootPose(position=position, pitch=s.q_h + s.q_k + s.q_a)


def _pitch_tangent(pitch):
    return np.array([math.cos(pitch), 0.0, math.sin(pitch)])


def foot_jacobian(leg: LegConfiguration, m: RobotModel) -> np.ndarray:
    """3x2 position Jacobian wrt the actuated pair (q_th, q_sh)."""
    rot, _ = _hip_rotation(leg)
    p = leg.parallel
    col_th = rot @ (m.thigh_length * _pitch_tangent(p.q_th))
    col_sh = rot @ (m.shank_length * _pitch_tangent(p.q_sh))
    return np.column_stack([col_th, col_sh])


def foot_jacobian_full(leg: LegConfiguration, m: RobotModel, side=LEFT) -> np.ndarray:
    """3x4 position Jacobian wrt (hip_yaw, hip_roll, q_th, q_sh)."""
    rot, rz = _hip_rotation(leg)
    p = leg.parallel
    local = m.thigh_length * _segment_dir(p.q_th) + m.shank_length * _segment_dir(p.q_sh)
    rel = rot @ local  # foot relative to hip origin
    yaw_axis = np.array([0.0, 0.0, 1.0])
    roll_axis = rz @ np.array([1.0, 0.0, 0.0])
    col_yaw = np.cross(yaw_axis, rel)
    col_roll = np.cross(roll_axis, rel)
    col_th = rot @ (m.thigh_length * _pitch_tangent(p.q_th))
    col_sh = rot @ (m.shank_length * _pitch_tangent(p.q_sh))
    return np.column_stack([col_yaw, col_roll, col_th, col_sh])


def leg_com(leg: LegConfiguration, m: RobotModel, side=LEFT) -> np.ndarray:
    """Lumped leg mass location: leg_com_offset along the thigh direction."""
    rot, _ = _hip_rotation(leg)
    return m.hip_origin(side) + rot @ (m.leg_com_offset * _segment_dir(leg.parallel.q_th))


def arm_com(arm_pitch, m: RobotModel, side=LEFT) -> np.ndarray:
    return m.shoulder_origin(side) + m.arm_com_offset * _segment_dir(arm_pitch)


def robot_com(pose: RobotPose, m: RobotModel) -> np.ndarray:
    """Mass-weighted CoM in the torso frame (torso + leg lumps + arms)."""
    total = (
        m.torso_mass * np.asarray(m.torso_com, dtype=float)
        + m.leg_mass * leg_com(pose.left, m, LEFT)
        + m.leg_mass * leg_com(pose.right, m, RIGHT)
        + m.arm_mass * arm_com(pose.left_arm, m, LEFT)
        + m.arm_mass * arm_com(pose.right_arm, m, RIGHT)
    )
    return total / m.total_mass


def leg_ik(target, m: RobotModel, side=LEFT):
    """Leg angles that put the foot origin at ``target`` (torso frame).

    Hip yaw is taken as zero (steering is commanded separately); hip roll
    aligns the leg plane with the target, then the sagittal two-link chain
    is solved in closed form on the forward-knee branch with the foot below
    the hip.  Out-of-workspace targets are projected onto the reachable
    boundary and flagged.

    Returns (LegConfiguration, clamped).
    """
    rel = np.asarray(target, dtype=float) - m.hip_origin(side)
    clamped = False
    # Roll rotates the (y, z) components into the sagittal plane.
    if abs(rel[1]) < 1e-12 and abs(rel[2]) < 1e-12:
        roll = 0.0
    else:
        roll = math.atan2(rel[1], -rel[2])
    planar_x = rel[0]
    planar_down = math.hypot(rel[1], rel[2])  # distance along the rolled -z axis
    r = math.hypot(planar_x, planar_down)
    r_max = (m.thigh_length + m.shank_length) * (1.0 - 1e-9)
    r_min = 0.02
    if r > r_max:
        scale = r_max / r
        planar_x *= scale
        planar_down *= scale
        r = r_max
        clamped = True
    elif r < r_min:
        if r < 1e-12:
            planar_down = r_min
        else:
            scale = r_min / r
            planar_x *= scale
            planar_down *= scale
        r = r_min
        clamped = True
    # Absolute segment pitches from sum/difference form (equal or unequal
    # link lengths both reduce to mean +/- half-knee for this chain).
    mean = math.atan2(planar_x, planar_down)
    # Law of cosines for the knee opening.
    lt, ls = m.thigh_length, m.shank_length
    cos_knee = (lt * lt + ls * ls - r * r) / (2.0 * lt * ls)
    cos_knee = max(-1.0, min(1.0, cos_knee))
    knee_interior = math.acos(cos_knee)  # pi = straight
    q_k = math.pi - knee_interior  # 0 = straight, positive = flexed
    # Split the knee between segments so the chord points at the target.
    alpha = math.atan2(ls * math.sin(q_k), lt + ls * math.cos(q_k))
    q_th = mean - alpha
    q_sh = q_th + q_k
    return LegConfiguration(0.0, roll, ParallelCoords(q_th, q_sh)), clamped
