"""6-RUS mechanism description: per-leg geometry, proximal joint kinematics,
platform attachment, and the 42-component guess/residual vector layouts.

Each leg is a motor-driven crank (revolute), a universal joint, an elastic
rod, and a spherical joint at the platform.  The crank tip in the motor
frame is [0, l1 cos(q1), l1 sin(q1)]; the rod base orientation is
R_motor @ Rx(q2) @ Ry(q3) with (q2, q3) the universal-joint angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom3 import Pose, Rot3, Vec3, rot_x, rot_y, rot_z, rpy_to_rotation
from .rod import CrossSection, Material, RodParams

N_LEGS = 6
N_UNKNOWNS = 42

# Reference platform height of the unloaded pre-curved assembly; used as the
# default target/guess height throughout the analysis drivers.
DEFAULT_REST_HEIGHT = 0.4


class LayoutMismatch(ValueError):
    """Guess-vector contents inconsistent with the declared IK/FK layout."""


@dataclass(frozen=True)
class LegConfig:
    motor_position: Vec3          # world frame, m
    motor_orientation: Rot3       # world frame
    crank_length: float           # m
    ee_attachment: Vec3           # platform frame, m
    rod: RodParams

    def __post_init__(self):
        if self.crank_length <= 0.0:
            raise ValueError("crank_length must be positive")
        object.__setattr__(self, "motor_position",
                           np.asarray(self.motor_position, dtype=float))
        object.__setattr__(self, "motor_orientation",
                           np.asarray(self.motor_orientation, dtype=float))
        object.__setattr__(self, "ee_attachment",
                           np.asarray(self.ee_attachment, dtype=float))


@dataclass(frozen=True)
class MechanismConfig:
    legs: tuple[LegConfig, ...]
    gravity: Vec3
    ee_mass: float = 0.0
    motor_limits: tuple[float, float] = (math.radians(-20.0), math.radians(90.0))

    def __post_init__(self):
        if len(self.legs) != N_LEGS:
            raise ValueError(f"exactly {N_LEGS} legs required, got {len(self.legs)}")
        if not self.motor_limits[0] < self.motor_limits[1]:
            raise ValueError("motor_limits must satisfy min < max")
        object.__setattr__(self, "legs", tuple(self.legs))
        object.__setattr__(self, "gravity", np.asarray(self.gravity, dtype=float))


@dataclass(frozen=True)
class EEPose:
    """Platform pose: position plus extrinsic X-Y-Z (roll, pitch, yaw)."""

    position: Vec3
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))

    def rotation(self) -> Rot3:
        return rpy_to_rotation(self.roll, self.pitch, self.yaw)


@dataclass(frozen=True)
class Wrench:
    force: Vec3
    moment: Vec3

    def __post_init__(self):
        object.__setattr__(self, "force", np.asarray(self.force, dtype=float))
        object.__setattr__(self, "moment", np.asarray(self.moment, dtype=float))

    @staticmethod
    def zero() -> "Wrench":
        return Wrench(np.zeros(3), np.zeros(3))


# --- guess-vector layouts ---------------------------------------------------
#
# IK, leg-major, 7 per leg:  [nx, ny, nz, mz, q1, q2, q3] x 6
# FK, leg-major, 6 per leg:  [nx, ny, nz, mz, q2, q3] x 6, then
#                            [pe_x, pe_y, pe_z, roll, pitch, yaw]

IK_PER_LEG = 7
FK_PER_LEG = 6


@dataclass(frozen=True)
class GuessVector:
    mode: str                 # "ik" or "fk"
    values: np.ndarray        # shape (42,)

    def __post_init__(self):
        if self.mode not in ("ik", "fk"):
            raise LayoutMismatch(f"unknown mode {self.mode!r}")
        values = np.asarray(self.values, dtype=float)
        if values.shape != (N_UNKNOWNS,):
            raise LayoutMismatch(f"expected {N_UNKNOWNS} unknowns, got {values.shape}")
        object.__setattr__(self, "values", values)


@dataclass
class IkUnknowns:
    base_forces: np.ndarray       # (6, 3) world-frame n(0)
    base_torsions: np.ndarray     # (6,) local-z moment m_z(0)
    motor_angles: np.ndarray      # (6,) q1
    u_joint_angles: np.ndarray    # (6, 2) q2, q3


@dataclass
class FkUnknowns:
    base_forces: np.ndarray
    base_torsions: np.ndarray
    u_joint_angles: np.ndarray
    ee_position: np.ndarray       # (3,)
    ee_rpy: np.ndarray            # (3,) roll, pitch, yaw


def pack_guess(unknowns: IkUnknowns | FkUnknowns) -> GuessVector:
    values = np.empty(N_UNKNOWNS)
    if isinstance(unknowns, IkUnknowns):
        for i in range(N_LEGS):
            base = IK_PER_LEG * i
            values[base:base + 3] = unknowns.base_forces[i]
            values[base + 3] = unknowns.base_torsions[i]
            values[base + 4] = unknowns.motor_angles[i]
            values[base + 5:base + 7] = unknowns.u_joint_angles[i]
        return GuessVector("ik", values)
    if isinstance(unknowns, FkUnknowns):
        for i in range(N_LEGS):
            base = FK_PER_LEG * i
            values[base:base + 3] = unknowns.base_forces[i]
            values[base + 3] = unknowns.base_torsions[i]
            values[base + 4:base + 6] = unknowns.u_joint_angles[i]
        values[36:39] = unknowns.ee_position
        values[39:42] = unknowns.ee_rpy
        return GuessVector("fk", values)
    raise LayoutMismatch(f"cannot pack {type(unknowns).__name__}")


def unpack_guess(guess: GuessVector) -> IkUnknowns | FkUnknowns:
    values = guess.values
    if guess.mode == "ik":
        forces = np.empty((N_LEGS, 3))
        torsions = np.empty(N_LEGS)
        motors = np.empty(N_LEGS)
        u_joints = np.empty((N_LEGS, 2))
        for i in range(N_LEGS):
            base = IK_PER_LEG * i
            forces[i] = values[base:base + 3]
            torsions[i] = values[base + 3]
            motors[i] = values[base + 4]
            u_joints[i] = values[base + 5:base + 7]
        return IkUnknowns(forces, torsions, motors, u_joints)
    forces = np.empty((N_LEGS, 3))
    torsions = np.empty(N_LEGS)
    u_joints = np.empty((N_LEGS, 2))
    for i in range(N_LEGS):
        base = FK_PER_LEG * i
        forces[i] = values[base:base + 3]
        torsions[i] = values[base + 3]
        u_joints[i] = values[base + 4:base + 6]
    return FkUnknowns(forces, torsions, u_joints,
                      values[36:39].copy(), values[39:42].copy())


# --- residual layout ---------------------------------------------------------
# [force balance (3), moment balance (3), tip position x6 (18), tip moment x6 (18)]

RES_FORCE = slice(0, 3)
RES_MOMENT = slice(3, 6)


def res_tip_position(leg: int) -> slice:
    return slice(6 + 3 * leg, 9 + 3 * leg)


def res_tip_moment(leg: int) -> slice:
    return slice(24 + 3 * leg, 27 + 3 * leg)


# --- joint kinematics ---------------------------------------------------------

def proximal_pose(leg: LegConfig, q1: float, q2: float, q3: float) -> Pose:
    """Pose of the rod base (universal-joint output) in the world frame."""
    crank = np.array([0.0,
                      leg.crank_length * math.cos(q1),
                      leg.crank_length * math.sin(q1)])
    position = leg.motor_position + leg.motor_orientation @ crank
    rotation = leg.motor_orientation @ rot_x(q2) @ rot_y(q3)
    return Pose(rotation, position)


def ee_attachment_point(pose: EEPose, attachment: Vec3) -> Vec3:
    """World position of a platform attachment point."""
    return pose.position + pose.rotation() @ np.asarray(attachment, dtype=float)


# --- default geometry ----------------------------------------------------------

def default_rod(gravity=(0.0, 0.0, -9.81)) -> RodParams:
    """Ti6Al-4V rod, 4 mm diameter, 530 mm long, pre-curved at radius 0.3005 m."""
    return RodParams(
        length=0.53,
        section=CrossSection(diameter=0.004),
        material=Material(youngs_modulus=110.3e9, poisson_ratio=0.31,
                          density=4428.8),
        v_star=np.array([0.0, 0.0, 1.0]),
        u_star=np.array([1.0 / 0.3005, 0.0, 0.0]),
        gravity=np.asarray(gravity, dtype=float),
    )


def default_geometry(base_radius: float = 0.35,
                     ee_radius: float = 0.15,
                     crank_length: float = 0.12,
                     pair_half_angle_base: float = math.radians(10.0),
                     pair_half_angle_ee: float = math.radians(25.0),
                     gravity=(0.0, 0.0, -9.81),
                     ee_mass: float = 0.0) -> MechanismConfig:
    """Symmetric six-leg layout: three mirror pairs at 120 deg spacing.

    Motors sit on a base circle with the motor-frame y-axis pointing
    radially outward and z up, so a crank at q1=0 extends outward and the
    rod's natural bend (about the local x-axis) sweeps it inward toward
    the platform.  Defaults place the unloaded assembly at the reference
    height with cranks near 28 deg, comfortably inside the motor limits.
    """
    gravity = np.asarray(gravity, dtype=float)
    rod = default_rod(gravity)
    legs = []
    for pair in range(3):
        meridian = math.radians(90.0 + 120.0 * pair)
        for sign in (+1.0, -1.0):
            azimuth_base = meridian + sign * pair_half_angle_base
            azimuth_ee = meridian + sign * pair_half_angle_ee
            motor_position = rot_z(azimuth_base) @ np.array([base_radius, 0.0, 0.0])
            motor_orientation = rot_z(azimuth_base - math.pi / 2.0)
            attachment = rot_z(azimuth_ee) @ np.array([ee_radius, 0.0, 0.0])
            legs.append(LegConfig(
                motor_position=motor_position,
                motor_orientation=motor_orientation,
                crank_length=crank_length,
                ee_attachment=attachment,
                rod=rod,
            ))
    return MechanismConfig(legs=tuple(legs), gravity=gravity, ee_mass=ee_mass)
