"""Minimal 3D rotation/transform toolkit used by the rod and mechanism models.

Vectors are plain float64 numpy arrays of shape (3,), rotations are (3, 3)
orthonormal matrices with determinant +1.  Roll-pitch-yaw follows the
extrinsic X-Y-Z convention, R = Rz(yaw) @ Ry(pitch) @ Rx(roll).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Type aliases: shape (3,) and (3, 3) float64 arrays.
Vec3 = np.ndarray
Rot3 = np.ndarray

ROTATION_TOL = 1e-9
GIMBAL_COS_THRESHOLD = 1e-6


class NonSkewInput(ValueError):
    """Matrix handed to vee() is not skew-symmetric within tolerance."""


class GimbalLock(ValueError):
    """Pitch magnitude too close to 90 deg for a unique roll/yaw split."""


def hat(u: Vec3) -> np.ndarray:
    """Skew-symmetric matrix of u, so that hat(u) @ w == cross(u, w)."""
    return np.array([
        [0.0, -u[2], u[1]],
        [u[2], 0.0, -u[0]],
        [-u[1], u[0], 0.0],
    ])


def vee(skew: np.ndarray, tol: float = 1e-12) -> Vec3:
    """Inverse of hat(); raises NonSkewInput if S + S.T exceeds tol."""
    asym = np.max(np.abs(skew + skew.T))
    if asym > tol:
        raise NonSkewInput(f"skew-symmetry violated by {asym:.3e} (tol {tol:.1e})")
    return np.array([skew[2, 1], skew[0, 2], skew[1, 0]])


def rot_x(angle: float) -> Rot3:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> Rot3:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> Rot3:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rpy_to_rotation(roll: float, pitch: float, yaw: float) -> Rot3:
    """Rotation matrix Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def rotation_to_rpy(rotation: Rot3) -> tuple[float, float, float]:
    """Extract (roll, pitch, yaw) with R = Rz(yaw) @ Ry(pitch) @ Rx(roll).

    Raises GimbalLock when cos(pitch) falls below the threshold; the
    mechanism never operates near +/-90 deg pitch.
    """
    sin_pitch = -rotation[2, 0]
    cos_pitch = math.sqrt(rotation[2, 1] ** 2 + rotation[2, 2] ** 2)
    if cos_pitch < GIMBAL_COS_THRESHOLD:
        raise GimbalLock(f"cos(pitch) = {cos_pitch:.3e} below {GIMBAL_COS_THRESHOLD:.1e}")
    pitch = math.atan2(sin_pitch, cos_pitch)
    roll = math.atan2(rotation[2, 1], rotation[2, 2])
    yaw = math.atan2(rotation[1, 0], rotation[0, 0])
    return roll, pitch, yaw


def rotation_defect(rotation: Rot3) -> float:
    """Frobenius norm of R.T @ R - I (orthonormality drift measure)."""
    return float(np.linalg.norm(rotation.T @ rotation - np.eye(3)))


def is_rotation(rotation: Rot3, tol: float = ROTATION_TOL) -> bool:
    return rotation_defect(rotation) <= tol and abs(np.linalg.det(rotation) - 1.0) <= tol


@dataclass(frozen=True)
class Pose:
    """Rigid transform: world-frame rotation plus translation."""

    rotation: Rot3
    position: Vec3

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    def compose(self, other: "Pose") -> "Pose":
        return Pose(self.rotation @ other.rotation,
                    self.position + self.rotation @ other.position)

    def inverse(self) -> "Pose":
        rot_t = self.rotation.T
        return Pose(rot_t.copy(), -(rot_t @ self.position))

    def transform_point(self, point: Vec3) -> Vec3:
        return self.position + self.rotation @ point
