"""Batch experiment drivers: axial-stiffness sweep, platform yaw sweep,
trajectory following, and reachable-workspace sampling.

Sweeps chain warm starts from the previous converged sample; workspace
points are solved cold from the deterministic per-pose guess so that
acceptance never depends on sample order and points can be distributed
across workers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .mechanism import (DEFAULT_REST_HEIGHT, N_LEGS, EEPose, GuessVector,
                        MechanismConfig, Wrench)
from .shooting import SolveResult, SolverConfig, solve_fk, solve_ik


@dataclass
class SweepRecord:
    """One sample of a parameter sweep."""

    parameter: float
    converged: bool
    residual_norm: float
    ee_height: float
    motor_angles: np.ndarray
    wall_time: float
    status: str = "converged"


@dataclass
class StiffnessResult:
    records: list[SweepRecord]
    stiffness: float            # N/m; nan when undefined
    stiffness_defined: bool
    max_force: float            # largest force with both solves converged; 0 if none
    r_squared: float
    rest_height: float
    rest_motor_angles: np.ndarray


@dataclass
class Trajectory:
    poses: list[EEPose]
    wrench: Wrench

    def __post_init__(self):
        if len(self.poses) < 2:
            raise ValueError("trajectory needs at least two samples")


@dataclass
class TrajectoryRecord:
    index: int
    reference: np.ndarray
    fk_position: np.ndarray
    error: float
    ik_converged: bool
    fk_converged: bool
    residual_norm: float
    wall_time: float


@dataclass
class TrajectoryResult:
    records: list[TrajectoryRecord]
    errors: np.ndarray          # nan where a solve failed
    max_error: float
    fraction_converged: float


@dataclass(frozen=True)
class CylinderGrid:
    """Deterministic n_r x n_theta x n_z sampling grid of a cylinder, plus
    one axis point per height."""

    center: np.ndarray
    radius: float
    z_min: float
    z_max: float
    n_r: int = 2
    n_theta: int = 6
    n_z: int = 3

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.radius <= 0 or self.n_r < 1 or self.n_theta < 1 or self.n_z < 1:
            raise ValueError("cylinder grid parameters must be positive")
        if not self.z_min < self.z_max:
            raise ValueError("z_min must be below z_max")

    def points(self) -> np.ndarray:
        pts = []
        for z in np.linspace(self.z_min, self.z_max, self.n_z):
            pts.append([self.center[0], self.center[1], z])
            for r in np.linspace(self.radius / self.n_r, self.radius, self.n_r):
                for k in range(self.n_theta):
                    theta = 2.0 * math.pi * k / self.n_theta
                    pts.append([self.center[0] + r * math.cos(theta),
                                self.center[1] + r * math.sin(theta), z])
        return np.array(pts)


@dataclass
class AtlasPoint:
    position: np.ndarray
    converged: bool
    accepted: bool
    motor_angles: np.ndarray
    residual_norm: float
    wall_time: float


@dataclass
class WorkspaceAtlas:
    grid: CylinderGrid
    points: list[AtlasPoint]
    motor_limits: tuple[float, float]

    @property
    def acceptance_fraction(self) -> float:
        if not self.points:
            return 0.0
        return sum(p.accepted for p in self.points) / len(self.points)

    def motor_ranges_by_height(self) -> list[tuple[float, np.ndarray, np.ndarray, int]]:
        """Per sampled height: (z, per-leg q1 min, per-leg q1 max, n accepted)."""
        heights = sorted({round(float(p.position[2]), 12) for p in self.points})
        out = []
        for z in heights:
            angles = np.array([p.motor_angles for p in self.points
                               if round(float(p.position[2]), 12) == z and p.accepted])
            if angles.size:
                out.append((z, angles.min(axis=0), angles.max(axis=0), len(angles)))
            else:
                out.append((z, np.full(N_LEGS, np.nan), np.full(N_LEGS, np.nan), 0))
        return out


def _record_from(parameter: float, result: SolveResult, wall: float,
                 height: float | None = None) -> SweepRecord:
    if height is None:
        height = float(result.ee_pose.position[2])
    return SweepRecord(
        parameter=float(parameter),
        converged=result.converged,
        residual_norm=result.residual_norm,
        ee_height=height,
        motor_angles=result.motor_angles.copy(),
        wall_time=wall,
        status=result.status,
    )


def axial_stiffness_sweep(forces, mech: MechanismConfig,
                          cfg: SolverConfig | None = None,
                          rest_height: float = DEFAULT_REST_HEIGHT) -> StiffnessResult:
    """Compression response at the platform center.

    Per force f (ascending): the IK model re-solves the commanded rest pose
    under [0, 0, -f] (checking the force can be held within motor limits),
    and the FK model re-solves the rest motor angles under the same load,
    yielding the platform drop that defines the axial stiffness.  Both
    chains are warm-started; the sweep stops at the first sample where
    either solve fails.  Stiffness is the least-squares slope of force
    versus height drop over converged samples.
    """
    if cfg is None:
        cfg = SolverConfig()
    forces = [float(f) for f in forces]
    if any(f < 0 for f in forces) or sorted(forces) != forces:
        raise ValueError("forces must be non-negative and ascending")
    pose = EEPose(np.array([0.0, 0.0, rest_height]))
    rest = solve_ik(pose, Wrench.zero(), mech, cfg)
    if not rest.converged:
        raise RuntimeError(f"rest-pose IK failed: {rest.status}")

    records: list[SweepRecord] = []
    warm_ik: GuessVector | None = rest.guess
    warm_fk: GuessVector | None = None
    for force in forces:
        start = time.perf_counter()
        if force == 0.0:
            records.append(_record_from(0.0, rest, time.perf_counter() - start,
                                        height=rest_height))
            continue
        wrench = Wrench(np.array([0.0, 0.0, -force]), np.zeros(3))
        ik = solve_ik(pose, wrench, mech, cfg, warm_start=warm_ik)
        fk = solve_fk(rest.motor_angles, wrench, mech, cfg, warm_start=warm_fk)
        wall = time.perf_counter() - start
        converged = ik.converged and fk.converged
        record = SweepRecord(
            parameter=force,
            converged=converged,
            residual_norm=max(ik.residual_norm, fk.residual_norm),
            ee_height=float(fk.ee_pose.position[2]) if fk.converged else math.nan,
            motor_angles=ik.motor_angles.copy(),
            wall_time=wall,
            status="converged" if converged else f"ik:{ik.status};fk:{fk.status}",
        )
        records.append(record)
        if not converged:
            break
        warm_ik, warm_fk = ik.guess, fk.guess

    good = [(r.parameter, rest_height - r.ee_height) for r in records
            if r.converged and r.parameter > 0.0]
    if len(good) >= 2 and max(d for _, d in good) > 0.0:
        force_arr = np.array([f for f, _ in good])
        drop_arr = np.array([d for _, d in good])
        slope, intercept = np.polyfit(drop_arr, force_arr, 1)
        fit = slope * drop_arr + intercept
        ss_res = float(np.sum((force_arr - fit) ** 2))
        ss_tot = float(np.sum((force_arr - force_arr.mean()) ** 2))
        stiffness = float(slope)
        r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
        defined = True
    else:
        stiffness, r_squared, defined = math.nan, math.nan, False
    max_force = max((r.parameter for r in records if r.converged), default=0.0)
    return StiffnessResult(records, stiffness, defined, max_force, r_squared,
                           rest_height, rest.motor_angles.copy())


def rotation_sweep(yaw_values, mech: MechanismConfig,
                   cfg: SolverConfig | None = None,
                   rest_height: float = DEFAULT_REST_HEIGHT) -> list[SweepRecord]:
    """IK solutions for platform yaw rotations at the rest height, zero
    wrench, warm-start chained in input order."""
    if cfg is None:
        cfg = SolverConfig()
    records = []
    warm: GuessVector | None = None
    for yaw in yaw_values:
        pose = EEPose(np.array([0.0, 0.0, rest_height]), yaw=float(yaw))
        start = time.perf_counter()
        result = solve_ik(pose, Wrench.zero(), mech, cfg, warm_start=warm)
        records.append(_record_from(yaw, result, time.perf_counter() - start))
        if result.converged:
            warm = result.guess
    return records


def helix_trajectory(radius: float = 0.03, pitch: float = 0.02,
                     turns: float = 2.0, samples: int = 40,
                     center_height: float = DEFAULT_REST_HEIGHT,
                     load: float = 5.0) -> Trajectory:
    """Reference helix centered on the rest pose, traversed bottom-up,
    under a constant downward load (N)."""
    z_span = pitch * turns
    poses = []
    for k in range(samples):
        t = k / (samples - 1)
        angle = 2.0 * math.pi * turns * t
        poses.append(EEPose(np.array([
            radius * math.cos(angle),
            radius * math.sin(angle),
            center_height - z_span / 2.0 + z_span * t,
        ])))
    return Trajectory(poses, Wrench(np.array([0.0, 0.0, -load]), np.zeros(3)))


def follow_trajectory(traj: Trajectory, mech: MechanismConfig,
                      cfg: SolverConfig | None = None) -> TrajectoryResult:
    """IK -> FK round trip along a pose trajectory.

    Per sample the IK model produces motor angles for the commanded pose,
    then the FK model re-derives the pose from those angles; the recorded
    error is the Euclidean gap between the FK position and the reference.
    Both solver chains warm-start from the previous sample.
    """
    if cfg is None:
        cfg = SolverConfig()
    records = []
    warm_ik: GuessVector | None = None
    warm_fk: GuessVector | None = None
    for k, pose in enumerate(traj.poses):
        start = time.perf_counter()
        ik = solve_ik(pose, traj.wrench, mech, cfg, warm_start=warm_ik)
        if ik.converged:
            warm_ik = ik.guess
            fk = solve_fk(ik.motor_angles, traj.wrench, mech, cfg, warm_start=warm_fk)
            if fk.converged:
                warm_fk = fk.guess
            fk_position = fk.ee_pose.position.copy()
            error = float(np.linalg.norm(fk_position - pose.position))
            fk_ok = fk.converged
            residual = max(ik.residual_norm, fk.residual_norm)
        else:
            fk_position = np.full(3, np.nan)
            error = math.nan
            fk_ok = False
            residual = ik.residual_norm
        records.append(TrajectoryRecord(
            index=k, reference=pose.position.copy(), fk_position=fk_position,
            error=error, ik_converged=ik.converged, fk_converged=fk_ok,
            residual_norm=residual, wall_time=time.perf_counter() - start))
    errors = np.array([r.error for r in records])
    finite = errors[np.isfinite(errors)]
    n_ok = sum(r.ik_converged and r.fk_converged for r in records)
    return TrajectoryResult(
        records=records,
        errors=errors,
        max_error=float(finite.max()) if finite.size else math.nan,
        fraction_converged=n_ok / len(records),
    )


def solve_workspace_point(position, mech: MechanismConfig,
                          cfg: SolverConfig | None = None) -> AtlasPoint:
    """Cold IK solve of one workspace sample; accepted requires convergence
    within tolerance and motor angles inside the limits."""
    if cfg is None:
        cfg = SolverConfig()
    position = np.asarray(position, dtype=float)
    start = time.perf_counter()
    result = solve_ik(EEPose(position), Wrench.zero(), mech, cfg)
    return AtlasPoint(
        position=position,
        converged=result.status in ("converged", "limit_violation"),
        accepted=result.converged,
        motor_angles=result.motor_angles.copy(),
        residual_norm=result.residual_norm,
        wall_time=time.perf_counter() - start,
    )


def workspace_sample(grid: CylinderGrid, mech: MechanismConfig,
                     cfg: SolverConfig | None = None,
                     executor_map=None) -> WorkspaceAtlas:
    """Reachable-workspace atlas over a cylindrical grid.

    Every point is solved cold so acceptance is independent of sample
    order; `executor_map` may supply a parallel map (results keep grid
    order either way).
    """
    if cfg is None:
        cfg = SolverConfig()
    points = grid.points()
    if executor_map is None:
        atlas_points = [solve_workspace_point(p, mech, cfg) for p in points]
    else:
        atlas_points = list(executor_map(points))
    return WorkspaceAtlas(grid=grid, points=atlas_points,
                          motor_limits=mech.motor_limits)
