"""Command-line front end: config loading, the six subcommands, and
bit-stable CSV/JSON emission for downstream plotting and tests.

Config files are YAML with a fixed key tree (unknown keys are rejected).
Lengths and forces are SI; angles are degrees in files and on the command
line, radians inside the library.  CSV floats carry 17 significant digits
so round-trips are lossless.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .analysis import (CylinderGrid, Trajectory, axial_stiffness_sweep,
                       follow_trajectory, helix_trajectory, rotation_sweep,
                       solve_workspace_point, workspace_sample)
from .mechanism import (DEFAULT_REST_HEIGHT, EEPose, LegConfig,
                        MechanismConfig, Wrench, default_geometry)
from .rod import CrossSection, IntegratorConfig, Material, RodParams
from .shooting import SolveResult, SolverConfig, solve_fk, solve_ik

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_CONVERGENCE = 2
EXIT_NO_SAMPLES = 3


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass
class TrajectorySpec:
    radius: float = 0.03
    pitch: float = 0.02
    turns: float = 2.0
    samples: int = 40
    load: float = 5.0


@dataclass
class RunConfig:
    mechanism: MechanismConfig
    solver: SolverConfig
    rest_height: float
    stiffness_forces: list[float]
    rotation_yaws: list[float]          # radians
    trajectory: TrajectorySpec
    workspace: CylinderGrid


def default_run_config() -> RunConfig:
    return RunConfig(
        mechanism=default_geometry(),
        solver=SolverConfig(),
        rest_height=DEFAULT_REST_HEIGHT,
        stiffness_forces=[float(f) for f in range(10, 301, 10)],
        rotation_yaws=[math.radians(d) for d in range(0, 91, 5)],
        trajectory=TrajectorySpec(),
        workspace=CylinderGrid(center=np.array([0.0, 0.0, DEFAULT_REST_HEIGHT]),
                               radius=0.08, z_min=0.34, z_max=0.44,
                               n_r=2, n_theta=6, n_z=3),
    )


# --- strict nested-dict (de)serialization ------------------------------------

def _require_mapping(node, path):
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return node


def _take(node: dict, key: str, path: str, default=None, required=False):
    if key in node:
        return node.pop(key)
    if required:
        raise ConfigError(f"{path}: missing required key '{key}'")
    return default


def _reject_unknown(node: dict, path: str):
    if node:
        raise ConfigError(f"{path}: unknown keys {sorted(node)}")


def _vector(value, path, length):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{path}: not numeric ({err})") from None
    if arr.shape != (length,):
        raise ConfigError(f"{path}: expected {length} numbers")
    return arr


def _matrix3(value, path):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{path}: not numeric ({err})") from None
    if arr.shape != (3, 3):
        raise ConfigError(f"{path}: expected a 3x3 matrix")
    return arr


def _float(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    return float(value)


def _int(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer")
    return value


def _parse_rod(node, path) -> RodParams:
    node = dict(_require_mapping(node, path))
    try:
        rod = RodParams(
            length=_float(_take(node, "length", path, required=True), f"{path}.length"),
            section=CrossSection(_float(_take(node, "diameter", path, required=True),
                                        f"{path}.diameter")),
            material=Material(
                youngs_modulus=_float(_take(node, "youngs_modulus", path, required=True),
                                      f"{path}.youngs_modulus"),
                poisson_ratio=_float(_take(node, "poisson_ratio", path, required=True),
                                     f"{path}.poisson_ratio"),
                density=_float(_take(node, "density", path, required=True),
                               f"{path}.density"),
            ),
            v_star=_vector(_take(node, "v_star", path, default=[0.0, 0.0, 1.0]),
                           f"{path}.v_star", 3),
            u_star=_vector(_take(node, "u_star", path, default=[0.0, 0.0, 0.0]),
                           f"{path}.u_star", 3),
            gravity=_vector(_take(node, "gravity", path, default=[0.0, 0.0, 0.0]),
                            f"{path}.gravity", 3),
        )
    except ValueError as err:
        raise ConfigError(f"{path}: {err}") from None
    _reject_unknown(node, path)
    return rod


def _parse_mechanism(node, path) -> MechanismConfig:
    node = dict(_require_mapping(node, path))
    gravity = _vector(_take(node, "gravity", path, required=True), f"{path}.gravity", 3)
    ee_mass = _float(_take(node, "ee_mass", path, default=0.0), f"{path}.ee_mass")
    limits_deg = _vector(_take(node, "motor_limits_deg", path, default=[-20.0, 90.0]),
                         f"{path}.motor_limits_deg", 2)
    legs_node = _take(node, "legs", path, required=True)
    _reject_unknown(node, path)
    if not isinstance(legs_node, list) or len(legs_node) != 6:
        raise ConfigError(f"{path}.legs: expected a list of 6 legs")
    legs = []
    for i, leg_node in enumerate(legs_node):
        leg_path = f"{path}.legs[{i}]"
        leg_node = dict(_require_mapping(leg_node, leg_path))
        try:
            legs.append(LegConfig(
                motor_position=_vector(_take(leg_node, "motor_position", leg_path,
                                             required=True),
                                       f"{leg_path}.motor_position", 3),
                motor_orientation=_matrix3(_take(leg_node, "motor_orientation", leg_path,
                                                 required=True),
                                           f"{leg_path}.motor_orientation"),
                crank_length=_float(_take(leg_node, "crank_length", leg_path,
                                          required=True),
                                    f"{leg_path}.crank_length"),
                ee_attachment=_vector(_take(leg_node, "ee_attachment", leg_path,
                                            required=True),
                                      f"{leg_path}.ee_attachment", 3),
                rod=_parse_rod(_take(leg_node, "rod", leg_path, required=True),
                               f"{leg_path}.rod"),
            ))
        except ValueError as err:
            raise ConfigError(f"{leg_path}: {err}") from None
        _reject_unknown(leg_node, leg_path)
    try:
        return MechanismConfig(legs=tuple(legs), gravity=gravity, ee_mass=ee_mass,
                               motor_limits=(math.radians(limits_deg[0]),
                                             math.radians(limits_deg[1])))
    except ValueError as err:
        raise ConfigError(f"{path}: {err}") from None


def _parse_solver(node, path) -> SolverConfig:
    node = dict(_require_mapping(node, path))
    integrator_node = dict(_require_mapping(
        _take(node, "integrator", path, default={}), f"{path}.integrator"))
    try:
        integrator = IntegratorConfig(
            rtol=_float(_take(integrator_node, "rtol", path, default=1e-10),
                        f"{path}.integrator.rtol"),
            atol=_float(_take(integrator_node, "atol", path, default=1e-12),
                        f"{path}.integrator.atol"),
            max_step=_float(_take(integrator_node, "max_step", path, default=math.inf),
                            f"{path}.integrator.max_step"),
            first_step=_float(_take(integrator_node, "first_step", path, default=0.0),
                              f"{path}.integrator.first_step"),
        )
        _reject_unknown(integrator_node, f"{path}.integrator")
        cfg = SolverConfig(
            residual_tolerance=_float(_take(node, "residual_tolerance", path,
                                            default=5e-10),
                                      f"{path}.residual_tolerance"),
            max_iterations=_int(_take(node, "max_iterations", path, default=200),
                                f"{path}.max_iterations"),
            fd_step=_float(_take(node, "fd_step", path, default=1e-8), f"{path}.fd_step"),
            lm_damping_init=_float(_take(node, "lm_damping_init", path, default=1e-3),
                                   f"{path}.lm_damping_init"),
            central_differences=bool(_take(node, "central_differences", path,
                                           default=False)),
            integrator=integrator,
            n_samples=_int(_take(node, "n_samples", path, default=50),
                           f"{path}.n_samples"),
        )
    except ValueError as err:
        raise ConfigError(f"{path}: {err}") from None
    _reject_unknown(node, path)
    return cfg


def _parse_experiments(node, path):
    node = dict(_require_mapping(node, path))
    rest_height = _float(_take(node, "rest_height", path, default=DEFAULT_REST_HEIGHT),
                         f"{path}.rest_height")

    st = dict(_require_mapping(_take(node, "stiffness", path, default={}),
                               f"{path}.stiffness"))
    start = _float(_take(st, "force_start", path, default=10.0), f"{path}.stiffness.force_start")
    stop = _float(_take(st, "force_stop", path, default=300.0), f"{path}.stiffness.force_stop")
    step = _float(_take(st, "force_step", path, default=10.0), f"{path}.stiffness.force_step")
    _reject_unknown(st, f"{path}.stiffness")
    if step <= 0 or stop < start:
        raise ConfigError(f"{path}.stiffness: bad force range")
    forces = [start + k * step for k in range(int(math.floor((stop - start) / step)) + 1)]

    rot = dict(_require_mapping(_take(node, "rotation", path, default={}),
                                f"{path}.rotation"))
    y0 = _float(_take(rot, "yaw_start_deg", path, default=0.0), f"{path}.rotation.yaw_start_deg")
    y1 = _float(_take(rot, "yaw_stop_deg", path, default=90.0), f"{path}.rotation.yaw_stop_deg")
    dy = _float(_take(rot, "yaw_step_deg", path, default=5.0), f"{path}.rotation.yaw_step_deg")
    _reject_unknown(rot, f"{path}.rotation")
    if dy <= 0 or y1 < y0:
        raise ConfigError(f"{path}.rotation: bad yaw range")
    yaws = [math.radians(y0 + k * dy)
            for k in range(int(math.floor((y1 - y0) / dy)) + 1)]

    tr = dict(_require_mapping(_take(node, "trajectory", path, default={}),
                               f"{path}.trajectory"))
    trajectory = TrajectorySpec(
        radius=_float(_take(tr, "radius", path, default=0.03), f"{path}.trajectory.radius"),
        pitch=_float(_take(tr, "pitch", path, default=0.02), f"{path}.trajectory.pitch"),
        turns=_float(_take(tr, "turns", path, default=2.0), f"{path}.trajectory.turns"),
        samples=_int(_take(tr, "samples", path, default=40), f"{path}.trajectory.samples"),
        load=_float(_take(tr, "load", path, default=5.0), f"{path}.trajectory.load"),
    )
    _reject_unknown(tr, f"{path}.trajectory")

    ws = dict(_require_mapping(_take(node, "workspace", path, default={}),
                               f"{path}.workspace"))
    try:
        workspace = CylinderGrid(
            center=_vector(_take(ws, "center", path,
                                 default=[0.0, 0.0, DEFAULT_REST_HEIGHT]),
                           f"{path}.workspace.center", 3),
            radius=_float(_take(ws, "radius", path, default=0.08),
                          f"{path}.workspace.radius"),
            z_min=_float(_take(ws, "z_min", path, default=0.34), f"{path}.workspace.z_min"),
            z_max=_float(_take(ws, "z_max", path, default=0.44), f"{path}.workspace.z_max"),
            n_r=_int(_take(ws, "n_r", path, default=2), f"{path}.workspace.n_r"),
            n_theta=_int(_take(ws, "n_theta", path, default=6), f"{path}.workspace.n_theta"),
            n_z=_int(_take(ws, "n_z", path, default=3), f"{path}.workspace.n_z"),
        )
    except ValueError as err:
        raise ConfigError(f"{path}.workspace: {err}") from None
    _reject_unknown(ws, f"{path}.workspace")
    _reject_unknown(node, path)
    return rest_height, forces, yaws, trajectory, workspace


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = yaml.safe_load(handle)
    except OSError as err:
        raise ConfigError(f"cannot read config: {err}") from None
    except yaml.YAMLError as err:
        raise ConfigError(f"invalid YAML: {err}") from None
    return parse_config(raw)


def parse_config(raw) -> RunConfig:
    raw = dict(_require_mapping(raw, "<root>"))
    mechanism = _parse_mechanism(_take(raw, "mechanism", "<root>", required=True),
                                 "mechanism")
    solver = _parse_solver(_take(raw, "solver", "<root>", default={}), "solver")
    rest_height, forces, yaws, trajectory, workspace = _parse_experiments(
        _take(raw, "experiments", "<root>", default={}), "experiments")
    _reject_unknown(raw, "<root>")
    return RunConfig(mechanism, solver, rest_height, forces, yaws, trajectory,
                     workspace)


def config_to_dict(cfg: RunConfig) -> dict:
    mech = cfg.mechanism
    return {
        "mechanism": {
            "gravity": [float(v) for v in mech.gravity],
            "ee_mass": float(mech.ee_mass),
            "motor_limits_deg": [math.degrees(mech.motor_limits[0]),
                                 math.degrees(mech.motor_limits[1])],
            "legs": [{
                "motor_position": [float(v) for v in leg.motor_position],
                "motor_orientation": [[float(v) for v in row]
                                      for row in leg.motor_orientation],
                "crank_length": float(leg.crank_length),
                "ee_attachment": [float(v) for v in leg.ee_attachment],
                "rod": {
                    "length": float(leg.rod.length),
                    "diameter": float(leg.rod.section.diameter),
                    "youngs_modulus": float(leg.rod.material.youngs_modulus),
                    "poisson_ratio": float(leg.rod.material.poisson_ratio),
                    "density": float(leg.rod.material.density),
                    "v_star": [float(v) for v in leg.rod.v_star],
                    "u_star": [float(v) for v in leg.rod.u_star],
                    "gravity": [float(v) for v in leg.rod.gravity],
                },
            } for leg in mech.legs],
        },
        "solver": {
            "residual_tolerance": cfg.solver.residual_tolerance,
            "max_iterations": cfg.solver.max_iterations,
            "fd_step": cfg.solver.fd_step,
            "lm_damping_init": cfg.solver.lm_damping_init,
            "central_differences": cfg.solver.central_differences,
            "n_samples": cfg.solver.n_samples,
            "integrator": {
                "rtol": cfg.solver.integrator.rtol,
                "atol": cfg.solver.integrator.atol,
                "max_step": cfg.solver.integrator.max_step,
                "first_step": cfg.solver.integrator.first_step,
            },
        },
        "experiments": {
            "rest_height": cfg.rest_height,
            "stiffness": {
                "force_start": cfg.stiffness_forces[0],
                "force_stop": cfg.stiffness_forces[-1],
                "force_step": (cfg.stiffness_forces[1] - cfg.stiffness_forces[0]
                               if len(cfg.stiffness_forces) > 1 else 1.0),
            },
            "rotation": {
                "yaw_start_deg": math.degrees(cfg.rotation_yaws[0]),
                "yaw_stop_deg": math.degrees(cfg.rotation_yaws[-1]),
                "yaw_step_deg": (math.degrees(cfg.rotation_yaws[1])
                                 - math.degrees(cfg.rotation_yaws[0])
                                 if len(cfg.rotation_yaws) > 1 else 1.0),
            },
            "trajectory": {
                "radius": cfg.trajectory.radius,
                "pitch": cfg.trajectory.pitch,
                "turns": cfg.trajectory.turns,
                "samples": cfg.trajectory.samples,
                "load": cfg.trajectory.load,
            },
            "workspace": {
                "center": [float(v) for v in cfg.workspace.center],
                "radius": cfg.workspace.radius,
                "z_min": cfg.workspace.z_min,
                "z_max": cfg.workspace.z_max,
                "n_r": cfg.workspace.n_r,
                "n_theta": cfg.workspace.n_theta,
                "n_z": cfg.workspace.n_z,
            },
        },
    }


def serialize_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False,
                          default_flow_style=None)


def save_config(cfg: RunConfig, path: str):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(serialize_config(cfg))


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()


# --- output helpers ------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path, header: list[str], rows):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    return obj


def write_json(path, payload: dict):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(_jsonable(payload), handle, indent=2, sort_keys=True)
        handle.write("\n")


def _manifest(cfg: RunConfig, summary: dict) -> dict:
    return {
        "version": __version__,
        "config_sha256": config_hash(cfg),
        "residual_tolerance": cfg.solver.residual_tolerance,
        "integrator_rtol": cfg.solver.integrator.rtol,
        "integrator_atol": cfg.solver.integrator.atol,
        "summary": summary,
    }


def _error(kind: str, message: str):
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def _solve_payload(result: SolveResult, tolerance: float, wall: float) -> dict:
    return {
        "mode": result.mode,
        "converged": result.converged,
        "status": result.status,
        "residual_norm": result.residual_norm,
        "iterations": result.iterations,
        "tolerance": tolerance,
        "ee_pose": {
            "position": result.ee_pose.position,
            "rpy_deg": [math.degrees(result.ee_pose.roll),
                        math.degrees(result.ee_pose.pitch),
                        math.degrees(result.ee_pose.yaw)],
        },
        "motor_angles_deg": np.degrees(result.motor_angles),
        "universal_angles_deg": np.degrees(result.universal_angles),
        "base_forces": result.base_forces,
        "base_torsions": result.base_torsions,
        "wall_s": wall,
    }


def _write_centerlines(path, result: SolveResult):
    rows = []
    for leg, states in enumerate(result.centerlines):
        for state in states:
            rows.append([leg, state.s, state.pose.position[0],
                         state.pose.position[1], state.pose.position[2]])
    write_csv(path, ["leg", "s", "x", "y", "z"], rows)


# --- subcommands -----------------------------------------------------------------

def _load_or_default(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else default_run_config()
    if getattr(args, "tolerance", None) is not None:
        if args.tolerance <= 0:
            raise ConfigError("--tolerance must be positive")
        solver = SolverConfig(
            residual_tolerance=args.tolerance,
            max_iterations=cfg.solver.max_iterations,
            fd_step=cfg.solver.fd_step,
            lm_damping_init=cfg.solver.lm_damping_init,
            central_differences=cfg.solver.central_differences,
            integrator=cfg.solver.integrator,
            n_samples=cfg.solver.n_samples,
        )
        cfg = RunConfig(cfg.mechanism, solver, cfg.rest_height,
                        cfg.stiffness_forces, cfg.rotation_yaws, cfg.trajectory,
                        cfg.workspace)
    return cfg


def _parse_wrench(args) -> Wrench:
    force = np.asarray(args.force, dtype=float) if args.force else np.zeros(3)
    moment = np.asarray(args.moment, dtype=float) if args.moment else np.zeros(3)
    if not (np.all(np.isfinite(force)) and np.all(np.isfinite(moment))):
        raise ConfigError("wrench components must be finite")
    return Wrench(force, moment)


def cmd_ik(args, out_dir) -> int:
    cfg = _load_or_default(args)
    wrench = _parse_wrench(args)
    if args.pose:
        values = np.asarray(args.pose, dtype=float)
        if not np.all(np.isfinite(values)):
            raise ConfigError("pose components must be finite")
        pose = EEPose(values[0:3], *(math.radians(a) for a in values[3:6]))
    else:
        pose = EEPose(np.array([0.0, 0.0, cfg.rest_height]))
    start = time.perf_counter()
    result = solve_ik(pose, wrench, cfg.mechanism, cfg.solver)
    wall = time.perf_counter() - start
    write_json(out_dir / "ik_result.json",
               _solve_payload(result, cfg.solver.residual_tolerance, wall))
    _write_centerlines(out_dir / "centerlines.csv", result)
    if not result.converged:
        _error("no_convergence", f"ik status {result.status}")
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_fk(args, out_dir) -> int:
    cfg = _load_or_default(args)
    wrench = _parse_wrench(args)
    angles = np.asarray(args.angles, dtype=float)
    if not np.all(np.isfinite(angles)):
        raise ConfigError("motor angles must be finite")
    start = time.perf_counter()
    result = solve_fk(np.radians(angles), wrench, cfg.mechanism, cfg.solver)
    wall = time.perf_counter() - start
    write_json(out_dir / "fk_result.json",
               _solve_payload(result, cfg.solver.residual_tolerance, wall))
    _write_centerlines(out_dir / "centerlines.csv", result)
    if not result.converged:
        _error("no_convergence", f"fk status {result.status}")
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


STIFFNESS_HEADER = ["force_N", "ee_height_m", "converged", "residual", "wall_s"]
ROTATION_HEADER = ["yaw_deg", "converged", "residual",
                   "q1_deg_1", "q1_deg_2", "q1_deg_3", "q1_deg_4", "q1_deg_5",
                   "q1_deg_6", "wall_s"]
TRAJECTORY_HEADER = ["index", "ref_x", "ref_y", "ref_z", "fk_x", "fk_y", "fk_z",
                     "error_m", "converged", "residual", "wall_s"]
WORKSPACE_HEADER = ["x", "y", "z", "converged", "accepted", "residual",
                    "q1_deg_min", "q1_deg_max", "wall_s"]
MOTOR_RANGES_HEADER = ["z", "leg", "q1_deg_min", "q1_deg_max", "n_accepted"]


def cmd_stiffness(args, out_dir) -> int:
    cfg = _load_or_default(args)
    result = axial_stiffness_sweep(cfg.stiffness_forces, cfg.mechanism, cfg.solver,
                                   rest_height=cfg.rest_height)
    write_csv(out_dir / "stiffness.csv", STIFFNESS_HEADER,
              [[r.parameter, r.ee_height, r.converged, r.residual_norm, r.wall_time]
               for r in result.records])
    write_json(out_dir / "stiffness_manifest.json", _manifest(cfg, {
        "stiffness_n_per_m": result.stiffness,
        "stiffness_defined": result.stiffness_defined,
        "max_force_n": result.max_force,
        "r_squared": result.r_squared,
        "n_records": len(result.records),
        "n_converged": sum(r.converged for r in result.records),
    }))
    if not any(r.converged for r in result.records):
        _error("no_samples", "no stiffness sample converged")
        return EXIT_NO_SAMPLES
    return EXIT_OK


def cmd_rotation(args, out_dir) -> int:
    cfg = _load_or_default(args)
    records = rotation_sweep(cfg.rotation_yaws, cfg.mechanism, cfg.solver,
                             rest_height=cfg.rest_height)
    write_csv(out_dir / "rotation.csv", ROTATION_HEADER,
              [[math.degrees(r.parameter), r.converged, r.residual_norm,
                *np.degrees(r.motor_angles), r.wall_time] for r in records])
    converged_yaws = [math.degrees(r.parameter) for r in records if r.converged]
    write_json(out_dir / "rotation_manifest.json", _manifest(cfg, {
        "max_converged_yaw_deg": max(converged_yaws) if converged_yaws else math.nan,
        "n_records": len(records),
        "n_converged": len(converged_yaws),
    }))
    if not converged_yaws:
        _error("no_samples", "no rotation sample converged")
        return EXIT_NO_SAMPLES
    return EXIT_OK


def cmd_trajectory(args, out_dir) -> int:
    cfg = _load_or_default(args)
    spec = cfg.trajectory
    traj = helix_trajectory(radius=spec.radius, pitch=spec.pitch, turns=spec.turns,
                            samples=spec.samples, center_height=cfg.rest_height,
                            load=spec.load)
    result = follow_trajectory(traj, cfg.mechanism, cfg.solver)
    write_csv(out_dir / "trajectory.csv", TRAJECTORY_HEADER,
              [[r.index, *r.reference, *r.fk_position, r.error,
                r.ik_converged and r.fk_converged, r.residual_norm, r.wall_time]
               for r in result.records])
    write_json(out_dir / "trajectory_manifest.json", _manifest(cfg, {
        "max_error_m": result.max_error,
        "fraction_converged": result.fraction_converged,
        "n_samples": len(result.records),
    }))
    if result.fraction_converged == 0.0:
        _error("no_samples", "no trajectory sample converged")
        return EXIT_NO_SAMPLES
    return EXIT_OK


def _workspace_task(payload):
    position, mech, solver = payload
    return solve_workspace_point(position, mech, solver)


def cmd_workspace(args, out_dir) -> int:
    cfg = _load_or_default(args)
    jobs = max(1, getattr(args, "jobs", 1) or 1)
    if jobs > 1:
        grid_points = cfg.workspace.points()
        tasks = [(p, cfg.mechanism, cfg.solver) for p in grid_points]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_workspace_task, tasks))
        atlas = workspace_sample(cfg.workspace, cfg.mechanism, cfg.solver,
                                 executor_map=lambda pts: results)
    else:
        atlas = workspace_sample(cfg.workspace, cfg.mechanism, cfg.solver)
    write_csv(out_dir / "workspace.csv", WORKSPACE_HEADER,
              [[*p.position, p.converged, p.accepted, p.residual_norm,
                math.degrees(p.motor_angles.min()), math.degrees(p.motor_angles.max()),
                p.wall_time] for p in atlas.points])
    ranges_rows = []
    for z, mins, maxs, count in atlas.motor_ranges_by_height():
        for leg in range(6):
            ranges_rows.append([z, leg, math.degrees(mins[leg]),
                                math.degrees(maxs[leg]), count])
    write_csv(out_dir / "motor_ranges.csv", MOTOR_RANGES_HEADER, ranges_rows)
    write_json(out_dir / "workspace_manifest.json", _manifest(cfg, {
        "acceptance_fraction": atlas.acceptance_fraction,
        "n_points": len(atlas.points),
        "n_accepted": sum(p.accepted for p in atlas.points),
    }))
    if not any(p.converged for p in atlas.points):
        _error("no_samples", "no workspace sample converged")
        return EXIT_NO_SAMPLES
    return EXIT_OK


# --- argument parsing ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hexrod",
        description="Kinetostatics of a 6-RUS parallel continuum robot.")
    parser.add_argument("--seed-geometry", metavar="PATH",
                        help="write the default run configuration to PATH and exit")
    sub = parser.add_subparsers(dest="command")

    def common(p, jobs=False):
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--tolerance", type=float,
                       help="override solver residual tolerance")
        if jobs:
            p.add_argument("--jobs", type=int, default=1,
                           help="worker processes for workspace sampling")

    p_ik = sub.add_parser("ik", help="inverse kinetostatics for a platform pose")
    common(p_ik)
    p_ik.add_argument("--pose", type=float, nargs=6,
                      metavar=("X", "Y", "Z", "ROLL", "PITCH", "YAW"),
                      help="position (m) and roll/pitch/yaw (deg); default rest pose")
    p_ik.add_argument("--force", type=float, nargs=3, metavar=("FX", "FY", "FZ"))
    p_ik.add_argument("--moment", type=float, nargs=3, metavar=("MX", "MY", "MZ"))

    p_fk = sub.add_parser("fk", help="forward kinetostatics for motor angles")
    common(p_fk)
    p_fk.add_argument("--angles", type=float, nargs=6, required=True,
                      metavar=tuple(f"Q{i}" for i in range(1, 7)),
                      help="six motor angles (deg)")
    p_fk.add_argument("--force", type=float, nargs=3, metavar=("FX", "FY", "FZ"))
    p_fk.add_argument("--moment", type=float, nargs=3, metavar=("MX", "MY", "MZ"))

    for name, help_text in [("stiffness", "axial compression sweep"),
                            ("rotation", "platform yaw sweep"),
                            ("trajectory", "helical trajectory following"),
                            ("workspace", "reachable workspace sampling")]:
        p_cmd = sub.add_parser(name, help=help_text)
        common(p_cmd, jobs=(name == "workspace"))
    return parser


_COMMANDS = {
    "ik": cmd_ik,
    "fk": cmd_fk,
    "stiffness": cmd_stiffness,
    "rotation": cmd_rotation,
    "trajectory": cmd_trajectory,
    "workspace": cmd_workspace,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed_geometry:
        try:
            save_config(default_run_config(), args.seed_geometry)
        except OSError as err:
            _error("config", str(err))
            return EXIT_CONFIG
        return EXIT_OK
    if not args.command:
        parser.print_help()
        return EXIT_CONFIG
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](args, out_dir)
    except ConfigError as err:
        _error("config", str(err))
        return EXIT_CONFIG
    except ValueError as err:
        _error("config", str(err))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
