"""Coupled boundary-value solver for the six-rod mechanism.

A guess vector of 42 unknowns (base wrenches plus joint angles, IK or FK
layout) is mapped through six independent rod IVPs to a 42-component
boundary residual: platform force/moment balance, six tip-position
constraints, and six spherical-joint moment constraints.  The residual is
driven to tolerance by Levenberg-Marquardt over a forward-difference
Jacobian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geom3 import Pose, rotation_to_rpy
from .mechanism import (DEFAULT_REST_HEIGHT, FK_PER_LEG, IK_PER_LEG, N_LEGS,
                        N_UNKNOWNS, EEPose, FkUnknowns, GuessVector,
                        IkUnknowns, LayoutMismatch, LegConfig,
                        MechanismConfig, Wrench, pack_guess, proximal_pose,
                        unpack_guess)
from .rod import (IntegrationFailure, IntegratorConfig, RodParams, RodState,
                  distributed_load, integrate_rod)


class SingularNormalEquations(RuntimeError):
    """Damped normal equations remained unsolvable up to the damping cap."""


@dataclass(frozen=True)
class SolverConfig:
    residual_tolerance: float = 5e-10     # max-norm bound per residual term
    max_iterations: int = 200
    fd_step: float = 1e-8                 # relative FD step
    lm_damping_init: float = 1e-3
    central_differences: bool = False
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    n_samples: int = 50                   # centerline states on the final pass

    def __post_init__(self):
        if (self.residual_tolerance <= 0.0 or self.max_iterations <= 0
                or self.fd_step <= 0.0 or self.lm_damping_init <= 0.0):
            raise ValueError("solver settings must be positive")


@dataclass
class SolveResult:
    """Converged unknowns plus derived mechanism state and diagnostics."""

    mode: str
    converged: bool
    status: str                    # converged | limit_violation | max_iterations | no_progress
    guess: GuessVector
    residual_norm: float           # max |E| at the returned unknowns
    iterations: int
    ee_pose: EEPose
    motor_angles: np.ndarray       # (6,)
    universal_angles: np.ndarray   # (6, 2)
    base_forces: np.ndarray        # (6, 3) world-frame n(0)
    base_torsions: np.ndarray      # (6,) local-z m(0)
    tip_states: list[RodState]
    centerlines: list[list[RodState]]
    residual_history: np.ndarray


@dataclass
class NlsResult:
    x: np.ndarray
    converged: bool
    iterations: int
    residual_norm: float
    residual: np.ndarray
    history: np.ndarray
    n_evaluations: int
    message: str


def _leg_base_conditions(leg: LegConfig, q1: float, q2: float, q3: float,
                         n0: np.ndarray, mz0: float) -> tuple[Pose, np.ndarray, np.ndarray]:
    """Base pose and world-frame base wrench; the universal joint frees the
    local x/y moments, so m(0) is the local z torsion rotated to world."""
    base = proximal_pose(leg, q1, q2, q3)
    m0 = base.rotation @ np.array([0.0, 0.0, mz0])
    return base, n0, m0


def _evaluate(guess: GuessVector, given, wrench: Wrench, mech: MechanismConfig,
              integrator: IntegratorConfig, n_samples: int = 0):
    """Residual vector plus the per-leg tip states behind it."""
    unknowns = unpack_guess(guess)
    if guess.mode == "ik":
        if not isinstance(given, EEPose):
            raise LayoutMismatch("ik residual needs the commanded EEPose")
        pose = given
        motor_angles = unknowns.motor_angles
    else:
        if isinstance(given, EEPose):
            raise LayoutMismatch("fk residual needs six motor angles")
        motor_angles = np.asarray(given, dtype=float)
        if motor_angles.shape != (N_LEGS,):
            raise LayoutMismatch("fk residual needs six motor angles")
        pose = EEPose(unknowns.ee_position, *unknowns.ee_rpy)

    rot_e = pose.rotation()
    p_e = pose.position
    force_ext = wrench.force + mech.ee_mass * mech.gravity

    residual = np.empty(N_UNKNOWNS)
    force_sum = np.zeros(3)
    moment_sum = np.zeros(3)
    tips: list[RodState] = []
    centerlines: list[list[RodState]] = []
    for i, leg in enumerate(mech.legs):
        q2, q3 = unknowns.u_joint_angles[i]
        base, n0, m0 = _leg_base_conditions(
            leg, motor_angles[i], q2, q3,
            unknowns.base_forces[i], unknowns.base_torsions[i])
        try:
            tip, samples = integrate_rod(base, n0, m0, leg.rod, integrator,
                                         n_samples=n_samples)
        except IntegrationFailure as err:
            raise IntegrationFailure(f"leg {i}: {err}") from err
        tips.append(tip)
        centerlines.append(samples)
        tip_p = tip.pose.position
        tip_n = tip.internal_force
        tip_m = tip.internal_moment
        force_sum += tip_n
        moment_sum += np.cross(tip_p, tip_n) + tip_m
        residual[6 + 3 * i:9 + 3 * i] = p_e + rot_e @ leg.ee_attachment - tip_p
        residual[24 + 3 * i:27 + 3 * i] = rot_e.T @ tip_m
    residual[0:3] = force_sum - force_ext
    residual[3:6] = moment_sum - np.cross(p_e, force_ext) - wrench.moment

    details = {"pose": pose, "motor_angles": motor_angles, "tips": tips,
               "centerlines": centerlines, "unknowns": unknowns}
    return residual, details


def assemble_residual(guess: GuessVector, given, wrench: Wrench,
                      mech: MechanismConfig, cfg: SolverConfig | None = None) -> np.ndarray:
    """42-component boundary residual for a guess vector.

    `given` is the commanded EEPose in IK mode or the six motor angles in
    FK mode.  Layout: [force balance, moment balance, tip positions x6,
    platform-frame tip moments x6].
    """
    if cfg is None:
        cfg = SolverConfig()
    residual, _ = _evaluate(guess, given, wrench, mech, cfg.integrator)
    return residual


def fd_jacobian(residual_fn, x: np.ndarray, fd_step: float = 1e-8,
                central: bool = False, base_residual: np.ndarray | None = None) -> np.ndarray:
    """Finite-difference Jacobian, column j from step fd_step*max(1, |x_j|).

    Forward differences by default (one extra evaluation per column);
    central differences double the cost and drop the O(h) truncation term.
    Failures inside residual_fn are re-raised tagged with the column.
    """
    x = np.asarray(x, dtype=float)
    if base_residual is None and not central:
        base_residual = residual_fn(x)
    n_out = len(base_residual) if base_residual is not None else None
    jac = None
    for j in range(x.size):
        h = fd_step * max(1.0, abs(x[j]))
        x_plus = x.copy()
        x_plus[j] += h
        try:
            if central:
                x_minus = x.copy()
                x_minus[j] -= h
                column = (residual_fn(x_plus) - residual_fn(x_minus)) / (2.0 * h)
            else:
                column = (residual_fn(x_plus) - base_residual) / h
        except Exception as err:
            raise type(err)(f"jacobian column {j}: {err}") from err
        if jac is None:
            jac = np.empty((column.size, x.size))
        jac[:, j] = column
    return jac


_LM_DAMPING_CAP = 1e16
_LM_MAX_REJECTS = 50


def nls_solve(residual_fn, x0: np.ndarray, cfg: SolverConfig | None = None) -> NlsResult:
    """Levenberg-Marquardt on the max-norm stopping rule.

    Steps solve (J^T J + damping * diag(J^T J)) d = -J^T E; damping shrinks
    x0.3 on accepted steps and grows x2 on rejections.  Non-convergence
    returns the best iterate with diagnostics rather than raising; a
    normal matrix that stays unsolvable up to the damping cap raises
    SingularNormalEquations.
    """
    if cfg is None:
        cfg = SolverConfig()
    x = np.asarray(x0, dtype=float).copy()
    residual = residual_fn(x)
    n_evaluations = 1
    cost = float(residual @ residual)
    norm = float(np.max(np.abs(residual)))
    history = [norm]
    if norm <= cfg.residual_tolerance:
        return NlsResult(x, True, 0, norm, residual, np.array(history),
                         n_evaluations, "converged at start")

    damping = cfg.lm_damping_init
    message = "max iterations reached"
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        jac = fd_jacobian(residual_fn, x, cfg.fd_step,
                          central=cfg.central_differences,
                          base_residual=None if cfg.central_differences else residual)
        n_evaluations += 2 * x.size if cfg.central_differences else x.size
        normal = jac.T @ jac
        gradient = jac.T @ residual
        diag = np.diag(normal).copy()
        accepted = False
        solvable = False
        for _ in range(_LM_MAX_REJECTS):
            try:
                step = np.linalg.solve(
                    normal + damping * np.diag(diag), -gradient)
            except np.linalg.LinAlgError:
                step = None
            if step is None or not np.all(np.isfinite(step)):
                damping *= 2.0
                if damping > _LM_DAMPING_CAP:
                    break
                continue
            solvable = True
            x_trial = x + step
            try:
                residual_trial = residual_fn(x_trial)
            except IntegrationFailure:
                residual_trial = None
            n_evaluations += 1
            if residual_trial is not None and np.all(np.isfinite(residual_trial)):
                cost_trial = float(residual_trial @ residual_trial)
                if cost_trial < cost:
                    x = x_trial
                    residual = residual_trial
                    cost = cost_trial
                    norm = float(np.max(np.abs(residual)))
                    damping *= 0.3
                    accepted = True
                    break
            damping *= 2.0
            if damping > _LM_DAMPING_CAP:
                break
        history.append(norm)
        if not accepted:
            if not solvable:
                raise SingularNormalEquations(
                    "damped normal equations never became solvable")
            message = "no acceptable step found"
            break
        if norm <= cfg.residual_tolerance:
            converged = True
            message = "converged"
            break

    return NlsResult(x, converged, iterations, norm, residual,
                     np.array(history), n_evaluations, message)


# --- initial guesses ----------------------------------------------------------

def natural_chord(rod: RodParams) -> float:
    """Straight-line distance between the ends of the unloaded rod."""
    curvature = float(np.linalg.norm(rod.u_star))
    if curvature * rod.length < 1e-9:
        return rod.length
    return 2.0 / curvature * math.sin(curvature * rod.length / 2.0)


_GUESS_GRID = np.linspace(math.radians(-30.0), math.radians(100.0), 521)


def _crank_angle_guess(leg: LegConfig, target: np.ndarray) -> float:
    """Crank angle whose universal joint sits one natural-chord length from
    the target attachment point (rigid approximation of the unloaded rod)."""
    chord = natural_chord(leg.rod)
    crank = leg.crank_length
    local = np.stack([np.zeros_like(_GUESS_GRID),
                      crank * np.cos(_GUESS_GRID),
                      crank * np.sin(_GUESS_GRID)], axis=1)
    joints = leg.motor_position + local @ leg.motor_orientation.T
    distances = np.linalg.norm(joints - target, axis=1)
    return float(_GUESS_GRID[np.argmin(np.abs(distances - chord))])


def _base_force_guess(wrench: Wrench, mech: MechanismConfig) -> np.ndarray:
    """Even split of external force plus per-rod self-weight correction."""
    force_ext = wrench.force + mech.ee_mass * mech.gravity
    guesses = np.empty((N_LEGS, 3))
    for i, leg in enumerate(mech.legs):
        guesses[i] = force_ext / N_LEGS + distributed_load(leg.rod) * leg.rod.length
    return guesses


def default_ik_guess(pose: EEPose, wrench: Wrench, mech: MechanismConfig) -> GuessVector:
    rot_e = pose.rotation()
    motor_angles = np.empty(N_LEGS)
    for i, leg in enumerate(mech.legs):
        attachment = pose.position + rot_e @ leg.ee_attachment
        motor_angles[i] = _crank_angle_guess(leg, attachment)
    return pack_guess(IkUnknowns(
        base_forces=_base_force_guess(wrench, mech),
        base_torsions=np.zeros(N_LEGS),
        motor_angles=motor_angles,
        u_joint_angles=np.zeros((N_LEGS, 2)),
    ))


def default_fk_guess(motor_angles: np.ndarray, wrench: Wrench,
                     mech: MechanismConfig,
                     rest_height: float = DEFAULT_REST_HEIGHT) -> GuessVector:
    del motor_angles  # pose-side guess does not depend on the commanded angles
    return pack_guess(FkUnknowns(
        base_forces=_base_force_guess(wrench, mech),
        base_torsions=np.zeros(N_LEGS),
        u_joint_angles=np.zeros((N_LEGS, 2)),
        ee_position=np.array([0.0, 0.0, rest_height]),
        ee_rpy=np.zeros(3),
    ))


# --- IK / FK entry points -------------------------------------------------------

def _build_result(mode: str, nls: NlsResult, given, wrench: Wrench,
                  mech: MechanismConfig, cfg: SolverConfig) -> SolveResult:
    guess = GuessVector(mode, nls.x)
    _, details = _evaluate(guess, given, wrench, mech, cfg.integrator,
                           n_samples=cfg.n_samples)
    unknowns = details["unknowns"]
    motor_angles = np.asarray(details["motor_angles"], dtype=float)

    status = "converged" if nls.converged else (
        "max_iterations" if nls.message == "max iterations reached" else "no_progress")
    if nls.converged and mode == "ik":
        low, high = mech.motor_limits
        if np.any(motor_angles < low) or np.any(motor_angles > high):
            status = "limit_violation"

    if mode == "ik":
        ee_pose = details["pose"]
    else:
        ee_pose = EEPose(unknowns.ee_position, *unknowns.ee_rpy)

    return SolveResult(
        mode=mode,
        converged=status == "converged",
        status=status,
        guess=guess,
        residual_norm=nls.residual_norm,
        iterations=nls.iterations,
        ee_pose=ee_pose,
        motor_angles=motor_angles.copy(),
        universal_angles=unknowns.u_joint_angles.copy(),
        base_forces=unknowns.base_forces.copy(),
        base_torsions=unknowns.base_torsions.copy(),
        tip_states=details["tips"],
        centerlines=details["centerlines"],
        residual_history=nls.history,
    )


def solve_ik(pose: EEPose, wrench: Wrench, mech: MechanismConfig,
             cfg: SolverConfig | None = None,
             warm_start: GuessVector | None = None) -> SolveResult:
    """Motor angles (plus internal state) holding the platform at `pose`
    under `wrench`.  Motor limits are checked after convergence; a solution
    outside them is reported with status ``limit_violation``."""
    if cfg is None:
        cfg = SolverConfig()
    if not (np.all(np.isfinite(pose.position))
            and all(math.isfinite(a) for a in (pose.roll, pose.pitch, pose.yaw))):
        raise ValueError("target pose must be finite")
    if abs(pose.pitch) >= math.pi / 2.0:
        raise ValueError("target pitch must stay inside +/-90 deg")
    if warm_start is not None and warm_start.mode != "ik":
        raise LayoutMismatch("warm start must use the ik layout")
    start = warm_start if warm_start is not None else default_ik_guess(pose, wrench, mech)

    def residual_fn(x):
        return assemble_residual(GuessVector("ik", x), pose, wrench, mech, cfg)

    nls = nls_solve(residual_fn, start.values, cfg)
    return _build_result("ik", nls, pose, wrench, mech, cfg)


def solve_fk(motor_angles: np.ndarray, wrench: Wrench, mech: MechanismConfig,
             cfg: SolverConfig | None = None,
             warm_start: GuessVector | None = None) -> SolveResult:
    """Platform pose (plus internal state) for commanded motor angles under
    `wrench`."""
    if cfg is None:
        cfg = SolverConfig()
    motor_angles = np.asarray(motor_angles, dtype=float)
    if motor_angles.shape != (N_LEGS,):
        raise ValueError(f"expected {N_LEGS} motor angles")
    if not np.all(np.isfinite(motor_angles)):
        raise ValueError("motor angles must be finite")
    if warm_start is not None and warm_start.mode != "fk":
        raise LayoutMismatch("warm start must use the fk layout")
    start = warm_start if warm_start is not None else default_fk_guess(
        motor_angles, wrench, mech)

    def residual_fn(x):
        return assemble_residual(GuessVector("fk", x), motor_angles, wrench, mech, cfg)

    nls = nls_solve(residual_fn, start.values, cfg)
    return _build_result("fk", nls, motor_angles, wrench, mech, cfg)
