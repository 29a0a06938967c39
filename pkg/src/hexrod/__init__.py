"""Kinetostatics of a 6-RUS parallel continuum robot.

Six motor-driven cranks carry universal joints, elastic pre-curved rods,
and spherical joints tying into a rigid platform.  Inverse and forward
kinetostatics are solved as a coupled 42-unknown shooting problem over
the six rod boundary-value problems.
"""

__version__ = "0.1.0"

from .geom3 import Pose, hat, rpy_to_rotation, rotation_to_rpy, vee
from .rod import (CrossSection, IntegratorConfig, Material, RodParams,
                  RodState, StiffnessMatrices, integrate_rod,
                  stiffness_matrices, strains_from_wrench)
from .mechanism import (EEPose, GuessVector, LegConfig, MechanismConfig,
                        Wrench, default_geometry, ee_attachment_point,
                        proximal_pose)
from .shooting import SolveResult, SolverConfig, solve_fk, solve_ik

__all__ = [
    "Pose", "hat", "vee", "rpy_to_rotation", "rotation_to_rpy",
    "CrossSection", "Material", "RodParams", "RodState",
    "StiffnessMatrices", "IntegratorConfig", "integrate_rod",
    "stiffness_matrices", "strains_from_wrench",
    "EEPose", "GuessVector", "LegConfig", "MechanismConfig", "Wrench",
    "default_geometry", "ee_attachment_point", "proximal_pose",
    "SolveResult", "SolverConfig", "solve_ik", "solve_fk",
]
