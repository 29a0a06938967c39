import numpy as np
import pytest

from hexrod.mechanism import DEFAULT_REST_HEIGHT, EEPose, Wrench, default_geometry
from hexrod.shooting import solve_ik


@pytest.fixture(scope="session")
def mech():
    return default_geometry()


@pytest.fixture(scope="session")
def rest_pose():
    return EEPose(np.array([0.0, 0.0, DEFAULT_REST_HEIGHT]))


@pytest.fixture(scope="session")
def rest_ik(mech, rest_pose):
    """Converged rest-pose IK solution shared by the solver-level tests."""
    result = solve_ik(rest_pose, Wrench.zero(), mech)
    assert result.converged, result.status
    return result
