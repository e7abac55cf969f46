import numpy as np
import pytest

from rigidflow.camera import params_from_pose
from rigidflow.optimize import SceneState
from rigidflow.scenes import preset, render


@pytest.fixture(scope="session")
def plane_gt():
    return render(preset("plane"))


@pytest.fixture(scope="session")
def depth_edge_gt():
    return render(preset("depth_edge"))


@pytest.fixture(scope="session")
def mover_gt():
    return render(preset("mover"))


@pytest.fixture(scope="session")
def slanted_gt():
    return render(preset("slanted"))


def state_from_gt(gt) -> SceneState:
    return SceneState(
        depth_t=gt.depth_t.copy(),
        depth_t1=gt.depth_t1.copy(),
        pose_params=params_from_pose(gt.pose),
        flow_fwd=gt.flow_fwd.copy(),
        flow_bwd=gt.flow_bwd.copy(),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
