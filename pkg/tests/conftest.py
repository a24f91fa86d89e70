import numpy as np
import pytest

from grl.core import Gmdp, build_grid


@pytest.fixture(autouse=True, scope="session")
def isolated_environment(tmp_path_factory):
    patch = pytest.MonkeyPatch()
    patch.setenv("GRL_CACHE_DIR", str(tmp_path_factory.mktemp("cache")))
    patch.setenv("GRL_THREADS", "1")
    yield
    patch.undo()


@pytest.fixture
def grid3():
    return build_grid({"width": 3, "height": 3, "horizon": 4})


@pytest.fixture
def grid4():
    return build_grid({"width": 4, "height": 4, "horizon": 5})


@pytest.fixture
def noisy_grid():
    return build_grid(
        {"width": 2, "height": 2, "horizon": 3, "stochasticity_degree": 0.2}
    )


@pytest.fixture
def two_state_gmdp():
    """Action 0 tends to stay, action 1 tends to switch."""
    transitions = np.array(
        [
            [[0.8, 0.2], [0.3, 0.7]],
            [[0.1, 0.9], [0.6, 0.4]],
        ]
    )
    return Gmdp(
        transitions=transitions, initial_distribution=np.array([1.0, 0.0]), horizon=3
    )
