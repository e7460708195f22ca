import sys
from pathlib import Path
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from tensorank.common import kronecker, set_quiet, tensor_product  # noqa: E402
from tensorank.symmetric import ghz_state, w_state  # noqa: E402


set_quiet(True)


@pytest.fixture
def w3():
    return w_state(3)


@pytest.fixture
def ghz():
    return ghz_state(2, 3)


@pytest.fixture
def wkron2():
    return kronecker(w_state(3), w_state(3))


@pytest.fixture
def wsquare():
    return tensor_product(w_state(3), w_state(3))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
