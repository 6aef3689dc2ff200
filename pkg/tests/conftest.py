import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from filippov_harvest import PRESETS


@pytest.fixture
def a1():
    return PRESETS["A1"]


@pytest.fixture
def a2():
    return PRESETS["A2"]
