import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from posauction import BayesSetting, SlotCurve, Uniform


@pytest.fixture(scope="session")
def uniform01():
    return Uniform(1.0)


@pytest.fixture(scope="session")
def setting_2_1(uniform01):
    return BayesSetting(n=2, curve=SlotCurve([1.0]), dist=uniform01)


@pytest.fixture(scope="session")
def setting_3_2(uniform01):
    return BayesSetting(n=3, curve=SlotCurve([2.0, 1.0]), dist=uniform01)


@pytest.fixture(scope="session")
def setting_4_2(uniform01):
    return BayesSetting(n=4, curve=SlotCurve([2.0, 1.0]), dist=uniform01)
