import numpy as np
import pytest

from ballforest.core import CostCounters, Dataset, EUCLIDEAN


@pytest.fixture
def counters():
    return CostCounters()


@pytest.fixture
def fn():
    return EUCLIDEAN


def make_dataset(rows) -> Dataset:
    return Dataset(np.array(rows, dtype=np.float64))


@pytest.fixture
def line_1d():
    # ids 0..3 at positions 0, 1, 2, 10
    return make_dataset([[0.0], [1.0], [2.0], [10.0]])
