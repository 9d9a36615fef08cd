import numpy as np
import pytest

from zoomstack import ZoomSchedule, ZoomStack


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_schedule():
    return ZoomSchedule(p=2, N=3, H=16, W=16, C=1)


def random_stack(schedule: ZoomSchedule, rng: np.random.Generator) -> ZoomStack:
    shape = (schedule.N, schedule.H, schedule.W, schedule.C)
    return ZoomStack(schedule, rng.uniform(-1.0, 1.0, shape))
