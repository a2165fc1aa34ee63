import numpy as np
import pytest

from sasc.problems import make_min_norm_hyperplane_problem


@pytest.fixture
def min_norm_toy():
    """min (1/2)||x||^2 s.t. x_1 = 1, with its exact saddle-point certificate."""
    return make_min_norm_hyperplane_problem()


def loglog_slope(samples, values, m_min=1000):
    samples = np.asarray(samples, dtype=float)
    values = np.asarray(values, dtype=float)
    keep = (samples >= m_min) & (values > 0)
    return float(np.polyfit(np.log(samples[keep]), np.log(values[keep]), 1)[0])
