import numpy as np
import pytest

from ftrbf.design import SmoothObjective, build_design, build_regularizer
from ftrbf.faults import FaultSpec


def random_instance(rng, n=None, m=None, fault=None, width=None):
    """A small random regression instance with a well-conditioned objective."""
    n = n or int(rng.integers(10, 50))
    m = m or int(rng.integers(3, min(n, 30)))
    k = int(rng.integers(1, 4))
    inputs = rng.uniform(-2.0, 2.0, size=(n, k))
    centers = inputs[rng.choice(n, size=m, replace=False)]
    width = width or float(rng.uniform(0.5, 3.0))
    y = rng.normal(0.0, 1.0, size=n)
    fault = fault or FaultSpec(open_prob=float(rng.uniform(0.0, 0.2)),
                               mult_var=float(rng.uniform(0.0, 0.2)))
    design = build_design(inputs, centers, width, targets=y)
    reg = build_regularizer(design, fault)
    return design, reg, y, fault


def random_objective(rng, **kw):
    design, reg, y, fault = random_instance(rng, **kw)
    return SmoothObjective(design, reg, y), fault


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
