import numpy as np
import pytest
from hypothesis import settings

from maxstein.measures import AngularMeasure, MaxStableLaw

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def indep2():
    return MaxStableLaw(2.0, AngularMeasure.independence(2))


@pytest.fixture
def dep2():
    return MaxStableLaw(1.0, AngularMeasure.dependence(2))


@pytest.fixture
def mix2():
    return MaxStableLaw(2.0, AngularMeasure.mixture(2, 0.1))


def random_law(rng, d=None, alpha=None):
    d = int(rng.integers(1, 4)) if d is None else d
    alpha = float(rng.uniform(0.5, 4.0)) if alpha is None else alpha
    return MaxStableLaw(alpha, AngularMeasure.random(d, rng, n_atoms=int(rng.integers(1, 4))))
