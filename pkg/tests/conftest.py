import numpy as np
import pytest

from sddmanifold.problem import builtin_problem


@pytest.fixture(scope="session")
def lin():
    return builtin_problem("LIN")


@pytest.fixture(scope="session")
def sin():
    return builtin_problem("SIN")


@pytest.fixture(scope="session")
def lin_exact():
    """LIN with c = 2 exactly (no safety factor)."""
    return builtin_problem("LIN", safety_factor=1.0)


@pytest.fixture(params=["LIN", "SIN"], scope="session")
def instance(request):
    return builtin_problem(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
