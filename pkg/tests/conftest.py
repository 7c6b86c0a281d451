import random

import pytest

from padiclie import PAdicContext


@pytest.fixture
def rng():
    return random.Random(20240811)


@pytest.fixture(scope="session")
def ctx5():
    return PAdicContext(5, 24)


@pytest.fixture(scope="session")
def ctx3():
    return PAdicContext(3, 24)


@pytest.fixture(scope="session")
def ctx2():
    return PAdicContext(2, 24)
