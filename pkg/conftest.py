import random
from fractions import Fraction

import pytest

from com.mhire.app.config.config import Config


@pytest.fixture(autouse=True)
def fresh_config():
    """Every test starts from the environment defaults (double precision, ε = 1e-9)."""
    config = Config()
    config.reset()
    yield config
    config.reset()


@pytest.fixture
def tight_epsilon(monkeypatch):
    monkeypatch.setattr(Config(), "EPSILON", 1e-12)
    return Config()


@pytest.fixture
def rng():
    return random.Random(20240611)


def random_rational(rng: random.Random, bound: int = 5, nonzero: bool = False) -> Fraction:
    while True:
        value = Fraction(rng.randint(-bound, bound), rng.randint(1, 3))
        if value != 0 or not nonzero:
            return value


def random_coefficients(rng: random.Random, n: int, m: int):
    """(a_1..a_n, b_0..b_m) with a_n = 1 and b_m != 0."""
    a = [random_rational(rng) for _ in range(n - 1)] + [Fraction(1)]
    b = [random_rational(rng) for _ in range(m)] + [random_rational(rng, nonzero=True)]
    return a, b


def random_operator(rng: random.Random, n: int, m: int):
    from com.mhire.app.services.operator.airy_operator import validate

    a, b = random_coefficients(rng, n, m)
    return validate(n, m, a, b)


@pytest.fixture
def classical_airy():
    from com.mhire.app.services.operator.airy_operator import validate

    return validate(2, 1, [0, 1], [0, 1])
