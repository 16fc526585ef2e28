import numpy as np
import pytest

from thermo_formalism.models import FiniteMapSystem
from thermo_formalism.systems import build_pf_operator


def make_transfer(table, psi):
    system = FiniteMapSystem.from_map(table)
    return build_pf_operator(system, np.asarray(psi, dtype=float))


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def random_transfer(rng):
    """Factory for random Perron-Frobenius operators with psi uniform in [0.2, 5]."""

    def factory(max_states: int = 8, min_states: int = 1):
        n = int(rng.integers(min_states, max_states + 1))
        table = rng.integers(0, n, size=n)
        return make_transfer(table, rng.uniform(0.2, 5.0, size=n))

    return factory
