import math

import numpy as np

from conftest import make_transfer
from thermo_formalism.errors import DomainError, NoFeasibleMeasure
from thermo_formalism.legendre import (
    dual_entropy,
    maximize_on_hull,
    project_to_simplex,
    reconstruct_lambda,
    verify_young,
)
from thermo_formalism.models import FiniteMapSystem, TransferMatrix
from thermo_formalism.spectral import equilibrium_measure, spectral_potential
from thermo_formalism.systems import cycle_decomposition, ergodic_measures, hull_point
from thermo_formalism.tentropy import t_entropy


def _tau(A):
    return lambda mu: t_entropy(A, mu, n_max=4).value


def test_dual_entropy_examples():
    fixed = dual_entropy(make_transfer([0], [2.0]), [1.0])
    assert math.isclose(fixed.value, math.log(2.0), abs_tol=1e-10)
    assert fixed.converged

    swap = dual_entropy(make_transfer([1, 0], [1.0, 1.0]), [0.5, 0.5])
    assert abs(swap.value) <= 1e-10


def test_dual_entropy_of_non_invariant_measure_diverges():
    result = dual_entropy(make_transfer([0, 0], [2.0, 3.0]), [0.0, 1.0])
    assert result.value == -math.inf
    assert result.diverged


def test_dual_entropy_requires_non_nilpotent_operator():
    try:
        dual_entropy(make_transfer([1, 1], [1.0, 0.0]), [0.0, 1.0])
        assert False, "DomainError expected"
    except DomainError:
        pass


def test_dual_entropy_matches_t_entropy(random_transfer, rng):
    for _ in range(10):
        A = random_transfer(max_states=6)
        k = len(cycle_decomposition(A.system).cycles)
        measures = list(ergodic_measures(A.system))
        measures += [hull_point(A.system, rng.dirichlet(np.ones(k))) for _ in range(20)]
        for mu in measures:
            tau = t_entropy(A, mu, n_max=4).value
            assert abs(dual_entropy(A, mu).value - tau) <= 1e-3


def test_young_residual_vanishes_at_equilibrium():
    A = make_transfer([1, 2, 0, 0], [2.0, 3.0, 4.0, 1.0])
    phi = np.array([0.1, 0.2, 0.3, 0.4])
    assert abs(verify_young(A, phi, equilibrium_measure(A, phi))) <= 1e-6

    full_shift = TransferMatrix(FiniteMapSystem.from_map([0, 1]), np.ones((2, 2)))
    assert abs(verify_young(full_shift, [0.0, 0.0], [0.5, 0.5])) <= 1e-6


def test_young_residual_is_nonnegative(random_transfer, rng):
    for _ in range(20):
        A = random_transfer(max_states=6)
        k = len(cycle_decomposition(A.system).cycles)
        phi = rng.uniform(-2, 2, size=A.n_states)
        mu = hull_point(A.system, rng.dirichlet(np.ones(k)))
        assert verify_young(A, phi, mu) >= -1e-8


def test_lower_estimate_of_spectral_potential(random_transfer, rng):
    for _ in range(50):
        A = random_transfer()
        k = len(cycle_decomposition(A.system).cycles)
        phi = rng.uniform(-2, 2, size=A.n_states)
        lam = spectral_potential(A, phi).lambda_value
        mu = hull_point(A.system, rng.dirichlet(np.ones(k)))
        assert lam >= mu.integrate(phi) + t_entropy(A, mu, n_max=4).value - 1e-8


def test_reconstruct_lambda_examples():
    two_fixed = make_transfer([0, 1], [2.0, 3.0])
    assert math.isclose(reconstruct_lambda(two_fixed, [0.0, 0.0], _tau(two_fixed)), math.log(3.0), abs_tol=1e-3)

    cycle = make_transfer([1, 2, 0], [0.5, 2.0, 3.0])
    expected = spectral_potential(cycle, [0.0, 0.0, 0.0]).lambda_value
    assert math.isclose(reconstruct_lambda(cycle, [0.0, 0.0, 0.0], _tau(cycle)), expected, abs_tol=1e-9)


def test_variational_principle(random_transfer, rng):
    for _ in range(100):
        A = random_transfer(max_states=6)
        phi = rng.uniform(-2, 2, size=A.n_states)
        lam = spectral_potential(A, phi).lambda_value
        assert abs(reconstruct_lambda(A, phi, _tau(A)) - lam) <= 1e-3
        mu_star = equilibrium_measure(A, phi)
        assert abs(lam - mu_star.integrate(phi) - t_entropy(A, mu_star, n_max=4).value) <= 1e-4


def test_legendre_transform_is_involutive(random_transfer, rng):
    for _ in range(5):
        A = random_transfer(max_states=4)
        phi = rng.uniform(-2, 2, size=A.n_states)
        lam = spectral_potential(A, phi).lambda_value
        oracle = lambda mu: dual_entropy(A, mu).value  # noqa: E731
        assert abs(reconstruct_lambda(A, phi, oracle) - lam) <= 1e-3


def test_maximize_on_hull_without_feasible_vertex():
    system = FiniteMapSystem.from_map([0, 1])
    try:
        maximize_on_hull(system, lambda mu: -math.inf)
        assert False, "NoFeasibleMeasure expected"
    except NoFeasibleMeasure:
        pass


def test_project_to_simplex():
    np.testing.assert_allclose(project_to_simplex(np.array([0.2, 0.8])), [0.2, 0.8])
    np.testing.assert_allclose(project_to_simplex(np.array([2.0, 0.0])), [1.0, 0.0])
    np.testing.assert_allclose(project_to_simplex(np.array([1.0, 1.0, -3.0])), [0.5, 0.5, 0.0])


def test_variational_principle_with_partly_vanishing_weights(rng):
    for _ in range(60):
        n = int(rng.integers(2, 7))
        table = rng.integers(0, n, size=n)
        cycles = cycle_decomposition(FiniteMapSystem.from_map(table)).cycles
        kept = cycles[int(rng.integers(len(cycles)))]
        psi = rng.uniform(0.2, 5.0, size=n)
        dead = rng.uniform(size=n) < 0.5
        dead[list(kept)] = False
        psi[dead] = 0.0
        A = make_transfer(table, psi)
        phi = rng.uniform(-2, 2, size=n)
        lam = spectral_potential(A, phi).lambda_value
        assert math.isfinite(lam)
        assert abs(reconstruct_lambda(A, phi, _tau(A)) - lam) <= 1e-3
