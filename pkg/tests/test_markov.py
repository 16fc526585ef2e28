import math

import numpy as np

from thermo_formalism.errors import DomainError, ReducibleShiftError
from thermo_formalism.markov import (
    bernoulli_measure,
    check_support,
    ks_entropy,
    latushkin_stepin_radius,
    markov_measure,
    parry_measure,
    pressure,
    ruelle_walters_check,
    tmc_dual_entropy_check,
    topological_entropy,
)
from thermo_formalism.models import MarkovSearchOptions, MarkovShiftSystem

GOLDEN = math.log((1 + math.sqrt(5)) / 2)


def _shift(adjacency, rho=None):
    adjacency = np.asarray(adjacency, dtype=float)
    return MarkovShiftSystem(
        n_symbols=adjacency.shape[0],
        adjacency=adjacency,
        branch_weights=None if rho is None else np.asarray(rho, dtype=float),
        stochastic_on_fibers=rho is not None,
    )


def _binary_entropy(q):
    return -q * math.log(q) - (1 - q) * math.log(1 - q)


def test_ks_entropy_examples():
    assert ks_entropy(markov_measure([[0.0, 1.0], [1.0, 0.0]])) == 0.0
    assert math.isclose(ks_entropy(bernoulli_measure([0.5, 0.5])), math.log(2.0), abs_tol=1e-12)
    for q in (0.1, 0.25, 0.9):
        assert math.isclose(ks_entropy(bernoulli_measure([q, 1 - q])), _binary_entropy(q), abs_tol=1e-12)


def test_markov_measure_is_stationary():
    mm = markov_measure([[0.2, 0.8], [0.6, 0.4]])
    np.testing.assert_allclose(mm.pi @ mm.P, mm.pi, atol=1e-12)
    np.testing.assert_allclose(mm.pi, [3 / 7, 4 / 7], atol=1e-12)


def test_pressure_examples():
    full = _shift(np.ones((2, 2)))
    assert math.isclose(pressure(full), math.log(2.0), abs_tol=1e-10)
    assert math.isclose(topological_entropy(_shift([[1, 1], [1, 0]])), GOLDEN, abs_tol=1e-10)
    assert math.isclose(pressure(_shift([[1]]), [[math.log(3.5)]]), math.log(3.5), abs_tol=1e-12)
    assert pressure(_shift([[0, 1], [0, 0]])) == -math.inf


def test_pressure_is_additively_homogeneous(rng):
    shift = _shift([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    for _ in range(20):
        log_psi = rng.uniform(-2, 2, size=(3, 3))
        c = float(rng.uniform(-3, 3))
        assert math.isclose(pressure(shift, log_psi + c), pressure(shift, log_psi) + c, abs_tol=1e-10)


def test_parry_measure_of_full_shift_is_uniform():
    mm = parry_measure(_shift(np.ones((2, 2))))
    np.testing.assert_allclose(mm.P, np.full((2, 2), 0.5), atol=1e-10)
    np.testing.assert_allclose(mm.pi, [0.5, 0.5], atol=1e-10)


def test_ruelle_walters_full_shift():
    result = ruelle_walters_check(_shift(np.ones((2, 2))), opts=MarkovSearchOptions(seed=7))
    assert math.isclose(result.pressure_value, math.log(2.0), abs_tol=1e-10)
    assert -1e-4 <= result.gap <= 1e-2
    np.testing.assert_allclose(result.maximizer.P, np.full((2, 2), 0.5), atol=1e-3)


def test_ruelle_walters_concentrates_on_heavy_loop():
    log_psi = np.array([[10.0, 0.0], [0.0, 0.0]])
    result = ruelle_walters_check(_shift([[1, 1], [1, 0]]), log_psi, MarkovSearchOptions(seed=11))
    assert abs(result.pressure_value - 10.0) <= 1e-2
    assert abs(result.vp_value - 10.0) <= 1e-2
    assert -1e-4 <= result.gap <= 1e-2


def test_ruelle_walters_single_loop_is_exact():
    result = ruelle_walters_check(_shift([[1]]), [[0.3]])
    assert result.gap == 0.0


def test_ruelle_walters_rejects_reducible_shift():
    try:
        ruelle_walters_check(_shift([[1, 1], [0, 1]]))
        assert False, "ReducibleShiftError expected"
    except ReducibleShiftError:
        pass


def test_latushkin_stepin_full_shift():
    rho = np.full((2, 2), 0.5)
    shift = _shift(np.ones((2, 2)), rho)
    result = latushkin_stepin_radius(shift, np.zeros((2, 2)), p=1.0, opts=MarkovSearchOptions(seed=3))
    assert abs(result.lhs) <= 1e-10
    assert abs(result.rhs) <= 1e-3
    assert abs(result.gap) <= 1e-3


def test_latushkin_stepin_large_p_recovers_max_cycle_average():
    rho = np.full((2, 2), 0.5)
    shift = _shift(np.ones((2, 2)), rho)
    log_abs_a = np.array([[0.0, 0.0], [0.0, math.log(2.0)]])
    result = latushkin_stepin_radius(shift, log_abs_a, p=1000.0, opts=MarkovSearchOptions(seed=5))
    assert abs(result.lhs - math.log(2.0)) <= 5e-3
    assert abs(result.rhs - math.log(2.0)) <= 5e-3


def test_latushkin_stepin_single_branch():
    shift = _shift([[1]], [[1.0]])
    result = latushkin_stepin_radius(shift, [[math.log(1.7)]], p=2.0)
    assert math.isclose(result.lhs, math.log(1.7), abs_tol=1e-12)
    assert math.isclose(result.rhs, math.log(1.7), abs_tol=1e-12)


def test_latushkin_stepin_rejects_small_p():
    shift = _shift(np.ones((2, 2)), np.full((2, 2), 0.5))
    try:
        latushkin_stepin_radius(shift, np.zeros((2, 2)), p=0.5)
        assert False, "DomainError expected"
    except DomainError:
        pass


def test_tmc_dual_entropy_of_bernoulli_measures():
    shift = _shift(np.ones((2, 2)))
    log_half = np.full((2, 2), -math.log(2.0))
    assert abs(pressure(shift, log_half)) <= 1e-12
    for q in np.arange(1, 10) / 10:
        result = tmc_dual_entropy_check(shift, log_half, bernoulli_measure([q, 1 - q]))
        assert math.isclose(result.closed_form, _binary_entropy(q) - math.log(2.0), abs_tol=1e-12)
        assert abs(result.legendre_value - result.closed_form) <= 1e-3


def test_tmc_dual_entropy_at_maximizing_measure_is_zero():
    shift = _shift(np.ones((2, 2)))
    result = tmc_dual_entropy_check(shift, np.full((2, 2), -math.log(2.0)), bernoulli_measure([0.5, 0.5]))
    assert abs(result.legendre_value) <= 1e-12
    assert result.converged


def test_tmc_dual_entropy_of_cycle_measure():
    shift = _shift([[1, 1], [1, 0]])
    log_psi = np.array([[0.4, 1.0], [-0.2, 0.0]])
    cycle = markov_measure([[0.0, 1.0], [1.0, 0.0]])
    result = tmc_dual_entropy_check(shift, log_psi, cycle)
    assert math.isclose(result.closed_form, 0.4, abs_tol=1e-12)
    assert abs(result.legendre_value - 0.4) <= 1e-3


def test_tmc_dual_entropy_rejects_non_markov_input():
    try:
        tmc_dual_entropy_check(_shift(np.ones((2, 2))), None, np.array([0.5, 0.5]))
        assert False, "DomainError expected"
    except DomainError:
        pass


def test_markov_measure_must_respect_adjacency():
    try:
        check_support(_shift([[1, 1], [1, 0]]), bernoulli_measure([0.5, 0.5]))
        assert False, "DomainError expected"
    except DomainError:
        pass
