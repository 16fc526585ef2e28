from __future__ import annotations

import logging

import numpy as np
from scipy.optimize import nnls

from thermo_formalism.errors import DimensionError, DomainError
from thermo_formalism.models import (
    CycleDecomposition,
    FiniteMapSystem,
    InvariantMeasure,
    Measure,
    TransferMatrix,
)
from thermo_formalism.tolerances import INVARIANCE_TOL, safe_log

logger = logging.getLogger(__name__)


def _weights(mu) -> np.ndarray:
    if isinstance(mu, Measure):
        return mu.weights
    return np.asarray(mu, dtype=float)


def build_pf_operator(system: FiniteMapSystem, psi) -> TransferMatrix:
    """Perron-Frobenius operator (Af)(x) = sum over alpha(y) = x of psi(y) f(y)."""
    weights = np.asarray(psi, dtype=float)
    if weights.shape != (system.n_states,):
        raise DimensionError(f"psi の長さ {weights.shape} が n_states={system.n_states} と一致しません")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise DomainError("psi は非負の有限値である必要があります")
    entries = np.zeros((system.n_states, system.n_states))
    entries[system.map, np.arange(system.n_states)] = weights
    return TransferMatrix(system=system, entries=entries)


def check_homological_identity(A: TransferMatrix) -> bool:
    """Brute-force A((e_z o alpha) * e_y) == e_z * (A e_y) over all basis pairs."""
    n = A.n_states
    alpha = A.system.map
    entries = A.entries
    basis = np.eye(n)
    for z in range(n):
        f_after_alpha = (alpha == z).astype(float)
        for y in range(n):
            lhs = entries @ (f_after_alpha * basis[y])
            rhs = basis[z] * (entries @ basis[y])
            if not np.array_equal(lhs, rhs):
                return False
    return True


def support_violations(A: TransferMatrix) -> list[tuple[int, int]]:
    rows, cols = np.nonzero(A.entries)
    alpha = A.system.map
    return [(int(x), int(y)) for x, y in zip(rows, cols) if alpha[y] != x]


def pushforward(system: FiniteMapSystem, mu) -> np.ndarray:
    weights = _weights(mu)
    if weights.shape != (system.n_states,):
        raise DimensionError("measure の長さが n_states と一致しません")
    return np.bincount(system.map, weights=weights, minlength=system.n_states)


def cycle_decomposition(system: FiniteMapSystem) -> CycleDecomposition:
    n = system.n_states
    alpha = system.map
    state = np.zeros(n, dtype=int)  # 0 unseen, 1 on current path, 2 done
    on_cycle = np.zeros(n, dtype=bool)
    cycles: list[tuple[int, ...]] = []
    for start in range(n):
        if state[start]:
            continue
        path: list[int] = []
        x = start
        while state[x] == 0:
            state[x] = 1
            path.append(x)
            x = int(alpha[x])
        if state[x] == 1:
            loop = path[path.index(x):]
            anchor = loop.index(min(loop))
            ordered = tuple(loop[anchor:] + loop[:anchor])
            cycles.append(ordered)
            on_cycle[list(ordered)] = True
        for y in path:
            state[y] = 2
    cycles.sort(key=lambda cycle: cycle[0])
    transient = tuple(int(x) for x in np.flatnonzero(~on_cycle))
    return CycleDecomposition(cycles=tuple(cycles), transient=transient)


def ergodic_measures(system: FiniteMapSystem) -> list[InvariantMeasure]:
    measures: list[InvariantMeasure] = []
    for cycle in cycle_decomposition(system).cycles:
        weights = np.zeros(system.n_states)
        weights[list(cycle)] = 1.0 / len(cycle)
        measures.append(InvariantMeasure(weights, certified=is_invariant(weights, system)))
    return measures


def is_invariant(mu, system: FiniteMapSystem) -> bool:
    weights = _weights(mu)
    return bool(np.max(np.abs(pushforward(system, weights) - weights)) <= INVARIANCE_TOL)


def hull_matrix(system: FiniteMapSystem) -> np.ndarray:
    """Columns are the ergodic (cycle) measures."""
    return np.column_stack([nu.weights for nu in ergodic_measures(system)])


def hull_point(system: FiniteMapSystem, coefficients) -> InvariantMeasure:
    coefficients = np.asarray(coefficients, dtype=float)
    vertices = hull_matrix(system)
    if coefficients.shape != (vertices.shape[1],):
        raise DimensionError(f"hull 係数の長さは cycle 数 {vertices.shape[1]} である必要があります")
    if np.any(coefficients < 0):
        raise DomainError("hull 係数は非負である必要があります")
    weights = vertices @ (coefficients / coefficients.sum())
    return InvariantMeasure(weights / weights.sum(), certified=True)


def hull_coordinates(system: FiniteMapSystem, mu) -> tuple[np.ndarray, float]:
    """Nonnegative least-squares projection of mu onto the cycle measures."""
    vertices = hull_matrix(system)
    coefficients, residual = nnls(vertices, _weights(mu))
    return coefficients, float(residual)


def total_variation(a, b) -> float:
    return 0.5 * float(np.sum(np.abs(_weights(a) - _weights(b))))


def intro_radius_formula(system: FiniteMapSystem, a) -> float:
    """ln r(aT) as the max over ergodic measures of the integral of ln|a|."""
    log_abs = safe_log(np.abs(np.asarray(a, dtype=float)))
    best = -np.inf
    for cycle in cycle_decomposition(system).cycles:
        best = max(best, float(np.mean(log_abs[list(cycle)])))
    return best
