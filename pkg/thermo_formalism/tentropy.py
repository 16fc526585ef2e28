"""t-entropy by its direct definition.

tau_n(mu, D) = sup over probability measures m of sum over g in D of mu(g) ln(m(A^n g) / mu(g)),
tau(mu) = inf over n and D of tau_n(mu, D) / n. On a finite phase space the infimum over
partitions of unity is attained at the point partition (log-sum inequality), so `tau_n`
works with indicator functions and `tau_n_partition` exists to check that reduction.
"""

from __future__ import annotations

import logging

import numpy as np

from thermo_formalism.errors import DimensionError, DomainError, NullColumnError
from thermo_formalism.models import (
    InnerOptions,
    InvariantMeasure,
    InnerSolution,
    Measure,
    PartitionOfUnity,
    TauResult,
    TransferMatrix,
)
from thermo_formalism.systems import is_invariant
from thermo_formalism.tolerances import KKT_TOL, NEG_INF

logger = logging.getLogger(__name__)

SUBADDITIVITY_SLACK = 1e-8


def _weights(mu, n: int) -> np.ndarray:
    weights = mu.weights if isinstance(mu, Measure) else Measure(np.asarray(mu, dtype=float)).weights
    if weights.shape != (n,):
        raise DimensionError(f"measure の長さが n_states={n} と一致しません")
    return weights


def point_partition(n: int) -> PartitionOfUnity:
    return PartitionOfUnity(np.eye(n))


def random_soft_partition(n: int, k: int, rng: np.random.Generator) -> PartitionOfUnity:
    functions = rng.dirichlet(np.ones(k), size=n).T
    functions /= functions.sum(axis=0, keepdims=True)
    return PartitionOfUnity(functions)


def _objective(kernel: np.ndarray, mass: np.ndarray, m: np.ndarray) -> float:
    return float(np.dot(mass, np.log((kernel.T @ m) / mass)))


def _em_maximize(kernel: np.ndarray, mass: np.ndarray, start: np.ndarray, opts: InnerOptions):
    """Multiplicative update m_x <- m_x sum_g mass_g K[x][g] / (K^T m)_g on the simplex."""
    m = start / start.sum()
    value = _objective(kernel, mass, m)
    iterations = 0
    for iterations in range(1, opts.max_iter + 1):
        gradient = kernel @ (mass / (kernel.T @ m))
        m_next = m * gradient
        m_next /= m_next.sum()
        value_next = _objective(kernel, mass, m_next)
        change = abs(value_next - value)
        if value_next >= value:
            m, value = m_next, value_next
        if change < opts.tol:
            break
    gradient = kernel @ (mass / (kernel.T @ m))
    upper = float(np.max(gradient - 1.0))
    on_support = m > 1e-12
    equality = float(np.max(np.abs(gradient[on_support] - 1.0))) if np.any(on_support) else 0.0
    kkt = max(upper, equality, 0.0)
    return m, value, kkt, iterations


def inner_measure_opt(An, mu, opts: InnerOptions | None = None) -> InnerSolution:
    """sup over m of sum_y mu_y ln((A^n)^T m)_y / mu_y), started uniform on the rows that reach supp(mu)."""
    opts = opts or InnerOptions()
    kernel_full = np.asarray(An, dtype=float)
    n = kernel_full.shape[0]
    weights = _weights(mu, n)
    support = np.flatnonzero(weights > 0)
    kernel = kernel_full[:, support]
    null = np.flatnonzero(~np.any(kernel > 0, axis=0))
    if null.size:
        column = int(support[null[0]])
        raise NullColumnError(f"A^n の列 {column} が mu の台の上で恒等的に0です", column=column)
    rows = np.any(kernel > 0, axis=1).astype(float)
    m, value, kkt, iterations = _em_maximize(kernel, weights[support], rows, opts)
    if kkt > KKT_TOL:
        logger.warning("内側最適化の KKT 残差が %.3e です", kkt)
    return InnerSolution(
        measure=Measure(m),
        value=value,
        kkt_residual=kkt,
        converged=kkt <= opts.kkt_tol,
        iterations=iterations,
    )


def _power(A: TransferMatrix, n: int) -> np.ndarray:
    if n < 1:
        raise DomainError(f"n は1以上である必要があります (n={n})")
    return np.linalg.matrix_power(A.entries, n)


def tau_n_partition(A: TransferMatrix, mu, D: PartitionOfUnity, n: int, opts: InnerOptions | None = None) -> float:
    opts = opts or InnerOptions()
    weights = _weights(mu, A.n_states)
    if D.functions.shape[1] != A.n_states:
        raise DimensionError("partition of unity の関数の長さが n_states と一致しません")
    An = _power(A, n)
    masses = D.functions @ weights
    charged = masses > 0
    kernel = An @ D.functions[charged].T
    if np.any(~np.any(kernel > 0, axis=0)):
        return NEG_INF
    mass = masses[charged]
    starts = [np.any(kernel > 0, axis=1).astype(float)]
    try:
        starts.append(inner_measure_opt(An, weights, opts).measure.weights)
    except NullColumnError:
        pass
    best = NEG_INF
    for start in starts:
        if not np.any(kernel.T @ start > 0) or np.any(kernel.T @ start <= 0):
            continue
        _, value, _, _ = _em_maximize(kernel, mass, start, opts)
        best = max(best, value)
    return best


def tau_n(A: TransferMatrix, mu, n: int, opts: InnerOptions | None = None) -> float:
    try:
        return inner_measure_opt(_power(A, n), mu, opts).value
    except NullColumnError as exc:
        logger.info("null column %d: tau_n = -inf", exc.column)
        return NEG_INF


def t_entropy(A: TransferMatrix, mu, n_max: int = 32, tol: float = 1e-6, opts: InnerOptions | None = None) -> TauResult:
    if n_max < 4:
        raise DomainError(f"n_max は4以上である必要があります (n_max={n_max})")
    weights = _weights(mu, A.n_states)
    raw: list[float] = []
    kkt = 0.0
    An = np.eye(A.n_states)
    for _ in range(n_max):
        An = An @ A.entries
        try:
            solution = inner_measure_opt(An, weights, opts)
        except NullColumnError as exc:
            logger.info("null column %d: tau = -inf", exc.column)
            return TauResult(NEG_INF, tuple([NEG_INF] * n_max), converged=True, inner_kkt_residual=0.0)
        raw.append(solution.value)
        kkt = max(kkt, solution.kkt_residual)

    per_n = tuple(value / (k + 1) for k, value in enumerate(raw))
    half = n_max // 2
    converged = abs(per_n[2 * half - 1] - per_n[half - 1]) < tol

    violations = 0
    certified = weights_certified(mu, A)
    if certified:
        for a in range(1, n_max + 1):
            for b in range(1, n_max - a + 1):
                if raw[a + b - 1] > raw[a - 1] + raw[b - 1] + SUBADDITIVITY_SLACK:
                    violations += 1
        if violations:
            logger.warning("tau_n の劣加法性が %d 組で破れています", violations)

    return TauResult(
        value=float(min(per_n)),
        per_n=per_n,
        converged=converged,
        inner_kkt_residual=kkt,
        subadditivity_violations=violations,
    )


def weights_certified(mu, A: TransferMatrix) -> bool:
    if isinstance(mu, InvariantMeasure):
        return mu.certified
    return is_invariant(mu, A.system)
