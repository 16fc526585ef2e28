"""Empirical measures, hitting sets and the exponential bound on ||A^n chi_n||.

Neighbourhoods of a measure are total-variation balls.
"""

from __future__ import annotations

import logging
import math
from itertools import combinations_with_replacement

import numpy as np
from scipy.optimize import linprog

from thermo_formalism.errors import DomainError
from thermo_formalism.models import (
    EmpiricalMeasure,
    FiniteMapSystem,
    GrowthReport,
    InnerOptions,
    InvariantMeasure,
    Measure,
    TransferMatrix,
)
from thermo_formalism.systems import cycle_decomposition, hull_matrix, total_variation
from thermo_formalism.tentropy import t_entropy
from thermo_formalism.tolerances import HULL_TOL, NEG_INF

logger = logging.getLogger(__name__)

BALL_SLACK = 0.05
RATE_SLACK = 0.05
MAX_LATTICE_POINTS = 500


def _weights(mu) -> np.ndarray:
    return mu.weights if isinstance(mu, Measure) else np.asarray(mu, dtype=float)


def occupation_counts(system: FiniteMapSystem, n: int) -> np.ndarray:
    """Row x holds #{0 <= i < n : alpha^i(x) = y} for every y."""
    if n < 1:
        raise DomainError(f"n は1以上である必要があります (n={n})")
    size = system.n_states
    counts = np.zeros((size, size), dtype=np.int64)
    orbit = np.arange(size)
    for _ in range(n):
        counts[np.arange(size), orbit] += 1
        orbit = system.map[orbit]
    return counts


def empirical_measure(system: FiniteMapSystem, x: int, n: int) -> EmpiricalMeasure:
    if not 0 <= x < system.n_states:
        raise DomainError(f"x は [0, {system.n_states}) の範囲である必要があります (x={x})")
    counts = occupation_counts(system, n)[x]
    return EmpiricalMeasure(base_point=x, length=n, weights=Measure(counts / n), counts=counts)


def hitting_set(system: FiniteMapSystem, mu, radius: float, n: int) -> list[int]:
    """States x whose empirical measure of length n lies in the open TV ball of `radius` around mu."""
    if radius <= 0:
        raise DomainError(f"radius は正である必要があります (radius={radius})")
    if radius >= 1:
        return list(range(system.n_states))
    target = _weights(mu)
    occupation = occupation_counts(system, n) / n
    distances = 0.5 * np.abs(occupation - target[None, :]).sum(axis=1)
    return [int(x) for x in np.flatnonzero(distances < radius)]


def hull_distance(system: FiniteMapSystem, mu) -> tuple[float, np.ndarray]:
    """TV distance from mu to the invariant polytope, with the closest hull coefficients."""
    target = _weights(mu)
    V = hull_matrix(system)
    n, k = V.shape
    # variables: hull coefficients c (k), slacks t (n); minimize sum t / 2 with |V c - mu| <= t
    cost = np.concatenate([np.zeros(k), 0.5 * np.ones(n)])
    upper = np.block([[V, -np.eye(n)], [-V, -np.eye(n)]])
    bound = np.concatenate([target, -target])
    equality = np.concatenate([np.ones(k), np.zeros(n)])[None, :]
    outcome = linprog(cost, A_ub=upper, b_ub=bound, A_eq=equality, b_eq=[1.0], bounds=(0, None), method="highs")
    coefficients = np.clip(outcome.x[:k], 0.0, None)
    return float(max(outcome.fun, 0.0)), coefficients / coefficients.sum()


def absorption_horizon(system: FiniteMapSystem, radius: float) -> int:
    """Past this length every empirical measure is within `radius` of its own cycle measure."""
    decomposition = cycle_decomposition(system)
    transient_length = _max_transient_length(system)
    period = max(decomposition.periods)
    return math.ceil((transient_length + period / 2) / radius) + period


def _max_transient_length(system: FiniteMapSystem) -> int:
    on_cycle = np.zeros(system.n_states, dtype=bool)
    for cycle in cycle_decomposition(system).cycles:
        on_cycle[list(cycle)] = True
    longest = 0
    for x in range(system.n_states):
        steps = 0
        while not on_cycle[x]:
            x = int(system.map[x])
            steps += 1
        longest = max(longest, steps)
    return longest


def invariant_absorption_check(system: FiniteMapSystem, radius: float) -> int:
    """Smallest N with every empirical measure of length n > N closer than `radius` to the invariant polytope."""
    if radius <= 0:
        raise DomainError(f"radius は正である必要があります (radius={radius})")
    V = hull_matrix(system)
    horizon = absorption_horizon(system, radius)
    n_star = 0
    size = system.n_states
    counts = np.zeros((size, size), dtype=np.int64)
    orbit = np.arange(size)
    for n in range(1, horizon + 1):
        counts[np.arange(size), orbit] += 1
        orbit = system.map[orbit]
        occupation = counts / n
        nearest_vertex = 0.5 * np.abs(occupation[:, :, None] - V[None, :, :]).sum(axis=1).min(axis=1)
        for x in np.flatnonzero(nearest_vertex >= radius):
            if hull_distance(system, occupation[x])[0] >= radius:
                n_star = n
                break
    logger.debug("absorption: horizon=%d N*=%d", horizon, n_star)
    return n_star


def _lattice(k: int, resolution: int) -> list[np.ndarray]:
    points = []
    for combo in combinations_with_replacement(range(k), resolution):
        points.append(np.bincount(combo, minlength=k) / resolution)
    return points


def tau_radius(
    A: TransferMatrix,
    mu,
    radius: float,
    slack: float = BALL_SLACK,
    tau_n_max: int = 16,
    resolution: int = 4,
    opts: InnerOptions | None = None,
) -> float:
    """max tau(nu) over invariant nu with TV(nu, mu) <= radius + slack (lattice, rays and local refinement)."""
    system = A.system
    target = _weights(mu)
    V = hull_matrix(system)
    k = V.shape[1]
    limit = radius + slack

    def feasible(c: np.ndarray) -> bool:
        return total_variation(V @ c, target) <= limit

    cache: dict[tuple, float] = {}

    def tau_at(c: np.ndarray) -> float:
        key = tuple(np.round(c, 12))
        if key not in cache:
            weights = V @ c
            cache[key] = t_entropy(A, InvariantMeasure(weights / weights.sum(), certified=True), tau_n_max, opts=opts).value
        return cache[key]

    distance, center = hull_distance(system, target)
    if distance > limit:
        logger.info("TV 半径 %.3g の球に不変測度がありません (距離 %.3g)", limit, distance)
        return NEG_INF

    candidates = [center] + [np.eye(k)[j] for j in range(k)]
    for j in range(k):
        lo, hi = 0.0, 1.0
        if not feasible(center + hi * (np.eye(k)[j] - center)):
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if feasible(center + mid * (np.eye(k)[j] - center)):
                    lo = mid
                else:
                    hi = mid
            hi = lo
        candidates.append(center + hi * (np.eye(k)[j] - center))
    if math.comb(k + resolution - 1, resolution) <= MAX_LATTICE_POINTS:
        candidates.extend(_lattice(k, resolution))

    scored = [(tau_at(c), c) for c in candidates if feasible(c)]
    best_value, best = max(scored, key=lambda item: item[0])

    step = 0.5
    while step > 1e-4:
        improved = False
        for j in range(k):
            trial = best + step * (np.eye(k)[j] - best)
            if feasible(trial):
                value = tau_at(trial)
                if value > best_value + 1e-12:
                    best_value, best, improved = value, trial, True
        if not improved:
            step *= 0.5
    return float(best_value)


def _log_power_norm(A: TransferMatrix, chi: np.ndarray, n: int) -> float:
    """ln ||A^n chi||_inf with renormalization at every step."""
    v = chi.astype(float)
    log_scale = 0.0
    for _ in range(n):
        v = A.entries @ v
        top = float(np.max(v))
        if top <= 0:
            return NEG_INF
        v /= top
        log_scale += math.log(top)
    return log_scale + math.log(float(np.max(v)))


def _tail_slope(points: list[tuple[int, float]]) -> float:
    finite = [(n, value) for n, value in points if value > NEG_INF]
    if not finite:
        return NEG_INF
    tail = finite[len(finite) - max(1, math.ceil(len(finite) / 3)):]
    if len(tail) == 1:
        n, value = tail[0]
        return value / n
    ns, values = zip(*tail)
    return float(np.polyfit(np.asarray(ns, dtype=float), np.asarray(values), 1)[0])


def entropy_statistic_check(
    A: TransferMatrix,
    mu,
    radius: float,
    n_range,
    slack: float = BALL_SLACK,
    opts: InnerOptions | None = None,
) -> GrowthReport:
    """Growth of ||A^n chi_n|| against tau over the invariant ball around mu."""
    target = mu if isinstance(mu, Measure) else Measure(np.asarray(mu, dtype=float))
    system = A.system
    distance, _ = hull_distance(system, target)
    if distance > HULL_TOL:
        raise DomainError(f"mu は不変測度である必要があります (不変測度の凸包からの距離 {distance:.3g})")
    n_values = sorted(int(n) for n in n_range)
    if not n_values or n_values[0] < 1:
        raise DomainError("n_range は1以上の整数を含む必要があります")
    log_norms: list[tuple[int, float]] = []
    for n in n_values:
        chi = np.zeros(system.n_states)
        chi[hitting_set(system, target, radius, n)] = 1.0
        if not np.any(chi):
            log_norms.append((n, NEG_INF))
            continue
        log_norms.append((n, _log_power_norm(A, chi, n)))

    rates = tuple((n, value / n if value > NEG_INF else NEG_INF) for n, value in log_norms)
    fitted = _tail_slope(log_norms)
    bound = tau_radius(A, target, radius, slack, opts=opts)
    if fitted == NEG_INF:
        passed = True
    else:
        passed = fitted <= bound + RATE_SLACK
    if not passed:
        logger.warning("fitted rate %.6g が bound %.6g + %.2g を超えています", fitted, bound, RATE_SLACK)
    return GrowthReport(
        target_mu=target,
        radius=radius,
        rates=rates,
        fitted_rate=fitted,
        bound_t=bound,
        passed=passed,
    )
