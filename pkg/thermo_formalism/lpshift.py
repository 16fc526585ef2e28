"""Weighted shift operators (psi T) f = psi * (f o beta) on L^p(Y, m) for finite Y."""

from __future__ import annotations

import logging

import numpy as np
from scipy.special import logsumexp

from thermo_formalism.errors import DomainError, NoFeasibleMeasure, NormIdentityError, NumericalError
from thermo_formalism.legendre import maximize_on_hull
from thermo_formalism.models import (
    FiniteMeasureSystem,
    InnerOptions,
    LpRadiusResult,
    TransferMatrix,
    WeightedShift,
)
from thermo_formalism.spectral import perron_data
from thermo_formalism.systems import build_pf_operator
from thermo_formalism.tentropy import t_entropy
from thermo_formalism.tolerances import FACTORIZATION_TOL, NEG_INF, NORM_IDENTITY_REL_TOL, integrate_log, safe_log

logger = logging.getLogger(__name__)


def fiber_masses(system: FiniteMeasureSystem) -> np.ndarray:
    """m(beta^{-1}(x)) for every x."""
    return np.bincount(system.beta, weights=system.m, minlength=system.n_points)


def radon_nikodym_factor(system: FiniteMeasureSystem) -> np.ndarray:
    """d(beta(m))/dm as a function on Y."""
    return fiber_masses(system) / system.m


def distortion_constant(system: FiniteMeasureSystem) -> float:
    """Smallest C with m(beta^{-1}(G)) <= C m(G)."""
    return float(np.max(radon_nikodym_factor(system)))


def fiber_average_operator(system: FiniteMeasureSystem) -> np.ndarray:
    """Conditional expectation onto beta-fibers: (Eg)(x) = mean of g over beta^{-1}(x) w.r.t. m."""
    n = system.n_points
    masses = fiber_masses(system)
    E = np.zeros((n, n))
    E[system.beta, np.arange(n)] = system.m / masses[system.beta]
    return E


def transfer_from_measure(system: FiniteMeasureSystem) -> TransferMatrix:
    """A[x][y] = m_y / m_x on beta(y) = x, so that int over beta^{-1}(G) of f dm = int over G of Af dm."""
    A = build_pf_operator(system.map_system, system.m / system.m[system.beta])
    factored = radon_nikodym_factor(system)[:, None] * fiber_average_operator(system)
    mismatch = float(np.max(np.abs(factored - A.entries)))
    if mismatch > FACTORIZATION_TOL * max(1.0, float(np.max(A.entries))):
        raise NumericalError(f"A = diag(dβ(m)/dm) E の分解が成り立ちません (差 {mismatch:.3e})")
    return A


def is_conditional_expectation(A: TransferMatrix, tol: float = 1e-12) -> bool:
    """A1 = 1."""
    return bool(np.max(np.abs(A.entries.sum(axis=1) - 1.0)) <= tol)


def _log_abs_psi(ws: WeightedShift) -> np.ndarray:
    return safe_log(np.abs(ws.psi))


def _log_fiber_norm(ws: WeightedShift, n: int) -> float:
    """ln of max_z (sum over beta^n(y) = z of |w_n(y)|^p m_y / m_z)^(1/p)."""
    system = ws.system
    log_psi = _log_abs_psi(ws)
    log_weight = np.zeros(system.n_points)
    orbit = np.arange(system.n_points)
    for _ in range(n):
        log_weight = log_weight + log_psi[orbit]
        orbit = system.beta[orbit]
    terms = ws.p * log_weight + np.log(system.m)
    best = NEG_INF
    for z in np.unique(orbit):
        fiber = terms[orbit == z]
        if np.all(np.isneginf(fiber)):
            continue
        best = max(best, float(logsumexp(fiber)) - float(np.log(system.m[z])))
    return best / ws.p


def _log_transfer_norm(ws: WeightedShift, A: TransferMatrix, n: int) -> float:
    """ln of ||(A |psi|^p)^n 1||_inf^(1/p), iterated in log space."""
    log_B = safe_log(A.entries) + ws.p * _log_abs_psi(ws)[None, :]
    log_x = np.zeros(ws.system.n_points)
    for _ in range(n):
        terms = log_B + log_x[None, :]
        log_x = np.full(log_x.shape, NEG_INF)
        alive = np.any(np.isfinite(terms), axis=1)
        if np.any(alive):
            log_x[alive] = logsumexp(terms[alive], axis=1)
    return float(np.max(log_x)) / ws.p


def lp_power_norm(ws: WeightedShift, n: int) -> float:
    """||(psi T)^n|| on L^p(m) by the fiber formula, checked against the transfer-operator iteration."""
    if n < 1:
        raise DomainError(f"n は1以上である必要があります (n={n})")
    fiber = _log_fiber_norm(ws, n)
    transfer = _log_transfer_norm(ws, transfer_from_measure(ws.system), n)
    if fiber == NEG_INF or transfer == NEG_INF:
        if fiber != transfer:
            raise NormIdentityError(f"n={n}: 一方のノルムだけが0です (fiber={fiber}, transfer={transfer})")
        return 0.0
    if abs(np.expm1(fiber - transfer)) > NORM_IDENTITY_REL_TOL:
        raise NormIdentityError(f"n={n}: fiber 公式 {fiber!r} と transfer 反復 {transfer!r} が一致しません")
    return float(np.exp(fiber))


def lp_norm_sequence(ws: WeightedShift, n_max: int) -> list[float]:
    return [lp_power_norm(ws, n) for n in range(1, n_max + 1)]


def lp_spectral_radius(ws: WeightedShift, n_max: int = 32, tau_n_max: int = 16, opts: InnerOptions | None = None) -> LpRadiusResult:
    """ln r(psi T) against max over invariant mu of int ln|psi| dmu + tau(mu)/p."""
    if n_max < 4:
        raise DomainError(f"n_max は4以上である必要があります (n_max={n_max})")
    A = transfer_from_measure(ws.system)
    log_psi = _log_abs_psi(ws)
    log_radius = perron_data(safe_log(A.entries) + ws.p * log_psi[None, :]).lambda_value / ws.p

    norms = lp_norm_sequence(ws, n_max)
    rates = tuple(float(np.log(norm)) / n if norm > 0 else NEG_INF for n, norm in enumerate(norms, start=1))

    def objective(mu) -> float:
        linear = integrate_log(mu.weights, log_psi)
        if linear == NEG_INF:
            return NEG_INF
        return linear + t_entropy(A, mu, n_max=tau_n_max, opts=opts).value / ws.p

    try:
        vp_value, _ = maximize_on_hull(ws.system.map_system, objective)
    except NoFeasibleMeasure:
        logger.info("psi が全ての cycle 上で0を取るため両辺とも -inf です")
        vp_value = NEG_INF

    if log_radius == NEG_INF and vp_value == NEG_INF:
        gap = 0.0
    else:
        gap = log_radius - vp_value
    if abs(gap) > 1e-3:
        logger.warning("L^p 変分原理の gap %.3e が 1e-3 を超えています", gap)
    return LpRadiusResult(log_radius=log_radius, vp_value=vp_value, gap=gap, norm_rates=rates)
