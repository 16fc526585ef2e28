"""Cross-checks on topological Markov chains.

Edge potentials are (n, n) arrays indexed like the adjacency matrix: entry [i][j] is the value
on cylinders starting with the allowed word ij. Markov measures use forward transitions,
P[i][j] = probability that symbol j follows symbol i.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp
from scipy.stats import entropy

from thermo_formalism.errors import DimensionError, DomainError, ReducibleShiftError
from thermo_formalism.legendre import log_matrix_pieces, minimize_max_minus_linear
from thermo_formalism.models import (
    DescentOptions,
    LatushkinStepinResult,
    MarkovMeasure,
    MarkovSearchOptions,
    MarkovShiftSystem,
    RuelleWaltersResult,
    TmcDualEntropyResult,
)
from thermo_formalism.spectral import perron_data, strong_components
from thermo_formalism.tolerances import INVARIANCE_TOL, NEG_INF, integrate_log, safe_log

logger = logging.getLogger(__name__)

GAP_LOWER = -1e-4
GAP_UPPER = 1e-2


def _edge_potential(shift: MarkovShiftSystem, log_psi) -> np.ndarray:
    if log_psi is None:
        return np.zeros((shift.n_symbols, shift.n_symbols))
    values = np.asarray(log_psi, dtype=float)
    if values.shape != (shift.n_symbols, shift.n_symbols):
        raise DimensionError(f"edge potential の shape {values.shape} が n_symbols={shift.n_symbols} と一致しません")
    if np.any(np.isnan(values)) or np.any(values == np.inf):
        raise DomainError("edge potential に NaN または +inf が含まれています")
    return values


def _log_weighted_adjacency(shift: MarkovShiftSystem, log_psi) -> np.ndarray:
    values = _edge_potential(shift, log_psi)
    return np.where(shift.adjacency > 0, values, NEG_INF)


def stationary_distribution(P) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    system = np.vstack([P.T - np.eye(n), np.ones((1, n))])
    rhs = np.concatenate([np.zeros(n), [1.0]])
    pi, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def markov_measure(P) -> MarkovMeasure:
    P = np.asarray(P, dtype=float)
    return MarkovMeasure(pi=stationary_distribution(P), P=P)


def bernoulli_measure(probs) -> MarkovMeasure:
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 1 or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
        raise DomainError("Bernoulli measure の確率ベクトルが不正です")
    return MarkovMeasure(pi=probs, P=np.tile(probs, (probs.size, 1)))


def check_support(shift: MarkovShiftSystem, mm: MarkovMeasure) -> None:
    if mm.P.shape != shift.adjacency.shape:
        raise DimensionError("Markov measure のサイズが n_symbols と一致しません")
    if np.any((mm.edge_weights > 0) & (shift.adjacency == 0)):
        raise DomainError("Markov measure が adjacency で禁止された遷移を持っています")


def ks_entropy(mm: MarkovMeasure) -> float:
    """-sum_i pi_i sum_j P_ij ln P_ij."""
    rows = entropy(mm.P, axis=1)
    return float(max(np.dot(mm.pi, rows), 0.0))


def edge_integral(mm: MarkovMeasure, edge_values) -> float:
    """Integral of an edge potential; -inf charged by the measure gives -inf, uncharged -inf gives 0."""
    return integrate_log(mm.edge_weights.ravel(), np.asarray(edge_values, dtype=float).ravel())


def pressure(shift: MarkovShiftSystem, log_psi=None) -> float:
    """ln r of the matrix adjacency[i][j] * psi[i][j]."""
    return perron_data(_log_weighted_adjacency(shift, log_psi)).lambda_value


def topological_entropy(shift: MarkovShiftSystem) -> float:
    return pressure(shift, None)


def _require_irreducible(allowed: np.ndarray) -> None:
    if len(strong_components(allowed)) != 1:
        raise ReducibleShiftError("adjacency (ψ > 0 の辺) が既約ではありません")


def parry_measure(shift: MarkovShiftSystem, log_psi=None) -> MarkovMeasure:
    """Equilibrium Markov measure of an edge potential: P_ij = M_ij v_j / (r v_i), pi = u v."""
    L = _log_weighted_adjacency(shift, log_psi)
    _require_irreducible(np.isfinite(L))
    result = perron_data(L)
    logits = L + result.log_right[None, :] - result.log_right[:, None] - result.lambda_value
    P = np.where(np.isfinite(logits), np.exp(logits), 0.0)
    P /= P.sum(axis=1, keepdims=True)
    log_pi = result.log_left + result.log_right
    pi = np.exp(log_pi - np.max(log_pi))
    return MarkovMeasure(pi=pi / pi.sum(), P=P)


def _transition_matrix(theta: np.ndarray, allowed: np.ndarray) -> np.ndarray:
    logits = np.full(allowed.shape, NEG_INF)
    logits[allowed] = theta
    logits = logits - logsumexp(logits, axis=1, keepdims=True)
    return np.exp(logits)


def _search_markov(
    allowed: np.ndarray,
    edge_values: np.ndarray,
    entropy_scale: float,
    opts: MarkovSearchOptions,
) -> tuple[float, MarkovMeasure]:
    """max over Markov measures on `allowed` of sum pi_i P_ij edge_values_ij + entropy_scale * h."""
    _require_irreducible(allowed)
    values = np.where(allowed, edge_values, 0.0)

    def evaluate(theta: np.ndarray) -> tuple[float, MarkovMeasure]:
        mm = markov_measure(_transition_matrix(theta, allowed))
        return edge_integral(mm, values) + entropy_scale * ks_entropy(mm), mm

    n_free = int(allowed.sum())
    if np.all(allowed.sum(axis=1) == 1):
        return evaluate(np.zeros(n_free))

    rng = np.random.default_rng(opts.seed)
    starts = [np.zeros(n_free)] + [rng.normal(size=n_free) for _ in range(opts.n_starts - 1)]
    best_value, best_measure = NEG_INF, None
    for start in starts:
        outcome = minimize(
            lambda theta: -evaluate(theta)[0],
            start,
            method="L-BFGS-B",
            options={"maxiter": opts.max_iter},
        )
        value, mm = evaluate(outcome.x)
        logger.debug("multi-start: value=%.12g nit=%d", value, outcome.nit)
        if value > best_value:
            best_value, best_measure = value, mm
    return best_value, best_measure


def _report_gap(label: str, gap: float) -> None:
    if not GAP_LOWER <= gap <= GAP_UPPER:
        logger.warning("%s の gap %.3e が許容範囲 [%g, %g] の外です", label, gap, GAP_LOWER, GAP_UPPER)


def ruelle_walters_check(shift: MarkovShiftSystem, log_psi=None, opts: MarkovSearchOptions | None = None) -> RuelleWaltersResult:
    opts = opts or MarkovSearchOptions()
    L = _log_weighted_adjacency(shift, log_psi)
    allowed = np.isfinite(L)
    pressure_value = perron_data(L).lambda_value
    vp_value, maximizer = _search_markov(allowed, L, 1.0, opts)
    gap = pressure_value - vp_value
    _report_gap("Ruelle-Walters", gap)
    return RuelleWaltersResult(pressure_value, vp_value, gap, maximizer)


def latushkin_stepin_radius(
    shift: MarkovShiftSystem,
    log_abs_a,
    rho=None,
    p: float = 1.0,
    opts: MarkovSearchOptions | None = None,
) -> LatushkinStepinResult:
    """(1/p) P(ln(|a|^p rho)) against sup over mu of int ln|a| + (int ln rho + h) / p."""
    opts = opts or MarkovSearchOptions()
    if not np.isfinite(p) or p < 1:
        raise DomainError(f"p は1以上である必要があります (p={p})")
    if rho is None:
        rho = shift.branch_weights
    if rho is None:
        raise DomainError("rho (branch_weights) が指定されていません")
    rho = np.asarray(rho, dtype=float)
    if rho.shape != shift.adjacency.shape or np.any(rho < 0):
        raise DomainError("rho は adjacency と同じ shape の非負行列である必要があります")
    fiber_sums = (rho * shift.adjacency).sum(axis=0)
    if np.max(np.abs(fiber_sums - 1.0)) > INVARIANCE_TOL:
        raise DomainError(f"rho の逆像和が1ではありません: {fiber_sums.tolist()}")

    log_a = _edge_potential(shift, log_abs_a)
    log_rho = safe_log(rho)
    L = _log_weighted_adjacency(shift, p * log_a + log_rho)
    lhs = perron_data(L).lambda_value / p
    allowed = np.isfinite(L)
    rhs, maximizer = _search_markov(allowed, np.where(allowed, log_a + log_rho / p, 0.0), 1.0 / p, opts)
    gap = lhs - rhs
    _report_gap("Latushkin-Stepin", gap)
    return LatushkinStepinResult(lhs, rhs, gap, maximizer)


def tmc_dual_entropy_check(
    shift: MarkovShiftSystem,
    log_psi,
    mm: MarkovMeasure,
    depth_k: int = 2,
    opts: DescentOptions | None = None,
) -> TmcDualEntropyResult:
    """inf over depth-k potentials of lambda(phi) - mu(phi) against int ln psi + h(mu)."""
    if not isinstance(mm, MarkovMeasure):
        raise DomainError("tmc_dual_entropy_check は MarkovMeasure のみを受け付けます")
    if depth_k not in (1, 2):
        raise DomainError(f"depth_k は 1 または 2 である必要があります (depth_k={depth_k})")
    check_support(shift, mm)
    base = _log_weighted_adjacency(shift, log_psi)
    closed_form = edge_integral(mm, np.where(np.isfinite(base), base, NEG_INF)) + ks_entropy(mm)

    n = shift.n_symbols
    if depth_k == 2:
        edges = np.flatnonzero(shift.adjacency.ravel() > 0)

        def lift(x: np.ndarray) -> np.ndarray:
            phi = np.zeros(n * n)
            phi[edges] = x
            return phi.reshape(n, n)

        def embed(edge_measure: np.ndarray) -> np.ndarray:
            return edge_measure.ravel()[edges]

        linear = mm.edge_weights.ravel()[edges]
    else:

        def lift(x: np.ndarray) -> np.ndarray:
            return np.repeat(x[:, None], n, axis=1)

        def embed(edge_measure: np.ndarray) -> np.ndarray:
            return edge_measure.sum(axis=1)

        linear = np.asarray(mm.pi, dtype=float)

    pieces_at = log_matrix_pieces(base, embed, lift)
    result = minimize_max_minus_linear(pieces_at, linear, np.zeros(linear.size), opts)
    gap = result.value - closed_form if result.value > NEG_INF or closed_form > NEG_INF else 0.0
    return TmcDualEntropyResult(result.value, closed_form, gap, result.converged)
