from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from thermo_formalism.errors import DimensionError, DomainError, NonUniqueEquilibrium, SpectralConvergenceError
from thermo_formalism.models import (
    FiniteMapSystem,
    InvariantMeasure,
    Potential,
    PowerIterationOptions,
    SpectralResult,
    TransferMatrix,
)
from thermo_formalism.systems import is_invariant
from thermo_formalism.tolerances import GELFAND_SLACK, NEG_INF, SIMPLE_REL_TOL, safe_log

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ComponentPiece:
    """Perron data of one strong component of the support graph."""

    states: np.ndarray
    log_radius: float
    log_right: np.ndarray
    log_left: np.ndarray
    edge_measure: np.ndarray
    iterations: int

    @property
    def vertex_measure(self) -> np.ndarray:
        return self.edge_measure.sum(axis=0)


def _potential_values(phi, n: int) -> np.ndarray:
    values = phi.values if isinstance(phi, Potential) else Potential(np.asarray(phi, dtype=float)).values
    if values.shape != (n,):
        raise DimensionError(f"potential の長さ {values.shape} が n_states={n} と一致しません")
    return values


def weighted_log_matrix(A: TransferMatrix, phi) -> np.ndarray:
    """Entrywise log of A diag(e^phi)."""
    values = _potential_values(phi, A.n_states)
    return safe_log(A.entries) + values[None, :]


def birkhoff_sum(system: FiniteMapSystem, phi, n: int) -> np.ndarray:
    if n < 1:
        raise DomainError(f"n は1以上である必要があります (n={n})")
    values = _potential_values(phi, system.n_states)
    total = np.zeros(system.n_states)
    orbit = np.arange(system.n_states)
    for _ in range(n):
        total += values[orbit]
        orbit = system.map[orbit]
    return total


def strong_components(support: np.ndarray) -> list[np.ndarray]:
    n_comp, labels = connected_components(csr_matrix(support.astype(np.int8)), directed=True, connection="strong")
    return [np.flatnonzero(labels == k) for k in range(n_comp)]


def _log_matvec(L: np.ndarray, log_x: np.ndarray) -> np.ndarray:
    """ln(exp(L) @ exp(log_x)) row by row; empty rows give -inf."""
    with np.errstate(divide="ignore"):
        return logsumexp(L + log_x[None, :], axis=1)


def max_cycle_mean(L: np.ndarray) -> float:
    """Largest mean edge weight over cycles of a strongly connected log block (Karp)."""
    n = L.shape[0]
    walks = np.full((n + 1, n), NEG_INF)
    walks[0, 0] = 0.0
    for k in range(1, n + 1):
        walks[k] = np.max(walks[k - 1][:, None] + L, axis=0)
    best = NEG_INF
    for v in range(n):
        if walks[n, v] == NEG_INF:
            continue
        reached = np.isfinite(walks[:n, v])
        steps = n - np.arange(n)[reached]
        best = max(best, float(np.min((walks[n, v] - walks[:n, v][reached]) / steps)))
    return best


def balance_block(L: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Diagonal similarity from max-plus potentials.

    Returns (mu, d, Lb) with Lb[i, j] = L[i, j] - mu - d[i] + d[j] <= 0 and every
    row of Lb holding a zero entry, so exp(Lb) has spectral radius in [1, n].
    """
    mu = max_cycle_mean(L)
    paths = L - mu
    for k in range(L.shape[0]):
        paths = np.maximum(paths, paths[:, [k]] + paths[[k], :])
    critical = int(np.argmax(np.diag(paths)))
    d = paths[:, critical].copy()
    d[critical] = 0.0
    return mu, d, L - mu - d[:, None] + d[None, :]


def _log_perron_power(Lb: np.ndarray, log_shift: float, opts: PowerIterationOptions) -> tuple[float, np.ndarray, int]:
    n = Lb.shape[0]
    shift = float(np.exp(log_shift))
    log_x = np.full(n, -np.log(n))
    for iteration in range(1, opts.max_iter + 1):
        log_y = _log_matvec(Lb, log_x)
        # Collatz-Wielandt bracket of exp(Lb) + shift * I
        ratios = np.exp(np.logaddexp(log_y - log_x, log_shift))
        lo, hi = float(ratios.min()), float(ratios.max())
        log_x = np.logaddexp(log_y, log_shift + log_x)
        log_x -= logsumexp(log_x)
        radius = 0.5 * (lo + hi) - shift
        if hi - lo <= opts.tol * radius:
            return float(np.log(radius)), log_x, iteration
    raise SpectralConvergenceError(
        f"power iteration が {opts.max_iter} 回で収束しませんでした",
        last_iterate=np.exp(log_x),
        iterations=opts.max_iter,
    )


def _log_perron_dense(Lb: np.ndarray) -> tuple[float, np.ndarray, int]:
    M = np.where(np.isfinite(Lb), np.exp(Lb), 0.0)
    eigenvalues, vectors = np.linalg.eig(M)
    k = int(np.argmax(eigenvalues.real))
    vector = np.abs(vectors[:, k].real)
    log_vector = safe_log(vector / vector.sum())
    return float(np.log(eigenvalues[k].real)), log_vector, 0


def _log_perron(Lb: np.ndarray, log_shift: float, opts: PowerIterationOptions) -> tuple[float, np.ndarray, int]:
    if opts.method == "dense":
        return _log_perron_dense(Lb)
    if opts.method != "power":
        raise DomainError(f"未対応の method です: {opts.method}")
    return _log_perron_power(Lb, log_shift, opts)


def _normalized_log(log_vector: np.ndarray) -> np.ndarray:
    return log_vector - logsumexp(log_vector)


def component_pieces(log_matrix, opts: PowerIterationOptions | None = None) -> list[ComponentPiece]:
    """Perron data of every strong component that carries a cycle."""
    opts = opts or PowerIterationOptions()
    L = np.asarray(log_matrix, dtype=float)
    support = np.isfinite(L)
    pieces: list[ComponentPiece] = []
    for states in strong_components(support):
        if states.size == 1:
            loop = float(L[states[0], states[0]])
            if loop == NEG_INF:
                continue
            pieces.append(ComponentPiece(states, loop, np.zeros(1), np.zeros(1), np.ones((1, 1)), 0))
            continue
        mu, d, Lb = balance_block(L[np.ix_(states, states)])
        with np.errstate(divide="ignore"):
            log_shift = float(np.mean(logsumexp(Lb, axis=1)))
        log_radius, log_right, it_right = _log_perron(Lb, log_shift, opts)
        _, log_left, it_left = _log_perron(Lb.T, log_shift, opts)
        log_edge = log_left[:, None] + Lb + log_right[None, :]
        edge = np.where(np.isfinite(log_edge), np.exp(log_edge - np.max(log_edge)), 0.0)
        pieces.append(
            ComponentPiece(
                states=states,
                log_radius=log_radius + mu,
                log_right=_normalized_log(log_right + d),
                log_left=_normalized_log(log_left - d),
                edge_measure=edge / edge.sum(),
                iterations=it_right + it_left,
            )
        )
    return pieces


def _log_resolvent(L: np.ndarray, log_r: float, log_b: np.ndarray) -> np.ndarray:
    """ln of (r I - exp(L))^{-1} exp(log_b) for a strong block whose radius is below r."""
    if L.shape[0] == 1:
        return log_b - log_r - np.log1p(-np.exp(L[0, 0] - log_r))
    mu, d, Lb = balance_block(L)
    shifted = log_b - d
    scale = float(np.max(shifted))
    b = np.where(np.isfinite(shifted), np.exp(shifted - scale), 0.0)
    kernel = np.eye(L.shape[0]) - np.exp(mu - log_r) * np.where(np.isfinite(Lb), np.exp(Lb), 0.0)
    z = np.clip(np.linalg.solve(kernel, b), 0.0, None)
    return safe_log(z) + scale + d - log_r


def _extend_log(L: np.ndarray, lead: ComponentPiece, log_vector: np.ndarray, log_r: float) -> np.ndarray:
    """Extend a Perron vector of the lead component to all states: x = (1/r) exp(L) x."""
    n = L.shape[0]
    support = np.isfinite(L)
    out = np.full(n, NEG_INF)
    out[lead.states] = log_vector
    done = np.zeros(n, dtype=bool)
    done[lead.states] = True
    pending = [states for states in strong_components(support) if not done[states[0]]]
    while pending:
        remaining = []
        for states in pending:
            inside = np.zeros(n, dtype=bool)
            inside[states] = True
            successors = np.any(support[states], axis=0) & ~inside
            if not np.all(done[successors]):
                remaining.append(states)
                continue
            log_b = _log_matvec(np.where(inside[None, :], NEG_INF, L[states]), out)
            if np.any(np.isfinite(log_b)):
                out[states] = _log_resolvent(L[np.ix_(states, states)], log_r, log_b)
            done[states] = True
        pending = remaining
    return _normalized_log(out)


def _gelfand_log_norms(L: np.ndarray, n_max: int) -> list[float]:
    log_x = np.zeros(L.shape[0])
    accumulated = 0.0
    sequence: list[float] = []
    for n in range(1, n_max + 1):
        log_x = _log_matvec(L, log_x)
        norm = float(np.max(log_x))
        if norm == NEG_INF:
            sequence.extend([NEG_INF] * (n_max - n + 1))
            break
        accumulated += norm
        log_x = log_x - norm
        sequence.append(accumulated / n)
    return sequence


def _from_log(log_vector: np.ndarray) -> np.ndarray:
    return np.exp(_normalized_log(log_vector))


def perron_data(log_matrix, opts: PowerIterationOptions | None = None) -> SpectralResult:
    """ln of the spectral radius of exp(log_matrix) with Perron vectors, per strong component."""
    opts = opts or PowerIterationOptions()
    L = np.asarray(log_matrix, dtype=float)
    n = L.shape[0]
    pieces = component_pieces(L, opts)
    if not pieces:
        logger.debug("support graph に cycle がありません: lambda = -inf")
        zeros = np.zeros(n)
        return SpectralResult(NEG_INF, 0.0, zeros, zeros, simple=False)

    best = max(piece.log_radius for piece in pieces)
    dominant = [piece for piece in pieces if piece.log_radius >= best - SIMPLE_REL_TOL * max(1.0, abs(best))]
    iterations = sum(piece.iterations for piece in pieces)

    lead = dominant[0]
    simple = len(dominant) == 1
    if simple:
        log_right = _extend_log(L, lead, lead.log_right, best)
        log_left = _extend_log(L.T, lead, lead.log_left, best)
    else:
        log_right = np.full(n, NEG_INF)
        log_left = np.full(n, NEG_INF)
        log_right[lead.states] = lead.log_right
        log_left[lead.states] = lead.log_left

    gelfand_min = float("nan")
    if opts.verify_gelfand:
        gelfand_min = min(_gelfand_log_norms(L, opts.gelfand_steps))
        if best > gelfand_min + GELFAND_SLACK * max(1.0, abs(best)):
            raise SpectralConvergenceError(
                f"spectral radius の推定値 {best} が Gelfand 列の下限 {gelfand_min} を超えています",
                last_iterate=_from_log(lead.log_right),
                iterations=iterations,
            )

    return SpectralResult(
        lambda_value=best,
        dominant_eigenvalue=float(np.exp(best)),
        right_vector=_from_log(log_right),
        left_vector=_from_log(log_left),
        simple=simple,
        iterations=iterations,
        gelfand_min=gelfand_min,
        log_right=log_right,
        log_left=log_left,
    )


def spectral_potential(A: TransferMatrix, phi, opts: PowerIterationOptions | None = None) -> SpectralResult:
    return perron_data(weighted_log_matrix(A, phi), opts)


def gelfand_sequence(A: TransferMatrix, phi, n_max: int) -> list[float]:
    """(1/n) ln ||A_phi^n 1||_inf for n = 1..n_max, renormalized at each step."""
    if n_max < 1:
        raise DomainError(f"n_max は1以上である必要があります (n_max={n_max})")
    return _gelfand_log_norms(weighted_log_matrix(A, phi), n_max)


def equilibrium_measure(A: TransferMatrix, phi, opts: PowerIterationOptions | None = None) -> InvariantMeasure:
    result = spectral_potential(A, phi, opts)
    if result.lambda_value == NEG_INF:
        raise DomainError("lambda(phi) = -inf のため equilibrium measure は存在しません")
    if not result.simple:
        raise NonUniqueEquilibrium("dominant eigenvalue が単純でないため equilibrium measure は一意に定まりません")
    weights = _from_log(result.log_left + result.log_right)
    return InvariantMeasure(weights, certified=is_invariant(weights, A.system))
