from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import nnls

from thermo_formalism.errors import DimensionError, DomainError, NoFeasibleMeasure
from thermo_formalism.models import (
    DescentOptions,
    DualEntropyResult,
    FiniteMapSystem,
    InvariantMeasure,
    Measure,
    PowerIterationOptions,
    TransferMatrix,
)
from thermo_formalism.spectral import _potential_values, component_pieces, spectral_potential, weighted_log_matrix
from thermo_formalism.systems import hull_matrix
from thermo_formalism.tolerances import NEG_INF

logger = logging.getLogger(__name__)

# inner loops of the optimizers only need the radius and its gradient
FAST_SPECTRAL = PowerIterationOptions(method="dense", verify_gelfand=False)

Piece = tuple[float, np.ndarray]
PieceFunction = Callable[[np.ndarray], Sequence[Piece]]


def _measure_weights(mu) -> np.ndarray:
    return mu.weights if isinstance(mu, Measure) else Measure(np.asarray(mu, dtype=float)).weights


def _min_norm_point(vectors: list[np.ndarray]) -> np.ndarray:
    """Smallest element of the convex hull of the given vectors."""
    if len(vectors) == 1:
        return vectors[0]
    W = np.column_stack(vectors)
    weight = 1e3 * max(1.0, float(np.max(np.abs(W))))
    augmented = np.vstack([W, weight * np.ones((1, W.shape[1]))])
    rhs = np.concatenate([np.zeros(W.shape[0]), [weight]])
    coefficients, _ = nnls(augmented, rhs)
    coefficients /= coefficients.sum()
    return W @ coefficients


def minimize_max_minus_linear(
    pieces_at: PieceFunction,
    linear: np.ndarray,
    x0: np.ndarray,
    opts: DescentOptions | None = None,
) -> DualEntropyResult:
    """Descent on g(x) = max_c f_c(x) - <linear, x> over the smooth convex pieces f_c.

    Steps follow the steepest epsilon-descent direction: minus the min-norm element of the
    gradients of the pieces within `gap` of the max, shifted by `linear`. The step is
    backtracked (Armijo) and doubled after every accepted move.
    """
    opts = opts or DescentOptions()

    def objective(x: np.ndarray) -> tuple[float, Sequence[Piece]]:
        pieces = pieces_at(x)
        if not pieces:
            return NEG_INF, pieces
        return max(value for value, _ in pieces) - float(np.dot(linear, x)), pieces

    x = np.array(x0, dtype=float)
    g, pieces = objective(x)
    if g == NEG_INF:
        return DualEntropyResult(NEG_INF, x, converged=True, iterations=0, diverged=True)

    step = opts.initial_step
    gap = opts.active_gap
    converged = False
    iteration = 0
    for iteration in range(1, opts.max_iter + 1):
        top = max(value for value, _ in pieces)
        active = [grad - linear for value, grad in pieces if value >= top - gap]
        direction = -_min_norm_point(active)
        slope = float(np.dot(direction, direction))
        if slope <= opts.tol**2:
            if gap <= opts.tol:
                converged = True
                break
            gap *= 0.1
            continue

        t = step
        accepted = False
        while t > 1e-16:
            candidate = x + t * direction
            g_new, pieces_new = objective(candidate)
            if g_new <= g - opts.armijo * t * slope:
                accepted = True
                break
            t *= opts.shrink
        if not accepted:
            if gap <= opts.tol:
                converged = True
                break
            gap *= 0.1
            continue

        x, g, pieces = candidate, g_new, pieces_new
        step = 2.0 * t
        if g == NEG_INF or g < opts.divergence_floor:
            logger.info("descent が発散しました (iteration=%d, g=%s): 値を -inf とします", iteration, g)
            return DualEntropyResult(NEG_INF, x, converged=True, iterations=iteration, diverged=True)
        if np.max(np.abs(x)) >= opts.phi_cap:
            logger.info("phi が上限 %.3g に達したため descent を打ち切ります (g=%.12g)", opts.phi_cap, g)
            break

    if not converged:
        logger.info("descent が %d 回で収束しませんでした (g=%.12g)", iteration, g)
    return DualEntropyResult(float(g), x, converged=converged, iterations=iteration)


def log_matrix_pieces(base_log: np.ndarray, embed: Callable[[np.ndarray], np.ndarray], lift: Callable[[np.ndarray], np.ndarray]) -> PieceFunction:
    """Pieces of x -> ln r(exp(base_log + lift(x))); `embed` maps a full-size edge measure to x-coordinates."""
    n = base_log.shape[0]

    def pieces_at(x: np.ndarray) -> list[Piece]:
        result: list[Piece] = []
        for piece in component_pieces(base_log + lift(x), FAST_SPECTRAL):
            edges = np.zeros((n, n))
            edges[np.ix_(piece.states, piece.states)] = piece.edge_measure
            result.append((piece.log_radius, embed(edges)))
        return result

    return pieces_at


def transfer_pieces(A: TransferMatrix) -> PieceFunction:
    n = A.n_states

    def pieces_at(phi: np.ndarray) -> list[Piece]:
        result: list[Piece] = []
        for piece in component_pieces(weighted_log_matrix(A, phi), FAST_SPECTRAL):
            grad = np.zeros(n)
            grad[piece.states] = piece.vertex_measure
            result.append((piece.log_radius, grad))
        return result

    return pieces_at


def dual_entropy(A: TransferMatrix, mu, opts: DescentOptions | None = None) -> DualEntropyResult:
    """S(mu) = inf over phi of lambda(phi) - mu(phi), started at phi = 0."""
    weights = _measure_weights(mu)
    if weights.shape != (A.n_states,):
        raise DimensionError("measure の長さが n_states と一致しません")
    pieces_at = transfer_pieces(A)
    if not pieces_at(np.zeros(A.n_states)):
        raise DomainError("A が冪零のため dual entropy は定義されません")
    return minimize_max_minus_linear(pieces_at, weights, np.zeros(A.n_states), opts)


def verify_young(A: TransferMatrix, phi, mu, opts: DescentOptions | None = None) -> float:
    """lambda(phi) - mu(phi) - S(mu); nonnegative, zero at the equilibrium measure of phi."""
    values = _potential_values(phi, A.n_states)
    weights = _measure_weights(mu)
    entropy = dual_entropy(A, weights, opts)
    if entropy.value == NEG_INF:
        raise DomainError("S(mu) = -inf のため Young 不等式の残差は定義されません")
    lam = spectral_potential(A, values).lambda_value
    return float(lam - np.dot(weights, values) - entropy.value)


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u) - 1.0
    index = np.arange(1, v.size + 1)
    rho = int(np.nonzero(u - cumulative / index > 0)[0][-1])
    theta = cumulative[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def maximize_on_hull(
    system: FiniteMapSystem,
    objective: Callable[[InvariantMeasure], float],
    step: float = 1e-4,
    max_iter: int = 50,
) -> tuple[float, InvariantMeasure]:
    """Projected-gradient ascent over the cycle-measure polytope, one start per vertex."""
    vertices = hull_matrix(system)
    n_cycles = vertices.shape[1]

    def at(w: np.ndarray) -> InvariantMeasure:
        weights = vertices @ (w / w.sum())
        return InvariantMeasure(weights / weights.sum(), certified=True)

    def value(w: np.ndarray) -> float:
        return float(objective(at(w)))

    vertex_values = [value(np.eye(n_cycles)[k]) for k in range(n_cycles)]
    face = [k for k in range(n_cycles) if vertex_values[k] > NEG_INF]
    if not face:
        raise NoFeasibleMeasure("全ての頂点で目的関数が -inf です")

    def restricted(w_face: np.ndarray) -> np.ndarray:
        w = np.zeros(n_cycles)
        w[face] = w_face
        return w

    best_value = NEG_INF
    best_w = restricted(np.eye(len(face))[0])
    for start in range(len(face)):
        w = np.eye(len(face))[start]
        current = vertex_values[face[start]]
        for _ in range(max_iter):
            grad = np.zeros(len(face))
            for k in range(len(face)):
                up = w.copy()
                up[k] += step
                if w[k] >= step:
                    down = w.copy()
                    down[k] -= step
                    grad[k] = (value(restricted(up)) - value(restricted(down))) / (2 * step)
                else:
                    grad[k] = (value(restricted(up)) - current) / step
            if not np.all(np.isfinite(grad)):
                break
            eta = 1.0
            improved = False
            while eta > 1e-8:
                candidate = project_to_simplex(w + eta * grad)
                candidate_value = value(restricted(candidate))
                if candidate_value > current + 1e-12:
                    improved = True
                    break
                eta *= 0.5
            if not improved:
                break
            w, current = candidate, candidate_value
        if current > best_value:
            best_value, best_w = current, restricted(w)
    return best_value, at(best_w)


def reconstruct_lambda(
    A: TransferMatrix,
    phi,
    entropy_oracle: Callable[[InvariantMeasure], float],
) -> float:
    """lambda(phi) as the max over invariant measures of mu(phi) + oracle(mu)."""
    values = _potential_values(phi, A.n_states)
    best, _ = maximize_on_hull(A.system, lambda mu: mu.integrate(values) + entropy_oracle(mu))
    return best
