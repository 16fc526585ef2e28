from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from thermo_formalism.errors import DimensionError, DomainError
from thermo_formalism.tolerances import (
    INVARIANCE_TOL,
    MEASURE_TOL,
    PARTITION_TOL,
    POWER_MAX_ITER,
    POWER_TOL,
)


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _square(values, label: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"{label} は正方行列である必要があります (shape={arr.shape})")
    return arr


@dataclass(frozen=True)
class FiniteMapSystem:
    n_states: int
    map: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.map)
        if self.n_states <= 0:
            raise DomainError(f"n_states は1以上である必要があります ({self.n_states})")
        if table.ndim != 1 or table.shape[0] != self.n_states:
            raise DimensionError(f"map の長さ {table.shape} が n_states={self.n_states} と一致しません")
        if not np.all(np.equal(np.mod(table, 1), 0)):
            raise DomainError("map の値は整数である必要があります")
        if table.size and (table.min() < 0 or table.max() >= self.n_states):
            raise DomainError(f"map の値は [0, {self.n_states}) の範囲である必要があります")
        object.__setattr__(self, "map", _frozen(table, dtype=int))

    @classmethod
    def from_map(cls, table) -> "FiniteMapSystem":
        table = list(table)
        return cls(n_states=len(table), map=np.asarray(table, dtype=int))


@dataclass(frozen=True)
class MarkovShiftSystem:
    n_symbols: int
    adjacency: np.ndarray
    branch_weights: Optional[np.ndarray] = None
    stochastic_on_fibers: bool = False

    def __post_init__(self):
        adjacency = _square(self.adjacency, "adjacency")
        if adjacency.shape[0] != self.n_symbols:
            raise DimensionError(f"adjacency のサイズが n_symbols={self.n_symbols} と一致しません")
        if not np.all(np.isin(adjacency, (0.0, 1.0))):
            raise DomainError("adjacency の成分は 0 または 1 である必要があります")
        object.__setattr__(self, "adjacency", _frozen(adjacency))
        if self.branch_weights is None:
            if self.stochastic_on_fibers:
                raise DomainError("stochastic_on_fibers には branch_weights (rho) が必要です")
            return
        rho = _square(self.branch_weights, "branch_weights")
        if rho.shape != adjacency.shape:
            raise DimensionError("branch_weights (rho) のサイズが adjacency と一致しません")
        if np.any(rho < 0) or not np.all(np.isfinite(rho)):
            raise DomainError("branch_weights (rho) は非負の有限値である必要があります")
        if np.any((rho > 0) & (adjacency == 0)):
            raise DomainError("branch_weights (rho) は adjacency=1 の辺以外で正になってはいけません")
        if self.stochastic_on_fibers:
            fiber_sums = (rho * adjacency).sum(axis=0)
            if np.max(np.abs(fiber_sums - 1.0)) > INVARIANCE_TOL:
                raise DomainError(f"rho の列和 (逆像ごとの和) が1ではありません: {fiber_sums.tolist()}")
        object.__setattr__(self, "branch_weights", _frozen(rho))


@dataclass(frozen=True)
class TransferMatrix:
    """Matrix of a transfer operator: (Af)(x) = sum_y A[x][y] f(y)."""

    system: FiniteMapSystem
    entries: np.ndarray

    def __post_init__(self):
        entries = _square(self.entries, "entries")
        if entries.shape[0] != self.system.n_states:
            raise DimensionError(f"entries のサイズ {entries.shape} が n_states={self.system.n_states} と一致しません")
        if not np.all(np.isfinite(entries)) or np.any(entries < 0):
            raise DomainError("transfer matrix の成分は非負の有限値である必要があります")
        object.__setattr__(self, "entries", _frozen(entries))

    @property
    def n_states(self) -> int:
        return self.system.n_states


@dataclass(frozen=True)
class Measure:
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1 or weights.size == 0:
            raise DimensionError("measure の weights は空でない1次元ベクトルである必要があります")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise DomainError("measure の weights は非負である必要があります")
        total = float(np.sum(weights))
        if abs(total - 1.0) > MEASURE_TOL:
            raise DomainError(f"measure の weights の和が1ではありません (sum={total!r})")
        object.__setattr__(self, "weights", _frozen(weights))

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    @classmethod
    def normalized(cls, values) -> "Measure":
        arr = np.asarray(values, dtype=float)
        return cls(arr / arr.sum())

    @classmethod
    def dirac(cls, n: int, x: int) -> "Measure":
        weights = np.zeros(n)
        weights[x] = 1.0
        return cls(weights)


@dataclass(frozen=True)
class InvariantMeasure(Measure):
    certified: bool = False


@dataclass(frozen=True)
class CycleDecomposition:
    cycles: tuple[tuple[int, ...], ...]
    transient: tuple[int, ...]

    @property
    def periods(self) -> tuple[int, ...]:
        return tuple(len(cycle) for cycle in self.cycles)


@dataclass(frozen=True)
class Potential:
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise DimensionError("potential は1次元ベクトルである必要があります")
        if not np.all(np.isfinite(values)):
            raise DomainError("potential の成分は有限値である必要があります")
        object.__setattr__(self, "values", _frozen(values))


@dataclass(frozen=True)
class SpectralResult:
    lambda_value: float
    dominant_eigenvalue: float
    right_vector: np.ndarray
    left_vector: np.ndarray
    simple: bool
    iterations: int = 0
    gelfand_min: float = float("nan")
    log_right: Optional[np.ndarray] = None
    log_left: Optional[np.ndarray] = None


@dataclass(frozen=True)
class DualEntropyResult:
    value: float
    argmin_phi: np.ndarray
    converged: bool
    iterations: int
    diverged: bool = False


@dataclass(frozen=True)
class PartitionOfUnity:
    functions: np.ndarray

    def __post_init__(self):
        functions = np.asarray(self.functions, dtype=float)
        if functions.ndim != 2 or functions.shape[0] == 0:
            raise DimensionError("partition of unity は (k, n_states) の行列である必要があります")
        if np.any(functions < 0) or not np.all(np.isfinite(functions)):
            raise DomainError("partition of unity の関数は非負である必要があります")
        sums = functions.sum(axis=0)
        if np.max(np.abs(sums - 1.0)) > PARTITION_TOL:
            raise DomainError("partition of unity の和が各点で1になっていません")
        object.__setattr__(self, "functions", _frozen(functions))

    @property
    def size(self) -> int:
        return int(self.functions.shape[0])


@dataclass(frozen=True)
class InnerSolution:
    measure: Measure
    value: float
    kkt_residual: float
    converged: bool
    iterations: int


@dataclass(frozen=True)
class TauResult:
    value: float
    per_n: tuple[float, ...]
    converged: bool
    inner_kkt_residual: float
    subadditivity_violations: int = 0


@dataclass(frozen=True)
class MarkovMeasure:
    """Stationary Markov measure; P[i][j] is the probability of symbol j following symbol i."""

    pi: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        P = _square(self.P, "P")
        pi = np.asarray(self.pi, dtype=float)
        if pi.shape != (P.shape[0],):
            raise DimensionError("pi の長さが P のサイズと一致しません")
        if np.any(P < 0) or np.any(pi < 0):
            raise DomainError("pi と P は非負である必要があります")
        if np.max(np.abs(P.sum(axis=1) - 1.0)) > INVARIANCE_TOL:
            raise DomainError("P の各行の和は1である必要があります")
        if abs(pi.sum() - 1.0) > MEASURE_TOL:
            raise DomainError("pi の和は1である必要があります")
        if np.max(np.abs(pi @ P - pi)) > INVARIANCE_TOL:
            raise DomainError("pi は P の定常分布ではありません (piP != pi)")
        object.__setattr__(self, "P", _frozen(P))
        object.__setattr__(self, "pi", _frozen(pi))

    @property
    def edge_weights(self) -> np.ndarray:
        """Two-cylinder masses mu([ij]) = pi_i P_ij."""
        return self.pi[:, None] * self.P


@dataclass(frozen=True)
class RuelleWaltersResult:
    pressure_value: float
    vp_value: float
    gap: float
    maximizer: Optional[MarkovMeasure]


@dataclass(frozen=True)
class LatushkinStepinResult:
    lhs: float
    rhs: float
    gap: float
    maximizer: Optional[MarkovMeasure]


@dataclass(frozen=True)
class TmcDualEntropyResult:
    legendre_value: float
    closed_form: float
    gap: float
    converged: bool


@dataclass(frozen=True)
class FiniteMeasureSystem:
    n_points: int
    m: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        masses = np.asarray(self.m, dtype=float)
        if masses.shape != (self.n_points,):
            raise DimensionError(f"m の長さが n_points={self.n_points} と一致しません")
        if not np.all(np.isfinite(masses)) or np.any(masses <= 0):
            raise DomainError("m は全ての点で正である必要があります")
        map_system = FiniteMapSystem(n_states=self.n_points, map=np.asarray(self.beta))
        object.__setattr__(self, "m", _frozen(masses))
        object.__setattr__(self, "beta", map_system.map)

    @property
    def map_system(self) -> FiniteMapSystem:
        return FiniteMapSystem(n_states=self.n_points, map=self.beta)


@dataclass(frozen=True)
class WeightedShift:
    system: FiniteMeasureSystem
    psi: np.ndarray
    p: float

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        if psi.shape != (self.system.n_points,):
            raise DimensionError("psi の長さが n_points と一致しません")
        if not np.all(np.isfinite(psi)):
            raise DomainError("psi は有限値である必要があります")
        if not np.isfinite(self.p) or self.p < 1:
            raise DomainError(f"p は1以上である必要があります (p={self.p})")
        object.__setattr__(self, "psi", _frozen(psi))


@dataclass(frozen=True)
class LpRadiusResult:
    log_radius: float
    vp_value: float
    gap: float
    norm_rates: tuple[float, ...] = ()


@dataclass(frozen=True)
class EmpiricalMeasure:
    base_point: int
    length: int
    weights: Measure
    counts: np.ndarray


@dataclass(frozen=True)
class GrowthReport:
    target_mu: Measure
    radius: float
    rates: tuple[tuple[int, float], ...]
    fitted_rate: float
    bound_t: float
    passed: bool


@dataclass(frozen=True)
class PowerIterationOptions:
    tol: float = POWER_TOL
    max_iter: int = POWER_MAX_ITER
    method: str = "power"
    verify_gelfand: bool = True
    gelfand_steps: int = 32


@dataclass(frozen=True)
class DescentOptions:
    max_iter: int = 2000
    tol: float = 1e-10
    divergence_floor: float = -1e6
    phi_cap: float = 1e9
    armijo: float = 1e-4
    shrink: float = 0.5
    initial_step: float = 1.0
    active_gap: float = 1e-3


@dataclass(frozen=True)
class InnerOptions:
    tol: float = 1e-12
    max_iter: int = 100_000
    kkt_tol: float = 1e-6


@dataclass(frozen=True)
class MarkovSearchOptions:
    n_starts: int = 4
    seed: int = 0
    max_iter: int = 500


@dataclass
class JobConfig:
    command: str
    system: dict
    parameters: dict = field(default_factory=dict)
    seed: Optional[int] = None
    output_path: Optional[str] = None
    output_format: str = "json"
    timing: bool = False


@dataclass
class CommandOutcome:
    values: dict
    diagnostics: dict
    converged: bool = True
