"""One function per CLI command: parse parameters, run the computation, collect values and diagnostics."""

from __future__ import annotations

import logging
from typing import Callable

import numpy as np

from thermo_formalism.empirical import entropy_statistic_check
from thermo_formalism.errors import DescriptorError, DomainError, NoFeasibleMeasure, NonUniqueEquilibrium, ReducibleShiftError
from thermo_formalism.io import float_matrix, float_vector, positive_float, positive_int, system_from_descriptor
from thermo_formalism.legendre import dual_entropy, maximize_on_hull
from thermo_formalism.lpshift import lp_spectral_radius
from thermo_formalism.markov import (
    GAP_LOWER,
    GAP_UPPER,
    latushkin_stepin_radius,
    parry_measure,
    pressure,
    ruelle_walters_check,
)
from thermo_formalism.models import (
    CommandOutcome,
    DescentOptions,
    InvariantMeasure,
    JobConfig,
    MarkovMeasure,
    MarkovSearchOptions,
    Measure,
    PowerIterationOptions,
    TransferMatrix,
)
from thermo_formalism.spectral import equilibrium_measure, gelfand_sequence, spectral_potential
from thermo_formalism.systems import is_invariant
from thermo_formalism.tentropy import t_entropy
from thermo_formalism.tolerances import NEG_INF, integrate_log, safe_log

logger = logging.getLogger(__name__)

VP_GAP_TOL = 1e-3


def _measure(params: dict, A: TransferMatrix) -> Measure:
    if "mu" not in params:
        raise DescriptorError("parameters.mu が指定されていません")
    weights = float_vector(params["mu"], "parameters.mu", A.n_states)
    if np.any(weights < 0) or abs(float(weights.sum()) - 1.0) > 1e-12:
        raise DescriptorError("parameters.mu は和が1の非負ベクトルである必要があります")
    if is_invariant(weights, A.system):
        return InvariantMeasure(weights, certified=True)
    return Measure(weights)


def _phi(params: dict, n: int) -> np.ndarray:
    if "phi" not in params:
        return np.zeros(n)
    phi = float_vector(params["phi"], "parameters.phi", n)
    if not np.all(np.isfinite(phi)):
        raise DescriptorError("parameters.phi は有限値である必要があります")
    return phi


def _markov_dict(mm: MarkovMeasure | None) -> dict | None:
    if mm is None:
        return None
    return {"pi": mm.pi.tolist(), "P": mm.P.tolist()}


def _search_options(config: JobConfig) -> MarkovSearchOptions:
    params = config.parameters
    return MarkovSearchOptions(
        n_starts=positive_int(params.get("n_starts", 4), "parameters.n_starts"),
        seed=config.seed,
        max_iter=positive_int(params.get("max_iter", 500), "parameters.max_iter"),
    )


def _edge_log(params: dict, key: str, n: int, default_ones: bool = True) -> np.ndarray:
    if key not in params:
        if not default_ones:
            raise DescriptorError(f"parameters.{key} が指定されていません")
        return np.zeros((n, n))
    values = float_matrix(params[key], f"parameters.{key}", n)
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise DescriptorError(f"parameters.{key} は非負の有限値である必要があります")
    return safe_log(values)


def run_eval_lambda(config: JobConfig) -> CommandOutcome:
    A = system_from_descriptor(config.system)
    params = config.parameters
    phi = _phi(params, A.n_states)
    opts = PowerIterationOptions(
        tol=positive_float(params.get("tol", 1e-12), "parameters.tol"),
        max_iter=positive_int(params.get("max_iter", 100_000), "parameters.max_iter"),
        method=params.get("method", "power"),
    )
    if opts.method not in ("power", "dense"):
        raise DescriptorError(f"parameters.method は power / dense のいずれかです ({opts.method!r})")
    result = spectral_potential(A, phi, opts)
    values = {
        "lambda": result.lambda_value,
        "dominant_eigenvalue": result.dominant_eigenvalue,
        "simple": result.simple,
        "right_vector": result.right_vector.tolist(),
        "left_vector": result.left_vector.tolist(),
    }
    if result.lambda_value > NEG_INF and result.simple:
        values["equilibrium_measure"] = equilibrium_measure(A, phi, opts).weights.tolist()
    n_max = positive_int(params.get("n_max", 32), "parameters.n_max")
    diagnostics = {
        "iterations": result.iterations,
        "gelfand_min": result.gelfand_min,
        "gelfand_sequence": gelfand_sequence(A, phi, n_max),
    }
    return CommandOutcome(values, diagnostics)


def run_t_entropy(config: JobConfig) -> CommandOutcome:
    A = system_from_descriptor(config.system)
    params = config.parameters
    mu = _measure(params, A)
    result = t_entropy(
        A,
        mu,
        n_max=positive_int(params.get("n_max", 32), "parameters.n_max", minimum=4),
        tol=positive_float(params.get("tol", 1e-6), "parameters.tol"),
    )
    values = {"tau": result.value, "per_n": list(result.per_n)}
    diagnostics = {
        "converged": result.converged,
        "inner_kkt_residual": result.inner_kkt_residual,
        "subadditivity_violations": result.subadditivity_violations,
        "invariant": isinstance(mu, InvariantMeasure),
    }
    return CommandOutcome(values, diagnostics, converged=result.converged)


def run_dual_entropy(config: JobConfig) -> CommandOutcome:
    A = system_from_descriptor(config.system)
    params = config.parameters
    mu = _measure(params, A)
    opts = DescentOptions(
        tol=positive_float(params.get("tol", 1e-10), "parameters.tol"),
        max_iter=positive_int(params.get("max_iter", 2000), "parameters.max_iter"),
    )
    result = dual_entropy(A, mu, opts)
    values = {"dual_entropy": result.value, "argmin_phi": result.argmin_phi.tolist()}
    diagnostics = {"converged": result.converged, "iterations": result.iterations, "diverged": result.diverged}
    return CommandOutcome(values, diagnostics, converged=result.converged)


def run_variational_check(config: JobConfig) -> CommandOutcome:
    A = system_from_descriptor(config.system)
    params = config.parameters
    phi = _phi(params, A.n_states)
    n_max = positive_int(params.get("n_max", 16), "parameters.n_max", minimum=4)
    tol = positive_float(params.get("tol", 1e-6), "parameters.tol")

    def tau(mu) -> float:
        return t_entropy(A, mu, n_max=n_max, tol=tol).value

    lam = spectral_potential(A, phi).lambda_value
    try:
        vp_value, maximizer = maximize_on_hull(A.system, lambda mu: integrate_log(mu.weights, phi) + tau(mu))
    except NoFeasibleMeasure:
        vp_value, maximizer = NEG_INF, None
    gap = abs(lam - vp_value) if lam > NEG_INF or vp_value > NEG_INF else 0.0
    values = {
        "lambda": lam,
        "vp_value": vp_value,
        "gap": gap,
        "maximizer": None if maximizer is None else maximizer.weights.tolist(),
    }
    diagnostics: dict = {"young_residual": None}
    try:
        mu_star = equilibrium_measure(A, phi)
        diagnostics["young_residual"] = abs(lam - mu_star.integrate(phi) - tau(mu_star))
        diagnostics["equilibrium_measure"] = mu_star.weights.tolist()
    except (NonUniqueEquilibrium, DomainError):
        logger.info("equilibrium measure が一意に定まらないため Young 残差を省略します")
    return CommandOutcome(values, diagnostics, converged=gap <= VP_GAP_TOL)


def run_pressure(config: JobConfig) -> CommandOutcome:
    shift = system_from_descriptor(config.system)
    log_psi = _edge_log(config.parameters, "psi", shift.n_symbols)
    values = {"pressure": pressure(shift, log_psi)}
    diagnostics: dict = {"irreducible": True}
    try:
        values["equilibrium_markov_measure"] = _markov_dict(parry_measure(shift, log_psi))
    except ReducibleShiftError:
        diagnostics["irreducible"] = False
    return CommandOutcome(values, diagnostics)


def run_ruelle_walters(config: JobConfig) -> CommandOutcome:
    shift = system_from_descriptor(config.system)
    log_psi = _edge_log(config.parameters, "psi", shift.n_symbols)
    result = ruelle_walters_check(shift, log_psi, _search_options(config))
    values = {
        "pressure": result.pressure_value,
        "vp_value": result.vp_value,
        "gap": result.gap,
        "maximizer": _markov_dict(result.maximizer),
    }
    within = GAP_LOWER <= result.gap <= GAP_UPPER
    return CommandOutcome(values, {"gap_within_bounds": within}, converged=within)


def run_latushkin_stepin(config: JobConfig) -> CommandOutcome:
    shift = system_from_descriptor(config.system)
    params = config.parameters
    log_abs_a = _edge_log(params, "a", shift.n_symbols, default_ones=False)
    p = positive_float(params.get("p", 1.0), "parameters.p", minimum=1.0, inclusive=True)
    if shift.branch_weights is None:
        raise DescriptorError("latushkin-stepin には system.rho が必要です")
    result = latushkin_stepin_radius(shift, log_abs_a, p=p, opts=_search_options(config))
    values = {"lhs": result.lhs, "rhs": result.rhs, "gap": result.gap, "maximizer": _markov_dict(result.maximizer)}
    within = GAP_LOWER <= result.gap <= GAP_UPPER
    return CommandOutcome(values, {"gap_within_bounds": within}, converged=within)


def run_lp_radius(config: JobConfig) -> CommandOutcome:
    ws = system_from_descriptor(config.system)
    params = config.parameters
    result = lp_spectral_radius(
        ws,
        n_max=positive_int(params.get("n_max", 32), "parameters.n_max", minimum=4),
        tau_n_max=positive_int(params.get("tau_n_max", 16), "parameters.tau_n_max", minimum=4),
    )
    values = {"log_radius": result.log_radius, "vp_value": result.vp_value, "gap": result.gap}
    diagnostics = {"norm_rates": list(result.norm_rates)}
    return CommandOutcome(values, diagnostics, converged=abs(result.gap) <= VP_GAP_TOL)


def _n_range(params: dict) -> list[int]:
    if "n_range" in params:
        n_range = params["n_range"]
        if not isinstance(n_range, list) or not n_range:
            raise DescriptorError("parameters.n_range は空でない整数の配列である必要があります")
        return [positive_int(n, "parameters.n_range") for n in n_range]
    return list(range(1, positive_int(params.get("n_max", 64), "parameters.n_max") + 1))


def run_entropy_statistic(config: JobConfig) -> CommandOutcome:
    A = system_from_descriptor(config.system)
    params = config.parameters
    mu = _measure(params, A)
    if "radius" not in params:
        raise DescriptorError("parameters.radius が指定されていません")
    report = entropy_statistic_check(
        A,
        mu,
        positive_float(params["radius"], "parameters.radius"),
        _n_range(params),
        slack=positive_float(params.get("slack", 0.05), "parameters.slack", inclusive=True),
    )
    values = {
        "fitted_rate": report.fitted_rate,
        "bound_t": report.bound_t,
        "passed": report.passed,
        "rates": [{"n": n, "rate": rate} for n, rate in report.rates],
    }
    diagnostics = {"radius": report.radius, "invariant": isinstance(mu, InvariantMeasure)}
    return CommandOutcome(values, diagnostics, converged=report.passed)


COMMAND_RUNNERS: dict[str, Callable[[JobConfig], CommandOutcome]] = {
    "eval-lambda": run_eval_lambda,
    "t-entropy": run_t_entropy,
    "dual-entropy": run_dual_entropy,
    "variational-check": run_variational_check,
    "pressure": run_pressure,
    "ruelle-walters": run_ruelle_walters,
    "latushkin-stepin": run_latushkin_stepin,
    "lp-radius": run_lp_radius,
    "entropy-statistic": run_entropy_statistic,
}


def execute(config: JobConfig) -> CommandOutcome:
    return COMMAND_RUNNERS[config.command](config)
