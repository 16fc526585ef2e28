from thermo_formalism.errors import NumericalError, ThermoInputError
from thermo_formalism.legendre import dual_entropy, reconstruct_lambda, verify_young
from thermo_formalism.lpshift import lp_power_norm, lp_spectral_radius, transfer_from_measure
from thermo_formalism.markov import ks_entropy, latushkin_stepin_radius, pressure, ruelle_walters_check, tmc_dual_entropy_check
from thermo_formalism.spectral import equilibrium_measure, gelfand_sequence, spectral_potential
from thermo_formalism.systems import build_pf_operator, check_homological_identity, cycle_decomposition, ergodic_measures
from thermo_formalism.tentropy import t_entropy, tau_n, tau_n_partition
from thermo_formalism.empirical import empirical_measure, entropy_statistic_check, hitting_set, invariant_absorption_check

__all__ = [
    "NumericalError",
    "ThermoInputError",
    "build_pf_operator",
    "check_homological_identity",
    "cycle_decomposition",
    "ergodic_measures",
    "spectral_potential",
    "gelfand_sequence",
    "equilibrium_measure",
    "dual_entropy",
    "verify_young",
    "reconstruct_lambda",
    "tau_n",
    "tau_n_partition",
    "t_entropy",
    "ks_entropy",
    "pressure",
    "ruelle_walters_check",
    "latushkin_stepin_radius",
    "tmc_dual_entropy_check",
    "transfer_from_measure",
    "lp_power_norm",
    "lp_spectral_radius",
    "empirical_measure",
    "hitting_set",
    "entropy_statistic_check",
    "invariant_absorption_check",
]
