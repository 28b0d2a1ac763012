"""Constitutive model: densities, loading, dissipation and the assembled energy."""
from .densities import (
    calibration_constant,
    gamma_prime,
    growth_constants,
    phi,
    phi_terms,
    psi_ogden,
    psi_svk,
    stored_density,
    stored_density_nonsimple,
)
from .energy import (
    EnergyFunctional,
    dissipation,
    functional,
    gamma,
    grad_energy_y,
    grad_energy_z,
    loading,
    power,
    regularization,
    total_energy,
)
from .gronwall import GronwallData, gronwall_estimate
from .loads import LoadSchedule, PiecewiseAffine, ScheduleError
from .params import ModelParams, ParameterError, stress_free_d_log

__all__ = [
    "EnergyFunctional",
    "GronwallData",
    "LoadSchedule",
    "ModelParams",
    "ParameterError",
    "PiecewiseAffine",
    "ScheduleError",
    "calibration_constant",
    "dissipation",
    "functional",
    "gamma",
    "gamma_prime",
    "grad_energy_y",
    "grad_energy_z",
    "gronwall_estimate",
    "growth_constants",
    "loading",
    "phi",
    "phi_terms",
    "power",
    "psi_ogden",
    "psi_svk",
    "regularization",
    "stored_density",
    "stored_density_nonsimple",
    "stress_free_d_log",
    "total_energy",
]
