"""Certificates, refinement sweeps and brute-force oracles."""
from .certificates import (
    CertificateBundle,
    CheckResult,
    StepCertificate,
    check_energy_inequality,
    check_gronwall,
    check_semistability,
    check_separately_global_certificate,
    check_stability,
    energy_inequality_slack,
    gronwall_data,
)
from .sweep import SweepReport, tau_sweep
from .toy import ComparisonRecord, ToyParams, compare_solution_concepts

__all__ = [
    "CertificateBundle",
    "CheckResult",
    "ComparisonRecord",
    "StepCertificate",
    "SweepReport",
    "ToyParams",
    "check_energy_inequality",
    "check_gronwall",
    "check_semistability",
    "check_separately_global_certificate",
    "check_stability",
    "compare_solution_concepts",
    "energy_inequality_slack",
    "gronwall_data",
    "tau_sweep",
]
