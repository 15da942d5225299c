"""Verification studies, suites and the ``carnot-heat`` command line."""

from .config import PROFILES, SUITES, ExperimentConfig, config_from_dict, load_config
from .report import run_all, write_bundle
from .studies import (
    HolderReport,
    counterexample_closed_form,
    half_modulus_closed_form,
    run_counterexample,
    run_energy_trials,
    run_gain_exponent,
    run_holder_modulus,
    run_mollifier_commutation,
    run_regularity_transfer,
)
from .suites import Check, SuiteResult, run_suite

__all__ = [
    "PROFILES", "SUITES", "ExperimentConfig", "config_from_dict", "load_config", "run_all", "write_bundle",
    "HolderReport", "counterexample_closed_form", "half_modulus_closed_form", "run_counterexample",
    "run_energy_trials", "run_gain_exponent", "run_holder_modulus", "run_mollifier_commutation",
    "run_regularity_transfer", "Check", "SuiteResult", "run_suite",
]
