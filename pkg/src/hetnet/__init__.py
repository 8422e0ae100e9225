"""Propagation processes of heterogeneous Poisson cellular networks."""

from .equivalence import (
    IsotropicModel,
    a_corrected_density,
    free_space_network,
    isotropic_lambda_integral,
    isotropic_representation,
)
from .gof import GofReport, binned_chi2, equivalence_verdict, mark_consistency, time_change_ks
from .hata import HataParams, hata_params, single_tier_network, two_tier_network
from .intensity import IntensityMeasure, build_intensity, eval_lambda, phi_rt
from .kernels import BACKEND
from .model import NetworkModel, PropagationSample, TierSpec, load_model, parse_model
from .moments import composite_moment, moment_closed, moment_quad
from .simulate import SimPlan, run_plan, truncation_radius

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "GofReport",
    "HataParams",
    "IntensityMeasure",
    "IsotropicModel",
    "NetworkModel",
    "PropagationSample",
    "SimPlan",
    "TierSpec",
    "a_corrected_density",
    "binned_chi2",
    "build_intensity",
    "composite_moment",
    "equivalence_verdict",
    "eval_lambda",
    "free_space_network",
    "hata_params",
    "isotropic_lambda_integral",
    "isotropic_representation",
    "load_model",
    "mark_consistency",
    "moment_closed",
    "moment_quad",
    "parse_model",
    "phi_rt",
    "run_plan",
    "single_tier_network",
    "time_change_ks",
    "truncation_radius",
    "two_tier_network",
]
