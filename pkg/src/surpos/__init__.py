"""Bayesian probability of success for multi-endpoint trials.

Joint modeling of several continuous endpoints via a seemingly unrelated
regression (SUR) model, with historical-data borrowing through power priors.
The package estimates the probability that a planned future trial meets a
(possibly composite) success criterion, including a multiplicity-adjusted
variant that restores family-wise error control for union criteria, plus a
frequentist Holm comparator and a simulation harness for operating
characteristics.
"""

from surpos.dataset import TrialDataset, ModelSpec, EndpointSpec
from surpos.design import (
    SurDesign,
    ThetaDraw,
    assemble_design,
    residual_cross_products,
    equationwise_mle,
)
from surpos.gibbs import (
    PowerPriorSpec,
    GibbsConfig,
    EqualityConstraint,
    sample_beta_conditional,
    sample_sigma_conditional,
    run_gibbs,
    dmc_sample,
)
from surpos.region import (
    Event,
    AllOf,
    AnyOf,
    SuccessRegion,
    DnfRegion,
    to_dnf,
    region_probability,
    adjusted_pos,
    region_from_dict,
    region_to_dict,
)
from surpos.covariates import (
    ConditionalSpec,
    CovariateChainSpec,
    CovariatePosterior,
    fit_covariate_chain,
    sample_covariates,
)
from surpos.hpd import HpdSpec, hpd_filter_logpost, hpd_filter_kde
from surpos.frequentist import PvalueSet, marginal_pvalues, holm_composite_decision
from surpos.engine import (
    PosConfig,
    ValidationSpec,
    PosReport,
    sample_validation_draw,
    sample_validation_draws,
    sample_future_dataset,
    posterior_success_probability,
    pos_estimate,
    pos_curve,
)
from surpos.templates import SyntheticTrial, synthesize_historical
from surpos.simulate import run_scenario
from surpos.io import load_dataset, save_dataset, load_run_config, run_from_config, emit_report

__all__ = [
    "TrialDataset",
    "ModelSpec",
    "EndpointSpec",
    "SurDesign",
    "ThetaDraw",
    "assemble_design",
    "residual_cross_products",
    "equationwise_mle",
    "PowerPriorSpec",
    "GibbsConfig",
    "EqualityConstraint",
    "sample_beta_conditional",
    "sample_sigma_conditional",
    "run_gibbs",
    "dmc_sample",
    "Event",
    "AllOf",
    "AnyOf",
    "SuccessRegion",
    "DnfRegion",
    "to_dnf",
    "region_probability",
    "adjusted_pos",
    "region_from_dict",
    "region_to_dict",
    "ConditionalSpec",
    "CovariateChainSpec",
    "CovariatePosterior",
    "fit_covariate_chain",
    "sample_covariates",
    "HpdSpec",
    "hpd_filter_logpost",
    "hpd_filter_kde",
    "PvalueSet",
    "marginal_pvalues",
    "holm_composite_decision",
    "PosConfig",
    "ValidationSpec",
    "PosReport",
    "sample_validation_draw",
    "sample_validation_draws",
    "sample_future_dataset",
    "posterior_success_probability",
    "pos_estimate",
    "pos_curve",
    "SyntheticTrial",
    "synthesize_historical",
    "run_scenario",
    "load_dataset",
    "save_dataset",
    "load_run_config",
    "run_from_config",
    "emit_report",
]

__version__ = "0.1.0"
