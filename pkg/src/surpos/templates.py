"""Synthetic historical trial generators.

Two parameter sets are built in: a large stroke-services-style three-endpoint
trial ("compass-like") and a small cystic-fibrosis-style phase II trial
("ivacaftor-like").  Both return the dataset together with the matching model
and covariate-chain specifications, so the generated data can be fed straight
into covariate fitting and POS estimation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from surpos.covariates import ConditionalSpec, CovariateChainSpec
from surpos.dataset import EndpointSpec, ModelSpec, TrialDataset

TEMPLATES = ("compass-like", "ivacaftor-like")

# pairwise correlation vectors (rho_12, rho_13, rho_23)
CORRELATIONS = {
    "HN": (-0.3, -0.4, -0.7),
    "LN": (-0.05, -0.1, -0.2),
    "ind": (0.0, 0.0, 0.0),
    "LP": (0.05, 0.1, 0.2),
    "HP": (0.3, 0.4, 0.7),
}

COMPASS_TREATMENT_EFFECTS = (0.0333, 0.1667, 0.5980)
COMPASS_SDS = (0.193, 0.748, 7.422)
COMPASS_N0 = 981

IVACAFTOR_TREATMENT_EFFECTS = (6.4, -49.1, 3.5)
IVACAFTOR_SDS = (5.12, 12.26, 7.05)
IVACAFTOR_N0 = 16
IVACAFTOR_PHASE3_N = 69


@dataclass(frozen=True)
class SyntheticTrial:
    dataset: TrialDataset
    model: ModelSpec
    chain: CovariateChainSpec
    sigma: np.ndarray
    beta: np.ndarray


def correlation_matrix(rho: tuple[float, float, float]) -> np.ndarray:
    r12, r13, r23 = rho
    return np.array([[1.0, r12, r13], [r12, 1.0, r23], [r13, r23, 1.0]])


def _sigma_from(sds, rho, variance_scale: float) -> np.ndarray:
    D = np.diag(sds)
    sigma = variance_scale * (D @ correlation_matrix(rho) @ D)
    if np.linalg.eigvalsh(sigma).min() <= 0:
        raise ValueError(f"correlation vector {rho} is not positive definite")
    return sigma


_COMPASS_CHAIN = CovariateChainSpec(
    conditionals=(
        ConditionalSpec("female", (), "bernoulli"),
        ConditionalSpec("age", ("female",), "gaussian"),
        ConditionalSpec("severity", ("age",), "gamma"),
        ConditionalSpec("insured", ("age",), "bernoulli"),
        ConditionalSpec("stroke_hx", (), "bernoulli"),
        ConditionalSpec("comorbid", ("age",), "poisson"),
        ConditionalSpec("qol0", ("female", "severity"), "gaussian"),
    )
)

# per-endpoint control effects: intercept followed by the seven covariates
_COMPASS_BETA2 = (
    (3.0, 0.02, 0.002, -0.02, 0.03, -0.02, -0.01, 0.002),
    (2.5, 0.05, -0.005, -0.05, 0.10, -0.08, -0.04, 0.010),
    (40.0, 1.0, -0.10, -0.50, 1.00, -1.00, -0.50, 0.10),
)

_IVACAFTOR_CHAIN = CovariateChainSpec(
    conditionals=(
        ConditionalSpec("male", (), "bernoulli"),
        ConditionalSpec("age", ("male",), "gaussian"),
        ConditionalSpec("weight", ("age",), "gaussian"),
        ConditionalSpec("bmi", ("weight",), "gaussian"),
    )
)


def _compass_covariates(n: int, rng: np.random.Generator) -> np.ndarray:
    female = (rng.random(n) < 0.55).astype(float)
    age = 70.0 - 2.0 * female + 10.0 * rng.standard_normal(n)
    severity = rng.gamma(4.0, np.exp(0.3 + 0.01 * age) / 4.0)
    insured = (rng.random(n) < expit(2.0 - 0.01 * age)).astype(float)
    stroke_hx = (rng.random(n) < 0.3).astype(float)
    comorbid = rng.poisson(np.exp(-1.0 + 0.02 * age)).astype(float)
    qol0 = 60.0 + 2.0 * female - 1.5 * severity + 8.0 * rng.standard_normal(n)
    return np.column_stack([female, age, severity, insured, stroke_hx, comorbid, qol0])


def _ivacaftor_covariates(n: int, rng: np.random.Generator) -> np.ndarray:
    male = (rng.random(n) < 0.5).astype(float)
    age = 25.0 + 2.0 * male + 8.0 * rng.standard_normal(n)
    weight = 45.0 + 0.4 * age + 8.0 * rng.standard_normal(n)
    bmi = 14.0 + 0.12 * weight + 2.0 * rng.standard_normal(n)
    return np.column_stack([male, age, weight, bmi])


def _balanced_treatment(n: int, rng: np.random.Generator) -> np.ndarray:
    z = np.zeros(n, dtype=int)
    z[: n // 2] = 1
    return rng.permutation(z)


def synthesize_historical(
    template: str,
    n: int,
    seed: int | np.random.Generator | None = None,
    correlation: str | tuple[float, float, float] = "ind",
) -> SyntheticTrial:
    """Generate a historical dataset from one of the built-in templates.

    ``correlation`` names one of the five pairwise-correlation vectors
    (HN, LN, ind, LP, HP) or gives an explicit (rho12, rho13, rho23).
    The compass-like template halves the outcome variance relative to the
    endpoint standard deviations; the ivacaftor-like template uses them
    unchanged and has zero control effects.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    rho = CORRELATIONS[correlation] if isinstance(correlation, str) else tuple(correlation)
    if template == "compass-like":
        sigma = _sigma_from(COMPASS_SDS, rho, variance_scale=0.5)
        covariates = _compass_covariates(n, rng)
        chain = _COMPASS_CHAIN
        beta1 = COMPASS_TREATMENT_EFFECTS
        beta2 = _COMPASS_BETA2
        directions = (">", ">", ">")
        z = (rng.random(n) < 0.5).astype(int)
    elif template == "ivacaftor-like":
        sigma = _sigma_from(IVACAFTOR_SDS, rho, variance_scale=1.0)
        covariates = _ivacaftor_covariates(n, rng)
        chain = _IVACAFTOR_CHAIN
        beta1 = IVACAFTOR_TREATMENT_EFFECTS
        # change-from-baseline outcomes: zero intercepts, zero control effects
        L = covariates.shape[1]
        beta2 = tuple((0.0,) * (L + 1) for _ in range(3))
        directions = (">", "<", ">")
        z = _balanced_treatment(n, rng)
    else:
        raise ValueError(f"unknown template {template!r}; choose from {TEMPLATES}")
    names = chain.targets
    kinds = tuple(
        {"gaussian": "cont", "gamma": "cont", "bernoulli": "bin", "poisson": "count"}[c.family]
        for c in chain.conditionals
    )
    design_cols = np.column_stack([np.ones(n), covariates])
    means = np.column_stack(
        [beta1[j] * z + design_cols @ np.asarray(beta2[j]) for j in range(3)]
    )
    noise = rng.standard_normal((n, 3)) @ np.linalg.cholesky(sigma).T
    dataset = TrialDataset(
        outcomes=means + noise,
        treatment=z,
        covariates=covariates,
        covariate_names=names,
        covariate_kinds=kinds,
    )
    model = ModelSpec(
        endpoints=tuple(
            EndpointSpec(covariates=names, intercept=True, direction=directions[j], delta=0.0)
            for j in range(3)
        )
    )
    beta_stacked = np.concatenate(
        [np.concatenate(([beta1[j]], beta2[j])) for j in range(3)]
    )
    return SyntheticTrial(dataset=dataset, model=model, chain=chain, sigma=sigma, beta=beta_stacked)
