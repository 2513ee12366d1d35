"""Outer Monte Carlo for probability of success.

Draws parameters from a validation prior (the posterior of the most recent
historical study, optionally constrained to the null boundary or the
alternative region, optionally HPD-trimmed), simulates future trials,
computes posterior success probabilities under the fitting prior, and
aggregates the unadjusted and multiplicity-adjusted POS.

All clause-subset POS estimates share the same validation draws, future
datasets, and inner posterior chains (common random numbers), so the
alternating sum of the adjustment carries no between-subset Monte Carlo
noise.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from surpos.covariates import CovariateChainSpec, CovariatePosterior, chain_kinds, sample_covariates
from surpos.dataset import ModelSpec, TrialDataset
from surpos.design import SurDesign, ThetaDraw, assemble_design
from surpos.frequentist import holm_composite_decision, marginal_pvalues
from surpos.gibbs import (
    EqualityConstraint,
    GibbsConfig,
    PowerPriorSpec,
    REFERENCE_PRIOR,
    gibbs_arrays,
    treatment_effect_draws,
)
from surpos.hpd import HpdSpec, hpd_filter_kde, historical_log_posterior
from surpos.region import (
    Clause,
    DnfRegion,
    SuccessRegion,
    adjusted_pos,
    clause_satisfied,
    clause_subsets,
    dnf_satisfied,
    region_probability,
    region_to_dict,
    to_dnf,
)

THREADS_ENV = "POS_SUR_THREADS"

_REJECTION_PROBE = 10_000
_MIN_ACCEPTANCE = 1e-4


@dataclass(frozen=True)
class PosConfig:
    """Settings for one POS estimate.

    ``inner_draws`` is the posterior sample size per future dataset and
    ``n_datasets`` the number of simulated future trials.
    """

    n: int
    region: SuccessRegion
    gamma: float = 0.95
    q_rand: float = 0.5
    inner_draws: int = 10_000
    n_datasets: int = 10_000
    a0: float = 0.0
    b01: float = 0.0
    b02: float = 1.0
    seed: int = 0
    inner_burn_in: int = 200
    validation_burn_in: int = 500

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0.0 < self.q_rand < 1.0:
            raise ValueError("q_rand must lie in (0, 1)")
        if self.inner_draws < 1 or self.n_datasets < 1:
            raise ValueError("inner_draws and n_datasets must be >= 1")
        for w in (self.a0, self.b01, self.b02):
            if not 0.0 <= w <= 1.0:
                raise ValueError("power prior weights must lie in [0, 1]")

    def desk_scale(self) -> "PosConfig":
        """Reduced presets for quick runs and CI."""
        return replace(self, inner_draws=1_000, n_datasets=500)


@dataclass(frozen=True)
class ValidationSpec:
    """How to draw parameters for future-trial generation.

    ``null-boundary`` fixes the listed (1-based) endpoints' treatment effects
    to zero by exact Gaussian conditioning; ``alternative`` restricts draws to
    the success region by rejection sampling.
    """

    mode: str = "unconstrained"
    null_endpoints: tuple[int, ...] = ()
    alternative_region: SuccessRegion | None = None
    hpd: HpdSpec | None = None

    def __post_init__(self):
        if self.mode not in ("unconstrained", "null-boundary", "alternative"):
            raise ValueError(f"unknown validation mode {self.mode!r}")
        object.__setattr__(self, "null_endpoints", tuple(int(j) for j in self.null_endpoints))
        if self.mode == "null-boundary" and not self.null_endpoints:
            raise ValueError("null-boundary mode needs at least one constrained endpoint")


@dataclass(frozen=True)
class PosReport:
    pos_unadjusted: float
    pos_adjusted: float
    mc_se: float
    subset_pos: dict[str, float]
    comparator_rate: float | None
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "pos_unadjusted": self.pos_unadjusted,
            "pos_adjusted": self.pos_adjusted,
            "mc_se": self.mc_se,
            "subset_pos": dict(self.subset_pos),
            "comparator_rate": self.comparator_rate,
            "config": self.config,
        }


def _chain_length(n_draws: int, burn_in: int) -> GibbsConfig:
    return GibbsConfig(draws=n_draws, burn_in=burn_in, thin=1)


def sample_validation_draws(
    hist: SurDesign,
    vspec: ValidationSpec,
    n_draws: int,
    rng: np.random.Generator,
    region: SuccessRegion | None = None,
    burn_in: int = 500,
) -> tuple[np.ndarray, np.ndarray]:
    """Batch of validation-prior draws as (betas, sigmas) arrays.

    The validation prior is the historical posterior under the improper
    initial prior; constrained modes restrict it per the validation mode.
    """
    raw_needed = n_draws
    if vspec.hpd is not None:
        raw_needed = math.ceil(n_draws / vspec.hpd.q_hpd)
    constraint = None
    if vspec.mode == "null-boundary":
        constraint = EqualityConstraint.null_treatment_effects(hist, vspec.null_endpoints)
    if vspec.mode == "alternative":
        target = vspec.alternative_region if vspec.alternative_region is not None else region
        if target is None:
            raise ValueError("alternative mode needs a region")
        dnf = to_dnf(target)
        betas, sigmas = _rejection_sample(hist, dnf, raw_needed, rng, burn_in)
    else:
        cfg = _chain_length(raw_needed, burn_in)
        betas, sigmas = gibbs_arrays(hist, REFERENCE_PRIOR, cfg, constraint=constraint, rng=rng)
    if vspec.hpd is not None:
        betas, sigmas = _hpd_trim(betas, sigmas, hist, vspec.hpd)
    return betas[:n_draws], sigmas[:n_draws]


def _rejection_sample(hist, dnf: DnfRegion, n_draws, rng, burn_in):
    tix = list(hist.treatment_indices)
    accepted_b, accepted_s = [], []
    total_raw = 0
    total_accepted = 0
    batch = max(n_draws, 2_000)
    while total_accepted < n_draws:
        cfg = _chain_length(batch, burn_in)
        betas, sigmas = gibbs_arrays(hist, REFERENCE_PRIOR, cfg, rng=rng)
        keep = dnf_satisfied(dnf, betas[:, tix])
        total_raw += betas.shape[0]
        total_accepted += int(keep.sum())
        accepted_b.append(betas[keep])
        accepted_s.append(sigmas[keep])
        if total_raw >= _REJECTION_PROBE and total_accepted < _MIN_ACCEPTANCE * total_raw:
            raise RuntimeError(
                "alternative region nearly null: acceptance rate "
                f"{total_accepted / total_raw:.2e} below {_MIN_ACCEPTANCE}"
            )
    return np.concatenate(accepted_b)[:n_draws], np.concatenate(accepted_s)[:n_draws]


def _hpd_trim(betas, sigmas, hist, hspec: HpdSpec):
    if hspec.method == "log-posterior":
        scores = np.array(
            [historical_log_posterior(ThetaDraw(b, s), hist) for b, s in zip(betas, sigmas)]
        )
        keep = math.ceil(hspec.q_hpd * len(scores))
        order = np.argsort(-scores, kind="stable")
        idx = np.sort(order[:keep])
    else:
        tix = list(hist.treatment_indices)
        idx = hpd_filter_kde(betas[:, tix], hspec.q_hpd, hspec.bandwidth)
    return betas[idx], sigmas[idx]


def sample_validation_draw(
    hist: SurDesign,
    vspec: ValidationSpec,
    rng: np.random.Generator,
    region: SuccessRegion | None = None,
) -> ThetaDraw:
    """One validation-prior draw."""
    betas, sigmas = sample_validation_draws(hist, vspec, 1, rng, region=region)
    return ThetaDraw(beta=betas[0], sigma=sigmas[0])


def sample_future_dataset(
    theta: ThetaDraw,
    cov_post: CovariatePosterior,
    config: PosConfig,
    spec: ModelSpec,
    rng: np.random.Generator,
) -> TrialDataset:
    """Simulate one future trial of n subjects under the given parameters.

    Covariates come from one chain-parameter draw, treatment from Bernoulli
    randomization, and outcomes carry cross-endpoint covariance Sigma per
    subject.
    """
    chain = CovariateChainSpec(tuple(c.spec for c in cov_post.conditionals))
    n = config.n
    covariates = sample_covariates(cov_post, chain, n, rng)
    z = (rng.random(n) < config.q_rand).astype(int)
    J = spec.n_endpoints
    names, kinds = chain.targets, chain_kinds(chain)
    skeleton = TrialDataset(
        outcomes=np.zeros((n, J)),
        treatment=z,
        covariates=covariates,
        covariate_names=names,
        covariate_kinds=kinds,
    )
    design = assemble_design(skeleton, spec)
    means = design.fitted_means(np.asarray(theta.beta, dtype=float))
    sigma = np.asarray(theta.sigma, dtype=float)
    if np.any(sigma):
        L = np.linalg.cholesky(sigma)
        noise = rng.standard_normal((n, J)) @ L.T
    else:
        # zero-covariance sentinel: noiseless outcomes
        noise = 0.0
    return TrialDataset(
        outcomes=means + noise,
        treatment=z,
        covariates=covariates,
        covariate_names=names,
        covariate_kinds=kinds,
    )


def posterior_success_probability(
    future: TrialDataset,
    power: PowerPriorSpec,
    region: DnfRegion,
    gconf: GibbsConfig,
    spec: ModelSpec,
    rng: np.random.Generator | None = None,
) -> float:
    """Monte Carlo estimate of P(treatment effects in region | future data)."""
    design = assemble_design(future, spec)
    betas, _ = gibbs_arrays(design, power, gconf, rng=rng)
    return region_probability(treatment_effect_draws(betas, design), region)


def _subset_key(idx: frozenset[int]) -> str:
    return ",".join(str(i) for i in sorted(idx))


def _replicate(
    theta: ThetaDraw,
    cov_post: CovariatePosterior,
    config: PosConfig,
    spec: ModelSpec,
    dnf: DnfRegion,
    subsets: dict[frozenset[int], Clause | None],
    power: PowerPriorSpec,
    rng: np.random.Generator,
    comparator: bool,
) -> tuple[dict[frozenset[int], bool], bool, bool | None]:
    """One outer replicate: subset success indicators, union indicator, Holm flag."""
    future = sample_future_dataset(theta, cov_post, config, spec, rng)
    design = assemble_design(future, spec)
    gconf = _chain_length(config.inner_draws, config.inner_burn_in)
    betas, _ = gibbs_arrays(design, power, gconf, rng=rng)
    effects = treatment_effect_draws(betas, design)
    indicators = {}
    for idx, clause in subsets.items():
        if clause is None:
            prob = 0.0
        else:
            prob = float(clause_satisfied(clause, effects).mean())
        indicators[idx] = prob >= config.gamma
    union_prob = float(dnf_satisfied(dnf, effects).mean())
    union_ind = union_prob >= config.gamma
    holm = None
    if comparator:
        pvals = marginal_pvalues(future, spec)
        holm = holm_composite_decision(pvals, dnf, alpha=1.0 - config.gamma)
    return indicators, union_ind, holm


def _run_replicates(args):
    """Worker entry point: a chunk of replicates, each with its own RNG stream."""
    (chunk, cov_post, config, spec, dnf, subsets, power, comparator) = args
    out = []
    for b, seed, beta, sigma in chunk:
        rng = np.random.default_rng(seed)
        theta = ThetaDraw(beta=beta, sigma=sigma)
        out.append((b, _replicate(theta, cov_post, config, spec, dnf, subsets, power, rng, comparator)))
    return out


def _resolve_workers(n_workers: int | None) -> int:
    if n_workers is not None:
        return max(1, n_workers)
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def _config_echo(config: PosConfig, vspec: ValidationSpec, spec: ModelSpec) -> dict:
    return {
        "n": config.n,
        "gamma": config.gamma,
        "q_rand": config.q_rand,
        "inner_draws": config.inner_draws,
        "n_datasets": config.n_datasets,
        "a0": config.a0,
        "b01": config.b01,
        "b02": config.b02,
        "seed": config.seed,
        "inner_burn_in": config.inner_burn_in,
        "validation_burn_in": config.validation_burn_in,
        "region": region_to_dict(config.region),
        "validation": {
            "mode": vspec.mode,
            "null_endpoints": list(vspec.null_endpoints),
            "alternative_region": (
                region_to_dict(vspec.alternative_region)
                if vspec.alternative_region is not None
                else None
            ),
            "hpd": (
                {"method": vspec.hpd.method, "q_hpd": vspec.hpd.q_hpd, "bandwidth": vspec.hpd.bandwidth}
                if vspec.hpd is not None
                else None
            ),
        },
        "model": {
            "endpoints": [
                {
                    "covariates": list(ep.covariates),
                    "intercept": ep.intercept,
                    "direction": ep.direction,
                    "delta": ep.delta,
                }
                for ep in spec.endpoints
            ]
        },
    }


def pos_estimate(
    config: PosConfig,
    spec: ModelSpec,
    hist: SurDesign,
    cov_post: CovariatePosterior,
    vspec: ValidationSpec,
    fitting_hist: SurDesign | None = None,
    comparator: bool = False,
    n_workers: int | None = None,
) -> PosReport:
    """Estimate unadjusted and adjusted POS per the outer Monte Carlo.

    ``hist`` is the newest historical design (validation prior);
    ``fitting_hist`` is the older one borrowed into the fitting prior when
    a0 > 0.  Deterministic given the config seed, independent of worker count.
    """
    d_check = sum(ep.n_covariate_terms + 1 for ep in spec.endpoints)
    if config.n <= d_check:
        raise ValueError(f"need n > p + J = {d_check} for fitting-posterior propriety")
    if config.a0 > 0 and fitting_hist is None:
        raise ValueError("a0 > 0 requires the older historical design")
    power = (
        PowerPriorSpec(a0=config.a0, historical=fitting_hist) if config.a0 > 0 else REFERENCE_PRIOR
    )
    dnf = to_dnf(config.region)
    subsets = clause_subsets(dnf)
    B = config.n_datasets
    ss = np.random.SeedSequence(config.seed)
    valid_ss, rep_root = ss.spawn(2)
    rep_seeds = rep_root.spawn(B)
    betas, sigmas = sample_validation_draws(
        hist,
        vspec,
        B,
        np.random.default_rng(valid_ss),
        region=config.region,
        burn_in=config.validation_burn_in,
    )
    workers = _resolve_workers(n_workers)
    jobs = [(b, rep_seeds[b], betas[b], sigmas[b]) for b in range(B)]
    results: dict[int, tuple] = {}
    if workers == 1:
        for item in _run_replicates((jobs, cov_post, config, spec, dnf, subsets, power, comparator)):
            results[item[0]] = item[1]
    else:
        n_chunks = min(len(jobs), workers * 4)
        chunks = [jobs[i::n_chunks] for i in range(n_chunks)]
        payloads = [
            (chunk, cov_post, config, spec, dnf, subsets, power, comparator)
            for chunk in chunks
            if chunk
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for batch in pool.map(_run_replicates, payloads):
                for item in batch:
                    results[item[0]] = item[1]
    subset_hits = {idx: 0 for idx in subsets}
    union_hits = 0
    holm_hits = 0
    for b in range(B):
        indicators, union_ind, holm = results[b]
        for idx, flag in indicators.items():
            subset_hits[idx] += int(flag)
        union_hits += int(union_ind)
        if holm:
            holm_hits += 1
    subset_pos = {idx: hits / B for idx, hits in subset_hits.items()}
    pos_unadj = union_hits / B
    pos_adj = adjusted_pos(subset_pos, config.gamma)
    mc_se = math.sqrt(max(pos_unadj * (1 - pos_unadj), 1e-12) / B)
    return PosReport(
        pos_unadjusted=pos_unadj,
        pos_adjusted=pos_adj,
        mc_se=mc_se,
        subset_pos={_subset_key(idx): v for idx, v in subset_pos.items()},
        comparator_rate=holm_hits / B if comparator else None,
        config=_config_echo(config, vspec, spec),
    )


def pos_curve(
    config: PosConfig,
    n_grid: Sequence[int],
    spec: ModelSpec,
    hist: SurDesign,
    cov_post: CovariatePosterior,
    vspec: ValidationSpec,
    fitting_hist: SurDesign | None = None,
    comparator: bool = False,
    n_workers: int | None = None,
) -> list[tuple[int, PosReport]]:
    """POS at each sample size of an increasing grid, common seeds throughout."""
    grid = [int(n) for n in n_grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n grid must be nonempty and strictly increasing")
    out = []
    for n in grid:
        report = pos_estimate(
            replace(config, n=n),
            spec,
            hist,
            cov_post,
            vspec,
            fitting_hist=fitting_hist,
            comparator=comparator,
            n_workers=n_workers,
        )
        out.append((n, report))
    return out
