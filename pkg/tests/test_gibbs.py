"""Sampler correctness against conjugate closed forms and the DMC cross-check."""

import numpy as np
import pytest
from scipy import stats

from surpos.dataset import EndpointSpec, ModelSpec, TrialDataset
from surpos.design import assemble_design, residual_cross_products
from surpos.gibbs import (
    EqualityConstraint,
    GibbsConfig,
    PowerPriorSpec,
    REFERENCE_PRIOR,
    SamplerError,
    CrossProducts,
    _wishart_draw,
    dmc_arrays,
    gibbs_arrays,
    run_gibbs,
    sample_beta_conditional,
    sample_sigma_conditional,
    treatment_effect_draws,
)

from conftest import make_dataset, make_model


def single_endpoint_design(n=80, seed=11, beta1=0.6):
    ds = make_dataset(n=n, J=1, seed=seed, beta1=(beta1,), sigma=[[1.0]])
    return assemble_design(ds, make_model(J=1)), ds


def test_power_prior_spec_invariant():
    with pytest.raises(ValueError, match="historical"):
        PowerPriorSpec(a0=0.5, historical=None)
    design, _ = single_endpoint_design()
    with pytest.raises(ValueError, match="historical"):
        PowerPriorSpec(a0=0.0, historical=design)


def test_gibbs_config_validation():
    with pytest.raises(ValueError):
        GibbsConfig(draws=0)
    with pytest.raises(ValueError):
        GibbsConfig(draws=10, thin=0)


def test_beta_conditional_matches_gls_closed_form():
    """with Sigma fixed, beta | Sigma is N(A^-1 b, A^-1)."""
    ds = make_dataset(n=40, J=2, seed=5)
    design = assemble_design(ds, make_model())
    sigma = np.array([[1.0, 0.4], [0.4, 2.0]])
    sigma_inv = np.linalg.inv(sigma)
    A, b = CrossProducts(design).normal_equations(sigma_inv)
    mean_ref = np.linalg.solve(A, b)
    cov_ref = np.linalg.inv(A)
    rng = np.random.default_rng(0)
    draws = np.array(
        [sample_beta_conditional(design, REFERENCE_PRIOR, sigma, rng) for _ in range(4000)]
    )
    se = np.sqrt(np.diag(cov_ref) / 4000)
    np.testing.assert_array_less(np.abs(draws.mean(0) - mean_ref), 5 * se)
    np.testing.assert_allclose(np.cov(draws.T), cov_ref, atol=0.15 * np.max(np.diag(cov_ref)))


def test_constraint_fixes_coordinates_exactly():
    ds = make_dataset(n=40, J=2, seed=6)
    design = assemble_design(ds, make_model())
    constraint = EqualityConstraint.null_treatment_effects(design, (1, 2))
    rng = np.random.default_rng(1)
    draw = sample_beta_conditional(
        design, REFERENCE_PRIOR, np.eye(2), rng, constraint=constraint
    )
    tix = list(design.treatment_indices)
    np.testing.assert_array_equal(draw[tix], [0.0, 0.0])


def test_constrained_mean_matches_dense_conditioning():
    """free-block mean vs brute-force Gaussian conditioning."""
    ds = make_dataset(n=50, J=2, seed=9)
    design = assemble_design(ds, make_model())
    sigma = np.array([[1.0, -0.2], [-0.2, 0.5]])
    A, b = CrossProducts(design).normal_equations(np.linalg.inv(sigma))
    tix = list(design.treatment_indices)
    free = [i for i in range(design.n_coefficients) if i not in tix]
    # conditional of N(A^-1 b, A^-1) given beta_F = 0 has mean
    # A_UU^-1 (b_U - A_UF * 0)
    mean_ref = np.linalg.solve(A[np.ix_(free, free)], b[free])
    constraint = EqualityConstraint.null_treatment_effects(design, (1, 2))
    rng = np.random.default_rng(2)
    draws = np.array(
        [
            sample_beta_conditional(design, REFERENCE_PRIOR, sigma, rng, constraint=constraint)
            for _ in range(3000)
        ]
    )
    cov_uu = np.linalg.inv(A[np.ix_(free, free)])
    se = np.sqrt(np.diag(cov_uu) / 3000)
    np.testing.assert_array_less(np.abs(draws[:, free].mean(0) - mean_ref), 5 * se)


def test_wishart_first_moment():
    """E[W] = df * V for the Bartlett construction."""
    V = np.array([[2.0, 0.5], [0.5, 1.0]])
    df = 7.5
    B = np.linalg.cholesky(V)
    rng = np.random.default_rng(3)
    draws = np.array([_wishart_draw(B, df, rng) for _ in range(20000)])
    np.testing.assert_allclose(draws.mean(0), df * V, rtol=0.05)


def test_sigma_conditional_j1_matches_inverse_gamma():
    """at J=1, sigma^2 | beta is Inv-Gamma(n/2, r'r/2)."""
    design, _ = single_endpoint_design(n=60)
    beta = np.zeros(design.n_coefficients)
    rr = float(residual_cross_products(design, beta)[0, 0])
    rng = np.random.default_rng(4)
    draws = np.array(
        [sample_sigma_conditional(design, REFERENCE_PRIOR, beta, rng)[0, 0] for _ in range(8000)]
    )
    # mean of Inv-Gamma(n/2, rr/2) is rr / (n - 2)
    expected = rr / (60 - 2)
    assert draws.mean() == pytest.approx(expected, rel=0.05)
    ks = stats.kstest(draws, stats.invgamma(60 / 2, scale=rr / 2).cdf)
    assert ks.statistic < 0.02


def test_dmc_j1_treatment_effect_is_student_t():
    """diffuse-prior marginal of beta_11 at J=1 is a location-scale t."""
    design, _ = single_endpoint_design(n=100, seed=21)
    Xj = design.blocks[0]
    y = design.outcomes[:, 0]
    k = Xj.shape[1]
    coef = np.linalg.solve(Xj.T @ Xj, Xj.T @ y)
    resid = y - Xj @ coef
    df = 100 - k  # n - p_j - 1
    s2 = float(resid @ resid) / df
    scale = np.sqrt(s2 * np.linalg.inv(Xj.T @ Xj)[0, 0])
    betas, _ = dmc_arrays(design, 20000, seed=5)
    effects = treatment_effect_draws(betas, design)[:, 0]
    ks = stats.kstest(effects, stats.t(df, loc=coef[0], scale=scale).cdf)
    assert ks.statistic < 0.02


def test_gibbs_matches_dmc_cross_sampler():
    """Gibbs (a0=0) vs direct Monte Carlo on a J=3 toy."""
    ds = make_dataset(n=90, J=3, seed=13, beta1=(0.5, -0.3, 0.2), sigma=np.eye(3))
    design = assemble_design(ds, make_model(J=3))
    g_betas, g_sigmas = gibbs_arrays(
        design, REFERENCE_PRIOR, GibbsConfig(draws=6000, burn_in=500, seed=1)
    )
    d_betas, d_sigmas = dmc_arrays(design, 6000, seed=2)
    se = np.sqrt(d_betas.var(0) / 6000 + g_betas.var(0) / 6000)
    np.testing.assert_array_less(np.abs(g_betas.mean(0) - d_betas.mean(0)), 5 * se)
    se_s = np.sqrt(d_sigmas.var(0) / 6000 + g_sigmas.var(0) / 6000)
    np.testing.assert_array_less(np.abs(g_sigmas.mean(0) - d_sigmas.mean(0)), 5 * se_s)


def test_power_prior_pooling_equivalence():
    """a0=1 with an identical historical design doubles the
    information: the combined normal equations equal the pooled ones."""
    ds = make_dataset(n=30, J=2, seed=15)
    design = assemble_design(ds, make_model())
    sigma_inv = np.linalg.inv(np.array([[1.0, 0.3], [0.3, 1.0]]))
    A, b = CrossProducts(design).normal_equations(sigma_inv)
    pooled = TrialDataset(
        outcomes=np.vstack([ds.outcomes, ds.outcomes]),
        treatment=np.concatenate([ds.treatment, ds.treatment]),
        covariates=np.vstack([ds.covariates, ds.covariates]),
        covariate_names=ds.covariate_names,
        covariate_kinds=ds.covariate_kinds,
    )
    pooled_design = assemble_design(pooled, make_model())
    A2, b2 = CrossProducts(pooled_design).normal_equations(sigma_inv)
    np.testing.assert_allclose(A2, 2 * A, atol=1e-9)
    np.testing.assert_allclose(b2, 2 * b, atol=1e-9)


def test_power_prior_shrinks_toward_historical():
    """A heavier a0 pulls the posterior mean toward the historical fit."""
    current = make_dataset(n=60, J=2, seed=30, beta1=(0.0, 0.0))
    historical = make_dataset(n=200, J=2, seed=31, beta1=(2.0, 2.0))
    d_cur = assemble_design(current, make_model())
    d_hist = assemble_design(historical, make_model())
    cfg = GibbsConfig(draws=2000, burn_in=300, seed=7)
    ref, _ = gibbs_arrays(d_cur, REFERENCE_PRIOR, cfg)
    borrow, _ = gibbs_arrays(d_cur, PowerPriorSpec(a0=1.0, historical=d_hist), cfg)
    tix = list(d_cur.treatment_indices)
    assert np.all(borrow[:, tix].mean(0) > ref[:, tix].mean(0) + 0.3)


def test_determinism_by_seed():
    ds = make_dataset(n=30, J=2, seed=17)
    design = assemble_design(ds, make_model())
    cfg = GibbsConfig(draws=50, burn_in=10, seed=42)
    b1, s1 = gibbs_arrays(design, REFERENCE_PRIOR, cfg)
    b2, s2 = gibbs_arrays(design, REFERENCE_PRIOR, cfg)
    np.testing.assert_array_equal(b1, b2)
    np.testing.assert_array_equal(s1, s2)


def test_thinning_subsamples_the_chain():
    ds = make_dataset(n=30, J=2, seed=18)
    design = assemble_design(ds, make_model())
    b_full, _ = gibbs_arrays(design, REFERENCE_PRIOR, GibbsConfig(draws=20, burn_in=5, seed=3))
    b_thin, _ = gibbs_arrays(
        design, REFERENCE_PRIOR, GibbsConfig(draws=10, burn_in=5, thin=2, seed=3)
    )
    np.testing.assert_array_equal(b_thin, b_full[::2])


def test_run_gibbs_draws_are_positive_definite():
    ds = make_dataset(n=40, J=2, seed=19)
    design = assemble_design(ds, make_model())
    draws = run_gibbs(
        design, REFERENCE_PRIOR, GibbsConfig(draws=25, burn_in=10, seed=4), check_pd=True
    )
    assert len(draws) == 25


def test_dmc_rejects_power_prior():
    design, _ = single_endpoint_design()
    hist, _ = single_endpoint_design(seed=99)
    with pytest.raises(SamplerError, match="diffuse"):
        dmc_arrays(design, 10, power=PowerPriorSpec(a0=0.5, historical=hist))


def test_dmc_needs_enough_rows():
    ds = make_dataset(n=8, J=2, seed=20)
    design = assemble_design(ds, make_model())
    with pytest.raises(SamplerError, match="n > p"):
        dmc_arrays(design, 10)


def test_constraint_validation():
    with pytest.raises(ValueError, match="length"):
        EqualityConstraint(indices=(0, 1), values=(0.0,))
    with pytest.raises(ValueError, match="duplicate"):
        EqualityConstraint(indices=(0, 0), values=(0.0, 0.0))
    ds = make_dataset(n=30, J=2, seed=22)
    design = assemble_design(ds, make_model())
    with pytest.raises(IndexError, match="treatment-effect"):
        EqualityConstraint(indices=(1,), values=(0.0,)).check_against(design)
