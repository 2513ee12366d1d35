"""Synthetic templates: parameter fidelity and scenario harness wiring."""

import numpy as np
import pytest

from surpos.design import assemble_design, equationwise_mle
from surpos.region import AllOf, AnyOf, Event
from surpos.simulate import run_scenario, scenario_region
from surpos.templates import (
    COMPASS_SDS,
    COMPASS_TREATMENT_EFFECTS,
    CORRELATIONS,
    IVACAFTOR_SDS,
    IVACAFTOR_TREATMENT_EFFECTS,
    correlation_matrix,
    synthesize_historical,
)


def test_correlation_vectors_are_positive_definite():
    for rho in CORRELATIONS.values():
        assert np.linalg.eigvalsh(correlation_matrix(rho)).min() > 0


def test_unknown_template_rejected():
    with pytest.raises(ValueError, match="template"):
        synthesize_historical("phase-iv", 50, seed=0)


def test_compass_shapes_and_kinds():
    t = synthesize_historical("compass-like", 120, seed=1, correlation="HN")
    assert t.dataset.n == 120
    assert t.dataset.n_endpoints == 3
    assert t.dataset.covariates.shape == (120, 7)
    assert len(t.chain.conditionals) == 7
    # 1 treatment + 1 intercept + 7 covariates per endpoint
    design = assemble_design(t.dataset, t.model)
    assert design.n_coefficients == 27
    assert t.sigma.shape == (3, 3)


def test_compass_recovers_generative_parameters():
    """large-sample MLE near the template treatment effects and
    the half-variance covariance."""
    t = synthesize_historical("compass-like", 20000, seed=2, correlation="HP")
    design = assemble_design(t.dataset, t.model)
    beta_hat, sigma_hat = equationwise_mle(design)
    tix = list(design.treatment_indices)
    sds = np.asarray(COMPASS_SDS)
    # Var(beta1_hat) ~ sigma_j^2/(n q (1-q)); 5 SE tolerance
    se = np.sqrt(0.5) * sds / np.sqrt(20000 * 0.25)
    np.testing.assert_array_less(
        np.abs(beta_hat[tix] - np.asarray(COMPASS_TREATMENT_EFFECTS)), 5 * se
    )
    expected_sigma = 0.5 * np.diag(sds) @ correlation_matrix(CORRELATIONS["HP"]) @ np.diag(sds)
    np.testing.assert_allclose(sigma_hat, expected_sigma, rtol=0.1, atol=0.01)


def test_ivacaftor_balanced_arms_and_directions():
    t = synthesize_historical("ivacaftor-like", 16, seed=3)
    assert int(t.dataset.treatment.sum()) == 8
    assert tuple(ep.direction for ep in t.model.endpoints) == (">", "<", ">")
    assert t.dataset.covariate_names == ("male", "age", "weight", "bmi")


def test_ivacaftor_recovers_effects():
    t = synthesize_historical("ivacaftor-like", 20000, seed=4)
    design = assemble_design(t.dataset, t.model)
    beta_hat, _ = equationwise_mle(design)
    tix = list(design.treatment_indices)
    se = np.asarray(IVACAFTOR_SDS) / np.sqrt(20000 * 0.25)
    np.testing.assert_array_less(
        np.abs(beta_hat[tix] - np.asarray(IVACAFTOR_TREATMENT_EFFECTS)), 5 * se
    )


def test_synthesis_is_seed_deterministic():
    a = synthesize_historical("compass-like", 50, seed=9, correlation="LN")
    b = synthesize_historical("compass-like", 50, seed=9, correlation="LN")
    np.testing.assert_array_equal(a.dataset.outcomes, b.dataset.outcomes)
    np.testing.assert_array_equal(a.dataset.covariates, b.dataset.covariates)


def test_explicit_correlation_tuple():
    t = synthesize_historical("compass-like", 40, seed=5, correlation=(0.1, 0.0, 0.2))
    assert t.sigma[0, 1] == pytest.approx(0.5 * 0.1 * COMPASS_SDS[0] * COMPASS_SDS[1])
    with pytest.raises(ValueError, match="positive definite"):
        synthesize_historical("compass-like", 40, seed=5, correlation=(0.99, -0.99, 0.99))


def test_scenario_region_shapes():
    region, nulls = scenario_region("one-of-two")
    assert region == AnyOf((Event(1, ">", 0.0), Event(2, ">", 0.0)))
    assert nulls == (1, 2)
    region, nulls = scenario_region("primary-plus-one")
    assert region == AllOf((Event(1, ">", 0.0), AnyOf((Event(2, ">", 0.0), Event(3, ">", 0.0)))))
    assert nulls == (2, 3)
    with pytest.raises(ValueError, match="region"):
        scenario_region("all-three")


def test_run_scenario_smoke():
    row, report = run_scenario(
        scenario="fwer",
        region_name="one-of-two",
        correlation="ind",
        replicates=8,
        seed=1,
        n=60,
        n0=120,
        inner_draws=100,
        inner_burn_in=50,
        n_workers=1,
    )
    assert set(row) == {
        "scenario", "region", "correlation", "replicates", "seed", "n",
        "pos_unadjusted", "pos_adjusted", "mc_se", "comparator_rate",
    }
    assert 0.0 <= row["pos_adjusted"] <= 1.0
    assert report.comparator_rate is not None


def test_run_scenario_validation():
    with pytest.raises(ValueError, match="scenario"):
        run_scenario("power", "one-of-two", "ind", 4, 0)
    with pytest.raises(ValueError, match="correlation"):
        run_scenario("fwer", "one-of-two", "strong", 4, 0)
