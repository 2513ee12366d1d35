"""HPD trimming: density ordering, retention counts, and a KDE oracle."""

import math

import numpy as np
import pytest

from surpos.design import ThetaDraw, assemble_design
from surpos.gibbs import GibbsConfig, REFERENCE_PRIOR, run_gibbs
from surpos.hpd import (
    HpdSpec,
    historical_log_posterior,
    hpd_filter_kde,
    hpd_filter_logpost,
    kde_density,
)

from conftest import make_dataset, make_model


def kde_oracle(points, h):
    """naive O(N^2) leave-self-in product-Gaussian KDE."""
    N, K = points.shape
    out = np.zeros(N)
    norm = (2 * math.pi) ** (-K / 2) / np.prod(h)
    for i in range(N):
        for m in range(N):
            d2 = np.sum(((points[i] - points[m]) / h) ** 2)
            out[i] += math.exp(-0.5 * d2)
    return out * norm / N


def test_spec_validation():
    with pytest.raises(ValueError, match="method"):
        HpdSpec(method="ellipse")
    with pytest.raises(ValueError, match="q_hpd"):
        HpdSpec(q_hpd=0.0)
    with pytest.raises(ValueError, match="bandwidth"):
        HpdSpec(bandwidth="silverman")


def test_kde_density_matches_naive_oracle():
    rng = np.random.default_rng(0)
    points = rng.standard_normal((120, 3))
    h = np.array([0.4, 0.6, 0.8])
    np.testing.assert_allclose(kde_density(points, h), kde_oracle(points, h), rtol=1e-10)


def test_kde_filter_keeps_central_mass():
    rng = np.random.default_rng(1)
    draws = rng.standard_normal((500, 2))
    draws[0] = [25.0, 25.0]  # gross outlier
    kept = hpd_filter_kde(draws, q_hpd=0.5)
    assert len(kept) == 250
    assert 0 not in kept
    # retained draws are closer to the center on average
    dropped = np.setdiff1d(np.arange(500), kept)
    assert np.linalg.norm(draws[kept], axis=1).mean() < np.linalg.norm(
        draws[dropped], axis=1
    ).mean()


def test_kde_filter_validation():
    rng = np.random.default_rng(2)
    with pytest.raises(ValueError, match="50"):
        hpd_filter_kde(rng.standard_normal((10, 2)), 0.5)
    draws = rng.standard_normal((60, 2))
    draws[:, 1] = 1.0
    with pytest.raises(ValueError, match="column 1"):
        hpd_filter_kde(draws, 0.5)
    with pytest.raises(ValueError, match="q_hpd"):
        hpd_filter_kde(rng.standard_normal((60, 2)), 1.5)


def test_logpost_filter_prefers_high_density_draws():
    """Draws near the MLE must outrank draws far from it."""
    ds = make_dataset(n=80, J=2, seed=3)
    design = assemble_design(ds, make_model())
    draws = run_gibbs(design, REFERENCE_PRIOR, GibbsConfig(draws=200, burn_in=100, seed=1))
    # append a deliberately terrible draw
    bad = ThetaDraw(beta=draws[0].beta + 50.0, sigma=draws[0].sigma)
    kept = hpd_filter_logpost(list(draws) + [bad], design, q_hpd=0.5)
    assert len(kept) == math.ceil(0.5 * 201)
    assert not any(d is bad for d in kept)


def test_logpost_retention_count_and_order():
    ds = make_dataset(n=40, J=2, seed=4)
    design = assemble_design(ds, make_model())
    draws = run_gibbs(design, REFERENCE_PRIOR, GibbsConfig(draws=10, burn_in=50, seed=2))
    kept = hpd_filter_logpost(draws, design, q_hpd=0.31)
    assert len(kept) == math.ceil(0.31 * 10)
    # retained draws preserve original chain order
    positions = [next(i for i, d in enumerate(draws) if d is k) for k in kept]
    assert positions == sorted(positions)
    assert hpd_filter_logpost(draws, design, q_hpd=1.0) == list(draws)


def test_logpost_tie_break_is_stable():
    ds = make_dataset(n=40, J=2, seed=5)
    design = assemble_design(ds, make_model())
    d = run_gibbs(design, REFERENCE_PRIOR, GibbsConfig(draws=1, burn_in=20, seed=3))[0]
    clones = [ThetaDraw(beta=d.beta.copy(), sigma=d.sigma.copy()) for _ in range(6)]
    kept = hpd_filter_logpost(clones, design, q_hpd=0.5)
    assert [i for i, c in enumerate(clones) if any(k is c for k in kept)] == [0, 1, 2]


def test_log_posterior_decreases_away_from_fit():
    ds = make_dataset(n=60, J=2, seed=6)
    design = assemble_design(ds, make_model())
    draw = run_gibbs(design, REFERENCE_PRIOR, GibbsConfig(draws=1, burn_in=100, seed=4))[0]
    good = historical_log_posterior(draw, design)
    worse = historical_log_posterior(ThetaDraw(beta=draw.beta + 10, sigma=draw.sigma), design)
    assert worse < good
    singular = ThetaDraw(beta=draw.beta, sigma=np.zeros((2, 2)))
    assert historical_log_posterior(singular, design) == -np.inf


def test_logpost_filter_validation():
    ds = make_dataset(n=40, J=2, seed=7)
    design = assemble_design(ds, make_model())
    with pytest.raises(ValueError, match="no draws"):
        hpd_filter_logpost([], design, 0.5)
    draws = run_gibbs(design, REFERENCE_PRIOR, GibbsConfig(draws=3, burn_in=10, seed=5))
    with pytest.raises(ValueError, match="q_hpd"):
        hpd_filter_logpost(draws, design, 0.0)
