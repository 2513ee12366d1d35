"""Design assembly and SUR linear algebra against dense Kronecker oracles."""

import numpy as np
import pytest

from surpos.design import (
    RankError,
    SurDesign,
    assemble_design,
    equationwise_mle,
    quadratic_form,
    residual_cross_products,
)
from surpos.gibbs import CrossProducts

from conftest import make_dataset, make_model


def dense_precision_oracle(design, sigma_inv):
    """X'(Sigma^-1 kron I_n)X and X'(Sigma^-1 kron I_n)y, fully materialized."""
    X = design.dense_matrix()
    y = design.stacked_y()
    W = np.kron(sigma_inv, np.eye(design.n))
    return X.T @ W @ X, X.T @ W @ y


def test_block_layout():
    ds = make_dataset(n=30, J=2)
    design = assemble_design(ds, make_model())
    assert design.block_sizes == (4, 4)
    assert design.n_coefficients == 8
    assert design.treatment_indices == (0, 4)
    # treatment column first, then intercept, then covariates
    np.testing.assert_array_equal(design.blocks[0][:, 0], ds.treatment)
    np.testing.assert_array_equal(design.blocks[0][:, 1], np.ones(30))
    np.testing.assert_array_equal(design.blocks[1][:, 2:], ds.covariates)


def test_stacked_vector_order():
    ds = make_dataset(n=12, J=2)
    design = assemble_design(ds, make_model())
    y = design.stacked_y()
    np.testing.assert_array_equal(y[:12], ds.outcomes[:, 0])
    np.testing.assert_array_equal(y[12:], ds.outcomes[:, 1])


def test_dense_matrix_is_block_diagonal():
    ds = make_dataset(n=15, J=2)
    design = assemble_design(ds, make_model())
    X = design.dense_matrix()
    assert X.shape == (30, 8)
    assert np.all(X[:15, 4:] == 0)
    assert np.all(X[15:, :4] == 0)


def test_quadratic_form_matches_kronecker_oracle():
    """trace identity vs the materialized (Sigma^-1 kron I) form."""
    rng = np.random.default_rng(3)
    ds = make_dataset(n=25, J=3, beta1=(0.1, 0.2, 0.3), sigma=np.eye(3))
    design = assemble_design(ds, make_model(J=3))
    A = rng.standard_normal((3, 3))
    sigma_inv = A @ A.T + 3 * np.eye(3)
    beta = rng.standard_normal(design.n_coefficients)
    X = design.dense_matrix()
    r = design.stacked_y() - X @ beta
    expected = float(r @ np.kron(sigma_inv, np.eye(25)) @ r)
    assert quadratic_form(design, beta, sigma_inv) == pytest.approx(expected, rel=1e-10)


def test_normal_equations_match_dense_oracle():
    """blockwise Gram assembly vs dense Kronecker normal equations."""
    rng = np.random.default_rng(4)
    ds = make_dataset(n=20, J=3, beta1=(0.1, 0.2, 0.3), sigma=np.eye(3))
    design = assemble_design(ds, make_model(J=3))
    A = rng.standard_normal((3, 3))
    sigma_inv = A @ A.T + 2 * np.eye(3)
    P, m = CrossProducts(design).normal_equations(sigma_inv)
    P_ref, m_ref = dense_precision_oracle(design, sigma_inv)
    np.testing.assert_allclose(P, P_ref, atol=1e-9)
    np.testing.assert_allclose(m, m_ref, atol=1e-9)


def test_residual_cross_products_oracle():
    ds = make_dataset(n=18, J=2)
    design = assemble_design(ds, make_model())
    beta = np.linspace(-1, 1, design.n_coefficients)
    resid = ds.outcomes - design.fitted_means(beta)
    expected = np.array(
        [[resid[:, k] @ resid[:, l] for l in range(2)] for k in range(2)]
    )
    np.testing.assert_allclose(residual_cross_products(design, beta), expected, atol=1e-10)


def test_equationwise_mle_matches_ols_oracle():
    """per-equation coefficients vs the closed-form OLS solution."""
    ds = make_dataset(n=50, J=2, seed=7)
    design = assemble_design(ds, make_model())
    beta_hat, sigma_hat = equationwise_mle(design)
    for j, sl in enumerate(design.coef_slices):
        Xj = design.blocks[j]
        expected = np.linalg.solve(Xj.T @ Xj, Xj.T @ ds.outcomes[:, j])
        np.testing.assert_allclose(beta_hat[sl], expected, atol=1e-8)
    np.testing.assert_allclose(
        sigma_hat, residual_cross_products(design, beta_hat) / 50, atol=1e-10
    )


def test_rank_deficient_block_names_endpoint():
    ds = make_dataset(n=20, J=2)
    dup = TrialDatasetWithDupCovariate(ds)
    with pytest.raises(RankError, match="endpoint 1"):
        assemble_design(dup, make_model(n_cov=3))


def TrialDatasetWithDupCovariate(ds):
    from surpos.dataset import TrialDataset

    covs = np.column_stack([ds.covariates, ds.covariates[:, 0]])
    return TrialDataset(
        outcomes=ds.outcomes,
        treatment=ds.treatment,
        covariates=covs,
        covariate_names=("x0", "x1", "x2"),
        covariate_kinds=("cont",) * 3,
    )


def test_mle_needs_enough_rows():
    ds = make_dataset(n=4, J=2)
    design = assemble_design(ds, make_model())
    with pytest.raises(ValueError, match="n >"):
        equationwise_mle(design)


def test_split_beta_validates_length(small_design):
    with pytest.raises(ValueError, match="expected"):
        small_design.split_beta(np.zeros(3))


def test_sur_design_row_mismatch():
    with pytest.raises(ValueError, match="rows"):
        SurDesign(blocks=(np.ones((3, 1)), np.ones((4, 1))), outcomes=np.ones((3, 2)))


def test_endpoint_count_mismatch():
    ds = make_dataset(J=2)
    with pytest.raises(Exception, match="endpoints"):
        assemble_design(ds, make_model(J=3))
