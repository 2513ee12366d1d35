"""Deterministic linear algebra for the SUR model.

Design assembly, residual cross-products, and equationwise maximum-likelihood
fits. The stacked design is block-diagonal with one block per endpoint
(treatment column first within each block); the full Kronecker-structured
covariance is never materialized -- quadratic forms are evaluated from n x J
working matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from surpos.dataset import ConfigError, ModelSpec, TrialDataset

RANK_RTOL = 1e-10


class RankError(np.linalg.LinAlgError):
    """A per-endpoint design block is rank deficient."""


@dataclass(frozen=True)
class SurDesign:
    """Stacked SUR design.

    ``blocks[j]`` is the n x (p_j + 1) design for endpoint j with the treatment
    column first; ``outcomes[:, j]`` is y_j.  The stacked coefficient vector is
    ordered (beta_11, beta_21', ..., beta_1J, beta_2J')'.
    """

    blocks: tuple[np.ndarray, ...]
    outcomes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(np.asarray(b, dtype=float) for b in self.blocks))
        object.__setattr__(self, "outcomes", np.asarray(self.outcomes, dtype=float))
        if self.outcomes.ndim != 2 or len(self.blocks) != self.outcomes.shape[1]:
            raise ValueError("need one design block per outcome column")
        n = self.outcomes.shape[0]
        for j, b in enumerate(self.blocks):
            if b.shape[0] != n:
                raise ValueError(f"block {j} has {b.shape[0]} rows, expected {n}")

    @property
    def n(self) -> int:
        return self.outcomes.shape[0]

    @property
    def n_endpoints(self) -> int:
        return len(self.blocks)

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return tuple(b.shape[1] for b in self.blocks)

    @property
    def n_coefficients(self) -> int:
        """p + J."""
        return sum(self.block_sizes)

    @property
    def coef_slices(self) -> tuple[slice, ...]:
        offsets = np.concatenate(([0], np.cumsum(self.block_sizes)))
        return tuple(slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:]))

    @property
    def treatment_indices(self) -> tuple[int, ...]:
        """Position of beta_1j within the stacked coefficient vector."""
        offsets = np.concatenate(([0], np.cumsum(self.block_sizes)))[:-1]
        return tuple(int(o) for o in offsets)

    def stacked_y(self) -> np.ndarray:
        """The nJ-vector y = (y_1', ..., y_J')'."""
        return self.outcomes.T.reshape(-1)

    def dense_matrix(self) -> np.ndarray:
        """The nJ x (p + J) block-diagonal design, materialized (small problems only)."""
        n, d = self.n, self.n_coefficients
        X = np.zeros((n * self.n_endpoints, d))
        for j, (blk, sl) in enumerate(zip(self.blocks, self.coef_slices)):
            X[j * n : (j + 1) * n, sl] = blk
        return X

    def split_beta(self, beta: np.ndarray) -> list[np.ndarray]:
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (self.n_coefficients,):
            raise ValueError(
                f"coefficient vector has length {beta.shape}, expected ({self.n_coefficients},)"
            )
        return [beta[sl] for sl in self.coef_slices]

    def fitted_means(self, beta: np.ndarray) -> np.ndarray:
        """n x J matrix whose column j is X*_j beta*_j."""
        parts = self.split_beta(beta)
        return np.column_stack([blk @ bj for blk, bj in zip(self.blocks, parts)])


@dataclass(frozen=True)
class ThetaDraw:
    """One posterior draw: stacked coefficients and a J x J covariance."""

    beta: np.ndarray
    sigma: np.ndarray

    def validate(self, atol: float = 1e-10) -> None:
        sigma = np.asarray(self.sigma)
        if not np.allclose(sigma, sigma.T, atol=atol):
            raise ValueError("sigma is not symmetric")
        if np.linalg.eigvalsh(sigma).min() <= 0:
            raise ValueError("sigma is not positive definite")


def _check_rank(block: np.ndarray, label: str) -> None:
    s = np.linalg.svd(block, compute_uv=False)
    if s.size == 0 or s[-1] <= RANK_RTOL * s[0]:
        raise RankError(f"design block for {label} is rank deficient")


def assemble_design(dataset: TrialDataset, spec: ModelSpec) -> SurDesign:
    """Build the block-diagonal SUR design from a dataset and model spec.

    The treatment column comes first in each block, followed by the intercept
    (when requested) and the selected covariate columns in declaration order.
    """
    if spec.n_endpoints != dataset.n_endpoints:
        raise ConfigError(
            f"model declares {spec.n_endpoints} endpoints but dataset has {dataset.n_endpoints}"
        )
    z = dataset.treatment.astype(float)
    blocks = []
    for j, ep in enumerate(spec.endpoints):
        cols = [z]
        if ep.intercept:
            cols.append(np.ones(dataset.n))
        for name in ep.covariates:
            cols.append(dataset.covariate_column(name))
        block = np.column_stack(cols)
        _check_rank(block, f"endpoint {j + 1}")
        blocks.append(block)
    return SurDesign(blocks=tuple(blocks), outcomes=dataset.outcomes)


def residual_cross_products(design: SurDesign, beta: np.ndarray) -> np.ndarray:
    """J x J matrix with entry (k, l) = (y_k - X*_k b*_k)'(y_l - X*_l b*_l)."""
    resid = design.outcomes - design.fitted_means(beta)
    return resid.T @ resid


def equationwise_mle(design: SurDesign) -> tuple[np.ndarray, np.ndarray]:
    """Per-equation OLS coefficients and the MLE residual covariance R / n.

    Requires n larger than the widest block so the covariance estimate is
    nondegenerate.
    """
    if design.n <= max(design.block_sizes):
        raise ValueError("need n > max_j(p_j + 1) for equationwise MLE")
    parts = []
    for j, blk in enumerate(design.blocks):
        _check_rank(blk, f"endpoint {j + 1}")
        coef, *_ = np.linalg.lstsq(blk, design.outcomes[:, j], rcond=None)
        parts.append(coef)
    beta_hat = np.concatenate(parts)
    sigma_hat = residual_cross_products(design, beta_hat) / design.n
    return beta_hat, sigma_hat


def quadratic_form(design: SurDesign, beta: np.ndarray, sigma_inv: np.ndarray) -> float:
    """(y - X beta)'(Sigma^-1 kron I_n)(y - X beta) via the trace identity."""
    R = residual_cross_products(design, beta)
    return float(np.trace(R @ sigma_inv))
