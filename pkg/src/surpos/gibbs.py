"""Posterior sampling for the SUR model.

Gibbs sampler alternating the Gaussian full conditional of the coefficients
and the Wishart full conditional of the error precision, under an improper
reference prior or a power prior that downweights an older historical
likelihood by a fixed weight ``a0``.  Also provides a direct Monte Carlo
sampler for the diffuse-prior case as an independent cross-check.

The historical precision enters multiplied by a0 (so it vanishes as a0 -> 0),
matching the Wishart degrees of freedom n + a0 * n0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from surpos.design import SurDesign, ThetaDraw, equationwise_mle, residual_cross_products

_JITTER_SCALE = 1e-10


class SamplerError(RuntimeError):
    pass


@dataclass(frozen=True)
class PowerPriorSpec:
    """Fixed power-prior weight and the older historical design it applies to."""

    a0: float = 0.0
    historical: SurDesign | None = None

    def __post_init__(self):
        if not 0.0 <= self.a0 <= 1.0:
            raise ValueError("a0 must lie in [0, 1]")
        if (self.a0 > 0) != (self.historical is not None):
            raise ValueError("historical design must be present iff a0 > 0")


REFERENCE_PRIOR = PowerPriorSpec(a0=0.0, historical=None)


@dataclass(frozen=True)
class GibbsConfig:
    draws: int
    burn_in: int = 500
    thin: int = 1
    seed: int | None = None

    def __post_init__(self):
        if self.draws < 1 or self.burn_in < 0 or self.thin < 1:
            raise ValueError("need draws >= 1, burn_in >= 0, thin >= 1")


@dataclass(frozen=True)
class EqualityConstraint:
    """Treatment-effect coordinates fixed to given values (usually zero)."""

    indices: tuple[int, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values must have equal length")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("duplicate constraint indices")
        if not all(np.isfinite(self.values)):
            raise ValueError("constraint values must be finite")

    @classmethod
    def null_treatment_effects(cls, design: SurDesign, endpoints: tuple[int, ...]):
        """Fix beta_1j = 0 for the given 1-based endpoints."""
        tix = design.treatment_indices
        return cls(indices=tuple(tix[j - 1] for j in endpoints), values=(0.0,) * len(endpoints))

    def check_against(self, design: SurDesign) -> None:
        tix = set(design.treatment_indices)
        for i in self.indices:
            if i not in tix:
                raise IndexError(f"constraint index {i} is not a treatment-effect position")


class CrossProducts:
    """Per-dataset Gram blocks reused across Gibbs sweeps.

    G[j][k] = X*_j' X*_k and H[j] = X*_j' Y, so the weighted normal equations
    are assembled from J^2 small blocks without touching the nJ-dimensional
    stacked system.
    """

    def __init__(self, design: SurDesign):
        self.design = design
        self.n = design.n
        self.J = design.n_endpoints
        self.slices = design.coef_slices
        self.d = design.n_coefficients
        blocks = design.blocks
        self.G = [[blocks[j].T @ blocks[k] for k in range(self.J)] for j in range(self.J)]
        self.H = [blocks[j].T @ design.outcomes for j in range(self.J)]

    def normal_equations(self, sigma_inv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """A = X'(Sigma^-1 kron I)X and b = X'(Sigma^-1 kron I)y."""
        A = np.empty((self.d, self.d))
        b = np.empty(self.d)
        for j in range(self.J):
            sj = self.slices[j]
            for k in range(j, self.J):
                blk = sigma_inv[j, k] * self.G[j][k]
                A[sj, self.slices[k]] = blk
                if k != j:
                    A[self.slices[k], sj] = blk.T
            b[sj] = self.H[j] @ sigma_inv[:, j]
        return A, b


def _chol_with_jitter(mat: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; one diagonal jitter retry before giving up."""
    try:
        return cholesky(mat, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        jitter = _JITTER_SCALE * np.trace(mat) / mat.shape[0]
        try:
            return cholesky(mat + jitter * np.eye(mat.shape[0]), lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SamplerError("combined precision matrix is singular") from exc


def _draw_gaussian_from_precision(
    precision: np.ndarray,
    linear: np.ndarray,
    rng: np.random.Generator,
    constraint_free: np.ndarray | None = None,
    constraint_fixed: np.ndarray | None = None,
    constraint_values: np.ndarray | None = None,
) -> np.ndarray:
    """Draw from N(P^-1 m, P^-1), optionally conditioned on fixed coordinates.

    Conditioning on beta_F = v under the precision parameterization leaves the
    free block Gaussian with precision P_UU and linear term m_U - P_UF v.
    """
    if constraint_free is None:
        L = _chol_with_jitter(precision)
        mean = cho_solve((L, True), linear, check_finite=False)
        z = rng.standard_normal(linear.shape[0])
        return mean + solve_triangular(L, z, trans="T", lower=True, check_finite=False)
    U, F, v = constraint_free, constraint_fixed, constraint_values
    P_UU = precision[np.ix_(U, U)]
    m_U = linear[U] - precision[np.ix_(U, F)] @ v
    L = _chol_with_jitter(P_UU)
    mean = cho_solve((L, True), m_U, check_finite=False)
    z = rng.standard_normal(U.shape[0])
    out = np.empty(linear.shape[0])
    out[U] = mean + solve_triangular(L, z, trans="T", lower=True, check_finite=False)
    out[F] = v
    return out


def _constraint_arrays(constraint: EqualityConstraint | None, d: int):
    if constraint is None:
        return None, None, None
    F = np.asarray(constraint.indices, dtype=int)
    if F.size and (F.min() < 0 or F.max() >= d):
        raise IndexError("constraint index out of range")
    U = np.setdiff1d(np.arange(d), F)
    return U, F, np.asarray(constraint.values, dtype=float)


def _wishart_draw(scale_factor: np.ndarray, df: float, rng: np.random.Generator) -> np.ndarray:
    """Bartlett draw of W ~ Wishart(V, df) given any factor B with B B' = V."""
    dim = scale_factor.shape[0]
    A = np.zeros((dim, dim))
    A[np.diag_indices(dim)] = np.sqrt(rng.chisquare(df - np.arange(dim)))
    if dim > 1:
        A[np.tril_indices(dim, -1)] = rng.standard_normal(dim * (dim - 1) // 2)
    BA = scale_factor @ A
    return BA @ BA.T


def _invert_pd(mat: np.ndarray) -> np.ndarray:
    L = _chol_with_jitter(mat)
    inv = cho_solve((L, True), np.eye(mat.shape[0]), check_finite=False)
    return 0.5 * (inv + inv.T)


def sample_beta_conditional(
    design: SurDesign,
    power: PowerPriorSpec,
    sigma: np.ndarray,
    rng: np.random.Generator,
    constraint: EqualityConstraint | None = None,
) -> np.ndarray:
    """One draw from the Gaussian full conditional of the stacked coefficients.

    Posterior precision is X'(Sigma^-1 kron I_n)X plus a0 times the historical
    analogue; with a constraint present, the draw is from the Gaussian
    conditional given the fixed coordinates.
    """
    if constraint is not None:
        constraint.check_against(design)
    sigma_inv = _invert_pd(np.asarray(sigma, dtype=float))
    cp = CrossProducts(design)
    P, m = cp.normal_equations(sigma_inv)
    if power.a0 > 0:
        hp, hm = CrossProducts(power.historical).normal_equations(sigma_inv)
        P = P + power.a0 * hp
        m = m + power.a0 * hm
    U, F, v = _constraint_arrays(constraint, design.n_coefficients)
    return _draw_gaussian_from_precision(P, m, rng, U, F, v)


def sample_sigma_conditional(
    design: SurDesign,
    power: PowerPriorSpec,
    beta: np.ndarray,
    rng: np.random.Generator,
) -> np.ndarray:
    """One draw of Sigma from its inverse-Wishart full conditional.

    The precision Sigma^-1 is Wishart with scale [R + a0 R0]^-1 and degrees of
    freedom n + a0 * n0, where R and R0 are residual cross-product matrices at
    the current coefficients.
    """
    J = design.n_endpoints
    R = residual_cross_products(design, beta)
    df = float(design.n)
    if power.a0 > 0:
        R = R + power.a0 * residual_cross_products(power.historical, beta)
        df += power.a0 * power.historical.n
    if df <= J - 1:
        raise SamplerError(
            f"insufficient effective sample size: n + a0*n0 = {df} <= J - 1 = {J - 1}"
        )
    C = _chol_with_jitter(R)
    # factor of the Wishart scale [R]^-1: C^-T (C^-T)' = R^-1
    scale_factor = solve_triangular(C, np.eye(J), lower=True, check_finite=False).T
    W = _wishart_draw(scale_factor, df, rng)
    return _invert_pd(W)


def _initial_state(design: SurDesign, power: PowerPriorSpec) -> tuple[np.ndarray, np.ndarray]:
    beta0, _ = equationwise_mle(design)
    R = residual_cross_products(design, beta0)
    n_eff = float(design.n)
    if power.a0 > 0:
        R = R + power.a0 * residual_cross_products(power.historical, beta0)
        n_eff += power.a0 * power.historical.n
    return beta0, R / n_eff


def gibbs_arrays(
    design: SurDesign,
    power: PowerPriorSpec,
    config: GibbsConfig,
    constraint: EqualityConstraint | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Run the Gibbs chain, returning (draws, d) betas and (draws, J, J) sigmas."""
    if constraint is not None:
        constraint.check_against(design)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    J, d = design.n_endpoints, design.n_coefficients
    cp = CrossProducts(design)
    hist_cp = CrossProducts(power.historical) if power.a0 > 0 else None
    U, F, v = _constraint_arrays(constraint, d)
    beta, sigma = _initial_state(design, power)
    if U is not None:
        beta = beta.copy()
        beta[F] = v
    df_base = float(design.n) + (power.a0 * power.historical.n if power.a0 > 0 else 0.0)
    if df_base <= J - 1:
        raise SamplerError("insufficient effective sample size for the Wishart conditional")
    eye_J = np.eye(J)
    betas = np.empty((config.draws, d))
    sigmas = np.empty((config.draws, J, J))
    kept = 0
    total = config.burn_in + config.draws * config.thin
    for sweep in range(total):
        sigma_inv = _invert_pd(sigma)
        P, m = cp.normal_equations(sigma_inv)
        if hist_cp is not None:
            hP, hm = hist_cp.normal_equations(sigma_inv)
            P += power.a0 * hP
            m += power.a0 * hm
        beta = _draw_gaussian_from_precision(P, m, rng, U, F, v)
        R = residual_cross_products(design, beta)
        if power.a0 > 0:
            R = R + power.a0 * residual_cross_products(power.historical, beta)
        C = _chol_with_jitter(R)
        scale_factor = solve_triangular(C, eye_J, lower=True, check_finite=False).T
        W = _wishart_draw(scale_factor, df_base, rng)
        sigma = _invert_pd(W)
        pos = sweep - config.burn_in
        if pos >= 0 and pos % config.thin == 0:
            betas[kept] = beta
            sigmas[kept] = sigma
            kept += 1
    return betas, sigmas


def run_gibbs(
    design: SurDesign,
    power: PowerPriorSpec,
    config: GibbsConfig,
    constraint: EqualityConstraint | None = None,
    rng: np.random.Generator | None = None,
    check_pd: bool = False,
) -> list[ThetaDraw]:
    """Gibbs-sample the SUR posterior; deterministic given the config seed."""
    betas, sigmas = gibbs_arrays(design, power, config, constraint, rng)
    draws = [ThetaDraw(beta=b, sigma=s) for b, s in zip(betas, sigmas)]
    if check_pd:
        for d in draws:
            d.validate()
    return draws


def dmc_arrays(
    design: SurDesign,
    n_draws: int,
    seed: int | np.random.Generator | None = None,
    power: PowerPriorSpec | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Direct Monte Carlo draws under the diffuse prior (a0 = 0 only).

    Sigma^-1 is drawn from the Wishart implied by the equationwise-MLE
    residuals with degrees of freedom n minus the average per-equation
    coefficient count (the exact marginal when all blocks coincide, and the
    Student-t-consistent value at J = 1), then beta from its Gaussian
    conditional given Sigma.
    """
    if power is not None and power.a0 > 0:
        raise SamplerError("direct Monte Carlo supports only the diffuse prior (a0 = 0)")
    J, d = design.n_endpoints, design.n_coefficients
    if design.n <= d:
        raise SamplerError("direct Monte Carlo needs n > p + J")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    beta_hat, _ = equationwise_mle(design)
    R_hat = residual_cross_products(design, beta_hat)
    df = design.n - d / J
    if df <= J - 1:
        raise SamplerError("insufficient sample size for the Wishart marginal")
    C = _chol_with_jitter(R_hat)
    scale_factor = solve_triangular(C, np.eye(J), lower=True, check_finite=False).T
    cp = CrossProducts(design)
    betas = np.empty((n_draws, d))
    sigmas = np.empty((n_draws, J, J))
    for i in range(n_draws):
        W = _wishart_draw(scale_factor, df, rng)
        sigma = _invert_pd(W)
        P, m = cp.normal_equations(W)
        betas[i] = _draw_gaussian_from_precision(P, m, rng)
        sigmas[i] = sigma
    return betas, sigmas


def dmc_sample(
    design: SurDesign,
    n_draws: int,
    seed: int | np.random.Generator | None = None,
    power: PowerPriorSpec | None = None,
) -> list[ThetaDraw]:
    """Independent draws from the diffuse-prior SUR posterior."""
    betas, sigmas = dmc_arrays(design, n_draws, seed, power)
    return [ThetaDraw(beta=b, sigma=s) for b, s in zip(betas, sigmas)]


def treatment_effect_draws(betas: np.ndarray, design: SurDesign) -> np.ndarray:
    """Extract the (draws, J) matrix of treatment effects from stacked draws."""
    return betas[:, list(design.treatment_indices)]
