"""Factorized covariate model fitted from historical data with power-prior weights.

The joint covariate distribution is factorized into an ordered chain of GLM
conditionals (gaussian, bernoulli-logit, poisson-log, gamma-log).  Each
conditional is fitted to the b0-tempered log-posterior: every history's
log-likelihood is multiplied by its weight, the coefficient prior is flat, and
dispersion parameters carry Gamma(0.1, 0.1) priors.  Coefficient posteriors
are Laplace approximations (mode plus curvature); dispersions use the closed
gamma form where conjugate and a log-scale Laplace fit otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit, gammaln, polygamma

from surpos.dataset import ConfigError, TrialDataset

FAMILIES = ("gaussian", "bernoulli", "poisson", "gamma")
DEFAULT_DISPERSION_SHAPE = 0.1
DEFAULT_DISPERSION_RATE = 0.1
COUNT_CAP = 10**6

_KIND_FAMILIES = {"cont": ("gaussian", "gamma"), "bin": ("bernoulli",), "count": ("poisson",)}

_MAX_NEWTON_ITER = 100
_NEWTON_TOL = 1e-10


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class ConditionalSpec:
    target: str
    predictors: tuple[str, ...] = ()
    family: str = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "predictors", tuple(self.predictors))
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")


@dataclass(frozen=True)
class CovariateChainSpec:
    """Ordered conditionals; predictors must be earlier targets (topological order)."""

    conditionals: tuple[ConditionalSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "conditionals", tuple(self.conditionals))
        seen: set[str] = set()
        for cond in self.conditionals:
            missing = [p for p in cond.predictors if p not in seen]
            if missing:
                raise ConfigError(
                    f"predictors {missing} of {cond.target!r} do not precede it in the chain"
                )
            if cond.target in seen:
                raise ConfigError(f"duplicate chain target {cond.target!r}")
            seen.add(cond.target)

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(c.target for c in self.conditionals)


@dataclass(frozen=True)
class ConditionalPosterior:
    spec: ConditionalSpec
    coef_mode: np.ndarray
    coef_precision: np.ndarray
    # ("gamma", shape, rate) for conjugate dispersions, ("lognormal", mu, sd)
    # for the Laplace fit of the gamma-family shape, None for fixed-dispersion
    dispersion: tuple | None


@dataclass(frozen=True)
class CovariatePosterior:
    conditionals: tuple[ConditionalPosterior, ...]
    hyper: tuple[float, float] = (DEFAULT_DISPERSION_SHAPE, DEFAULT_DISPERSION_RATE)


def _chain_design(dataset: TrialDataset, cond: ConditionalSpec) -> tuple[np.ndarray, np.ndarray]:
    y = dataset.covariate_column(cond.target)
    cols = [np.ones(dataset.n)]
    cols.extend(dataset.covariate_column(p) for p in cond.predictors)
    return np.column_stack(cols), y


def _check_family_kind(dataset: TrialDataset, cond: ConditionalSpec) -> None:
    idx = dataset.covariate_names.index(cond.target)
    kind = dataset.covariate_kinds[idx]
    if cond.family not in _KIND_FAMILIES[kind]:
        raise ConfigError(
            f"family {cond.family!r} does not match declared kind {kind!r} "
            f"for column {cond.target!r}"
        )


def _fit_gaussian(stacks, weights, hyper) -> tuple[np.ndarray, np.ndarray, tuple]:
    """Tempered normal regression: exact conjugate posterior under a flat
    coefficient prior and Gamma prior on the error precision."""
    XtX = sum(w * X.T @ X for (X, _), w in zip(stacks, weights))
    Xty = sum(w * X.T @ y for (X, y), w in zip(stacks, weights))
    coef = np.linalg.solve(XtX, Xty)
    n_eff = sum(w * X.shape[0] for (X, _), w in zip(stacks, weights))
    sse = sum(w * float(np.sum((y - X @ coef) ** 2)) for (X, y), w in zip(stacks, weights))
    shape = hyper[0] + 0.5 * n_eff
    rate = hyper[1] + 0.5 * sse
    # curvature of the coefficient block at the posterior-mean precision
    tau_hat = shape / rate
    return coef, tau_hat * XtX, ("gamma", shape, rate)


def _newton_glm(stacks, weights, loglik_grad_hess, label, start=None):
    """Damped Newton ascent of the tempered log-likelihood (flat prior)."""
    k = stacks[0][0].shape[1]
    coef = np.zeros(k) if start is None else np.asarray(start, dtype=float)

    def objective(c):
        total, grad, hess = 0.0, np.zeros(k), np.zeros((k, k))
        for (X, y), w in zip(stacks, weights):
            ll, g, h = loglik_grad_hess(X, y, c)
            total += w * ll
            grad += w * g
            hess += w * h
        return total, grad, hess

    value, grad, hess = objective(coef)
    for _ in range(_MAX_NEWTON_ITER):
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise FitError(f"singular curvature while fitting {label!r}") from exc
        if not np.all(np.isfinite(step)):
            raise FitError(f"divergent fit (possible separation) for column {label!r}")
        scale = 1.0
        for _ in range(30):
            cand = coef + scale * step
            cand_value, cand_grad, cand_hess = objective(cand)
            if np.isfinite(cand_value) and cand_value >= value - 1e-12:
                break
            scale *= 0.5
        else:
            raise FitError(f"line search failed while fitting {label!r}")
        converged = np.max(np.abs(cand - coef)) < _NEWTON_TOL * (1 + np.max(np.abs(coef)))
        coef, value, grad, hess = cand, cand_value, cand_grad, cand_hess
        if converged:
            break
    else:
        raise FitError(f"no convergence fitting column {label!r}")
    if np.max(np.abs(coef)) > 50:
        raise FitError(f"divergent coefficients (possible separation) for column {label!r}")
    return coef, hess


def _bernoulli_llgh(X, y, coef):
    eta = X @ coef
    mu = expit(eta)
    ll = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
    grad = X.T @ (y - mu)
    w = mu * (1 - mu)
    hess = X.T @ (X * w[:, None])
    return ll, grad, hess


def _poisson_llgh(X, y, coef):
    eta = np.clip(X @ coef, -30, 30)
    mu = np.exp(eta)
    ll = float(np.sum(y * eta - mu - gammaln(y + 1)))
    grad = X.T @ (y - mu)
    hess = X.T @ (X * mu[:, None])
    return ll, grad, hess


def _gamma_llgh(X, y, coef):
    # unit-shape profile: the log-link coefficient mode is shape-free
    eta = np.clip(X @ coef, -30, 30)
    r = y * np.exp(-eta)
    ll = float(np.sum(-eta - r))
    grad = X.T @ (r - 1.0)
    hess = X.T @ (X * r[:, None])
    return ll, grad, hess


def _fit_gamma_shape(stacks, weights, coef, hyper) -> tuple:
    """Laplace fit of the gamma-family shape on the log scale."""
    terms = []
    for (X, y), w in zip(stacks, weights):
        eta = np.clip(X @ coef, -30, 30)
        terms.append((w, X.shape[0], float(np.sum(np.log(y) - eta - y * np.exp(-eta)))))
    a0, g0 = hyper

    def grad_hess(log_phi):
        phi = math.exp(log_phi)
        # d/dphi of sum_k w_k [n_k (phi log phi - lgamma(phi)) + phi * s_k] + prior
        g = sum(w * (n * (math.log(phi) + 1 - float(polygamma(0, phi))) + s) for w, n, s in terms)
        g += (a0 - 1) / phi - g0
        h = sum(w * n * (1 / phi - float(polygamma(1, phi))) for w, n, s in terms)
        h += -(a0 - 1) / phi**2
        # chain rule to log scale
        return g * phi, (h * phi + g) * phi

    log_phi = 0.0
    for _ in range(_MAX_NEWTON_ITER):
        g, h = grad_hess(log_phi)
        if h >= 0:
            h = -1.0
        step = -g / h
        step = float(np.clip(step, -2.0, 2.0))
        log_phi += step
        if abs(step) < 1e-10:
            break
    _, h = grad_hess(log_phi)
    sd = 1.0 / math.sqrt(max(-h, 1e-12))
    return ("lognormal", log_phi, sd)


def fit_covariate_chain(
    histories: Sequence[tuple[TrialDataset, float]],
    spec: CovariateChainSpec,
    hyper: tuple[float, float] = (DEFAULT_DISPERSION_SHAPE, DEFAULT_DISPERSION_RATE),
) -> CovariatePosterior:
    """Fit every chain conditional to the b0-weighted historical likelihoods.

    ``histories`` pairs each historical dataset with its power-prior weight;
    weight-zero histories are ignored entirely.
    """
    active = [(ds, float(w)) for ds, w in histories if w > 0]
    if not any(w > 0 for _, w in active):
        raise ValueError("need at least one history with b0 > 0")
    for _, w in active:
        if w > 1:
            raise ValueError("b0 weights must lie in [0, 1]")
    posts = []
    for cond in spec.conditionals:
        stacks, weights = [], []
        for ds, w in active:
            _check_family_kind(ds, cond)
            stacks.append(_chain_design(ds, cond))
            weights.append(w)
        k = stacks[0][0].shape[1]
        ess = sum(w * X.shape[0] for (X, _), w in zip(stacks, weights))
        if ess <= k:
            raise FitError(
                f"effective sample size {ess:.1f} too small for {k} coefficients "
                f"of column {cond.target!r}"
            )
        if cond.family == "gaussian":
            coef, precision, disp = _fit_gaussian(stacks, weights, hyper)
        elif cond.family == "bernoulli":
            coef, precision = _newton_glm(stacks, weights, _bernoulli_llgh, cond.target)
            disp = None
        elif cond.family == "poisson":
            coef, precision = _newton_glm(stacks, weights, _poisson_llgh, cond.target)
            disp = None
        else:  # gamma
            for (X, y), _ in zip(stacks, weights):
                if np.any(y <= 0):
                    raise FitError(f"gamma family needs positive values in {cond.target!r}")
            coef, base_prec = _newton_glm(stacks, weights, _gamma_llgh, cond.target)
            disp = _fit_gamma_shape(stacks, weights, coef, hyper)
            phi_hat = math.exp(disp[1])
            precision = phi_hat * base_prec
        posts.append(
            ConditionalPosterior(
                spec=cond, coef_mode=coef, coef_precision=precision, dispersion=disp
            )
        )
    return CovariatePosterior(conditionals=tuple(posts), hyper=hyper)


def _draw_parameters(post: CovariatePosterior, rng: np.random.Generator):
    draws = []
    for cond in post.conditionals:
        cov = np.linalg.inv(cond.coef_precision)
        coef = rng.multivariate_normal(cond.coef_mode, cov, method="cholesky")
        if cond.dispersion is None:
            disp = None
        elif cond.dispersion[0] == "gamma":
            tau = rng.gamma(cond.dispersion[1], 1.0 / cond.dispersion[2])
            disp = 1.0 / tau  # error variance
        else:
            disp = math.exp(rng.normal(cond.dispersion[1], cond.dispersion[2]))
        draws.append((coef, disp))
    return draws


def sample_covariates(
    post: CovariatePosterior,
    spec: CovariateChainSpec,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Generate an n x L covariate table from one parameter draw.

    One set of chain parameters is drawn per call (one future dataset), then
    all n subjects are generated sequentially through the chain.
    """
    if tuple(c.spec.target for c in post.conditionals) != spec.targets:
        raise ConfigError("posterior and chain spec describe different chains")
    params = _draw_parameters(post, rng)
    columns: dict[str, np.ndarray] = {}
    out = np.empty((n, len(spec.conditionals)))
    for idx, (cond, (coef, disp)) in enumerate(zip(spec.conditionals, params)):
        design = np.column_stack(
            [np.ones(n)] + [columns[p] for p in cond.predictors]
        )
        eta = design @ coef
        if cond.family == "gaussian":
            sd = math.sqrt(max(disp, 0.0))
            col = eta + (sd * rng.standard_normal(n) if sd > 0 else 0.0)
        elif cond.family == "bernoulli":
            col = (rng.random(n) < expit(eta)).astype(float)
        elif cond.family == "poisson":
            rate = np.minimum(np.exp(np.clip(eta, -30, 30)), COUNT_CAP)
            col = rng.poisson(rate).astype(float)
            col = np.minimum(col, COUNT_CAP)
        else:  # gamma with shape disp, mean exp(eta)
            mu = np.exp(np.clip(eta, -30, 30))
            col = rng.gamma(disp, mu / disp)
        columns[cond.target] = col
        out[:, idx] = col
    return out


def chain_kinds(spec: CovariateChainSpec) -> tuple[str, ...]:
    """Dataset column kinds implied by the chain families."""
    mapping = {"gaussian": "cont", "gamma": "cont", "bernoulli": "bin", "poisson": "count"}
    return tuple(mapping[c.family] for c in spec.conditionals)
