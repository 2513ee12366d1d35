"""Validation-prior trimming for small historical datasets.

Keeps the top-q fraction of validation draws ranked either by the joint
log-posterior density under the historical data or by a kernel density
estimate of the marginal treatment-effect draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from surpos.design import SurDesign, ThetaDraw, residual_cross_products


@dataclass(frozen=True)
class HpdSpec:
    method: str = "log-posterior"
    q_hpd: float = 0.5
    bandwidth: str = "scott"

    def __post_init__(self):
        if self.method not in ("log-posterior", "kde"):
            raise ValueError("method must be 'log-posterior' or 'kde'")
        if not 0.0 < self.q_hpd <= 1.0:
            raise ValueError("q_hpd must lie in (0, 1]")
        if self.bandwidth != "scott":
            raise ValueError("only the 'scott' bandwidth rule is supported")


def _retained_count(q_hpd: float, n: int) -> int:
    return min(n, math.ceil(q_hpd * n))


def _top_indices(scores: np.ndarray, keep: int) -> np.ndarray:
    """Indices of the `keep` largest scores, ties broken by draw index,
    returned in original draw order."""
    order = np.argsort(-scores, kind="stable")
    return np.sort(order[:keep])


def historical_log_posterior(draw: ThetaDraw, hist: SurDesign) -> float:
    """Diffuse-prior SUR log posterior of the historical data, up to a constant."""
    J = hist.n_endpoints
    sign, logdet = np.linalg.slogdet(np.asarray(draw.sigma, dtype=float))
    if sign <= 0:
        return -np.inf
    sigma_inv = np.linalg.inv(draw.sigma)
    R = residual_cross_products(hist, draw.beta)
    # |Sigma^-1|^{(n0 - J - 1)/2} exp(-tr(R Sigma^-1)/2)
    return -0.5 * (hist.n - J - 1) * logdet - 0.5 * float(np.trace(R @ sigma_inv))


def hpd_filter_logpost(
    draws: Sequence[ThetaDraw],
    hist: SurDesign,
    q_hpd: float,
) -> list[ThetaDraw]:
    """Retain the ceil(q_hpd * N) draws with largest historical log posterior."""
    if len(draws) == 0:
        raise ValueError("no draws to filter")
    if not 0.0 < q_hpd <= 1.0:
        raise ValueError("q_hpd must lie in (0, 1]")
    scores = np.array([historical_log_posterior(d, hist) for d in draws])
    idx = _top_indices(scores, _retained_count(q_hpd, len(draws)))
    return [draws[i] for i in idx]


def kde_density(points: np.ndarray, bandwidths: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Gaussian-product-kernel density at each point, leave-self-in."""
    N, K = points.shape
    scaled = points / bandwidths
    log_norm = -0.5 * K * math.log(2 * math.pi) - float(np.sum(np.log(bandwidths)))
    out = np.empty(N)
    for start in range(0, N, chunk):
        stop = min(start + chunk, N)
        # (chunk, N) squared distances in bandwidth units
        d2 = np.zeros((stop - start, N))
        for k in range(K):
            diff = scaled[start:stop, k][:, None] - scaled[None, :, k]
            d2 += diff * diff
        out[start:stop] = np.exp(-0.5 * d2).mean(axis=1)
    return out * math.exp(log_norm)


def hpd_filter_kde(
    treatment_draws: np.ndarray,
    q_hpd: float,
    bandwidth: str = "scott",
) -> np.ndarray:
    """Retained row indices of the top-q_hpd fraction by KDE density.

    Bandwidth per dimension follows Scott's rule: column standard deviation
    times N^(-1/(K+4)).
    """
    draws = np.atleast_2d(np.asarray(treatment_draws, dtype=float))
    if draws.ndim != 2:
        raise ValueError("treatment draws must form an N x K matrix")
    N, K = draws.shape
    if N < 50:
        raise ValueError("need at least 50 draws for KDE trimming")
    if not 0.0 < q_hpd <= 1.0:
        raise ValueError("q_hpd must lie in (0, 1]")
    if bandwidth != "scott":
        raise ValueError("only the 'scott' bandwidth rule is supported")
    sds = draws.std(axis=0, ddof=1)
    if np.any(sds <= 0):
        bad = int(np.flatnonzero(sds <= 0)[0])
        raise ValueError(f"degenerate treatment draws: column {bad} has zero variance")
    h = sds * N ** (-1.0 / (K + 4))
    density = kde_density(draws, h)
    return _top_indices(density, _retained_count(q_hpd, N))
