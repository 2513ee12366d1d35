"""Frequentist comparator: marginal regressions with Holm / IUT-Holm decisions.

One-sided p-values come from the treatment coefficient of each endpoint's
marginal OLS fit.  Success rules cover the three supported region shapes:
a single event, a two-event union (Holm step-down), and a primary endpoint
intersected with a two-event union (intersection-union gate plus Holm on the
secondaries).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from surpos.dataset import ModelSpec, TrialDataset
from surpos.design import RankError, _check_rank
from surpos.region import DnfRegion


class UnsupportedRegionError(ValueError):
    """No frequentist rule is defined for this region shape."""


@dataclass(frozen=True)
class PvalueSet:
    """Per-endpoint one-sided p-values (1-based endpoint -> p)."""

    pvalues: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "pvalues", tuple(float(p) for p in self.pvalues))
        for p in self.pvalues:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"p-value {p} outside [0, 1]")

    def __getitem__(self, endpoint: int) -> float:
        return self.pvalues[endpoint - 1]


def marginal_pvalues(future: TrialDataset, spec: ModelSpec) -> PvalueSet:
    """One-sided p-values for each endpoint's treatment effect.

    Endpoint j is fitted marginally by OLS on (treatment, intercept,
    covariates); the p-value tests the null on the side opposite to the
    configured success direction, shifted by the threshold delta.
    """
    z = future.treatment.astype(float)
    pvals = []
    for j, ep in enumerate(spec.endpoints):
        cols = [z]
        if ep.intercept:
            cols.append(np.ones(future.n))
        for name in ep.covariates:
            cols.append(future.covariate_column(name))
        X = np.column_stack(cols)
        _check_rank(X, f"endpoint {j + 1}")
        k = X.shape[1]
        df = future.n - k
        if df < 1:
            raise RankError(f"endpoint {j + 1}: not enough residual degrees of freedom")
        y = future.outcomes[:, j]
        XtX_inv = np.linalg.inv(X.T @ X)
        coef = XtX_inv @ (X.T @ y)
        resid = y - X @ coef
        s2 = float(resid @ resid) / df
        se = np.sqrt(s2 * XtX_inv[0, 0])
        t = (coef[0] - ep.delta) / se
        p = stats.t.sf(t, df) if ep.direction == ">" else stats.t.cdf(t, df)
        pvals.append(float(p))
    return PvalueSet(pvalues=tuple(pvals))


def _holm_union(p_a: float, p_b: float, alpha: float) -> bool:
    return min(p_a, p_b) < alpha / 2 or max(p_a, p_b) < alpha


def classify_region_shape(region: DnfRegion):
    """Map a DNF region onto one of the three supported shapes.

    Returns ("single", j), ("union", (j, k)), or ("composite", i, (j, k)).
    """
    clauses = region.clauses
    if len(clauses) == 1 and len(clauses[0]) == 1:
        return ("single", clauses[0][0].endpoint)
    if len(clauses) == 2 and all(len(c) == 1 for c in clauses):
        a, b = clauses[0][0].endpoint, clauses[1][0].endpoint
        if a != b:
            return ("union", (a, b))
    if len(clauses) == 2 and all(len(c) == 2 for c in clauses):
        sets = [frozenset(e.endpoint for e in c) for c in clauses]
        common = sets[0] & sets[1]
        if len(sets[0]) == 2 and len(sets[1]) == 2 and len(common) == 1:
            primary = next(iter(common))
            secondaries = tuple(sorted((sets[0] | sets[1]) - common))
            if len(secondaries) == 2:
                return ("composite", primary, secondaries)
    raise UnsupportedRegionError(
        "no frequentist rule defined for this region shape "
        "(supported: single event, two-event union, primary plus two-event union)"
    )


def holm_composite_decision(pvals: PvalueSet, region: DnfRegion, alpha: float) -> bool:
    """Success flag under the Holm / IUT-Holm rules at level alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    shape = classify_region_shape(region)
    if shape[0] == "single":
        return pvals[shape[1]] < alpha
    if shape[0] == "union":
        j, k = shape[1]
        return _holm_union(pvals[j], pvals[k], alpha)
    _, primary, (j, k) = shape
    return pvals[primary] < alpha and _holm_union(pvals[j], pvals[k], alpha)
