"""Subject-level trial data and per-endpoint model specification."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

COVARIATE_KINDS = ("cont", "bin", "count")


class ConfigError(ValueError):
    """A model/run specification references data that does not exist or is malformed."""


@dataclass(frozen=True)
class TrialDataset:
    """Wide-format subject rows: J continuous outcomes, a treatment flag, covariates.

    Parameters
    ----------
    outcomes : (n, J) array of continuous responses.
    treatment : (n,) array of 0/1 treatment indicators.
    covariates : (n, L) array of covariate values (L may be 0).
    covariate_names : names for the L covariate columns.
    covariate_kinds : declared kind per column, one of ``cont``, ``bin``, ``count``.
    """

    outcomes: np.ndarray
    treatment: np.ndarray
    covariates: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    covariate_names: tuple[str, ...] = ()
    covariate_kinds: tuple[str, ...] = ()

    def __post_init__(self):
        outcomes = np.atleast_2d(np.asarray(self.outcomes, dtype=float))
        treatment = np.asarray(self.treatment)
        n = outcomes.shape[0]
        covariates = np.asarray(self.covariates, dtype=float)
        if covariates.size == 0:
            covariates = np.zeros((n, 0))
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "treatment", treatment.astype(int))
        object.__setattr__(self, "covariates", covariates)
        if n < 1 or outcomes.shape[1] < 1:
            raise ValueError("need n >= 1 subjects and J >= 1 outcomes")
        if treatment.shape != (n,):
            raise ValueError(f"treatment must have shape ({n},), got {treatment.shape}")
        if not np.isin(treatment, (0, 1)).all():
            bad = np.flatnonzero(~np.isin(treatment, (0, 1)))[0]
            raise ValueError(f"treatment values must be 0/1; row {bad} has {treatment[bad]}")
        if not np.isfinite(outcomes).all():
            raise ValueError("outcomes contain missing or non-finite cells")
        if covariates.shape[0] != n:
            raise ValueError("covariate rows do not match subject count")
        if not np.isfinite(covariates).all():
            raise ValueError("covariates contain missing or non-finite cells")
        L = covariates.shape[1]
        if len(self.covariate_names) != L or len(self.covariate_kinds) != L:
            raise ValueError("covariate_names/kinds must match covariate column count")
        for name, kind in zip(self.covariate_names, self.covariate_kinds):
            if kind not in COVARIATE_KINDS:
                raise ValueError(f"unknown covariate kind {kind!r} for column {name!r}")

    @property
    def n(self) -> int:
        return self.outcomes.shape[0]

    @property
    def n_endpoints(self) -> int:
        return self.outcomes.shape[1]

    def covariate_column(self, name: str) -> np.ndarray:
        try:
            idx = self.covariate_names.index(name)
        except ValueError:
            raise ConfigError(f"covariate column {name!r} not present in dataset") from None
        return self.covariates[:, idx]

    def permute_rows(self, order: np.ndarray) -> "TrialDataset":
        return TrialDataset(
            outcomes=self.outcomes[order],
            treatment=self.treatment[order],
            covariates=self.covariates[order],
            covariate_names=self.covariate_names,
            covariate_kinds=self.covariate_kinds,
        )


@dataclass(frozen=True)
class EndpointSpec:
    """Model structure and success definition for one endpoint.

    ``direction`` says whether success means the treatment effect exceeds
    (``">"``) or falls below (``"<"``) the threshold ``delta``.
    """

    covariates: tuple[str, ...] = ()
    intercept: bool = True
    direction: str = ">"
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "covariates", tuple(self.covariates))
        if self.direction not in (">", "<"):
            raise ValueError("direction must be '>' or '<'")

    @property
    def n_covariate_terms(self) -> int:
        """p_j: intercept (if any) plus selected covariate columns."""
        return len(self.covariates) + int(self.intercept)


@dataclass(frozen=True)
class ModelSpec:
    """Per-endpoint covariate selections, success directions and thresholds."""

    endpoints: tuple[EndpointSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "endpoints", tuple(self.endpoints))
        if not self.endpoints:
            raise ValueError("need at least one endpoint")

    @property
    def n_endpoints(self) -> int:
        return len(self.endpoints)

    @property
    def p_total(self) -> int:
        """p = sum of p_j over endpoints (treatment columns excluded)."""
        return sum(e.n_covariate_terms for e in self.endpoints)
