import numpy as np
import pytest

from surpos.dataset import EndpointSpec, ModelSpec, TrialDataset
from surpos.design import assemble_design


def make_dataset(
    n=60,
    J=2,
    seed=0,
    beta1=(0.8, -0.5),
    sigma=None,
    n_cov=2,
):
    """Small synthetic SUR dataset with shared continuous covariates."""
    rng = np.random.default_rng(seed)
    if sigma is None:
        sigma = np.eye(J) + 0.3 * (np.ones((J, J)) - np.eye(J))
    sigma = np.asarray(sigma, dtype=float)
    z = np.zeros(n, dtype=int)
    z[: n // 2] = 1
    z = rng.permutation(z)
    covariates = rng.standard_normal((n, n_cov))
    names = tuple(f"x{i}" for i in range(n_cov))
    kinds = ("cont",) * n_cov
    X = np.column_stack([np.ones(n), covariates])
    beta2 = rng.normal(size=(J, n_cov + 1))
    means = np.column_stack([beta1[j] * z + X @ beta2[j] for j in range(J)])
    noise = rng.standard_normal((n, J)) @ np.linalg.cholesky(sigma).T
    return TrialDataset(
        outcomes=means + noise,
        treatment=z,
        covariates=covariates,
        covariate_names=names,
        covariate_kinds=kinds,
    )


def make_model(J=2, n_cov=2, directions=None, deltas=None):
    names = tuple(f"x{i}" for i in range(n_cov))
    directions = directions or (">",) * J
    deltas = deltas or (0.0,) * J
    return ModelSpec(
        endpoints=tuple(
            EndpointSpec(covariates=names, intercept=True, direction=directions[j], delta=deltas[j])
            for j in range(J)
        )
    )


@pytest.fixture
def small_design():
    ds = make_dataset()
    return assemble_design(ds, make_model())


@pytest.fixture
def small_dataset():
    return make_dataset()


@pytest.fixture
def small_model():
    return make_model()
