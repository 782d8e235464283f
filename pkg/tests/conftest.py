import numpy as np
import pytest

from cornerwave import DataModel
from cornerwave.synthetic import gaussian_dataset

ACCEPTANCE_RESULTS = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""

    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}"
        if detail:
            line += f" ({detail})"
        ACCEPTANCE_RESULTS.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def scalar_data():
    """T=1e5 draws of a scalar attribute with mean 10 and variance 1."""
    return gaussian_dataset(100_000, [10.0], [[1.0]], seed=11)


@pytest.fixture(scope="session")
def scalar_model():
    return DataModel(mu=[10.0], cov=[[1.0]])


@pytest.fixture(scope="session")
def pair_model():
    return DataModel(mu=[5.0, -2.0], cov=[[2.0, 0.6], [0.6, 1.0]])


@pytest.fixture(scope="session")
def pair_data(pair_model):
    return gaussian_dataset(100_000, pair_model.mu, pair_model.cov, seed=12)


def trust_cov(noises, k):
    """Trust-level covariance estimate mean_t z_i^T K^-1 z_j / N from noise of shape (M, T, N)."""
    kinv = np.linalg.inv(np.atleast_2d(k))
    z = np.asarray(noises)
    return np.einsum("itn,nm,jtm->ij", z, kinv, z) / (z.shape[1] * z.shape[2])
