import numpy as np
import pytest

from sparse_proxqn.core.logging import configure_logging
from sparse_proxqn.domains.sparse_data.synthetic import make_chain, make_logistic, make_taxonomy


@pytest.fixture(autouse=True)
def quiet_logging():
    configure_logging("WARNING", plain=True)
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def logistic_data():
    """N=200, d=50, 20% true support."""
    dataset, _ = make_logistic(200, 50, support_fraction=0.2, seed=7)
    return dataset


@pytest.fixture(scope="session")
def correlated_logistic():
    """Same sizes with every feature pair correlated at 0.7."""
    dataset, _ = make_logistic(200, 50, support_fraction=0.2, correlation=0.7, seed=7)
    return dataset


@pytest.fixture(scope="session")
def small_logistic():
    dataset, _ = make_logistic(20, 10, support_fraction=0.3, noise=0.0, seed=3)
    return dataset


@pytest.fixture(scope="session")
def chain_data():
    """N=50 words of length 5, 3 labels, J=20 raw features."""
    return make_chain(num_sequences=50, length=5, num_labels=3, num_features=20, seed=5)


@pytest.fixture(scope="session")
def tiny_chain():
    """Small enough to enumerate every labeling."""
    return make_chain(num_sequences=4, length=3, num_labels=2, num_features=4, seed=11)


@pytest.fixture(scope="session")
def tiny_taxonomy():
    return make_taxonomy(num_instances=8, num_features=3, branching=2, depth=2, seed=2)
