import numpy as np
import pytest

from rankalign.data_preparation.synthetic import SyntheticConfig, gen_synthetic


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture(scope='session')
def small_dataset():
    return gen_synthetic(SyntheticConfig(n_queries=50, m_candidates=8, seed=11))
