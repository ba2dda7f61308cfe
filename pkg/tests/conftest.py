import os

import numpy as np
import pytest
from hypothesis import settings

from phrobust.model import validate_model
from phrobust.oracle import passive_corpus, random_passive_model

# Fixed example sequence so runs are reproducible; HYPOTHESIS_PROFILE=explore for fresh draws.
settings.register_profile("repro", derandomize=True, print_blob=True)
settings.register_profile("explore", max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repro"))


@pytest.fixture
def M1():
    return validate_model(-1.0, 1.0, 1.0, 1.0)


@pytest.fixture
def M1u():
    return validate_model(1.0, 1.0, 1.0, 1.0)


@pytest.fixture(scope="session")
def small_corpus():
    return passive_corpus(12, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_model(rng, n, m):
    return validate_model(
        rng.standard_normal((n, n)), rng.standard_normal((n, m)),
        rng.standard_normal((m, n)), rng.standard_normal((m, m)),
    )


def passive_model(seed, n, m):
    return random_passive_model(np.random.default_rng(seed), n, m)
