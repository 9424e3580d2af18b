import os

import pytest

from services.spectral_measures import bernoulli_measure, generate_spectrum


@pytest.fixture(scope="session")
def sigma2():
    return bernoulli_measure(2)


@pytest.fixture(scope="session")
def lambda2():
    return generate_spectrum(2, 128)


@pytest.fixture
def clean_env(monkeypatch):
    """Private copy of os.environ so .env loading cannot leak between tests."""
    env = {k: v for k, v in os.environ.items() if not k.startswith("SPECTRAL_")}
    monkeypatch.setattr(os, "environ", env)
    return env
