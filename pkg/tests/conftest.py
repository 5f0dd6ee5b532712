import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pdfrelay.model import RelayChannel

settings.register_profile(
    "pdfrelay",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "pdfrelay"))

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_hpd(rng, n, shift=0.1):
    b = crandn(rng, n, n)
    return b @ b.conj().T + shift * np.eye(n)


def random_hermitian(rng, n):
    a = crandn(rng, n, n)
    return 0.5 * (a + a.conj().T)


def random_channel(rng, n_s=2, n_r=2, n_d=2, P_S=10.0, P_R=5.0, scale=1.0):
    return RelayChannel(
        H_RS=scale * crandn(rng, n_r, n_s),
        H_DS=crandn(rng, n_d, n_s),
        H_DR=scale * crandn(rng, n_d, n_r),
        P_S=P_S,
        P_R=P_R,
    )


def scalar_channel(h_rs, h_ds, h_dr, P_S=10.0, P_R=5.0):
    return RelayChannel(
        H_RS=np.array([[h_rs]], dtype=complex),
        H_DS=np.array([[h_ds]], dtype=complex),
        H_DR=np.array([[h_dr]], dtype=complex),
        P_S=P_S,
        P_R=P_R,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
