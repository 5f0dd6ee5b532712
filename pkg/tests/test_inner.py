import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import crandn, random_channel, random_hpd, scalar_channel
from pdfrelay.errors import NotPositiveDefiniteError
from pdfrelay.inner import solve_inner, solve_inner_psd, verify_inner_identities
from pdfrelay.linalg import psd_sqrt
from pdfrelay.model import RelayChannel
from pdfrelay.rates import InnerSplit, rate_A

seeds = st.integers(0, 2**32 - 1)


def scalar_grid_oracle(g_d, g_r, c, points=100_001):
    cv = np.linspace(0.0, c, points)
    vals = np.log2(1 + g_d * cv) + np.log2(1 + g_r * c) - np.log2(1 + g_r * cv)
    return vals.max()


def random_contraction(rng, n):
    """Hermitian A with 0 <= A <= I."""
    q, _ = np.linalg.qr(crandn(rng, n, n))
    return (q * rng.uniform(0, 1, n)) @ q.conj().T


def random_feasible_split(rng, c):
    """(C_v, C_w) PSD with C_v + C_w <= C."""
    n = c.shape[0]
    s = psd_sqrt(c)
    a = random_contraction(rng, n)
    ra = psd_sqrt(np.eye(n) - a)
    b = ra @ random_contraction(rng, n) @ ra
    return s @ a @ s, s @ b @ s


class TestScalarCases:
    def test_direct_link_stronger(self):
        ch = scalar_channel(1.0, np.sqrt(2.0), 0.0)
        sol = solve_inner(ch, [[1.0]])
        assert sol.gevd.lambdas[0] == pytest.approx(1.5)
        assert sol.split.C_v[0, 0].real == pytest.approx(1.0)
        assert abs(sol.split.C_w[0, 0]) <= 1e-12
        assert sol.value == pytest.approx(np.log2(3.0), abs=1e-12)
        assert sol.value == pytest.approx(scalar_grid_oracle(2.0, 1.0, 1.0), abs=1e-9)

    def test_relay_link_stronger(self):
        ch = scalar_channel(np.sqrt(2.0), 1.0, 0.0)
        sol = solve_inner(ch, [[1.0]])
        assert sol.gevd.lambdas[0] == pytest.approx(2.0 / 3.0)
        assert sol.active_count == 0
        assert abs(sol.split.C_v[0, 0]) == 0.0
        assert sol.split.C_w[0, 0].real == pytest.approx(1.0)
        assert sol.value == pytest.approx(np.log2(3.0), abs=1e-12)
        assert sol.value == pytest.approx(scalar_grid_oracle(1.0, 2.0, 1.0), abs=1e-9)

    def test_identical_links(self, rng):
        h = crandn(rng, 2, 2)
        ch = RelayChannel(h, h.copy(), crandn(rng, 2, 2), 1.0, 1.0)
        c = random_hpd(rng, 2)
        sol = solve_inner(ch, c)
        np.testing.assert_allclose(sol.gevd.lambdas, [1.0, 1.0], atol=1e-10)
        assert sol.active_count == 0
        assert not np.any(sol.split.C_v)
        expected = np.log2(np.real(np.linalg.det(np.eye(2) + h @ c @ h.conj().T)))
        assert sol.value == pytest.approx(expected, abs=1e-10)

    def test_threshold_continuity(self):
        # lambda = (1 + g_d c) / (1 + g_r c) crosses 1 as g_d crosses g_r
        vals = []
        for delta in (-1e-7, 1e-7):
            ch = scalar_channel(1.0, np.sqrt(1.0 + delta), 0.0)
            vals.append(solve_inner(ch, [[2.0]]).value)
        assert abs(vals[1] - vals[0]) <= 1e-6
        ch_above = scalar_channel(1.0, np.sqrt(1.0 + 1e-7), 0.0)
        ch_below = scalar_channel(1.0, np.sqrt(1.0 - 1e-7), 0.0)
        assert solve_inner(ch_above, [[2.0]]).active_count == 1
        assert solve_inner(ch_below, [[2.0]]).active_count == 0


@given(seeds)
def test_scalar_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    g_d, g_r = rng.exponential(2.0, 2)
    c = rng.uniform(0.01, 20.0)
    ch = scalar_channel(np.sqrt(g_r), np.sqrt(g_d), 1.0)
    assert abs(solve_inner(ch, [[c]]).value - scalar_grid_oracle(g_d, g_r, c)) <= 1e-6


@given(seeds, st.sampled_from([2, 3]))
def test_invariants(seed, n):
    rng = np.random.default_rng(seed)
    ch = random_channel(rng, n_s=n, n_r=2, n_d=2)
    c = random_hpd(rng, n)
    sol = solve_inner(ch, c)
    cv, cw = sol.split.C_v, sol.split.C_w
    assert np.linalg.norm(cv + cw - c) <= 1e-9
    assert np.linalg.eigvalsh(cv)[0] >= -1e-9
    assert np.linalg.eigvalsh(c - cv)[0] >= -1e-9
    assert abs(rate_A(ch, sol.split) - sol.value) <= 1e-10
    assert verify_inner_identities(sol, ch, c).max() <= 1e-8


@given(seeds)
def test_upper_bound_over_random_splits(seed):
    rng = np.random.default_rng(seed)
    ch = random_channel(rng, n_s=3, n_r=2, n_d=3)
    c = random_hpd(rng, 3)
    sol = solve_inner(ch, c)
    for _ in range(50):
        cv, cw = random_feasible_split(rng, c)
        assert rate_A(ch, InnerSplit(cv, cw)) <= sol.value + 1e-8


@given(seeds)
def test_monotone_in_shaping_budget(seed):
    rng = np.random.default_rng(seed)
    ch = random_channel(rng)
    c = random_hpd(rng, 2)
    bigger = c + random_hpd(rng, 2, shift=0.0)
    assert solve_inner(ch, c).value <= solve_inner(ch, bigger).value + 1e-8


def test_inner_identities_empty_active_set():
    ch = scalar_channel(2.0, 1.0, 0.0)
    sol = solve_inner(ch, [[1.0]])
    res = verify_inner_identities(sol, ch)
    assert res.direct == 0.0 and res.relay == 0.0


def test_inner_identities_scalar():
    ch = scalar_channel(1.0, 2.0, 0.0)
    assert verify_inner_identities(solve_inner(ch, [[3.0]]), ch).max() <= 1e-10


def test_requires_positive_definite(rng):
    ch = random_channel(rng)
    with pytest.raises(NotPositiveDefiniteError):
        solve_inner(ch, np.diag([1.0, 0.0]))


def test_caches_square_root(rng):
    ch = random_channel(rng)
    c = random_hpd(rng, 2)
    sol = solve_inner(ch, c)
    np.testing.assert_allclose(sol.sqrtC @ sol.sqrtC, c, atol=1e-10)


class TestRankDeficient:
    def test_matches_full_solver_on_pd_input(self, rng):
        ch = random_channel(rng)
        c = random_hpd(rng, 2)
        assert solve_inner_psd(ch, c).value == solve_inner(ch, c).value

    @given(seeds)
    def test_singular_input_gives_feasible_lower_bound(self, seed):
        rng = np.random.default_rng(seed)
        ch = random_channel(rng, n_s=3)
        v = crandn(rng, 3, 2)
        c = v @ v.conj().T  # rank 2
        sol = solve_inner_psd(ch, c)
        assert np.linalg.norm(sol.split.C_v + sol.split.C_w - c) <= 1e-9 * max(1, np.linalg.norm(c))
        assert abs(rate_A(ch, sol.split) - sol.value) <= 1e-9
        # limit of the PD problem from above (shift relative to the PD threshold)
        bumped = solve_inner(ch, c + 1e-9 * max(1.0, np.linalg.eigvalsh(c)[-1]) * np.eye(3)).value
        assert bumped - 1e-5 <= sol.value <= bumped + 1e-6

    def test_zero_input(self, rng):
        ch = random_channel(rng)
        assert solve_inner_psd(ch, np.zeros((2, 2))).value == 0.0
