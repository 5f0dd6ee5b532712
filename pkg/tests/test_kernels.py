import os
import subprocess
import sys

import numpy as np
import pytest

from conftest import random_channel, random_hpd
from pdfrelay import _kernels
from pdfrelay.gradients import make_A_cut, make_B_cut
from pdfrelay.inner import solve_inner
from pdfrelay.master import MasterProblem, solve_master
from pdfrelay.driver import initial_anchor
from pdfrelay.model import gram_matrices

needs_numba = pytest.mark.skipif("numba" not in _kernels.available_backends(), reason="numba not importable")


def test_unknown_backend():
    with pytest.raises(ValueError):
        _kernels.get_backend("fortran")


def test_numpy_always_available():
    assert "numpy" in _kernels.available_backends()


@pytest.mark.parametrize("value, expected", [("0", "numpy"), ("off", "numpy"), ("1", None)])
def test_env_flag_selects_backend(value, expected):
    env = dict(os.environ, PDFRELAY_NUMBA=value)
    out = subprocess.run(
        [sys.executable, "-c", "from pdfrelay import _kernels; print(_kernels.backend().NAME)"],
        env=env, capture_output=True, text=True, check=True,
    ).stdout.strip()
    if expected is None:
        expected = _kernels.available_backends()[0]
    assert out == expected


def _coords_args(ch, c):
    sol = solve_inner(ch, c)
    g_ds, g_rs = gram_matrices(ch)
    s_vals, s_vecs = sol.sqrt_eig
    k = sol.active_count
    return (
        np.ascontiguousarray(s_vals),
        np.ascontiguousarray(s_vecs),
        np.ascontiguousarray(sol.F1),
        np.ascontiguousarray(sol.gevd.lambdas[:k]),
        np.ascontiguousarray(g_ds),
        np.ascontiguousarray(g_rs),
        np.ascontiguousarray(sol.sqrtC),
    )


@needs_numba
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_eig_log_grad_coords_backends_agree(rng, n):
    ch = random_channel(rng, n_s=n)
    args = _coords_args(ch, random_hpd(rng, n))
    ref = _kernels.get_backend("numpy").eig_log_grad_coords(*args)
    got = _kernels.get_backend("numba").eig_log_grad_coords(*args)
    np.testing.assert_allclose(got, ref, rtol=1e-10, atol=1e-12)


@needs_numba
def test_barrier_solve_backends_agree(rng):
    ch = random_channel(rng, P_S=100.0, P_R=10.0)
    first = initial_anchor(ch, 1e-3)
    cuts = [make_A_cut(ch, first.C, first.R), make_B_cut(ch, first)]
    for _ in range(3):
        c = random_hpd(rng, 2)
        cuts.append(make_A_cut(ch, c))
    lp = MasterProblem(2, 2, 100.0, 10.0, 1e-3, tuple(cuts)).to_lp()
    from pdfrelay.master import default_start, _point_coords

    x0 = np.concatenate([_point_coords(*default_start(2, 2, 100.0, 10.0, 1e-3)), [0.0]])
    x0[-1] = float(np.min(lp.cut_b + lp.cut_a @ x0[:-1])) - 1.0
    G, h = lp.stacked()
    cvec = np.zeros(lp.nvar + 1)
    cvec[-1] = -1.0
    common = (cvec, lp.offsets, np.asarray(lp.dims, dtype=np.int64), np.asarray(lp.floors, float),
              np.ascontiguousarray(G), np.ascontiguousarray(h), 1.0, 10.0, 1e-7, 500, 1e-10)
    xa, ta, _, sa, _ = _kernels.get_backend("numpy").barrier_solve(x0, *common)
    xb, tb, _, sb, _ = _kernels.get_backend("numba").barrier_solve(x0, *common)
    assert sa == sb == 0
    assert abs(xa[-1] - xb[-1]) <= 1e-6 * (1 + abs(xa[-1]))


def test_barrier_rejects_infeasible_start():
    kern = _kernels.get_backend("numpy")
    x0 = np.array([-1.0, 0.0])  # 1x1 block below its floor
    out = kern.barrier_solve(x0, np.array([0.0, -1.0]), np.array([0], dtype=np.int64), np.array([1]),
                             np.array([0.0]), np.array([[0.0, 1.0]]), np.array([1.0]), 1.0, 10.0, 1e-7, 50, 1e-10)
    assert out[3] == kern.STATUS_LINESEARCH
