import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from conftest import random_channel, random_hpd
from pdfrelay.driver import initial_anchor
from pdfrelay.errors import InvalidConfigError, MasterProblemError
from pdfrelay.gradients import Cut, make_A_cut, make_B_cut
from pdfrelay.master import MasterProblem, MasterSolution, certify, dump_master, solve_master
from pdfrelay.rates import OuterPoint

seeds = st.integers(0, 2**32 - 1)


def const_cut(kind, value, n_s=1, n_r=1, grad_c=None, grad_r=None):
    nj = n_s + n_r
    gc = np.zeros((n_s, n_s), dtype=complex) if grad_c is None else np.asarray(grad_c, dtype=complex)
    gr = np.zeros((nj, nj), dtype=complex) if grad_r is None else np.asarray(grad_r, dtype=complex)
    anchor = OuterPoint.unchecked(np.zeros((n_s, n_s)), np.zeros((nj, nj)))
    return Cut(kind=kind, constant=float(value), grad_C=gc, grad_R=gr, anchor=anchor)


def test_constant_cuts():
    mp = MasterProblem(2, 2, 10.0, 5.0, 0.0, (const_cut("A", 3.0, 2, 2), const_cut("B", 1.5, 2, 2)))
    ms = solve_master(mp)
    assert ms.U == pytest.approx(1.5, abs=1e-7)
    assert certify(ms, mp).feasible


def test_hand_solved_scalar_program():
    cuts = (const_cut("A", 0.0, grad_c=[[1.0]]), const_cut("B", 2.0, grad_c=[[-1.0]]))
    mp = MasterProblem(1, 1, 10.0, 5.0, 0.0, cuts)
    ms = solve_master(mp)
    assert ms.U == pytest.approx(1.0, abs=1e-6)
    assert ms.point.C[0, 0].real == pytest.approx(1.0, abs=1e-5)


def _random_diag_cuts(rng, k):
    cuts = []
    for j in range(k):
        gc = [[rng.normal()]]
        gr = np.diag(rng.normal(size=2))
        cuts.append(const_cut("A" if j % 2 == 0 else "B", rng.uniform(0, 3), grad_c=gc, grad_r=gr))
    return cuts


@given(seeds)
@settings(max_examples=15)
def test_matches_linear_program_oracle(seed):
    rng = np.random.default_rng(seed)
    P_S, P_R = 10.0, 5.0
    cuts = _random_diag_cuts(rng, 5)
    ms = solve_master(MasterProblem(1, 1, P_S, P_R, 0.0, tuple(cuts)))
    # variables (c, r_s, r_r, U); diagonal gradients make the off-diagonal of R irrelevant
    a_ub, b_ub = [], []
    for cut in cuts:
        a_ub.append([-cut.grad_C[0, 0].real, -cut.grad_R[0, 0].real, -cut.grad_R[1, 1].real, 1.0])
        b_ub.append(cut.constant)
    a_ub += [[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]
    b_ub += [P_S, P_R]
    res = linprog([0, 0, 0, -1], A_ub=a_ub, b_ub=b_ub, bounds=[(0, None)] * 3 + [(None, None)])
    assert res.status == 0
    assert ms.U == pytest.approx(-res.fun, abs=1e-4)
    # a coarse grid never beats the barrier solution
    c, rs, rr = np.meshgrid(np.linspace(0, P_S, 41), np.linspace(0, P_S, 41), np.linspace(0, P_R, 21), indexing="ij")
    ok = c + rs <= P_S
    vals = np.min([cut.constant + cut.grad_C[0, 0].real * c + cut.grad_R[0, 0].real * rs
                   + cut.grad_R[1, 1].real * rr for cut in cuts], axis=0)
    assert vals[ok].max() <= ms.U + 1e-6


def test_missing_cut_kind_named():
    with pytest.raises(MasterProblemError, match="B-cut"):
        solve_master(MasterProblem(1, 1, 1.0, 1.0, 0.0, (const_cut("A", 1.0),)))
    with pytest.raises(MasterProblemError, match="A-cut"):
        solve_master(MasterProblem(1, 1, 1.0, 1.0, 0.0, (const_cut("B", 1.0),)))


def test_eps_must_leave_room():
    with pytest.raises(InvalidConfigError):
        MasterProblem(2, 2, 10.0, 1.0, 5.0)


def _pdf_master(rng, eps=1e-3, extra=3):
    ch = random_channel(rng, P_S=100.0, P_R=10.0)
    first = initial_anchor(ch, eps)
    cuts = [make_A_cut(ch, first.C, first.R), make_B_cut(ch, first)]
    for _ in range(extra):
        c = random_hpd(rng, 2) * rng.uniform(1, 20)
        r = random_hpd(rng, 4)
        cuts += [make_A_cut(ch, c), make_B_cut(ch, OuterPoint(c, r))]
    return ch, MasterProblem(2, 2, 100.0, 10.0, eps, tuple(cuts))


def test_certify_after_solve(rng):
    _, mp = _pdf_master(rng)
    ms = solve_master(mp)
    rep = certify(ms, mp)
    assert rep.worst_violation <= 1e-9
    assert np.all(rep.cut_slacks >= -1e-7)
    assert rep.gap_estimate <= 1e-7 * (1 + abs(ms.U))


def test_certify_detects_perturbation(rng):
    _, mp = _pdf_master(rng)
    ms = solve_master(mp)
    bad = MasterSolution(OuterPoint.unchecked(ms.point.C + 200 * np.eye(2), ms.point.R), ms.U, 0, 0.0)
    rep = certify(bad, mp)
    assert not rep.feasible and rep.worst_constraint == "power_S"
    lowered = MasterSolution(ms.point, ms.U - 1.0, 0, 0.0)
    assert np.all(certify(lowered, mp).cut_slacks >= 1.0 - 1e-7)


def test_interior_iterate(rng):
    _, mp = _pdf_master(rng)
    ms = solve_master(mp)
    assert np.linalg.eigvalsh(ms.point.C)[0] > mp.eps
    assert np.linalg.eigvalsh(ms.point.R)[0] > 0


def test_adding_cuts_never_raises_U(rng):
    ch, mp = _pdf_master(rng, extra=0)
    prev = solve_master(mp).U
    for _ in range(4):
        c = random_hpd(rng, 2) * 10
        mp = mp.with_cuts([make_A_cut(ch, c), make_B_cut(ch, OuterPoint(c, random_hpd(rng, 4)))])
        u = solve_master(mp).U
        assert u <= prev + 1e-6 * (1 + abs(prev))
        prev = u


@pytest.mark.parametrize("alpha", [0.1, 3.0])
def test_scale_covariance(rng, alpha):
    _, mp = _pdf_master(rng)
    scaled = tuple(
        Cut(c.kind, alpha * c.constant, alpha * c.grad_C, alpha * c.grad_R, c.anchor) for c in mp.cuts
    )
    u = solve_master(mp).U
    u_scaled = solve_master(MasterProblem(2, 2, mp.P_S, mp.P_R, mp.eps, scaled)).U
    assert u_scaled == pytest.approx(alpha * u, rel=1e-6, abs=1e-6)


def test_dump_master(rng, tmp_path):
    _, mp = _pdf_master(rng, extra=1)
    p = tmp_path / "master.json"
    dump_master(mp, p)
    doc = json.loads(p.read_text())
    assert doc["N_S"] == 2 and len(doc["cuts"]) == len(mp.cuts)
    assert {c["kind"] for c in doc["cuts"]} == {"A", "B"}
