"""Cutting-plane outer loops with certified upper and lower bounds.

``algorithm1`` keeps the eigenvalue floor ``C >= eps I`` in the master
problem and converges to the optimum over ``P_eps``. ``algorithm2`` drops
the floor from the master problem (so its bound is valid for the original
problem) and instead projects every candidate ``C`` onto ``C >= eps' I``
before linearizing ``R_A*`` there.

In ``algorithm2`` the lower bound of an iteration is the better of two
feasible points: the master candidate itself and the projected anchor
scaled back into the source budget. When the optimum has an innovation
eigenvalue below ``eps'`` the master candidates sit where no A-cut was ever
anchored; their true ``R_A*`` can lie far below the cuts while the
projected anchor's value is tight, so without the second candidate the
gap can stay open indefinitely.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidConfigError, NumericalFailure
from .gradients import Cut, make_A_cut, make_B_cut
from .inner import InnerSolution, solve_inner, solve_inner_psd
from .linalg import herm_eig, hermitize
from .master import MasterProblem, solve_master
from .model import RelayChannel
from .rates import OuterPoint, rate_B

__all__ = [
    "SolveReport",
    "AnchorSet",
    "algorithm1",
    "algorithm2",
    "project_pd_floor",
    "initial_anchor",
    "TERMINATIONS",
    "default_eps",
    "fit_source_budget",
]

GAP_REACHED = "gap-reached"
STALLED = "stalled-point-repeat"
ITERATION_LIMIT = "iteration-limit"
NUMERICAL_FAILURE = "numerical-failure"
TERMINATIONS = (GAP_REACHED, STALLED, ITERATION_LIMIT, NUMERICAL_FAILURE)

MAX_ITER = 200
DUPLICATE_RTOL = 1e-9


def default_eps(ch: RelayChannel):
    """Eigenvalue floor used when none is given: ``1e-5 * P_S``."""
    return 1e-5 * ch.P_S


@dataclass
class AnchorSet:
    """Linearization points and the cuts generated at them, in insertion order."""

    anchors: list = field(default_factory=list)
    cuts: list = field(default_factory=list)

    def contains(self, pt: OuterPoint, rtol=DUPLICATE_RTOL):
        """True if ``pt`` matches an anchor to relative Frobenius distance ``rtol`` (both blocks jointly)."""
        for a in self.anchors:
            num = np.linalg.norm(pt.C - a.C) ** 2 + np.linalg.norm(pt.R - a.R) ** 2
            den = np.linalg.norm(a.C) ** 2 + np.linalg.norm(a.R) ** 2
            if np.sqrt(num) <= rtol * max(np.sqrt(den), 1e-300):
                return True
        return False

    def add(self, pt, cuts):
        self.anchors.append(pt)
        self.cuts.extend(cuts)


@dataclass
class SolveReport:
    """Outcome of a cutting-plane run.

    ``rate`` is the best lower bound found; the true optimum of the solved
    problem lies in ``[rate, rate + Delta_trace[-1]]``.
    """

    incumbent: OuterPoint | None
    incumbent_inner: InnerSolution | None
    U_trace: list
    L_trace: list
    Delta_trace: list
    iterations: int
    termination: str
    eps_used: float
    eps_prime_used: float | None
    eps_cp: float
    algorithm: str = ""
    anchors: AnchorSet | None = None
    newton_steps: int = 0
    message: str = ""

    @property
    def rate(self):
        return max(self.L_trace) if self.L_trace else float("nan")

    @property
    def delta(self):
        return self.Delta_trace[-1] if self.Delta_trace else float("inf")

    @property
    def upper(self):
        return self.U_trace[-1] if self.U_trace else float("inf")

    def to_dict(self):
        def enc(m):
            m = np.asarray(m)
            return {"re": np.real(m).tolist(), "im": np.imag(m).tolist()}

        doc = {
            "algorithm": self.algorithm,
            "termination": self.termination,
            "iterations": self.iterations,
            "rate": self.rate,
            "delta": self.delta,
            "eps": self.eps_used,
            "eps_prime": self.eps_prime_used,
            "eps_cp": self.eps_cp,
            "U_trace": list(self.U_trace),
            "L_trace": list(self.L_trace),
            "Delta_trace": list(self.Delta_trace),
        }
        if self.incumbent is not None:
            doc["C"] = enc(self.incumbent.C)
            doc["R"] = enc(self.incumbent.R)
        if self.incumbent_inner is not None:
            doc["C_v"] = enc(self.incumbent_inner.split.C_v)
            doc["C_w"] = enc(self.incumbent_inner.split.C_w)
        return doc

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")


def project_pd_floor(C, eps_prime):
    """Frobenius-nearest matrix to Hermitian ``C`` with all eigenvalues ``>= eps_prime``."""
    w, v = herm_eig(C)
    clipped = np.maximum(w, eps_prime)
    if np.array_equal(clipped, w):
        return hermitize(np.asarray(C, dtype=complex))
    return hermitize((v * clipped) @ v.conj().T)


def fit_source_budget(ch: RelayChannel, C, R):
    """Scale the source side of ``(C, R)`` so that ``tr C + tr R_SS <= P_S``.

    ``C`` and the source rows and columns of ``R`` are multiplied by ``s`` and
    ``sqrt(s)`` respectively (``s <= 1``), which keeps both PSD and leaves the
    relay budget untouched.
    """
    n_s = ch.n_s
    used = float(np.real(np.trace(C)) + np.real(np.trace(R[:n_s, :n_s])))
    if used <= ch.P_S:
        return OuterPoint.unchecked(C, R)
    s = ch.P_S / used
    d = np.concatenate([np.full(n_s, np.sqrt(s)), np.ones(ch.n_r)])
    return OuterPoint.unchecked(s * C, hermitize(d[:, None] * R * d[None, :]))


def initial_anchor(ch: RelayChannel, eps):
    """``(alpha I, beta I)`` strictly inside ``P_eps`` with 25% slack on both budgets."""
    n_s, n_r = ch.n_s, ch.n_r
    if eps < 0 or eps >= ch.P_S / n_s:
        raise InvalidConfigError(f"eps must lie in [0, P_S/N_S), got {eps}")
    alpha = max(2.0 * eps, ch.P_S / (4.0 * n_s))
    room_s = 0.75 * ch.P_S - n_s * alpha
    if room_s <= 0:
        raise InvalidConfigError(f"eps={eps} leaves no room for a strictly feasible initial point")
    beta = 0.5 * min(room_s / n_s, 0.75 * ch.P_R / n_r)
    return OuterPoint.unchecked(alpha * np.eye(n_s), beta * np.eye(n_s + n_r))


def _check_eps(ch, eps, name):
    if not (0 < eps < ch.P_S / ch.n_s):
        raise InvalidConfigError(f"{name} must lie in (0, P_S/N_S) = (0, {ch.P_S / ch.n_s}), got {eps}")


def _run(ch, eps_master, eps_anchor, eps_cp, max_iter, project, algorithm):
    if eps_cp <= 0:
        raise InvalidConfigError("eps_cp must be positive")
    first = initial_anchor(ch, eps_anchor)
    anchors = AnchorSet()
    first_sol = solve_inner(ch, first.C)
    anchors.add(first, [make_A_cut(ch, first.C, first.R, first_sol), make_B_cut(ch, first)])
    mp = MasterProblem(ch.n_s, ch.n_r, ch.P_S, ch.P_R, eps_master, tuple(anchors.cuts))

    U_trace, L_trace, D_trace = [], [], []
    best_l, best_pt, best_inner = -np.inf, None, None
    termination = ITERATION_LIMIT
    message = ""
    newton = 0
    n = 0
    upper = np.inf
    for n in range(1, max_iter + 1):
        try:
            ms = solve_master(mp)
        except NumericalFailure as exc:
            termination, message = NUMERICAL_FAILURE, str(exc)
            n -= 1
            break
        newton += ms.barrier_iterations
        pt = ms.point
        upper = min(upper, ms.upper_bound)
        inner = solve_inner_psd(ch, pt.C) if project else solve_inner(ch, pt.C)
        low = min(inner.value, rate_B(ch, pt))
        if low > best_l:
            best_l, best_pt, best_inner = low, pt, inner
        if project:
            c_star = project_pd_floor(pt.C, eps_anchor)
            a_sol = solve_inner(ch, c_star)
            # the projected anchor, pulled back into the budget, is a second feasible candidate
            alt = fit_source_budget(ch, c_star, pt.R)
            alt_inner = a_sol if np.array_equal(alt.C, c_star) else solve_inner(ch, alt.C)
            alt_low = min(alt_inner.value, rate_B(ch, alt))
            low = max(low, alt_low)
            if alt_low > best_l:
                best_l, best_pt, best_inner = alt_low, alt, alt_inner
        U_trace.append(upper)
        L_trace.append(low)
        D_trace.append(upper - best_l)
        if upper - best_l <= eps_cp:
            termination = GAP_REACHED
            break
        if project:
            anchor = OuterPoint.unchecked(c_star, pt.R)
            if anchors.contains(anchor):
                termination = STALLED
                break
        else:
            anchor, a_sol = pt, inner
        new_cuts = [make_A_cut(ch, anchor.C, anchor.R, a_sol), make_B_cut(ch, pt)]
        anchors.add(anchor, new_cuts)
        mp = mp.with_cuts(new_cuts)
    return SolveReport(
        incumbent=best_pt,
        incumbent_inner=best_inner,
        U_trace=U_trace,
        L_trace=L_trace,
        Delta_trace=D_trace,
        iterations=len(U_trace),
        termination=termination,
        eps_used=eps_master,
        eps_prime_used=eps_anchor if project else None,
        eps_cp=eps_cp,
        algorithm=algorithm,
        anchors=anchors,
        newton_steps=newton,
        message=message,
    )


def algorithm1(ch: RelayChannel, eps=None, eps_cp=1e-3, max_iter=MAX_ITER) -> SolveReport:
    """Cutting-plane method over ``P_eps`` with ``eps > 0``."""
    eps = default_eps(ch) if eps is None else float(eps)
    _check_eps(ch, eps, "eps")
    return _run(ch, eps, eps, eps_cp, max_iter, project=False, algorithm="alg1")


def algorithm2(ch: RelayChannel, eps_prime=None, eps_cp=1e-3, max_iter=MAX_ITER) -> SolveReport:
    """Cutting-plane method for the original problem (``eps = 0`` in the master).

    Candidates are projected onto ``C >= eps_prime I`` before the ``R_A*``
    cut is generated. Stops early with ``stalled-point-repeat`` when the
    projected anchor is already in the anchor set.
    """
    eps_prime = default_eps(ch) if eps_prime is None else float(eps_prime)
    _check_eps(ch, eps_prime, "eps_prime")
    return _run(ch, 0.0, eps_prime, eps_cp, max_iter, project=True, algorithm="alg2")
