"""Relaxed master problem of the cutting-plane method.

    max U  s.t.  U <= cut_j(C, R) for every cut,
                 C >= eps I,  R >= 0,
                 tr(C) + tr(R_SS) <= P_S,  tr(R_RR) <= P_R.

Solved by a primal log-barrier path-following method on the real
coordinates of ``(C, R, U)``; the Newton loop itself lives in
:mod:`pdfrelay._kernels`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import InvalidConfigError, MasterProblemError, NumericalFailure
from .gradients import Cut
from .linalg import herm_to_vec, vec_to_herm
from .rates import OuterPoint

__all__ = [
    "MasterProblem",
    "MasterSolution",
    "CertifyReport",
    "SpectrahedralLP",
    "solve_master",
    "solve_lp",
    "certify",
    "dump_master",
    "default_start",
]

T0 = 1.0
MU = 10.0
GAP_TOL = 1e-7  # relative: m / t <= GAP_TOL * (1 + |U|)
MAX_NEWTON = 500
NEWTON_TOL = 1e-10
FEAS_TOL = 1e-9


@dataclass(frozen=True)
class SpectrahedralLP:
    """``max U`` over Hermitian blocks with eigenvalue floors, linear rows and cuts.

    Coordinates are ``x = [vec(block_0), vec(block_1), ..., U]``.
    ``lin_rows @ x[:-1] <= lin_rhs`` are the budget rows and
    ``U <= cut_b[j] + cut_a[j] @ x[:-1]`` the cuts.
    """

    dims: tuple
    floors: tuple
    lin_rows: np.ndarray
    lin_rhs: np.ndarray
    cut_a: np.ndarray
    cut_b: np.ndarray

    @property
    def offsets(self):
        return np.concatenate([[0], np.cumsum([d * d for d in self.dims])[:-1]]).astype(np.int64)

    @property
    def nvar(self):
        return sum(d * d for d in self.dims)

    @property
    def n_constraints(self):
        return sum(self.dims) + len(self.lin_rhs) + len(self.cut_b)

    def stacked(self):
        """All scalar inequalities as ``G x < h`` including the U column."""
        nv = self.nvar
        rows = np.zeros((len(self.lin_rhs) + len(self.cut_b), nv + 1))
        rows[: len(self.lin_rhs), :nv] = self.lin_rows
        rows[len(self.lin_rhs):, :nv] = -self.cut_a
        rows[len(self.lin_rhs):, nv] = 1.0
        return rows, np.concatenate([self.lin_rhs, self.cut_b])

    def blocks_of(self, x):
        out = []
        for off, d in zip(self.offsets, self.dims):
            out.append(vec_to_herm(x[off:off + d * d], d))
        return out


@dataclass(frozen=True)
class _LPSolution:
    x: np.ndarray
    U: float
    newton_steps: int
    decrement: float
    gap_bound: float


def solve_lp(lp: SpectrahedralLP, x_start) -> _LPSolution:
    """Barrier path following from a strictly feasible block point ``x_start`` (no U entry)."""
    if len(lp.cut_b) == 0:
        raise MasterProblemError("master problem without cuts is unbounded in U")
    x_start = np.asarray(x_start, dtype=float)
    u0 = float(np.min(lp.cut_b + lp.cut_a @ x_start)) - 1.0
    x0 = np.concatenate([x_start, [u0]])
    G, h = lp.stacked()
    cvec = np.zeros(lp.nvar + 1)
    cvec[-1] = -1.0
    kern = _kernels.backend()
    x, t, steps, status, dec = kern.barrier_solve(
        x0,
        cvec,
        lp.offsets,
        np.asarray(lp.dims, dtype=np.int64),
        np.asarray(lp.floors, dtype=float),
        np.ascontiguousarray(G),
        np.ascontiguousarray(h),
        T0,
        MU,
        GAP_TOL,
        MAX_NEWTON,
        NEWTON_TOL,
    )
    if status != 0:
        reason = "Newton step budget exhausted" if status == 1 else "line search failed"
        raise NumericalFailure(
            f"barrier method failed: {reason} after {steps} Newton steps (t={t:.1e})",
            best=np.array(x),
        )
    return _LPSolution(x=np.array(x), U=float(x[-1]), newton_steps=int(steps), decrement=float(dec),
                       gap_bound=lp.n_constraints / t)


# -- the PDF master ----------------------------------------------------------


@dataclass(frozen=True)
class MasterProblem:
    """Cuts plus the outer constraint set ``P_eps``."""

    n_s: int
    n_r: int
    P_S: float
    P_R: float
    eps: float
    cuts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "cuts", tuple(self.cuts))
        if self.eps < 0 or self.eps >= self.P_S / self.n_s:
            raise InvalidConfigError(f"eps must lie in [0, P_S/N_S) = [0, {self.P_S / self.n_s}), got {self.eps}")

    def check_cuts(self):
        kinds = {c.kind for c in self.cuts}
        missing = [k for k in ("A", "B") if k not in kinds]
        if missing:
            raise MasterProblemError(
                f"master problem needs at least one cut of each kind; missing: {', '.join(k + '-cut' for k in missing)}"
            )

    def with_cuts(self, extra: Sequence[Cut]):
        return MasterProblem(self.n_s, self.n_r, self.P_S, self.P_R, self.eps, self.cuts + tuple(extra))

    def to_lp(self, coeffs=None) -> SpectrahedralLP:
        ns, nj = self.n_s, self.n_s + self.n_r
        pc, pr = ns * ns, nj * nj
        rows = np.zeros((2, pc + pr))
        rows[0, :ns] = 1.0  # tr(C)
        rows[0, pc:pc + ns] = 1.0  # tr(R_SS)
        rows[1, pc + ns:pc + nj] = 1.0  # tr(R_RR)
        if coeffs is None:
            coeffs = [c.coefficients() for c in self.cuts]
        cut_a = np.array([a for a, _ in coeffs]).reshape(len(coeffs), pc + pr)
        cut_b = np.array([b for _, b in coeffs], dtype=float)
        return SpectrahedralLP(
            dims=(ns, nj),
            floors=(self.eps, 0.0),
            lin_rows=rows,
            lin_rhs=np.array([self.P_S, self.P_R]),
            cut_a=cut_a,
            cut_b=cut_b,
        )


@dataclass(frozen=True, eq=False)
class MasterSolution:
    point: OuterPoint
    U: float
    barrier_iterations: int
    kkt_residual: float
    gap_bound: float = 0.0

    @property
    def upper_bound(self):
        """``U`` plus the barrier duality-gap bound: a certified upper bound on the master optimum."""
        return self.U + self.gap_bound


def default_start(n_s, n_r, P_S, P_R, eps):
    """Strictly feasible ``(C0, R0)`` with slack in every constraint."""
    alpha = eps + (P_S - n_s * eps) / (2.0 * n_s)
    beta = min(P_S - n_s * eps, P_R) / (4.0 * (n_s + n_r))
    return alpha * np.eye(n_s, dtype=complex), beta * np.eye(n_s + n_r, dtype=complex)


def _point_coords(c, r):
    return np.concatenate([herm_to_vec(c), herm_to_vec(r)])


def solve_master(mp: MasterProblem, start: OuterPoint | None = None, lp=None) -> MasterSolution:
    """Maximize U over the cut polyhedron intersected with ``P_eps``.

    ``start`` may supply a strictly feasible initial ``(C, R)``; otherwise
    :func:`default_start` is used.
    """
    mp.check_cuts()
    if lp is None:
        lp = mp.to_lp()
    c0, r0 = default_start(mp.n_s, mp.n_r, mp.P_S, mp.P_R, mp.eps)
    x_start = _point_coords(c0, r0)
    if start is not None:
        x_start = _point_coords(start.C, start.R)
    sol = solve_lp(lp, x_start)
    c, r = lp.blocks_of(sol.x)
    return MasterSolution(
        point=OuterPoint.unchecked(c, r),
        U=sol.U,
        barrier_iterations=sol.newton_steps,
        kkt_residual=sol.decrement,
        gap_bound=sol.gap_bound,
    )


@dataclass(frozen=True)
class CertifyReport:
    """Constraint check of a master solution; violations are positive numbers."""

    worst_violation: float
    worst_constraint: str
    cut_slacks: np.ndarray  # cut_j(point) - U
    gap_estimate: float

    @property
    def feasible(self):
        return self.worst_violation <= FEAS_TOL


def certify(ms: MasterSolution, mp: MasterProblem) -> CertifyReport:
    """Re-evaluate every constraint of the master problem at ``ms``."""
    c, r = ms.point.C, ms.point.R
    ns = mp.n_s
    checks = {
        "floor": mp.eps - float(np.linalg.eigvalsh(c)[0]),
        "psd_R": -float(np.linalg.eigvalsh(r)[0]),
        "power_S": float(np.real(np.trace(c) + np.trace(r[:ns, :ns]))) - mp.P_S,
        "power_R": float(np.real(np.trace(r[ns:, ns:]))) - mp.P_R,
    }
    slacks = np.array([cut.evaluate(c, r) - ms.U for cut in mp.cuts])
    for j, s in enumerate(slacks):
        checks[f"cut[{j}]"] = -float(s)
    name = max(checks, key=checks.get)
    return CertifyReport(
        worst_violation=max(0.0, checks[name]),
        worst_constraint=name,
        cut_slacks=slacks,
        gap_estimate=ms.gap_bound,
    )


def dump_master(mp: MasterProblem, path):
    """Write the cuts and budgets as JSON for cross-checking with an external conic solver."""

    def enc(m):
        m = np.asarray(m)
        return {"re": np.real(m).tolist(), "im": np.imag(m).tolist()}

    doc = {
        "N_S": mp.n_s,
        "N_R": mp.n_r,
        "P_S": mp.P_S,
        "P_R": mp.P_R,
        "eps": mp.eps,
        "cuts": [
            {
                "kind": c.kind,
                "constant": c.constant,
                "grad_C": enc(c.grad_C),
                "grad_R": enc(c.grad_R),
                "anchor_C": enc(c.anchor.C),
                "anchor_R": enc(c.anchor.R),
            }
            for c in mp.cuts
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")
