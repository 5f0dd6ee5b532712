"""Gradients of both rate terms and the affine overestimators (cuts) built from them.

Gradients are Hermitian matrices ``G`` paired with Hermitian displacements
through the real Frobenius product: ``f(X + dX) ~ f(X) + Re<G, dX>``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvalidInputError
from .inner import InnerSolution, solve_inner
from .linalg import frob_inner, herm_dual, herm_from_dual, herm_to_vec, hermitize
from .model import RelayChannel, gram_matrices, joint_channel
from .rates import LN2, OuterPoint, rate_B

__all__ = [
    "Cut",
    "DegenerateSpectrumWarning",
    "grad_rate_B",
    "grad_rate_A_star",
    "make_A_cut",
    "make_B_cut",
]


class DegenerateSpectrumWarning(RuntimeWarning):
    """An active generalized eigenvalue is (numerically) repeated."""


def grad_rate_B(ch: RelayChannel, pt: OuterPoint):
    """Gradients of ``R_B`` with respect to ``C`` and ``R``.

    With ``D = I + H_DS C H_DS^H + H R H^H``::

        dC = H_DS^H D^-1 H_DS / ln 2,   dR = H^H D^-1 H / ln 2
    """
    h = joint_channel(ch)
    d = np.eye(ch.n_d) + ch.H_DS @ pt.C @ ch.H_DS.conj().T + h @ pt.R @ h.conj().T
    d_inv_h = np.linalg.solve(hermitize(d), h)
    d_r = hermitize(h.conj().T @ d_inv_h) / LN2
    d_c = d_r[: ch.n_s, : ch.n_s].copy()
    return d_c, d_r


def _active_degenerate(lam, active):
    if active < 2:
        return False
    gaps = -np.diff(lam[:active])
    return bool(gaps.min() < 1e-9 * lam[0])


def grad_rate_A_star(ch: RelayChannel, C, sol: InnerSolution | None = None):
    """Gradient of the inner optimum ``R_A*(C)`` for positive definite ``C``.

    Each active generalized eigenvalue is differentiated by first-order
    perturbation, with the derivative of ``C^1/2`` along every real
    coordinate direction of ``C`` obtained from the Sylvester equation
    ``dS S + S dS = dC``. The relay term ``log2det(I + G_RS C)`` has the
    closed-form gradient ``H_RS^H (I + H_RS C H_RS^H)^-1 H_RS / ln 2``.

    A :class:`DegenerateSpectrumWarning` is emitted (and the computation
    proceeds) when two active eigenvalues coincide.
    """
    omega, degenerate = _omega(ch, C, sol)
    if degenerate:
        warnings.warn(
            "repeated active generalized eigenvalue; gradient may be inexact",
            DegenerateSpectrumWarning,
            stacklevel=2,
        )
    return omega


def _omega(ch, C, sol):
    if sol is None:
        sol = solve_inner(ch, C)
    if sol.gevd is None:
        raise InvalidInputError("gradient needs the full-rank inner solution")
    c = hermitize(np.asarray(C, dtype=complex))
    h_rs = ch.H_RS
    k = np.eye(ch.n_r) + h_rs @ c @ h_rs.conj().T
    relay = hermitize(h_rs.conj().T @ np.linalg.solve(hermitize(k), h_rs)) / LN2
    active = sol.active_count
    if active == 0:
        return relay, False
    lam = sol.gevd.lambdas
    g_ds, g_rs = gram_matrices(ch)
    s_vals, s_vecs = sol.sqrt_eig
    coords = _kernels.backend().eig_log_grad_coords(
        np.ascontiguousarray(s_vals),
        np.ascontiguousarray(s_vecs),
        np.ascontiguousarray(sol.gevd.F[:, :active]),
        np.ascontiguousarray(lam[:active]),
        np.ascontiguousarray(g_ds),
        np.ascontiguousarray(g_rs),
        np.ascontiguousarray(sol.sqrtC),
    )
    first = herm_from_dual(coords / LN2, ch.n_s)
    return hermitize(first + relay), _active_degenerate(lam, active)


@dataclass(frozen=True, eq=False)
class Cut:
    """Affine overestimator ``constant + Re<grad_C, C - C~> + Re<grad_R, R - R~>``.

    ``kind`` is ``"A"`` (for ``R_A*``; ``grad_R`` is zero) or ``"B"``.
    """

    kind: str
    constant: float
    grad_C: np.ndarray
    grad_R: np.ndarray
    anchor: OuterPoint
    degenerate: bool = False

    def evaluate(self, C, R=None):
        val = self.constant + frob_inner(self.grad_C, np.asarray(C) - self.anchor.C)
        if self.kind == "B":
            val += frob_inner(self.grad_R, np.asarray(R) - self.anchor.R)
        return val

    def coefficients(self):
        """``(a, b)`` with ``cut(x) = b + a @ x`` in real coordinates ``x = [vec(C), vec(R)]``."""
        a = np.concatenate([herm_dual(self.grad_C), herm_dual(self.grad_R)])
        x0 = np.concatenate([herm_to_vec(self.anchor.C), herm_to_vec(self.anchor.R)])
        return a, self.constant - float(a @ x0)


def make_A_cut(ch: RelayChannel, C_anchor, R_anchor=None, sol: InnerSolution | None = None) -> Cut:
    """Tangent overestimator of ``R_A*`` at a positive definite ``C_anchor``."""
    c = hermitize(np.asarray(C_anchor, dtype=complex))
    if sol is None:
        sol = solve_inner(ch, c)
    omega, degenerate = _omega(ch, c, sol)
    if degenerate:
        warnings.warn(
            "A-cut anchored at a repeated active generalized eigenvalue",
            DegenerateSpectrumWarning,
            stacklevel=2,
        )
    n_j = ch.n_s + ch.n_r
    r = np.zeros((n_j, n_j), dtype=complex) if R_anchor is None else R_anchor
    return Cut(
        kind="A",
        constant=sol.value,
        grad_C=omega,
        grad_R=np.zeros((n_j, n_j), dtype=complex),
        anchor=OuterPoint.unchecked(c, r),
        degenerate=degenerate,
    )


def make_B_cut(ch: RelayChannel, anchor: OuterPoint) -> Cut:
    """Tangent overestimator of ``R_B`` at ``anchor``."""
    d_c, d_r = grad_rate_B(ch, anchor)
    return Cut(kind="B", constant=rate_B(ch, anchor), grad_C=d_c, grad_R=d_r, anchor=anchor)
