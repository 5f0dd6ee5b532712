"""Closed-form solution of the inner split problem.

For a fixed innovation covariance ``C > 0`` the best split ``C_v + C_w = C``
follows from the generalized eigendecomposition of the pencil

    phi = I + C^1/2 G_DS C^1/2,    psi = I + C^1/2 G_RS C^1/2.

Directions with generalized eigenvalue above one are sent directly (C_v),
the rest are relayed (C_w).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidInputError, NotPositiveDefiniteError
from .linalg import GevdResult, as_hermitian, gevd_pd_pencil, hermitize, pinv
from .model import RelayChannel, gram_matrices
from .rates import LN2, InnerSplit, log2det, rate_A_direct

__all__ = [
    "InnerSolution",
    "solve_inner",
    "solve_inner_psd",
    "verify_inner_identities",
    "verify_appendix_identities",
    "InnerResiduals",
]

# lambda_i counts as active when lambda_i > 1 + ACTIVE_TOL
ACTIVE_TOL = 1e-10
PD_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class InnerSolution:
    """Optimal split for one innovation covariance.

    ``gevd``, ``sqrtC`` and ``sqrt_eig`` are None when the solution was
    obtained on the range of a rank-deficient ``C`` (see
    :func:`solve_inner_psd`).
    """

    value: float
    split: InnerSplit
    gevd: Optional[GevdResult]
    active_count: int
    sqrtC: Optional[np.ndarray]
    sqrt_eig: Optional[tuple] = None  # (eigenvalues, eigenvectors) of sqrtC, ascending

    @property
    def F1(self):
        return self.gevd.F[:, : self.active_count]

    @property
    def lambda_bar(self):
        return np.maximum(self.gevd.lambdas, 1.0)


def _check_dims(ch, c):
    if c.shape != (ch.n_s, ch.n_s):
        raise InvalidInputError(f"C must be {ch.n_s}x{ch.n_s}, got {c.shape}")


def solve_inner(ch: RelayChannel, C) -> InnerSolution:
    """Optimal ``(C_v, C_w)`` and value ``R_A*(C)`` for positive definite ``C``."""
    c = as_hermitian(C, "C")
    _check_dims(ch, c)
    w, v = np.linalg.eigh(c)
    if w[-1] <= 0 or w[0] <= PD_RTOL * w[-1]:
        raise NotPositiveDefiniteError(
            f"inner problem requires C > 0 (min eigenvalue {w[0]:.3e}); project C onto an eigenvalue floor first"
        )
    sw = np.sqrt(w)
    sqrt_c = hermitize((v * sw) @ v.conj().T)
    g_ds, g_rs = gram_matrices(ch)
    n = ch.n_s
    phi = np.eye(n) + sqrt_c @ g_ds @ sqrt_c
    psi = np.eye(n) + sqrt_c @ g_rs @ sqrt_c
    gevd = gevd_pd_pencil(hermitize(phi), hermitize(psi))
    lam = gevd.lambdas
    active = int(np.count_nonzero(lam > 1.0 + ACTIVE_TOL))
    if active == 0:
        c_v = np.zeros_like(c)
    else:
        f1 = gevd.F[:, :active]
        proj = hermitize(f1 @ pinv(f1))
        c_v = hermitize(sqrt_c @ proj @ sqrt_c)
    c_w = hermitize(c - c_v)
    # log2det(I + G_RS C) in the Hermitian form I + H_RS C H_RS^H
    relay_term = log2det(np.eye(ch.n_r) + ch.H_RS @ c @ ch.H_RS.conj().T)
    value = float(np.sum(np.log(lam[:active])) / LN2) + relay_term
    return InnerSolution(
        value=value,
        split=InnerSplit(c_v, c_w),
        gevd=gevd,
        active_count=active,
        sqrtC=sqrt_c,
        sqrt_eig=(sw, v),
    )


def solve_inner_psd(ch: RelayChannel, C, rtol=PD_RTOL) -> InnerSolution:
    """Feasible inner split for a PSD ``C`` that may be numerically singular.

    If ``C`` is positive definite this is :func:`solve_inner`. Otherwise the
    eigen-directions with eigenvalue at most ``rtol * lambda_max`` are
    dropped, the inner problem is solved exactly on the remaining range
    ``C' <= C``, and the dropped power is assigned to ``C_w``. The returned
    value is the rate of that split, a lower bound on ``R_A*(C)`` and an
    achievable rate for the full ``C``.
    """
    c = as_hermitian(C, "C")
    _check_dims(ch, c)
    w, v = np.linalg.eigh(c)
    top = max(w[-1], 0.0)
    if top > 0 and w[0] > rtol * top:
        return solve_inner(ch, c)
    keep = w > rtol * top if top > 0 else np.zeros(len(w), dtype=bool)
    if not np.any(keep):
        c_v = np.zeros_like(c)
    else:
        vr = v[:, keep]
        reduced = RelayChannel(
            H_RS=ch.H_RS @ vr, H_DS=ch.H_DS @ vr, H_DR=ch.H_DR, P_S=ch.P_S, P_R=ch.P_R
        )
        sub = solve_inner(reduced, np.diag(w[keep]).astype(complex))
        c_v = hermitize(vr @ sub.split.C_v @ vr.conj().T)
    c_w = hermitize(c - c_v)
    # clip roundoff-level negative eigenvalues of C itself
    c_w = _clip_psd(c_w)
    value = max(rate_A_direct(ch, c_v, c_v + c_w), 0.0)
    return InnerSolution(
        value=value,
        split=InnerSplit(c_v, c_w),
        gevd=None,
        active_count=int(np.count_nonzero(keep)),
        sqrtC=None,
    )


def _clip_psd(a):
    w, v = np.linalg.eigh(a)
    if w[0] >= 0:
        return a
    return hermitize((v * np.clip(w, 0.0, None)) @ v.conj().T)


@dataclass(frozen=True)
class InnerResiduals:
    """Normalized residuals of the two determinant identities behind achievability."""

    direct: float  # |det(I + G_DS C_v) det(F1^H F1) - det(Lambda_bar)| / det(Lambda_bar)
    relay: float  # |det(I + G_RS C_v) det(F1^H F1) - 1|

    def max(self):
        return max(self.direct, self.relay)


def verify_inner_identities(sol: InnerSolution, ch: RelayChannel, C=None) -> InnerResiduals:
    """Check ``det(I + G_DS C_v) = det(Lambda_bar) / det(F1^H F1)`` and its relay twin.

    With no active direction both determinants of the empty ``F1`` are 1.
    """
    if sol.gevd is None:
        raise InvalidInputError("identities need the full-rank solution from solve_inner")
    g_ds, g_rs = gram_matrices(ch)
    n = ch.n_s
    c_v = sol.split.C_v
    if sol.active_count == 0:
        det_f = 1.0
        det_lbar = 1.0
    else:
        f1 = sol.F1
        det_f = float(np.real(np.linalg.det(f1.conj().T @ f1)))
        det_lbar = float(np.prod(sol.lambda_bar))
    d_direct = float(np.real(np.linalg.det(np.eye(n) + g_ds @ c_v)))
    d_relay = float(np.real(np.linalg.det(np.eye(n) + g_rs @ c_v)))
    return InnerResiduals(
        direct=abs(d_direct * det_f - det_lbar) / det_lbar,
        relay=abs(d_relay * det_f - 1.0),
    )


verify_appendix_identities = verify_inner_identities
