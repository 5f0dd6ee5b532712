"""Rate expressions of the PDF scheme and the feasibility test for the outer set.

All rates are in bits.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .linalg import as_hermitian, hermitize
from .model import RelayChannel, gram_matrices, joint_channel

__all__ = [
    "OuterPoint",
    "InnerSplit",
    "FeasibilityReport",
    "log2det",
    "rate_A",
    "rate_A_direct",
    "rate_B",
    "feasible_in_P_eps",
    "objective",
    "default_tol",
]

LN2 = np.log(2.0)
PSD_RTOL = 1e-9


def _psd(a, name):
    a = as_hermitian(a, name)
    if a.size:
        w = np.linalg.eigvalsh(a)
        scale = max(1.0, abs(w[-1]))
        if w[0] < -PSD_RTOL * scale:
            raise InvalidInputError(f"{name} is not PSD (min eigenvalue {w[0]:.3e})")
    return a


@dataclass(frozen=True, eq=False)
class OuterPoint:
    """Outer decision variable: innovation covariance ``C`` and joint covariance ``R`` of (z, x_R)."""

    C: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "C", _psd(self.C, "C"))
        object.__setattr__(self, "R", _psd(self.R, "R"))

    @classmethod
    def unchecked(cls, C, R):
        """Build without the PSD check (for iterates already known to be interior)."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "C", hermitize(np.asarray(C, dtype=complex)))
        object.__setattr__(obj, "R", hermitize(np.asarray(R, dtype=complex)))
        return obj


@dataclass(frozen=True, eq=False)
class InnerSplit:
    """Split of the innovation covariance into the direct part C_v and the relayed part C_w."""

    C_v: np.ndarray
    C_w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "C_v", _psd(self.C_v, "C_v"))
        object.__setattr__(self, "C_w", _psd(self.C_w, "C_w"))


def log2det(a):
    """``log2 det(a)`` for Hermitian PD ``a``.

    Cholesky first; on failure fall back to eigenvalues clipped at 1e-14.
    """
    a = hermitize(a)
    try:
        low = np.linalg.cholesky(a)
        return float(2.0 * np.sum(np.log(np.real(np.diag(low)))) / LN2)
    except np.linalg.LinAlgError:
        w = np.clip(np.linalg.eigvalsh(a), 1e-14, None)
        return float(np.sum(np.log(w)) / LN2)


def rate_A(ch: RelayChannel, split: InnerSplit):
    """``log2det(I + G_DS C_v) + log2det(I + G_RS (C_v + C_w)) - log2det(I + G_RS C_v)``.

    Evaluated in the channel form ``det(I + H X H^H)`` so that every
    log-det argument is Hermitian PD; this equals the Gram form by
    ``det(I + AB) = det(I + BA)``.
    """
    cv, cw = split.C_v, split.C_w
    if cv.shape != (ch.n_s, ch.n_s):
        raise InvalidInputError("split dimension does not match N_S")
    return max(rate_A_direct(ch, cv, cv + cw), 0.0)


def rate_A_direct(ch, c_v, c_total):
    """Unvalidated rate_A in terms of ``C_v`` and ``C = C_v + C_w``."""
    h_ds, h_rs = ch.H_DS, ch.H_RS
    eye_d = np.eye(ch.n_d)
    eye_r = np.eye(ch.n_r)
    return (
        log2det(eye_d + h_ds @ c_v @ h_ds.conj().T)
        + log2det(eye_r + h_rs @ c_total @ h_rs.conj().T)
        - log2det(eye_r + h_rs @ c_v @ h_rs.conj().T)
    )


def rate_A_gram(ch, c_v, c_total):
    """rate_A via the Gram-matrix form (used to test the determinant identity)."""
    g_ds, g_rs = gram_matrices(ch)
    n = ch.n_s

    def l2d(m):
        sign, logabs = np.linalg.slogdet(np.eye(n) + m)
        return logabs / LN2

    return l2d(g_ds @ c_v) + l2d(g_rs @ c_total) - l2d(g_rs @ c_v)


def rate_B(ch: RelayChannel, pt: OuterPoint):
    """``log2det(I + H_DS C H_DS^H + H R H^H)`` with ``H = [H_DS, H_DR]``."""
    if pt.C.shape != (ch.n_s, ch.n_s) or pt.R.shape != (ch.n_s + ch.n_r,) * 2:
        raise InvalidInputError("outer point dimensions do not match the channel")
    return max(_rate_B_raw(ch, pt.C, pt.R), 0.0)


def _rate_B_raw(ch, c, r):
    h = joint_channel(ch)
    d = np.eye(ch.n_d) + ch.H_DS @ c @ ch.H_DS.conj().T + h @ r @ h.conj().T
    return log2det(d)


@dataclass(frozen=True)
class FeasibilityReport:
    """Margins of each constraint of the outer set (positive means satisfied with slack)."""

    feasible: bool
    floor_margin: float  # lambda_min(C) - eps
    psd_margin: float  # lambda_min(R)
    power_s_margin: float  # P_S - tr(C) - tr(R_SS)
    power_r_margin: float  # P_R - tr(R_RR)

    def __bool__(self):
        return self.feasible


def default_tol(ch):
    return 1e-8 * max(ch.P_S, ch.P_R)


def feasible_in_P_eps(ch: RelayChannel, pt: OuterPoint, eps=0.0, tol=None):
    """Check ``C >= eps I``, ``R >= 0`` and both power budgets, up to ``tol``."""
    if tol is None:
        tol = default_tol(ch)
    n_s = ch.n_s
    c, r = hermitize(pt.C), hermitize(pt.R)
    floor = float(np.linalg.eigvalsh(c)[0] - eps)
    psd = float(np.linalg.eigvalsh(r)[0])
    ps = float(ch.P_S - np.real(np.trace(c)) - np.real(np.trace(r[:n_s, :n_s])))
    pr = float(ch.P_R - np.real(np.trace(r[n_s:, n_s:])))
    ok = floor >= -tol and psd >= -tol and ps >= -tol and pr >= -tol
    return FeasibilityReport(ok, floor, psd, ps, pr)


def objective(ch, pt, inner_value):
    """``min(R_A*(C), R_B(C, R))`` given the inner optimum ``inner_value``."""
    return min(float(inner_value), rate_B(ch, pt))
