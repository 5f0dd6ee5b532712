"""Dense Hermitian linear algebra used throughout the solver.

All functions take and return plain complex ``numpy`` arrays. Hermitian
inputs are validated and then symmetrized so that results are exactly
Hermitian up to floating point.

The module also owns the real coordinate system for Hermitian matrices.
An ``n x n`` Hermitian matrix has ``n**2`` real coordinates: the ``n``
diagonal entries followed by the real and imaginary parts of every strictly
upper-triangular entry (row-major order). ``herm_dual`` maps a Hermitian
gradient ``G`` to the coefficient vector ``g`` with
``Re<G, X> = g @ herm_to_vec(X)`` for Hermitian ``X``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .errors import (
    InvalidInputError,
    NotPositiveDefiniteError,
    NotPSDError,
    SingularSylvesterError,
)

__all__ = [
    "GevdResult",
    "as_hermitian",
    "herm_eig",
    "psd_sqrt",
    "gevd_pd_pencil",
    "sylvester_sym_solve",
    "pinv",
    "hermitize",
    "frob_inner",
    "herm_to_vec",
    "vec_to_herm",
    "herm_dual",
    "herm_from_dual",
    "herm_basis",
]

HERMITIAN_RTOL = 1e-12
# Relative gap below which two generalized eigenvalues count as degenerate.
DEGENERACY_RTOL = 1e-9


def hermitize(a):
    """Return ``(a + a^H) / 2``."""
    a = np.asarray(a)
    return 0.5 * (a + a.conj().T)


def frob_inner(a, b):
    """Real part of the Frobenius inner product ``tr(b^H a)``."""
    return float(np.real(np.vdot(b, a)))


def as_hermitian(a, name="matrix", rtol=1e-10):
    """Validate that ``a`` is square and Hermitian and return it symmetrized.

    The Hermitian test is relative: ``||a - a^H||_F <= rtol * max(1, ||a||_F)``.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"{name} must be a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    scale = max(1.0, np.linalg.norm(a))
    if np.linalg.norm(a - a.conj().T) > rtol * scale:
        raise InvalidInputError(f"{name} is not Hermitian")
    return hermitize(a)


def herm_eig(a):
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Returns
    -------
    values : (n,) float array, descending
    vectors : (n, n) unitary array with ``a = V diag(values) V^H``
    """
    a = as_hermitian(a)
    w, v = np.linalg.eigh(a)
    return w[::-1].copy(), v[:, ::-1].copy()


def psd_sqrt(a):
    """Positive semidefinite square root of a PSD Hermitian matrix.

    Eigenvalues down to ``-1e-9 * ||a||_2`` are clipped to zero; anything
    more negative raises :class:`NotPSDError`.
    """
    w, v = herm_eig(a)
    scale = max(abs(w[0]), abs(w[-1])) if w.size else 0.0
    if w.size and w[-1] < -1e-9 * scale:
        raise NotPSDError(f"matrix is not PSD (min eigenvalue {w[-1]:.3e})")
    s = np.sqrt(np.clip(w, 0.0, None))
    return hermitize((v * s) @ v.conj().T)


@dataclass(frozen=True)
class GevdResult:
    """Generalized eigendecomposition of a definite pencil ``(phi, psi)``.

    ``F^H psi F = I`` and ``F^H phi F = diag(lambdas)`` with ``lambdas``
    sorted in descending order. ``degenerate`` is set when two eigenvalues
    are closer than ``1e-9 * max(lambdas)``.
    """

    F: np.ndarray
    lambdas: np.ndarray
    degenerate: bool = False

    def residuals(self, phi, psi):
        """Frobenius residuals of the three defining identities."""
        F, lam = self.F, self.lambdas
        n = len(lam)
        r_norm = np.linalg.norm(F.conj().T @ psi @ F - np.eye(n))
        r_diag = np.linalg.norm(F.conj().T @ phi @ F - np.diag(lam))
        r_eig = np.linalg.norm(phi @ F - psi @ F @ np.diag(lam))
        return r_norm, r_diag, r_eig


def _check_pd(a, name):
    w = np.linalg.eigvalsh(a)
    scale = max(abs(w[0]), abs(w[-1]))
    if w[0] <= 1e-12 * scale or scale == 0.0:
        raise NotPositiveDefiniteError(f"{name} is not positive definite (min eigenvalue {w[0]:.3e})")


def gevd_pd_pencil(phi, psi):
    """Solve ``phi f = lambda psi f`` for Hermitian positive definite ``phi``, ``psi``.

    Uses the Cholesky reduction ``psi = L L^H``: the standard problem for
    ``L^-1 phi L^-H`` is solved and eigenvectors are mapped back with
    ``L^-H``, which yields ``F^H psi F = I`` by construction.
    """
    phi = as_hermitian(phi, "phi")
    psi = as_hermitian(psi, "psi")
    if phi.shape != psi.shape:
        raise InvalidInputError("pencil matrices must have equal shape")
    _check_pd(phi, "phi")
    _check_pd(psi, "psi")
    low = np.linalg.cholesky(psi)
    tmp = sla.solve_triangular(low, phi, lower=True)
    reduced = sla.solve_triangular(low, tmp.conj().T, lower=True).conj().T
    w, y = np.linalg.eigh(hermitize(reduced))
    w, y = w[::-1].copy(), y[:, ::-1]
    F = sla.solve_triangular(low.conj().T, y, lower=False)
    gaps = -np.diff(w)
    degenerate = bool(gaps.size and gaps.min() < DEGENERACY_RTOL * abs(w[0]))
    return GevdResult(F=F, lambdas=w, degenerate=degenerate)


def sylvester_sym_solve(s, rhs, eig=None):
    """Solve ``X S + S X = rhs`` for Hermitian positive definite ``S``.

    Parameters
    ----------
    s : (n, n) Hermitian PD array
    rhs : (n, n) array
    eig : optional ``(values, vectors)`` of ``s`` to skip the decomposition
    """
    if eig is None:
        s = as_hermitian(s, "S")
        w, v = np.linalg.eigh(s)
    else:
        w, v = eig
    scale = np.max(np.abs(w))
    if scale == 0.0 or np.min(w) <= 1e-12 * scale:
        raise SingularSylvesterError("Sylvester operator is singular: S is not positive definite")
    rhs = np.asarray(rhs, dtype=complex)
    r = v.conj().T @ rhs @ v
    x = r / (w[:, None] + w[None, :])
    return v @ x @ v.conj().T


def pinv(a):
    """Moore-Penrose pseudoinverse, singular values below ``1e-12 * s_max`` dropped."""
    a = np.asarray(a, dtype=complex)
    if a.size == 0:
        return np.zeros(a.shape[::-1], dtype=complex)
    return np.linalg.pinv(a, rcond=1e-12)


# -- real coordinates of Hermitian matrices ---------------------------------


@lru_cache(maxsize=None)
def _upper_pairs(n):
    iu, ju = np.triu_indices(n, k=1)
    return iu, ju


def herm_to_vec(a):
    """Real coordinates ``[diag, Re(upper), Im(upper)]`` of a Hermitian matrix."""
    a = np.asarray(a)
    iu, ju = _upper_pairs(a.shape[0])
    up = a[iu, ju]
    return np.concatenate([np.real(np.diag(a)), np.real(up), np.imag(up)])


def vec_to_herm(x, n):
    """Inverse of :func:`herm_to_vec`."""
    x = np.asarray(x, dtype=float)
    iu, ju = _upper_pairs(n)
    k = len(iu)
    a = np.zeros((n, n), dtype=complex)
    a[np.arange(n), np.arange(n)] = x[:n]
    up = x[n:n + k] + 1j * x[n + k:n + 2 * k]
    a[iu, ju] = up
    a[ju, iu] = up.conj()
    return a


def herm_dual(g):
    """Coefficients of the linear functional ``X -> Re<g, X>`` in coordinates."""
    g = np.asarray(g)
    n = g.shape[0]
    iu, ju = _upper_pairs(n)
    # pair the (i, j) and (j, i) entries so non-Hermitian g is handled too
    up = g[iu, ju] + g[ju, iu].conj()
    return np.concatenate([np.real(np.diag(g)), np.real(up), np.imag(up)])


def herm_from_dual(d, n):
    """Hermitian ``G`` with ``herm_dual(G) == d`` (inverse of :func:`herm_dual`)."""
    d = np.asarray(d, dtype=float)
    iu, ju = _upper_pairs(n)
    k = len(iu)
    g = np.zeros((n, n), dtype=complex)
    g[np.arange(n), np.arange(n)] = d[:n]
    up = 0.5 * (d[n:n + k] + 1j * d[n + k:n + 2 * k])
    g[iu, ju] = up
    g[ju, iu] = up.conj()
    return g


@lru_cache(maxsize=None)
def herm_basis(n):
    """Stack of basis matrices ``B[a]`` with ``X = sum_a x[a] B[a]``, shape (n*n, n, n)."""
    p = n * n
    basis = np.zeros((p, n, n), dtype=complex)
    for a in range(p):
        e = np.zeros(p)
        e[a] = 1.0
        basis[a] = vec_to_herm(e, n)
    basis.setflags(write=False)
    return basis
