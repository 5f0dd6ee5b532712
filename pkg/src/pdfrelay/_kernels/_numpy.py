"""Pure-numpy reference kernels (vectorized; no compilation)."""
from __future__ import annotations

import numpy as np

from ..linalg import herm_basis, herm_dual, vec_to_herm

NAME = "numpy"

STATUS_OK = 0
STATUS_MAX_NEWTON = 1
STATUS_LINESEARCH = 2

INTERMEDIATE_TOL = 1e-6
STALL_DECREMENT = 1e-6


def eig_log_grad_coords(s_vals, vecs, f1, lam, g_ds, g_rs, sqrt_c):
    """Coordinates of ``sum_i (1/lam_i) d lam_i / dx`` over the real coordinates of ``C``.

    ``s_vals, vecs`` diagonalize ``sqrt_c``; ``f1`` holds the active
    generalized eigenvectors with eigenvalues ``lam``.
    """
    n = sqrt_c.shape[0]
    basis = herm_basis(n)
    vh = vecs.conj().T
    rotated = np.einsum("ij,ajk,kl->ail", vh, basis, vecs)
    rotated = rotated / (s_vals[:, None] + s_vals[None, :])
    d_sqrt = np.einsum("ij,ajk,kl->ail", vecs, rotated, vh)
    out = np.zeros(n * n)
    for i in range(f1.shape[1]):
        f = f1[:, i]
        y = (g_ds - lam[i] * g_rs) @ (sqrt_c @ f)
        val = 2.0 * np.real(np.einsum("j,ajk,k->a", f.conj(), d_sqrt, y))
        out += val / lam[i]
    return out


def _chol_blocks(x, blk_off, blk_dim, blk_floor):
    chols = []
    for off, dim, floor in zip(blk_off, blk_dim, blk_floor):
        mat = vec_to_herm(x[off:off + dim * dim], dim)
        mat[np.diag_indices(dim)] -= floor
        try:
            chols.append(np.linalg.cholesky(mat))
        except np.linalg.LinAlgError:
            return None
    return chols


def _phi_change(dx_lin, t, chols, chols_new, s, s_new):
    """Barrier change ``phi(x_new) - phi(x)``, computed termwise to avoid cancellation."""
    val = t * dx_lin - float(np.sum(np.log(s_new / s)))
    for low, low_new in zip(chols, chols_new):
        val -= 2.0 * float(np.sum(np.log(np.real(np.diag(low_new)) / np.real(np.diag(low)))))
    return val


def barrier_solve(x, cvec, blk_off, blk_dim, blk_floor, G, h, t0, mu, gap_tol,
                  max_newton, newton_tol):
    """Minimize ``c @ x`` over ``{X_k(x) > floor_k I, G x < h}`` by a log-barrier path.

    ``x`` must be strictly feasible. Stops once ``m / t <= gap_tol * (1 +
    |c @ x|)`` with ``m = sum(blk_dim) + len(h)``, which bounds the duality
    gap of the central point. Returns ``(x, t, newton_steps, status,
    decrement)``.
    """
    x = np.array(x, dtype=float)
    m = int(np.sum(blk_dim)) + len(h)
    t = float(t0)
    steps = 0
    status = STATUS_OK
    dec = np.inf
    bases = [herm_basis(int(d)) for d in blk_dim]
    chols = _chol_blocks(x, blk_off, blk_dim, blk_floor)
    s = h - G @ x
    if chols is None or np.any(s <= 0):
        return x, t, 0, STATUS_LINESEARCH, dec
    last_centered = None
    while True:
        prev_dec = np.inf
        while True:
            grad = t * cvec.copy()
            hess = np.zeros((len(x), len(x)))
            for low, off, dim, basis in zip(chols, blk_off, blk_dim, bases):
                inv_low = np.linalg.inv(low)
                minv = inv_low.conj().T @ inv_low
                p = dim * dim
                grad[off:off + p] -= herm_dual(minv)
                prod = np.einsum("ij,ajk->aik", minv, basis)
                hess[off:off + p, off:off + p] += np.real(np.einsum("aij,bji->ab", prod, prod))
            inv_s = 1.0 / s
            grad += G.T @ inv_s
            gs = G * inv_s[:, None]
            hess += gs.T @ gs
            # Jacobi scaling keeps the Cholesky solve accurate when slacks are tiny
            scale = 1.0 / np.sqrt(np.diag(hess))
            hs = hess * scale[:, None] * scale[None, :]
            try:
                low_h = np.linalg.cholesky(hs)
            except np.linalg.LinAlgError:
                hs[np.diag_indices_from(hs)] += 1e-12
                low_h = np.linalg.cholesky(hs)
            dx = -scale * np.linalg.solve(low_h.T.conj(), np.linalg.solve(low_h, scale * grad))
            dec = float(-grad @ dx)
            tol = newton_tol if m / t <= gap_tol * (1.0 + abs(float(cvec @ x))) else INTERMEDIATE_TOL
            if dec / 2.0 <= tol:
                break
            if dec <= STALL_DECREMENT and dec > 0.25 * prev_dec:
                # no quadratic progress: decrement is at the roundoff floor
                break
            prev_dec = dec
            if steps >= max_newton:
                return x, t, steps, STATUS_MAX_NEWTON, dec
            steps += 1
            gdx = G @ dx
            pos = gdx > 0
            step = 1.0
            if np.any(pos):
                step = min(1.0, 0.99 * float(np.min(s[pos] / gdx[pos])))
            slope = float(grad @ dx)
            accepted = False
            for _ in range(60):
                xn = x + step * dx
                sn = h - G @ xn
                if np.all(sn > 0):
                    cn = _chol_blocks(xn, blk_off, blk_dim, blk_floor)
                    if cn is not None and _phi_change(step * float(cvec @ dx), t, chols, cn, s, sn) <= 0.1 * step * slope:
                        accepted = True
                        break
                step *= 0.5
            if not accepted:
                if dec <= STALL_DECREMENT:
                    # roundoff floor reached; the point is centered to working precision
                    break
                if last_centered is not None:
                    # fall back to the previous central point and its (larger) gap
                    x_c, t_c, dec_c = last_centered
                    return x_c, t_c, steps, STATUS_OK, dec_c
                return x, t, steps, STATUS_LINESEARCH, dec
            x, s, chols = xn, sn, cn
        if m / t <= gap_tol * (1.0 + abs(float(cvec @ x))):
            break
        last_centered = (x.copy(), t, dec)
        t *= mu
    return x, t, steps, status, dec
