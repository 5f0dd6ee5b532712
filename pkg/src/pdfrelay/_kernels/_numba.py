"""``@njit`` kernels; same signatures and semantics as :mod:`._numpy`.

Small dense factorizations are written out by hand so that failure is a
flag rather than an exception inside compiled code.
"""
from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"

STATUS_OK = 0
STATUS_MAX_NEWTON = 1
STATUS_LINESEARCH = 2

INTERMEDIATE_TOL = 1e-6
STALL_DECREMENT = 1e-6


@njit(cache=True)
def _basis_entries(n):
    """Sparse form of the Hermitian coordinate basis: up to two (row, col, coef) per coordinate."""
    p = n * n
    rows = np.zeros((p, 2), dtype=np.int64)
    cols = np.zeros((p, 2), dtype=np.int64)
    coef = np.zeros((p, 2), dtype=np.complex128)
    count = np.zeros(p, dtype=np.int64)
    for i in range(n):
        rows[i, 0] = i
        cols[i, 0] = i
        coef[i, 0] = 1.0
        count[i] = 1
    k = n * (n - 1) // 2
    a = 0
    for i in range(n):
        for j in range(i + 1, n):
            re = n + a
            im = n + k + a
            rows[re, 0] = i
            cols[re, 0] = j
            coef[re, 0] = 1.0
            rows[re, 1] = j
            cols[re, 1] = i
            coef[re, 1] = 1.0
            count[re] = 2
            rows[im, 0] = i
            cols[im, 0] = j
            coef[im, 0] = 1j
            rows[im, 1] = j
            cols[im, 1] = i
            coef[im, 1] = -1j
            count[im] = 2
            a += 1
    return rows, cols, coef, count


@njit(cache=True)
def _block_matrix(x, off, n, floor):
    mat = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        mat[i, i] = x[off + i] - floor
    k = n * (n - 1) // 2
    a = 0
    for i in range(n):
        for j in range(i + 1, n):
            z = x[off + n + a] + 1j * x[off + n + k + a]
            mat[i, j] = z
            mat[j, i] = np.conj(z)
            a += 1
    return mat


@njit(cache=True)
def _chol_complex(a):
    n = a.shape[0]
    low = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        d = a[j, j].real
        for k in range(j):
            d -= (low[j, k] * np.conj(low[j, k])).real
        if not d > 0.0:
            return low, False
        ljj = np.sqrt(d)
        low[j, j] = ljj
        for i in range(j + 1, n):
            s = a[i, j]
            for k in range(j):
                s -= low[i, k] * np.conj(low[j, k])
            low[i, j] = s / ljj
    return low, True


@njit(cache=True)
def _inv_from_chol(low):
    """``(L L^H)^-1`` from the lower Cholesky factor."""
    n = low.shape[0]
    linv = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        linv[j, j] = 1.0 / low[j, j]
        for i in range(j + 1, n):
            s = 0.0 + 0.0j
            for k in range(j, i):
                s -= low[i, k] * linv[k, j]
            linv[i, j] = s / low[i, i]
    out = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            s = 0.0 + 0.0j
            for k in range(max(i, j), n):
                s += np.conj(linv[k, i]) * linv[k, j]
            out[i, j] = s
    return out


@njit(cache=True)
def _chol_solve_real(a, b):
    """Solve ``a x = b`` for SPD ``a``; returns (x, ok)."""
    n = a.shape[0]
    low = np.zeros((n, n))
    for j in range(n):
        d = a[j, j]
        for k in range(j):
            d -= low[j, k] * low[j, k]
        if not d > 0.0:
            return np.zeros(n), False
        ljj = np.sqrt(d)
        low[j, j] = ljj
        for i in range(j + 1, n):
            s = a[i, j]
            for k in range(j):
                s -= low[i, k] * low[j, k]
            low[i, j] = s / ljj
    y = np.zeros(n)
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= low[i, k] * y[k]
        y[i] = s / low[i, i]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, n):
            s -= low[k, i] * x[k]
        x[i] = s / low[i, i]
    return x, True


@njit(cache=True)
def _factor_blocks(x, blk_off, blk_dim, blk_floor, maxdim):
    """Cholesky factors of every block, stacked; ok=False if any block is not PD."""
    nb = blk_dim.shape[0]
    lows = np.zeros((nb, maxdim, maxdim), dtype=np.complex128)
    logdet = 0.0
    for b in range(nb):
        n = blk_dim[b]
        mat = _block_matrix(x, blk_off[b], n, blk_floor[b])
        low, ok = _chol_complex(mat)
        if not ok:
            return lows, 0.0, False
        for i in range(n):
            lows[b, i, i] = low[i, i]
            logdet += 2.0 * np.log(low[i, i].real)
            for j in range(i):
                lows[b, i, j] = low[i, j]
    return lows, logdet, True


@njit(cache=True)
def _newton_system(x, t, cvec, blk_off, blk_dim, lows, G, s):
    nv = x.shape[0]
    grad = t * cvec.copy()
    hess = np.zeros((nv, nv))
    for b in range(blk_dim.shape[0]):
        n = blk_dim[b]
        off = blk_off[b]
        low = np.ascontiguousarray(lows[b, :n, :n])
        minv = _inv_from_chol(low)
        rows, cols, coef, count = _basis_entries(n)
        p = n * n
        for a in range(p):
            g = 0.0
            for e in range(count[a]):
                g += (coef[a, e] * minv[cols[a, e], rows[a, e]]).real
            grad[off + a] -= g
            for c in range(a, p):
                acc = 0.0 + 0.0j
                for e in range(count[a]):
                    pa = rows[a, e]
                    qa = cols[a, e]
                    for f in range(count[c]):
                        rc = rows[c, f]
                        sc = cols[c, f]
                        acc += coef[a, e] * coef[c, f] * minv[sc, pa] * minv[qa, rc]
                hess[off + a, off + c] += acc.real
                if c != a:
                    hess[off + c, off + a] += acc.real
    m = s.shape[0]
    for r in range(m):
        w = 1.0 / s[r]
        w2 = w * w
        for i in range(nv):
            gi = G[r, i]
            if gi == 0.0:
                continue
            grad[i] += gi * w
            for j in range(nv):
                gj = G[r, j]
                if gj != 0.0:
                    hess[i, j] += gi * gj * w2
    return grad, hess


@njit(cache=True)
def _slacks(G, h, x):
    m = h.shape[0]
    s = np.empty(m)
    for r in range(m):
        acc = h[r]
        for i in range(x.shape[0]):
            acc -= G[r, i] * x[i]
        s[r] = acc
    return s


@njit(cache=True)
def barrier_solve(x, cvec, blk_off, blk_dim, blk_floor, G, h, t0, mu, gap_tol,
                  max_newton, newton_tol):
    x = x.copy()
    nv = x.shape[0]
    m = h.shape[0]
    for b in range(blk_dim.shape[0]):
        m += blk_dim[b]
    maxdim = 1
    for b in range(blk_dim.shape[0]):
        maxdim = max(maxdim, blk_dim[b])
    t = t0
    steps = 0
    dec = np.inf
    lows, logdet, ok = _factor_blocks(x, blk_off, blk_dim, blk_floor, maxdim)
    s = _slacks(G, h, x)
    if not ok or np.any(s <= 0.0):
        return x, t, 0, STATUS_LINESEARCH, dec
    have_centered = False
    x_c = x.copy()
    t_c = t
    dec_c = dec
    while True:
        prev_dec = np.inf
        while True:
            grad, hess = _newton_system(x, t, cvec, blk_off, blk_dim, lows, G, s)
            scale = np.empty(nv)
            for i in range(nv):
                scale[i] = 1.0 / np.sqrt(hess[i, i])
            hs = np.empty((nv, nv))
            rhs = np.empty(nv)
            for i in range(nv):
                rhs[i] = -scale[i] * grad[i]
                for j in range(nv):
                    hs[i, j] = hess[i, j] * scale[i] * scale[j]
            y, ok = _chol_solve_real(hs, rhs)
            if not ok:
                for i in range(nv):
                    hs[i, i] += 1e-12
                y, ok = _chol_solve_real(hs, rhs)
                if not ok:
                    return x, t, steps, STATUS_LINESEARCH, dec
            dx = scale * y
            dec = -np.dot(grad, dx)
            target = gap_tol * (1.0 + abs(np.dot(cvec, x)))
            tol = newton_tol if m / t <= target else INTERMEDIATE_TOL
            if dec / 2.0 <= tol:
                break
            if dec <= STALL_DECREMENT and dec > 0.25 * prev_dec:
                break
            prev_dec = dec
            if steps >= max_newton:
                return x, t, steps, STATUS_MAX_NEWTON, dec
            steps += 1
            gdx = G @ dx
            step = 1.0
            for r in range(s.shape[0]):
                if gdx[r] > 0.0:
                    step = min(step, 0.99 * s[r] / gdx[r])
            slope = np.dot(grad, dx)
            lin = np.dot(cvec, dx)
            accepted = False
            for _ in range(60):
                xn = x + step * dx
                sn = _slacks(G, h, xn)
                if np.all(sn > 0.0):
                    ln, logdet_n, okn = _factor_blocks(xn, blk_off, blk_dim, blk_floor, maxdim)
                    if okn:
                        change = t * step * lin - (logdet_n - logdet)
                        for r in range(sn.shape[0]):
                            change -= np.log(sn[r] / s[r])
                        if change <= 0.1 * step * slope:
                            accepted = True
                            break
                step *= 0.5
            if not accepted:
                if dec <= STALL_DECREMENT:
                    break
                if have_centered:
                    return x_c, t_c, steps, STATUS_OK, dec_c
                return x, t, steps, STATUS_LINESEARCH, dec
            x = xn
            s = sn
            lows = ln
            logdet = logdet_n
        if m / t <= gap_tol * (1.0 + abs(np.dot(cvec, x))):
            break
        have_centered = True
        x_c = x.copy()
        t_c = t
        dec_c = dec
        t *= mu
    return x, t, steps, STATUS_OK, dec


@njit(cache=True)
def eig_log_grad_coords(s_vals, vecs, f1, lam, g_ds, g_rs, sqrt_c):
    n = sqrt_c.shape[0]
    rows, cols, coef, count = _basis_entries(n)
    p = n * n
    vh = np.conj(vecs.T).copy()
    na = f1.shape[1]
    # y_i = (G_DS - lam_i G_RS) S f_i and the conjugated eigenvectors, rotated into the eigenbasis of S
    ys = np.zeros((n, na), dtype=np.complex128)
    fs = np.zeros((n, na), dtype=np.complex128)
    for i in range(na):
        f = np.ascontiguousarray(f1[:, i])
        y = (g_ds - lam[i] * g_rs) @ (sqrt_c @ f)
        ys[:, i] = vh @ y
        fs[:, i] = vh @ f
    out = np.zeros(p)
    for a in range(p):
        # rotated basis matrix V^H B_a V divided by (s_k + s_l): the Sylvester solution in the eigenbasis
        bt = np.zeros((n, n), dtype=np.complex128)
        for e in range(count[a]):
            r = rows[a, e]
            c = cols[a, e]
            for k in range(n):
                for l in range(n):
                    bt[k, l] += vh[k, r] * coef[a, e] * vecs[c, l]
        for k in range(n):
            for l in range(n):
                bt[k, l] /= s_vals[k] + s_vals[l]
        total = 0.0
        for i in range(na):
            acc = 0.0 + 0.0j
            for k in range(n):
                for l in range(n):
                    acc += np.conj(fs[k, i]) * bt[k, l] * ys[l, i]
            total += 2.0 * acc.real / lam[i]
        out[a] = total
    return out
