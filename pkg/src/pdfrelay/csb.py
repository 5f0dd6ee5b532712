"""Cut-set upper bound on the relay-channel capacity.

    CSB = max_Q min{ log2det(I + H1 S H1^H), log2det(I + H Q H^H) }

over joint source/relay covariances ``Q`` with ``tr(Q_SS) <= P_S`` and
``tr(Q_RR) <= P_R``. Here ``H1 = [H_RS; H_DS]`` stacks both receivers of the
source, ``S = Q_SS - Q_SR Q_RR^+ Q_RS`` is the source covariance conditioned
on the relay signal and ``H = [H_DS, H_DR]``. Both terms are concave in
``Q``; the maximization reuses the cutting-plane master solver.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .driver import GAP_REACHED, ITERATION_LIMIT, MAX_ITER, NUMERICAL_FAILURE, project_pd_floor
from .errors import InvalidConfigError, NumericalFailure
from .linalg import herm_dual, herm_to_vec, hermitize, pinv
from .master import SpectrahedralLP, solve_lp
from .model import RelayChannel, joint_channel
from .rates import LN2, log2det

__all__ = ["CsbPoint", "CsbReport", "cut_set_bound", "csb_terms", "csb_gradients"]

ANCHOR_FLOOR = 1e-10
SEGMENT_ITERS = 40


def _psd_or_raise(q):
    q = hermitize(np.asarray(q, dtype=complex))
    w = np.linalg.eigvalsh(q)
    if w[0] < -1e-9 * max(1.0, float(np.abs(w).max(initial=0.0))):
        raise InvalidConfigError(f"Q must be positive semidefinite (min eigenvalue {w[0]:.3e})")
    return q


@dataclass(frozen=True, eq=False)
class CsbPoint:
    """Joint covariance ``Q`` of ``(x_S, x_R)``; source block first."""

    Q: np.ndarray
    n_s: int

    def __post_init__(self):
        q = _psd_or_raise(self.Q)
        q.setflags(write=False)
        object.__setattr__(self, "Q", q)

    @property
    def Q_SS(self):
        return self.Q[: self.n_s, : self.n_s]

    @property
    def Q_RR(self):
        return self.Q[self.n_s:, self.n_s:]

    @property
    def Q_SR(self):
        return self.Q[: self.n_s, self.n_s:]


def _broadcast_channel(ch):
    return np.vstack([ch.H_RS, ch.H_DS])


def conditional_source_cov(q, n_s):
    """Generalized Schur complement ``Q_SS - Q_SR Q_RR^+ Q_RS``."""
    q_ss, q_sr, q_rr = q[:n_s, :n_s], q[:n_s, n_s:], q[n_s:, n_s:]
    return hermitize(q_ss - q_sr @ pinv(q_rr) @ q_sr.conj().T)


def csb_terms(ch: RelayChannel, q):
    """``(broadcast term, multiple-access term)`` in bits at ``Q``."""
    q = hermitize(np.asarray(q, dtype=complex))
    h1 = _broadcast_channel(ch)
    s = conditional_source_cov(q, ch.n_s)
    h = joint_channel(ch)
    first = log2det(np.eye(h1.shape[0]) + h1 @ s @ h1.conj().T)
    second = log2det(np.eye(ch.n_d) + h @ q @ h.conj().T)
    return first, second


def csb_gradients(ch: RelayChannel, q):
    """Hermitian gradients of both terms at ``Q`` with ``Q_RR`` positive definite.

    With ``K = Q_SR Q_RR^-1`` the Schur complement changes as
    ``dS = [I, -K] dQ [I, -K]^H``, so the first gradient is
    ``[I, -K]^H M [I, -K]`` where ``M`` is the log-det gradient in ``S``.
    """
    q = hermitize(np.asarray(q, dtype=complex))
    n_s = ch.n_s
    h1 = _broadcast_channel(ch)
    s = conditional_source_cov(q, n_s)
    d1 = np.eye(h1.shape[0]) + h1 @ s @ h1.conj().T
    m = hermitize(h1.conj().T @ np.linalg.solve(d1, h1)) / LN2
    k = np.linalg.solve(q[n_s:, n_s:].T, q[:n_s, n_s:].T).T
    a = np.hstack([np.eye(n_s), -k])
    g1 = hermitize(a.conj().T @ m @ a)
    h = joint_channel(ch)
    d2 = np.eye(ch.n_d) + h @ q @ h.conj().T
    g2 = hermitize(h.conj().T @ np.linalg.solve(d2, h)) / LN2
    return g1, g2


@dataclass
class CsbReport:
    """Cutting-plane trace of the cut-set bound; ``value`` is the certified upper end."""

    value: float
    lower: float
    point: CsbPoint | None
    U_trace: list
    L_trace: list
    iterations: int
    termination: str
    message: str = ""

    @property
    def gap(self):
        return self.value - self.lower


def _lifted_lp(ch, cut_a, cut_b):
    """Master over ``(S, W)``: ``tr S + tr W_SS <= P_S`` and ``tr W_RR <= P_R``."""
    n_s, n_j = ch.n_s, ch.n_s + ch.n_r
    nv = n_s * n_s + n_j * n_j
    rows = np.zeros((2, nv))
    rows[0, :n_s] = 1.0
    rows[0, n_s * n_s: n_s * n_s + n_s] = 1.0
    rows[1, n_s * n_s + n_s: n_s * n_s + n_j] = 1.0
    return SpectrahedralLP(
        dims=(n_s, n_j),
        floors=(0.0, 0.0),
        lin_rows=rows,
        lin_rhs=np.array([ch.P_S, ch.P_R]),
        cut_a=np.asarray(cut_a).reshape(len(cut_b), nv),
        cut_b=np.asarray(cut_b, dtype=float),
    )


def _join(s, w):
    q = w.copy()
    n_s = s.shape[0]
    q[:n_s, :n_s] += s
    return q


def _lift(q, n_s):
    """``(S, W)`` with ``S`` the conditional source covariance and ``W = Q - diag(S, 0)``."""
    s = conditional_source_cov(q, n_s)
    return s, hermitize(q - _join(s, np.zeros_like(q)))


def _lifted_cuts(ch, s, w):
    """Tangent cuts of both smooth lifted terms at ``(S, W)``."""
    n_s = ch.n_s
    h1 = _broadcast_channel(ch)
    h = joint_channel(ch)
    q = _join(s, w)
    d1 = np.eye(h1.shape[0]) + h1 @ s @ h1.conj().T
    d2 = np.eye(ch.n_d) + h @ q @ h.conj().T
    g1 = hermitize(h1.conj().T @ np.linalg.solve(d1, h1)) / LN2
    g2 = hermitize(h.conj().T @ np.linalg.solve(d2, h)) / LN2
    x0 = np.concatenate([herm_to_vec(s), herm_to_vec(w)])
    out = []
    a1 = np.concatenate([herm_dual(g1), np.zeros(w.size)])
    out.append((a1, log2det(d1) - float(a1 @ x0)))
    a2 = np.concatenate([herm_dual(g2[:n_s, :n_s]), herm_dual(g2)])
    out.append((a2, log2det(d2) - float(a2 @ x0)))
    return out


def _segment_search(ch, q_a, q_b, iters=SEGMENT_ITERS):
    """Golden-section maximum of the (concave) min-term along ``q_a -> q_b``."""
    f = lambda t: min(csb_terms(ch, (1.0 - t) * q_a + t * q_b))
    ratio = (np.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 0.0, 1.0
    x1, x2 = hi - ratio * (hi - lo), lo + ratio * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + ratio * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - ratio * (hi - lo)
            f1 = f(x1)
    t, val = (x1, f1) if f1 >= f2 else (x2, f2)
    return (1.0 - t) * q_a + t * q_b, val


def _local_ascent(ch, q0):
    """Local maximizer of the min-term, from ``q0``, in the factored form ``Q = B B^H``.

    Used only to place cuts and to improve the lower end; the certificate
    never depends on it.
    """
    n_s, n_j = ch.n_s, ch.n_s + ch.n_r
    w, v = np.linalg.eigh(hermitize(q0))
    b0 = v * np.sqrt(np.maximum(w, 0.0) + 1e-6 * max(float(w[-1]), 1e-300))

    def unpack(z):
        b = (z[: n_j * n_j] + 1j * z[n_j * n_j: 2 * n_j * n_j]).reshape(n_j, n_j)
        return b, z[-1]

    def pack_grad(g):
        return np.concatenate([g.real.ravel(), g.imag.ravel()])

    def terms(z):
        b, _ = unpack(z)
        return np.array(csb_terms(ch, b @ b.conj().T))

    def terms_jac(z):
        b, _ = unpack(z)
        q = b @ b.conj().T
        try:
            g1, g2 = csb_gradients(ch, q)
        except np.linalg.LinAlgError:
            g1, g2 = csb_gradients(ch, project_pd_floor(q, ANCHOR_FLOOR * float(np.real(np.trace(q)))))
        rows = [np.concatenate([pack_grad(2.0 * g @ b), [-1.0]]) for g in (g1, g2)]
        return np.array(rows)

    def budgets(z):
        b, _ = unpack(z)
        return np.array([ch.P_S - np.sum(np.abs(b[:n_s]) ** 2), ch.P_R - np.sum(np.abs(b[n_s:]) ** 2)])

    def budgets_jac(z):
        b, _ = unpack(z)
        out = np.zeros((2, z.size))
        for i, sl in enumerate((slice(0, n_s), slice(n_s, n_j))):
            g = np.zeros((n_j, n_j), dtype=complex)
            g[sl] = -2.0 * b[sl]
            out[i, :-1] = pack_grad(g)
        return out

    z0 = np.concatenate([pack_grad(b0), [0.0]])
    z0[-1] = float(min(terms(z0))) - 1.0
    cons = [
        {"type": "ineq", "fun": lambda z: terms(z) - z[-1], "jac": terms_jac},
        {"type": "ineq", "fun": budgets, "jac": budgets_jac},
    ]
    obj = np.zeros(z0.size)
    obj[-1] = -1.0
    res = optimize.minimize(lambda z: -z[-1], z0, jac=lambda z: obj, constraints=cons, method="SLSQP",
                            options={"maxiter": 200, "ftol": 1e-12})
    b, _ = unpack(res.x)
    q = b @ b.conj().T
    # pull back into the budgets if the solver ended marginally outside
    scale = np.ones(n_j)
    for sl, p in ((slice(0, n_s), ch.P_S), (slice(n_s, n_j), ch.P_R)):
        tr = float(np.real(np.trace(q[sl, sl])))
        if tr > p:
            scale[sl] = np.sqrt(p / tr)
    q = hermitize(scale[:, None] * q * scale[None, :])
    return q, min(csb_terms(ch, q))


def cut_set_bound(ch: RelayChannel, eps_cp=1e-3, max_iter=MAX_ITER) -> CsbReport:
    """Maximize the cut-set expression to a certified gap ``eps_cp``.

    Returns the master problem's upper bound as ``value`` so that it stays a
    valid upper bound on every achievable rate.

    The Schur-complement term is not smooth where ``Q_RR`` is singular, and
    optima often sit there (the relay beamforms along fewer directions than
    it has antennas). Tangent cuts then cannot certify the optimum. The
    bound is therefore computed in lifted form. ``S <= Q_SS - Q_SR Q_RR^+ Q_RS``
    holds exactly when ``W = Q - diag(S, 0)`` is PSD, so

        CSB = max min{ log2det(I + H1 S H1^H), log2det(I + H (W + diag(S, 0)) H^H) }

    over ``S, W >= 0`` with ``tr S + tr W_SS <= P_S`` and ``tr W_RR <= P_R``.
    Both terms are smooth and concave, and the constraints are those of the
    two-block master solver. Cuts are placed at the start point, at a local
    maximizer found by SLSQP on ``Q = B B^H`` (this usually certifies in one
    master solve), and then at every master iterate. The lower end is the
    best feasible ``Q`` seen, refined by golden section towards the incumbent.
    """
    if eps_cp <= 0:
        raise InvalidConfigError("eps_cp must be positive")
    n_s, n_r = ch.n_s, ch.n_r
    s0 = np.eye(n_s, dtype=complex) * ch.P_S / (4 * n_s)
    w0 = np.diag(np.concatenate([np.full(n_s, ch.P_S / (4 * n_s)), np.full(n_r, ch.P_R / (2 * n_r))]))
    w0 = w0.astype(complex)
    x_start = np.concatenate([herm_to_vec(s0), herm_to_vec(w0)])
    cuts = _lifted_cuts(ch, s0, w0)
    best_q, best_l = _local_ascent(ch, _join(s0, w0))
    cuts.extend(_lifted_cuts(ch, *_lift(best_q, n_s)))
    upper = np.inf
    u_trace, l_trace = [], []
    termination, message = ITERATION_LIMIT, ""
    for _ in range(max_iter):
        lp = _lifted_lp(ch, [a for a, _ in cuts], [b for _, b in cuts])
        try:
            sol = solve_lp(lp, x_start)
        except NumericalFailure as exc:
            termination, message = NUMERICAL_FAILURE, str(exc)
            break
        s, w = lp.blocks_of(sol.x)
        upper = min(upper, sol.U + sol.gap_bound)
        # the feasible set of Q is convex, so the segment to the incumbent stays feasible
        cand, low = _segment_search(ch, best_q, _join(s, w))
        if low > best_l:
            best_l, best_q = low, cand
        u_trace.append(upper)
        l_trace.append(low)
        if upper - best_l <= eps_cp:
            termination = GAP_REACHED
            break
        cuts.extend(_lifted_cuts(ch, s, w))
    w, v = np.linalg.eigh(best_q)
    point = CsbPoint((v * np.maximum(w, 0.0)) @ v.conj().T, n_s)
    return CsbReport(
        value=upper,
        lower=best_l,
        point=point,
        U_trace=u_trace,
        L_trace=l_trace,
        iterations=len(u_trace),
        termination=termination,
        message=message,
    )
