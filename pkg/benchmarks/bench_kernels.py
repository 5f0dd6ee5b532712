"""Compare the numba and numpy kernel backends.

Times both hot kernels in isolation (the master-problem barrier solve and
the eigenvalue-derivative coordinates) and full Algorithm 2 solves on
line-network channels, and checks that the two backends agree. The first
numba call per kernel includes JIT compilation (or loading the on-disk
cache); it is reported separately and excluded from the steady-state
timings.

    python3 benchmarks/bench_kernels.py --seeds 5 --repeats 3
"""
from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from pdfrelay import _kernels
from pdfrelay.driver import algorithm2, initial_anchor
from pdfrelay.gradients import make_A_cut, make_B_cut
from pdfrelay.inner import solve_inner
from pdfrelay.master import MasterProblem, solve_master
from pdfrelay.model import LineNetworkConfig, gram_matrices, line_network_sample


def use(name):
    _kernels._active = _kernels.get_backend(name)


def timed(fn, repeats):
    out = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return statistics.median(out)


def master_with_cuts(ch, n_cuts, rng):
    """A master problem carrying ``n_cuts`` pairs of cuts at random anchors."""
    eps = 1e-5 * ch.P_S
    first = initial_anchor(ch, eps)
    cuts = [make_A_cut(ch, first.C, first.R), make_B_cut(ch, first)]
    for _ in range(n_cuts - 1):
        b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        c = b @ b.conj().T + 0.5 * np.eye(2)
        cuts += [make_A_cut(ch, c, first.R), make_B_cut(ch, first.__class__.unchecked(c, first.R))]
    return MasterProblem(ch.n_s, ch.n_r, ch.P_S, ch.P_R, 0.0, tuple(cuts))


def grad_args(ch):
    """Kernel arguments exactly as the A-cut gradient passes them."""
    sol = solve_inner(ch, np.diag([30.0, 20.0]).astype(complex))
    g_ds, g_rs = gram_matrices(ch)
    s_vals, s_vecs = sol.sqrt_eig
    k = sol.active_count
    args = (s_vals, s_vecs, sol.gevd.F[:, :k], sol.gevd.lambdas[:k], g_ds, g_rs, sol.sqrtC)
    return tuple(np.ascontiguousarray(a) for a in args)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=5, help="channels for the end-to-end timing")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--cuts", type=int, default=20, help="cut pairs in the isolated master problem")
    p.add_argument("--d", type=float, default=0.8)
    args = p.parse_args(argv)

    backends = _kernels.available_backends()
    if "numba" not in backends:
        print("numba is not importable; only the numpy backend can be timed")
    chans = [line_network_sample(LineNetworkConfig(d=args.d, seed=s), 100.0, 10.0) for s in range(args.seeds)]
    mp = master_with_cuts(chans[0], args.cuts, np.random.default_rng(0))
    g_args = grad_args(chans[0])

    rows, results = [], {}
    for name in backends:
        use(name)
        kern = _kernels.backend()
        t0 = time.perf_counter()
        solve_master(mp)
        kern.eig_log_grad_coords(*g_args)
        first = time.perf_counter() - t0
        t_master = timed(lambda: solve_master(mp), args.repeats)
        t_grad = timed(lambda: kern.eig_log_grad_coords(*g_args), max(args.repeats, 100))
        walls, rates = [], []
        for ch in chans:
            t0 = time.perf_counter()
            rates.append(algorithm2(ch).rate)
            walls.append(time.perf_counter() - t0)
        results[name] = (solve_master(mp).U, kern.eig_log_grad_coords(*g_args), np.array(rates))
        rows.append((name, first, t_master, t_grad, statistics.mean(walls)))

    print(f"{'backend':8s} {'first call s':>13s} {'master ms':>10s} {'grad us':>9s} {'alg2 s/inst':>12s}")
    for name, first, t_master, t_grad, wall in rows:
        print(f"{name:8s} {first:13.2f} {1e3 * t_master:10.1f} {1e6 * t_grad:9.1f} {wall:12.3f}")
    if len(rows) == 2:
        (_, _, m0, g0, w0), (_, _, m1, g1, w1) = rows
        print(f"speedup numba/numpy: master {m1 / m0:.1f}x, grad {g1 / g0:.1f}x, end-to-end {w1 / w0:.1f}x")
        (u0, c0, r0), (u1, c1, r1) = results["numba"], results["numpy"]
        print(f"agreement: |dU| = {abs(u0 - u1):.2e}, max |d grad| = {np.max(np.abs(c0 - c1)):.2e}, "
              f"max |d rate| = {np.max(np.abs(r0 - r1)):.2e} (stopping tolerance 1e-3)")


if __name__ == "__main__":
    main()
