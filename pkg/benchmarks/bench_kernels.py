"""Compare the numba and pure-numpy kernel paths.

    python benchmarks/bench_kernels.py [--samples N] [--dim D] [--repeat R]
"""

import argparse
import time

import numpy as np

from nogocool import _kernels
from nogocool.linalg import haar_unitaries


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=50_000)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    w = haar_unitaries(args.samples, args.dim, rng)
    probs = rng.dirichlet(np.ones(args.dim))
    ng = args.dim // 2

    n = 4
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = a + a.conj().T
    ls = rng.standard_normal((3, n, n)) + 1j * rng.standard_normal((3, n, n))
    rates = np.array([0.5, 0.2, 0.1])
    rho = np.eye(n, dtype=complex) / n
    dt = 1e-4

    # warm-up compiles
    _kernels.ground_populations_numba(w[:2], probs, ng)
    _kernels.lindblad_rk4_numba(rho, h, ls, rates, dt, 2)

    rows = []
    t_np, p_np = best_of(lambda: _kernels.ground_populations_numpy(w, probs, ng), args.repeat)
    t_jit, p_jit = best_of(lambda: _kernels.ground_populations_numba(w, probs, ng), args.repeat)
    rows.append((f"ground_populations ({args.samples} x {args.dim}^2)", t_np, t_jit, np.max(np.abs(p_np - p_jit))))

    t_np, (r_np, _) = best_of(lambda: _kernels.lindblad_rk4_numpy(rho, h, ls, rates, dt, args.steps), args.repeat)
    t_jit, (r_jit, _) = best_of(lambda: _kernels.lindblad_rk4_numba(rho, h, ls, rates, dt, args.steps), args.repeat)
    rows.append((f"lindblad_rk4 ({args.steps} steps, dim {n})", t_np, t_jit, np.max(np.abs(r_np - r_jit))))

    print(f"{'kernel':45s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, tn, tj, diff in rows:
        print(f"{name:45s} {tn:10.4f} {tj:10.4f} {tn / tj:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
