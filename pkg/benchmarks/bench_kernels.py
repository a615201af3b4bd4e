"""Time the jitted kernels against their pure-numpy twins.

Runs both code paths directly (ignoring the SLL_NUMBA selection) on the
two hot spots: the nodewise subsonic flux inversion and the stencil
matvec inside the conjugate-gradient solve.  Reports wall times and the
worst cross-path deviation.

Usage: python benchmarks/bench_kernels.py [--nodes N] [--repeats R]
"""

import argparse
import time

import numpy as np

from sll import _kernels


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_speed_inversion(n, repeats):
    rng = np.random.default_rng(1)
    B = rng.uniform(0.5, 2.0, n)
    S = rng.uniform(0.5, 2.0, n)
    gamma = 1.9
    q_cr = np.sqrt(2.0 * (gamma - 1.0) / (gamma + 1.0) * B)
    rho_cr = (B / ((gamma + 1.0) * 0.5 * S)) ** (1.0 / (gamma - 1.0))
    j = rng.uniform(0.0, 1.0, n) * rho_cr * q_cr

    out = {}
    if _kernels.HAVE_NUMBA:
        _kernels._speed_batch_numba(j[:4], B[:4], S[:4], gamma, 0.999)  # compile
        t = time_call(lambda: _kernels._speed_batch_numba(j, B, S, gamma, 0.999),
                      repeats)
        out["numba"] = (t, _kernels._speed_batch_numba(j, B, S, gamma, 0.999)[0])
    t = time_call(lambda: _kernels._speed_batch_numpy(j, B, S, gamma, 0.999),
                  repeats)
    out["numpy"] = (t, _kernels._speed_batch_numpy(j, B, S, gamma, 0.999)[0])
    return out


def bench_matvec(n, repeats):
    rng = np.random.default_rng(2)
    side = max(int(np.sqrt(n)), 8)
    x = rng.standard_normal((side, side))
    fx = rng.uniform(0.5, 1.0, (side - 1, side))
    fy = rng.uniform(0.5, 1.0, (side, side - 1))
    diag = np.full((side, side), 4.5)
    buf = np.empty_like(x)

    out = {}
    if _kernels.HAVE_NUMBA:
        _kernels._matvec5_numba(fx, fy, diag, x, buf)  # compile
        t = time_call(lambda: [_kernels._matvec5_numba(fx, fy, diag, x, buf)
                               for _ in range(50)], repeats)
        out["numba"] = (t / 50.0, _kernels._matvec5_numba(fx, fy, diag, x,
                                                          np.empty_like(x)).copy())
    t = time_call(lambda: [_kernels._matvec5_numpy(fx, fy, diag, x, buf)
                           for _ in range(50)], repeats)
    out["numpy"] = (t / 50.0, _kernels._matvec5_numpy(fx, fy, diag, x,
                                                      np.empty_like(x)).copy())
    return out


def report(name, results):
    print(f"\n{name}")
    base = results["numpy"]
    for path, (t, val) in sorted(results.items()):
        line = f"  {path:6s} {t * 1e3:10.3f} ms"
        if path != "numpy":
            dev = float(np.max(np.abs(val - base[1])))
            line += f"   speedup vs numpy: {base[0] / t:6.2f}x" \
                    f"   max |difference|: {dev:.2e}"
        print(line)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nodes", type=int, default=200_000)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    print(f"kernel backend selected by SLL_NUMBA: {_kernels.backend()}"
          f" (numba importable: {_kernels.HAVE_NUMBA})")
    report(f"subsonic flux inversion, {args.nodes} nodes, 100 halvings",
           bench_speed_inversion(args.nodes, args.repeats))
    report(f"5-point stencil matvec, {args.nodes} unknowns",
           bench_matvec(args.nodes, args.repeats))


if __name__ == "__main__":
    main()
