"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--points N] [--grid M] [--repeat K]

Both variants are imported side by side from ``porohyst.kernels``, so the
``POROHYST_DISABLE_NUMBA`` flag does not matter here.  Outputs are compared
before timing; the jitted kernels are warmed up once so compile time is
excluded.
"""

import argparse
import time

import numpy as np

from porohyst import _backend, kernels


def best_of(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def cases(n_points, n_grid, rng):
    r = (np.arange(n_grid) + 0.5) / n_grid * 2.0
    wr = np.full(n_grid, 0.5 * 2.0 / n_grid)
    xi = np.clip(rng.normal(size=(n_points, n_grid)) * 0.1, -r, r)
    p = rng.uniform(-1.5, 1.5, n_points)
    sig = rng.normal(size=(n_points, 6)) * 0.01
    deps = rng.normal(size=(n_points, 6)) * 0.05
    return {
        "play_batch": ((xi, p, r), kernels.play_batch_numpy, kernels.play_batch_jit),
        "box_preisach": ((xi, p, r, wr, 1.0), kernels.box_preisach_numpy, kernels.box_preisach_jit),
        "scalar_stop": ((sig[:, 0].copy(), deps[:, 0].copy(), 3.0, 0.05),
                        kernels.scalar_stop_numpy, kernels.scalar_stop_jit),
        "radial_return": ((sig, deps, 1.0, 1.0, 0.05), kernels.radial_return_numpy, kernels.radial_return_jit),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=4096)
    ap.add_argument("--grid", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--threads", type=int, default=0)
    args = ap.parse_args()
    if not _backend.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    _backend.set_threads(args.threads)
    rng = np.random.default_rng(0)
    print(f"points={args.points} grid={args.grid} repeat={args.repeat}")
    print(f"{'kernel':<14} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8} {'max diff':>10}")
    for name, (a, f_np, f_jit) in cases(args.points, args.grid, rng).items():
        out_np, out_jit = f_np(*a), f_jit(*a)
        if not isinstance(out_np, tuple):
            out_np, out_jit = (out_np,), (out_jit,)
        diff = max(float(np.max(np.abs(np.asarray(x) - np.asarray(y)))) for x, y in zip(out_np, out_jit))
        t_np = best_of(f_np, a, args.repeat)
        t_jit = best_of(f_jit, a, args.repeat)
        print(f"{name:<14} {1e3 * t_np:11.3f} {1e3 * t_jit:11.3f} {t_np / t_jit:8.1f} {diff:10.2e}")


if __name__ == "__main__":
    main()
