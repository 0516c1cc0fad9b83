"""Compiled vs pure-numpy kernels.

    python benchmarks/bench_kernels.py            # full sizes
    python benchmarks/bench_kernels.py --quick    # smaller sizes, a few seconds

Times the time-varying convolution (dense and sparse tap tracks) and the
sliding least-squares recursion, checks that both backends agree, and prints
one line per case. ``--json PATH`` also writes the numbers.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np
import scipy.linalg as sla

from uwsi import kernels


def _best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_convolve(T: int, M: int, density: float, repeat: int, rng) -> dict:
    x = rng.standard_normal(T) + 1j * rng.standard_normal(T)
    taps = np.zeros((M, T), dtype=np.complex128)
    rows = rng.choice(M, size=max(1, int(density * M)), replace=False)
    taps[rows] = rng.standard_normal((rows.size, T)) + 1j * rng.standard_normal((rows.size, T))
    out = {}
    results = {}
    for name in ("python", "compiled"):
        impl = kernels.backend(name)
        buf = np.empty(T, dtype=np.complex128)
        out[name] = _best_of(lambda: impl.tv_convolve(x, taps, 1, buf), repeat)
        results[name] = buf.copy()
    err = float(np.max(np.abs(results["python"] - results["compiled"])))
    return {"case": f"tv_convolve T={T} M={M} rows={rows.size}", **out, "max_abs_diff": err}


def bench_ls_run(M: int, L: int, steps: int, repeat: int, rng) -> dict:
    T = L + M + steps + 1
    x = np.sign(rng.standard_normal(T)) + 0j
    y = rng.standard_normal(T) + 1j * rng.standard_normal(T)
    off = L + M
    xp = np.concatenate([np.zeros(off, np.complex128), x])
    yp = np.concatenate([np.zeros(off, np.complex128), y])
    n0 = L + M
    # state for the window ending at n0 - 1
    idx = (n0 - 1) - np.arange(L)[:, None] - np.arange(M)[None, :]
    X = x[idx]
    G = X.conj().T @ X
    P0 = np.asfortranarray(sla.inv(G))
    h0 = P0 @ (X.conj().T @ y[(n0 - 1) - np.arange(L)])
    tr0 = np.array([np.trace(G).real])
    timing = {}
    results = {}
    for name in ("python", "compiled"):
        impl = kernels.backend(name)

        def run():
            P, h, tr = P0.copy(order="F"), h0.copy(), tr0.copy()
            out = np.zeros((n0 + steps, M), dtype=np.complex128)
            done = impl.ls_run(xp, yp, off, M, L, n0, n0 + steps, 1, P, h, tr, out, 1e-10, 1e12)
            assert done == steps
            results[name] = out[n0 + steps - 1].copy()

        timing[name] = _best_of(run, repeat)
    err = float(np.max(np.abs(results["python"] - results["compiled"])))
    return {"case": f"ls_run M={M} L={L} steps={steps}", **timing, "max_abs_diff": err}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="write results to this path")
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    try:
        kernels.backend("compiled")
    except ImportError:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    if args.quick:
        cases = [bench_convolve(20_000, 256, 0.05, args.repeat, rng),
                 bench_convolve(5_000, 64, 1.0, args.repeat, rng),
                 bench_ls_run(64, 128, 500, args.repeat, rng),
                 bench_ls_run(256, 512, 200, args.repeat, rng)]
    else:
        cases = [bench_convolve(102_400, 256, 0.05, args.repeat, rng),
                 bench_convolve(20_000, 256, 1.0, args.repeat, rng),
                 bench_ls_run(90, 180, 5_000, args.repeat, rng),
                 bench_ls_run(256, 512, 2_000, args.repeat, rng)]
    print(f"{'case':44s} {'python s':>10s} {'compiled s':>11s} {'speedup':>8s} {'max diff':>10s}")
    for c in cases:
        print(f"{c['case']:44s} {c['python']:10.4f} {c['compiled']:11.4f} "
              f"{c['python'] / c['compiled']:8.1f} {c['max_abs_diff']:10.2e}")
    if args.json:
        with open(args.json, "w") as f:
            json.dump(cases, f, indent=2)


if __name__ == "__main__":
    main()
