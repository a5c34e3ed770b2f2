"""Timing comparison of the compiled hot loops against the numpy fallback.

Runs each exported kernel of ``kplearn._accel`` on a representative ragged
workload and prints per-call times for both backends.  Useful for checking
that the extension actually pays off on a given machine before relying on
it, and for catching regressions after touching either implementation.

Usage:
    python3 benchmarks/bench_accel.py [--n 400] [--obs 80] [--atoms 31]
                                      [--repeats 20] [--seed 0]
"""

import argparse
import time

import numpy as np

from kplearn._accel import _fallback

try:
    from kplearn._accel import _fast
except ImportError:
    _fast = None


def build_ragged(rng, n, obs, d):
    counts = rng.integers(max(obs // 2, 1), obs * 3 // 2 + 1, size=n)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    total = int(offsets[-1])
    locations = rng.uniform(0.0, 1.0, total)
    freq = 2.0 * np.pi * np.arange(1, d + 1)
    atoms = np.cos(np.outer(locations, freq))
    values = rng.standard_normal(total)
    w = rng.standard_normal((d, n))
    return values, offsets, atoms, w


def time_call(fn, args, repeats):
    fn(*args)  # warm up once, outside the timed loop
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=400,
                        help="number of samples in the ragged workload")
    parser.add_argument("--obs", type=int, default=80,
                        help="average observations per sample")
    parser.add_argument("--atoms", type=int, default=31,
                        help="dictionary size")
    parser.add_argument("--repeats", type=int, default=20,
                        help="timed repetitions per case (best is kept)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    values, offsets, atoms, w = build_ragged(rng, args.n, args.obs, args.atoms)
    grids = rng.standard_normal((args.n // 4 or 2, 120, 3))
    half = grids.shape[0] // 2 or 1

    cases = [
        ("nu_columns", (values, offsets, atoms)),
        ("gram_blocks", (offsets, atoms)),
        ("loss_and_columns (square)", (values, offsets, atoms, w, 0, 0.0)),
        ("loss_and_columns (logcosh)", (values, offsets, atoms, w, 1, 25.0)),
        ("integral_gaussian_gram", (grids, 1.5)),
        ("integral_gaussian_cross", (grids[:half], grids[half:], 1.5)),
    ]

    print("workload: n=%d, ~%d obs/sample (%d rows), d=%d, %d grid inputs"
          % (args.n, args.obs, offsets[-1], args.atoms, grids.shape[0]))
    if _fast is None:
        print("compiled extension not importable; timing the fallback only\n")
    header = "%-28s %12s %12s %9s" % ("kernel", "numpy", "compiled", "speedup")
    print(header)
    print("-" * len(header))
    for name, call_args in cases:
        fn_name = name.split(" ")[0]
        t_np = time_call(getattr(_fallback, fn_name), call_args, args.repeats)
        if _fast is None:
            print("%-28s %10.3f ms %12s %9s" % (name, t_np * 1e3, "-", "-"))
            continue
        fast_fn = getattr(_fast, fn_name)
        ref = getattr(_fallback, fn_name)(*call_args)
        got = fast_fn(*call_args)
        if not isinstance(ref, tuple):
            ref, got = (ref,), (got,)
        for a, b in zip(ref, got):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
        t_fast = time_call(fast_fn, call_args, args.repeats)
        print("%-28s %10.3f ms %10.3f ms %8.1fx"
              % (name, t_np * 1e3, t_fast * 1e3, t_np / t_fast))


if __name__ == "__main__":
    main()
