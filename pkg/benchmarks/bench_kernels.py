"""Time the numba kernels against their plain fallbacks.

    python3 benchmarks/bench_kernels.py [--radius N] [--repeat R]

Both paths run on the same inputs and their outputs are compared before
any timing is reported.  The first numba call (compilation or cache load)
is timed separately.
"""

import argparse
import time

import numpy as np

from ggt import _kernels as K


def best(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(k, radius):
    words, lengths = K._ball_py(k, radius)
    rng = np.random.default_rng(0)
    # random unreduced rows for the reduction kernel
    raw = rng.integers(-k, k + 1, size=(len(words), 2 * radius), dtype=np.int64)
    raw[raw == 0] = 1
    raw_len = np.full(len(words), 2 * radius, dtype=np.int64)
    table, tlen = K._as_table([(1, 2, -1, -2), (2,)])
    c = np.array([1], dtype=np.int64)
    d = np.array([2, 1, -2], dtype=np.int64)
    return {
        "ball": (lambda: K._ball_nb(k, radius, K.letter_order(k), K.ball_size(k, radius)), lambda: K._ball_py(k, radius)),
        "reduce_rows": (lambda: K._reduce_rows_nb(raw, raw_len), lambda: K._reduce_rows_py(raw, raw_len)),
        "substitute_trivial": (
            lambda: K._substitute_trivial_nb(words, lengths, table, tlen),
            lambda: K._substitute_trivial_py(words, lengths, table, tlen),
        ),
        "conj_commutes": (lambda: K._conj_commutes_nb(words, lengths, c, d), lambda: K._conj_commutes_py(words, lengths, c, d)),
    }


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--radius", type=int, default=7)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not K._HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    k = 2
    print(f"free group of rank {k}, ball radius {args.radius}: {K.ball_size(k, args.radius)} rows")
    print(f"{'kernel':<20}{'first nb':>11}{'numba':>11}{'fallback':>11}{'speedup':>9}")
    for name, (nb, py) in cases(k, args.radius).items():
        t0 = time.perf_counter()
        nb()
        first = time.perf_counter() - t0
        t_nb, out_nb = best(nb, args.repeat)
        t_py, out_py = best(py, args.repeat)
        if not same(out_nb, out_py):
            raise SystemExit(f"{name}: numba and fallback disagree")
        print(f"{name:<20}{first:>10.4f}s{t_nb:>10.4f}s{t_py:>10.4f}s{t_py / max(t_nb, 1e-9):>8.1f}x")


if __name__ == "__main__":
    main()
