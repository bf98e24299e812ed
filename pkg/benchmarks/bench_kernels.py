"""Compare the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--n 256] [--rows 64] [--repeat 20]
"""

import argparse
import timeit

import numpy as np

from smoney import _pykernels

try:
    from smoney import _ckernels
except ImportError:
    _ckernels = None


def _inputs(rows, n, seed=0):
    rng = np.random.default_rng(seed)
    shape = rows * n  # kernels take flat k-major arrays
    r = rng.integers(0, 2, shape, dtype=np.uint8)
    s = rng.integers(0, 2, shape, dtype=np.uint8)
    basis = rng.integers(0, 2, shape, dtype=np.uint8)
    received = rng.random(shape) < 0.9
    flip_u, coin_u = rng.random(shape), rng.random(shape)
    a0 = np.cos(rng.uniform(0, np.pi, shape))
    a1 = np.sqrt(1.0 - a0 * a0)
    return {
        "bb84_outcomes": (r, s, basis, received, flip_u, coin_u, 0.01),
        "projective_outcomes": (a0, a1, np.pi / 8, rng.random(shape)),
        "group_errors": None,
        "_r": r, "_s": s,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--rows", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    data = _inputs(args.rows, args.n)
    outcomes = _pykernels.bb84_outcomes(*data["bb84_outcomes"])
    claimed = np.random.default_rng(1).integers(0, 2, args.rows).astype(np.uint8)
    ks = np.arange(args.rows, dtype=np.int64)
    data["group_errors"] = (data["_r"], data["_s"], outcomes, claimed, ks, args.n)

    backends = [("numpy", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"rows={args.rows} n={args.n} repeat={args.repeat}")
    print(f"{'kernel':<22}" + "".join(f"{name:>14}" for name, _ in backends) + f"{'speedup':>10}")
    for kernel in ("bb84_outcomes", "projective_outcomes", "group_errors"):
        times = []
        for _, mod in backends:
            fn, a = getattr(mod, kernel), data[kernel]
            times.append(min(timeit.repeat(lambda: fn(*a), number=args.repeat, repeat=5)) / args.repeat)
        speed = f"{times[0] / times[1]:>9.1f}x" if len(times) > 1 else f"{'-':>10}"
        print(f"{kernel:<22}" + "".join(f"{t * 1e6:>12.1f}us" for t in times) + speed)
    if _ckernels is None:
        print("compiled kernels not built; only the fallback was timed")


if __name__ == "__main__":
    main()
