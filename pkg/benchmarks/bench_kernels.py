"""Compare the numba and numpy builds of the statistics kernels.

    python benchmarks/bench_kernels.py [--sizes 1000 100000 1000000] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from aqcoloc import _kernels


def bench(fn, args, repeat):
    fn(*args)  # warm-up (triggers JIT compilation)
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1_000, 10_000, 100_000, 1_000_000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels.numba is None:
        raise SystemExit("numba not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<18} {'n':>9} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for n in args.sizes:
        tied = rng.integers(0, max(2, n // 10), n).astype(float)
        x, y = rng.normal(size=n), rng.normal(size=n)
        cases = [
            ("ranks (ties)", _kernels.average_ranks_numpy, _kernels.average_ranks_numba, (tied,)),
            ("ranks (distinct)", _kernels.average_ranks_numpy, _kernels.average_ranks_numba, (x,)),
            ("moments", _kernels.centered_moments_numpy, _kernels.centered_moments_numba, (x, y)),
        ]
        for name, np_fn, nb_fn, fargs in cases:
            t_np = bench(np_fn, fargs, args.repeat)
            t_nb = bench(nb_fn, fargs, args.repeat)
            print(f"{name:<18} {n:>9} {t_np * 1e3:>10.3f} {t_nb * 1e3:>10.3f} {t_np / t_nb:>7.2f}x")


if __name__ == "__main__":
    main()
