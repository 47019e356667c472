"""Compare the compiled inner loops with the numpy fallback.

Run: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from hermitelab import _pykernels

try:
    from hermitelab import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    xi = rng.standard_normal(1 << 18)
    u = rng.standard_normal(1 << 16)
    return {
        "hermite_block_sums q=2 m=16 (2^18)": lambda mod: mod.hermite_block_sums(xi, 2, 16),
        "hermite_block_sums q=3 m=16 (2^18)": lambda mod: mod.hermite_block_sums(xi, 3, 16),
        "hermite_eval q=4 (2^18)": lambda mod: mod.hermite_eval(4, xi),
        "linear_recursion (2^16)": lambda mod: mod.linear_recursion(0.99, u, 0.0),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:40s} {t_py:10.3f} {'n/a':>10s}")
            continue
        ref, got = fn(_pykernels), fn(_ckernels)
        assert np.allclose(ref, got, rtol=1e-12, atol=1e-9), name
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:40s} {t_py:10.3f} {t_c:10.3f} {t_py / t_c:8.1f}x")


if __name__ == "__main__":
    main()
