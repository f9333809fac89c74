"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat R]
"""

import argparse
import timeit

import numpy as np

from hurstwave import _kernels
from hurstwave.estimators import level_terms
from hurstwave.filters import make_filter


def _cases(rng):
    f = make_filter("sym6")
    x = rng.standard_normal(2 ** 16)
    a, d = _kernels.python_backend.dwt_step(x, f.lowpass, f.highpass)
    levels = np.arange(3, 16, dtype=np.int64)
    terms = np.array([level_terms(int(j)) for j in levels])
    mean_sq = 2.0 ** (-1.6 * levels) + 1e-3
    return {
        "dwt_step N=2^16": lambda b: b.dwt_step(x, f.lowpass, f.highpass),
        "idwt_step N=2^16": lambda b: b.idwt_step(a, d, f.lowpass, f.highpass),
        "pair_table 78 pairs": lambda b: b.pair_table(levels, mean_sq, terms[:, 0], terms[:, 1], 1e-3, True),
    }


def _best(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    backends = {"python": _kernels.python_backend}
    if _kernels.compiled_backend is not None:
        backends["cython"] = _kernels.compiled_backend
    else:
        print("compiled extension not built; timing the python backend only")
    print(f"{'kernel':<22}" + "".join(f"{name:>14}" for name in backends) + f"{'speedup':>10}")
    for label, call in _cases(np.random.default_rng(0)).items():
        times = {name: _best(lambda b=b: call(b), args.repeat) for name, b in backends.items()}
        row = f"{label:<22}" + "".join(f"{t * 1e6:>12.1f}us" for t in times.values())
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
