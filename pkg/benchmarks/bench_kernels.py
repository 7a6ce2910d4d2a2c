"""Time the compiled and numpy kernel backends against each other.

    python3 benchmarks/bench_kernels.py [-n 200000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from mldfs._core import backends
from mldfs.delay import ClassBoundaries, DelayModelConfig
from mldfs.ml import Dataset, HyperParams, train_forest


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, rng):
    a = rng.integers(0, 1 << 32, n, dtype=np.uint64).astype(np.uint32)
    b = rng.integers(0, 1 << 32, n, dtype=np.uint64).astype(np.uint32)
    fam = rng.integers(0, 5, n).astype(np.int32)
    params = DelayModelConfig().params
    X = rng.integers(0, 33, size=(min(n, 20000), 6)).astype(np.int32)
    y = (X[:, 1] + X[:, 2] > 32).astype(np.int32)
    idx = np.arange(len(y), dtype=np.int64)
    feats = np.arange(6, dtype=np.int64)
    forest = train_forest(Dataset(X, y, 2), HyperParams(n_estimators=10), ClassBoundaries.standard(2))
    packed = forest._pack()

    return {
        "carry_chain_batch": lambda k: k.carry_chain_batch(a, b),
        "delay_batch": lambda k: k.delay_batch(fam, a, b, b, a, params),
        "best_split": lambda k: k.best_split(X, y, idx, feats, 2, 5),
        "forest_vote": lambda k: k.forest_vote(*packed, X, 2),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-n", type=int, default=200_000, help="operand pairs per batch")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    ks = backends()
    table = cases(args.n, np.random.default_rng(0))
    names = sorted(ks)
    print(f"{'kernel':<20}" + "".join(f"{n:>12}" for n in names) + ("     speed-up" if len(ks) > 1 else ""))
    for case, fn in table.items():
        t = {n: best_of(lambda: fn(ks[n]), args.repeat) for n in names}
        line = f"{case:<20}" + "".join(f"{t[n] * 1e3:>10.2f}ms" for n in names)
        if "cython" in t and "python" in t:
            line += f"{t['python'] / t['cython']:>12.1f}x"
        print(line)
    if len(ks) == 1:
        print("(compiled backend not built; only the numpy fallback was timed)")


if __name__ == "__main__":
    main()
