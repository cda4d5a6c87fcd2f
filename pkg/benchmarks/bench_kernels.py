"""Time the numba and numpy kernel backends side by side.

    python benchmarks/bench_kernels.py [--repeat 5] [--sizes 200,500,1000]

Each kernel is run once untimed (JIT compilation), then ``--repeat`` times;
the best time is reported along with a check that both backends agree.
"""

import argparse
import time

import numpy as np

from ancestrymap import kernels
from ancestrymap.matching import MatchConfig, full_matching_flow


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def flow_with(impl, dist):
    prev = kernels.min_cost_flow
    kernels.min_cost_flow = impl.min_cost_flow
    try:
        return full_matching_flow(dist, MatchConfig())
    finally:
        kernels.min_cost_flow = prev


def cases(sizes, rng):
    for n in sizes:
        x = rng.normal(size=(n, 3))
        yield f"ward n={n}", lambda impl, x=x: impl.ward_linkage(x)
    for n in sizes:
        pts = rng.normal(size=(20 * n, 3))
        base = rng.normal(size=(n, 3))
        yield f"nearest {20 * n}x{n}", lambda impl, p=pts, b=base: impl.nearest_index(p, b)
    for n in sizes[:2]:
        k = max(2, n // 10)
        dist = rng.random((k, 2 * k))
        yield f"flow {k}x{2 * k}", lambda impl, d=dist: flow_with(impl, d)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", default="200,500,1000")
    args = ap.parse_args(argv)
    impls = kernels.backends()
    if "numba" not in impls:
        print("numba is not installed; only the numpy backend is available")
    sizes = [int(s) for s in args.sizes.split(",")]
    names = sorted(impls)
    print(f"{'kernel':<22}" + "".join(f"{n:>12}" for n in names) + f"{'speedup':>10}  agree")
    for label, fn in cases(sizes, np.random.default_rng(0)):
        secs = {n: best_of(lambda: fn(impls[n]), args.repeat) for n in names}
        outs = [fn(impls[n]) for n in names]
        agree = all(_same(outs[0], o) for o in outs[1:])
        speed = secs["numpy"] / secs["numba"] if "numba" in secs else float("nan")
        print(f"{label:<22}" + "".join(f"{secs[n]:>11.4f}s" for n in names) + f"{speed:>9.1f}x  {agree}")


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


if __name__ == "__main__":
    main()
