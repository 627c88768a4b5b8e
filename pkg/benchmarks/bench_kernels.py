"""Compare the compiled and pure-Python kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from floatloc._kernels import backends


def _problems(n, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        a = rng.uniform(-500, 500, (5, 2))
        t = rng.uniform(-200, 200, 2)
        d = np.hypot(*(a - t).T) + rng.normal(0, 3, 5)
        g = t + rng.normal(0, 50, 2)
        out.append((a[:, 0].copy(), a[:, 1].copy(), d, float(g[0]), float(g[1])))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--groups", type=int, default=200)
    args = ap.parse_args(argv)

    probs = _problems(args.groups)
    rng = np.random.default_rng(1)
    t = np.cumsum(rng.uniform(5, 15, 20_000))
    d = 500 + np.cumsum(rng.normal(0, 8, 20_000))

    cases = {
        "trilateration solve": lambda k: [k.nelder_mead_trilateration(*p, 1e-6, 1e-9, 2000, 1.0) for p in probs],
        "tdoa solve": lambda k: [k.nelder_mead_tdoa(p[0], p[1], p[2] - p[2][0], p[3], p[4], 1e-6, 1e-9, 2000, 1.0)
                                 for p in probs],
        "range-rate mask (20k)": lambda k: k.range_rate_mask(t, d, 0.8),
    }
    impls = backends()
    print(f"{'kernel':<24}" + "".join(f"{name:>14}" for name in impls) + f"{'speedup':>10}")
    for label, fn in cases.items():
        times = {name: min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) for name, k in impls.items()}
        row = f"{label:<24}" + "".join(f"{times[n] * 1e3:>11.2f} ms" for n in impls)
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
