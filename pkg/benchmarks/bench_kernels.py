"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from kickrotor import _kernels_py

try:
    from kickrotor import _kernels_ext
except ImportError:
    _kernels_ext = None


def cases(rng):
    amps = rng.normal(size=(32, 1024)) + 1j * rng.normal(size=(32, 1024))
    p2 = rng.uniform(0, 1e4, size=(32, 1024))
    theta = rng.uniform(0, 2 * np.pi, 100_000)
    t = np.sort(rng.uniform(0, 20, 40))
    s = np.ones(40)
    w = np.full(40, 0.054)
    f = np.linspace(0.5, 1.5, 4001)
    return {
        "phase_multiply 32x1024": lambda m: m.phase_multiply(amps, p2, 1e-3),
        "standard_map 1e5 x 20": lambda m: m.standard_map(theta.copy(), np.zeros_like(theta), 10.0, 20),
        "comb_power 40 x 4001": lambda m: m.comb_power(t, s, w, f),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    mods = [("python", _kernels_py)]
    if _kernels_ext is not None:
        mods.append(("compiled", _kernels_ext))
    else:
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':26s}" + "".join(f"{n:>12s}" for n, _ in mods) + "     speedup")
    for name, fn in cases(rng).items():
        times = [min(timeit.repeat(lambda: fn(m), number=1, repeat=args.repeat)) for _, m in mods]
        row = f"{name:26s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"  {times[0] / times[1]:8.2f}x"
        print(row)


if __name__ == "__main__":
    main()
