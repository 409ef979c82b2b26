"""Compare the compiled and NumPy Biot-Savart kernels.

    python3 benchmarks/bench_kernels.py [--points 1271] [--segments 2000 8000] [--repeat 3]

Prints wall time per call for each backend, the speed-up and the largest
absolute difference between the two results.
"""
import argparse
import timeit

import numpy as np

from flapwing import kernels


def case(n_points, n_segments, seed=0):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-0.2, 0.2, (n_points, 3))
    a = rng.uniform(-0.2, 0.2, (n_segments, 3))
    b = a + rng.normal(0.0, 0.01, (n_segments, 3))
    g = rng.normal(0.0, 0.01, n_segments)
    return pts, a, b, g


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=41 * 31)
    ap.add_argument("--segments", type=int, nargs="+", default=[500, 2000, 8000])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--core", type=float, default=2e-3)
    args = ap.parse_args(argv)
    backends = ["numpy"] + (["compiled"] if kernels.BACKEND == "compiled" else [])
    if len(backends) == 1:
        print("compiled extension not built; timing the NumPy backend only")
    print(f"{'segments':>9} {'points':>7} " + " ".join(f"{b + ' [s]':>14}" for b in backends)
          + ("    speed-up   max |diff|" if len(backends) == 2 else ""))
    for m in args.segments:
        pts, a, b, g = case(args.points, m)
        times, results = [], []
        for be in backends:
            fn = lambda be=be: kernels.segment_velocities(pts, a, b, g, args.core, backend=be)  # noqa: E731
            results.append(fn())
            times.append(min(timeit.repeat(fn, number=1, repeat=args.repeat)))
        line = f"{m:>9d} {args.points:>7d} " + " ".join(f"{t:>14.4f}" for t in times)
        if len(backends) == 2:
            line += f"  {times[0] / times[1]:>9.1f}x  {np.abs(results[0] - results[1]).max():.2e}"
        print(line)


if __name__ == "__main__":
    main()
