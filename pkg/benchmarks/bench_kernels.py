"""Compare the compiled and numpy PDP kernels.

    python benchmarks/bench_kernels.py [--rays 200] [--bins 4096] [--repeat 20]
"""

import argparse
import timeit

import numpy as np

from mmwcal.kernels import available_backends, get_backend


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--rays", type=int, default=200)
    parser.add_argument("--bins", type=int, default=4096)
    parser.add_argument("--span", type=int, default=16)
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    offsets = np.ascontiguousarray(rng.uniform(args.span, args.bins - args.span, args.rays))
    powers = np.ascontiguousarray(10.0 ** rng.uniform(-9, -4, args.rays))
    bins = np.ascontiguousarray(1e-10 + get_backend("python").deposit_pulses(offsets, powers, args.bins, args.span))

    print(f"{'backend':<8} {'deposit_pulses [ms]':>20} {'first_path [us]':>16}")
    results = {}
    for name in available_backends():
        k = get_backend(name)
        dep = timeit.timeit(lambda: k.deposit_pulses(offsets, powers, args.bins, args.span), number=args.repeat)
        fp = timeit.timeit(lambda: k.first_path(bins, 1e-8, 2), number=args.repeat * 50)
        results[name] = (dep / args.repeat * 1e3, fp / (args.repeat * 50) * 1e6)
        print(f"{name:<8} {results[name][0]:>20.3f} {results[name][1]:>16.2f}")
    if "cython" in results:
        print(
            f"speedup: deposit x{results['python'][0] / results['cython'][0]:.1f}, "
            f"first_path x{results['python'][1] / results['cython'][1]:.1f}"
        )


if __name__ == "__main__":
    main()
