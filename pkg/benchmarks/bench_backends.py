"""Compare the compiled and numpy reward-draw backends.

Reports the median time of the raw kernels over several batch sizes and of
an end-to-end Monte Carlo of batched elimination, and confirms both
backends return identical draws from identical generator states.

    python benchmarks/bench_backends.py --repeat 5
"""

import argparse
import statistics
import time

import numpy as np

from collab_bandit import kernels
from collab_bandit.batched import BatchConfig, run_batched_mab
from collab_bandit.core import Arm, Instance, RngStream


def _median_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def bench_kernels(backends, sizes, repeat):
    arms = {"bernoulli": Arm.bernoulli(0.3), "discrete-4": Arm.discrete([(0.0, 0.1), (0.25, 0.2), (0.5, 0.3), (1.0, 0.4)])}
    print(f"{'kernel':<14}{'arm':<12}{'n':>10}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}")
    for kernel in ("draw_counts", "draw_indices"):
        for name, arm in arms.items():
            for n in sizes:
                row = {}
                outs = {}
                for b, (counts, indices) in backends.items():
                    fn = counts if kernel == "draw_counts" else indices
                    bg = np.random.PCG64(12345)
                    outs[b] = fn(np.random.PCG64(12345), n, arm.cdf)
                    row[b] = _median_time(lambda: fn(bg, n, arm.cdf), repeat)
                ref = next(iter(outs.values()))
                if not all(np.array_equal(ref, o) for o in outs.values()):
                    raise SystemExit(f"backends disagree on {kernel} {name} n={n}")
                speed = row["python"] / row["cython"] if "cython" in row else float("nan")
                print(
                    f"{kernel:<14}{name:<12}{n:>10}"
                    + "".join(f"{row[b] * 1e3:>12.3f}ms" for b in backends)
                    + f"{speed:>9.2f}x"
                )


def bench_end_to_end(backends, trials, repeat):
    inst = Instance.bernoulli([0.75, 0.25])
    config = BatchConfig(2.0, 100_000)
    print(f"\nbatched elimination, T=1e5, {trials} trials")
    results = {}
    for b, (counts, indices) in backends.items():
        kernels_saved = (kernels.draw_counts, kernels.draw_indices)
        kernels.draw_counts, kernels.draw_indices = counts, indices
        try:
            def go():
                return [run_batched_mab(inst, config, RngStream(1, (t,))).total_regret for t in range(trials)]

            results[b] = go()
            print(f"  {b:<8}{_median_time(go, repeat) * 1e3:>10.1f} ms")
        finally:
            kernels.draw_counts, kernels.draw_indices = kernels_saved
    ref = next(iter(results.values()))
    print("  regrets identical across backends:", all(r == ref for r in results.values()))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--sizes", type=int, nargs="+", default=[16, 1024, 65536, 1_000_000])
    args = parser.parse_args()
    backends = kernels.available_backends()
    print("backends:", ", ".join(backends), "| selected at import:", kernels.BACKEND)
    bench_kernels(backends, args.sizes, args.repeat)
    bench_end_to_end(backends, args.trials, args.repeat)


if __name__ == "__main__":
    main()
