"""Compiled vs numpy kernels on the workloads the acceptance checks use.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]
"""
import argparse
import time

from completionsim import _pykernels as numpy_backend
from completionsim.hashing import loss_threshold, stream_key

try:
    from completionsim import _kernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None


def workloads(scale):
    rare = loss_threshold(1e-6)
    msgs = max(1, int(200 * scale))
    return {
        "intact_messages (262144 chunks x %d msgs)" % msgs:
            lambda k: k.intact_messages(2024, 1, msgs, 262144, 0, rare),
        "count_losses (10^7 draws)":
            lambda k: k.count_losses(stream_key(1, 1), 0, int(10 ** 7 * scale), rare),
        "lost_indices (10^6 chunks, rate 1e-3)":
            lambda k: k.lost_indices(stream_key(2, 1), 0, int(10 ** 6 * scale), loss_threshold(1e-3)),
        "ecmp_max_units (10^4 trials, 128 units)":
            lambda k: k.ecmp_max_units(9, int(10 ** 4 * scale), 128, 16, 7),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args()
    print(f"{'kernel':<44}{'numpy s':>10}{'compiled s':>12}{'speedup':>9}")
    for name, fn in workloads(args.scale).items():
        slow = best_of(lambda: fn(numpy_backend), args.repeat)
        if compiled_backend is None:
            print(f"{name:<44}{slow:>10.4f}{'n/a':>12}{'':>9}")
            continue
        fast = best_of(lambda: fn(compiled_backend), args.repeat)
        print(f"{name:<44}{slow:>10.4f}{fast:>12.4f}{slow / fast:>8.1f}x")


if __name__ == "__main__":
    main()
