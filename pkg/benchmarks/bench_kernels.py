"""Compare the numba and interpreted variants of each hot kernel.

    python3 benchmarks/bench_kernels.py [--horizon 200000] [--repeat 3]

Both variants are called directly, so the result does not depend on
E3BANDIT_DISABLE_JIT.  Outputs are checked for equality before timing.
"""
import argparse
import time

import numpy as np

from e3bandit import kernels
from e3bandit._accel import HAVE_NUMBA


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(horizon, rng):
    means = np.array([0.1, 0.5, 0.6, 0.9])
    kinds = np.zeros(4, dtype=np.int64)
    u = rng.random(horizon)
    yield "ucb1_loop", (means, kinds, u, horizon), kernels.ucb1_loop_py, kernels.ucb1_loop_jit

    values = rng.random((5, 6))
    yield "auction", (values, 0.001, 10**6), kernels.auction_py, kernels.auction_jit

    team = rng.random((3, 3))
    actions = rng.integers(0, 3, size=(horizon, 3)).astype(np.int8)
    yield "slot_deficits", (actions, team, 1.6), kernels.slot_deficits_py, kernels.slot_deficits_jit


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--horizon", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'numpy (s)':>12}{'numba (s)':>12}{'speedup':>10}")
    for name, call_args, py, jit in cases(args.horizon, rng):
        jit(*call_args)  # compile outside the timed region
        if not same(py(*call_args), jit(*call_args)):
            raise SystemExit(f"{name}: variants disagree")
        t_py = best_of(lambda: py(*call_args), args.repeat)
        t_jit = best_of(lambda: jit(*call_args), args.repeat)
        print(f"{name:<14}{t_py:>12.4f}{t_jit:>12.4f}{t_py / t_jit:>9.1f}x")


if __name__ == "__main__":
    main()
