"""Time the compiled and pure-Python kernels on the same inputs.

    python benchmarks/bench_kernels.py [--smoke-reps N] [--budget T]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ocbas import _pykernels
from ocbas.renewal import DiscretePmf
from ocbas.testbeds import sensor_mask

try:
    from ocbas import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--smoke-reps", type=int, default=2000)
    parser.add_argument("--budget", type=int, default=10_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    backends = {"python": _pykernels}
    if _ckernels is not None:
        backends["cython"] = _ckernels

    mask = sensor_mask((1, 2, 3))
    f = DiscretePmf.uniform(1, 19)
    timings: dict[str, dict[str, float]] = {}
    for name, mod in backends.items():
        timings[name] = {
            "smoke": _best_of(lambda: mod.smoke_response_times(mask, args.smoke_reps, np.random.PCG64(0), 10**6),
                              args.repeat),
            "renewal": _best_of(lambda: mod.renewal_counts(f.probs, f.support_min, args.budget), args.repeat),
        }

    print(f"{'kernel':<10}{'backend':<10}{'seconds':>12}{'speedup':>10}")
    for kernel in ("smoke", "renewal"):
        base = timings["python"][kernel]
        for name in backends:
            t = timings[name][kernel]
            print(f"{kernel:<10}{name:<10}{t:>12.4f}{base / t:>10.1f}")
    print(f"\nsmoke: {args.smoke_reps} fires for placement (1,2,3); renewal: durations uniform 1..19, T={args.budget}")


if __name__ == "__main__":
    main()
