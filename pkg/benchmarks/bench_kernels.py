"""Benchmark the definitional-builder kernels: numba @njit vs pure numpy.

Usage:  python3 benchmarks/bench_kernels.py [--repeats N]

The same instances run through both engines (the env var PDM_CAUSAL_NUMBA
is bypassed by passing engine= explicitly); numba gets one warmup call so
JIT compilation is not timed.
"""

import argparse
import time

import numpy as np

from pdmcausal._kernels import HAVE_NUMBA
from pdmcausal.channels import random_channel, random_state
from pdmcausal.pdm import pdm_from_measurements
from pdmcausal.rng import generator


def build_cases():
    rng = generator(0xBE7C)
    cases = []
    state2 = random_state(4, rng, factors=(2, 2))
    cases.append(("2 slots x 2 qubits (256 tuples)", state2, [random_channel(4, rng)]))
    state1 = random_state(2, rng)
    cases.append(
        ("3 slots x 1 qubit (64 tuples)", state1, [random_channel(2, rng) for _ in range(2)])
    )
    cases.append(
        ("6 slots x 1 qubit (4096 tuples)", state1, [random_channel(2, rng) for _ in range(5)])
    )
    return cases


def time_engine(state, channels, engine, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        pdm_from_measurements(state, channels, engine=engine)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    cases = build_cases()
    print(f"{'case':40s} {'numpy':>12s} {'numba':>12s} {'speedup':>9s}")
    for name, state, channels in cases:
        ref = None
        t_np = time_engine(state, channels, "numpy", args.repeats)
        if HAVE_NUMBA:
            a = pdm_from_measurements(state, channels, engine="numpy")
            b = pdm_from_measurements(state, channels, engine="numba")  # warmup + check
            dev = np.abs(a.mat.data - b.mat.data).max()
            assert dev < 1e-12, f"engines disagree by {dev:.3e}"
            t_nb = time_engine(state, channels, "numba", args.repeats)
            print(f"{name:40s} {t_np * 1e3:10.3f}ms {t_nb * 1e3:10.3f}ms {t_np / t_nb:8.1f}x")
        else:
            print(f"{name:40s} {t_np * 1e3:10.3f}ms {'n/a':>12s} {'n/a':>9s}")
    if not HAVE_NUMBA:
        print("numba not importable: only the numpy fallback was timed")


if __name__ == "__main__":
    main()
