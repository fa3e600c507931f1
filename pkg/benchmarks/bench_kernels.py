"""Benchmark: compiled event-loop kernel against the NumPy fallback.

Runs the same seeded simulations through both implementations, checks the
paths agree bit for bit, and reports events/second.  Usage:

    python benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from spinldp.kernels import using_compiled_core
from spinldp.lattice import LocalRateSpec, SpinConfiguration, glauber_simulate


def bench_case(name, dim, side, radius, T, seed=12345):
    config = SpinConfiguration.random(dim, side, seed=seed)
    rates = (
        LocalRateSpec.constant(1.0, dim)
        if radius == 0
        else LocalRateSpec.random_table(dim, radius, seed=seed + 1)
    )
    rows = []
    results = {}
    for label, force_pure in (("compiled", False), ("pure", True)):
        if label == "compiled" and not using_compiled_core():
            continue
        t0 = time.perf_counter()
        final, log = glauber_simulate(config, rates, T, seed=seed + 2,
                                      force_pure=force_pure)
        dt = time.perf_counter() - t0
        results[label] = (final, log)
        rows.append((label, len(log.times), dt, len(log.times) / dt))
    if len(results) == 2:
        same = np.array_equal(results["compiled"][0].values, results["pure"][0].values)
        same = same and np.array_equal(results["compiled"][1].times, results["pure"][1].times)
    else:
        same = None
    print(f"\n{name}  (dim={dim} side={side} radius={radius} T={T})")
    for label, events, dt, rate in rows:
        print(f"  {label:9s} {events:9d} events  {dt:8.3f} s  {rate:12.0f} events/s")
    if same is not None:
        speedup = rows[1][2] / rows[0][2]
        print(f"  bit-identical paths: {same}   speedup: {speedup:.1f}x")
    return rows


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="smaller workloads")
    args = parser.parse_args()

    print(f"compiled core available: {using_compiled_core()}")
    if args.quick:
        cases = [
            ("1d independent flips", 1, 401, 0, 2.0),
            ("1d nearest-neighbor rates", 1, 401, 1, 2.0),
            ("2d nearest-neighbor rates", 2, 21, 1, 1.0),
        ]
    else:
        cases = [
            ("1d independent flips", 1, 2001, 0, 5.0),
            ("1d nearest-neighbor rates", 1, 2001, 1, 5.0),
            ("2d independent flips", 2, 41, 0, 5.0),
            ("2d nearest-neighbor rates", 2, 41, 1, 5.0),
        ]
    for case in cases:
        bench_case(*case)


if __name__ == "__main__":
    main()
