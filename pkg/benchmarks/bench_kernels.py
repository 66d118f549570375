#!/usr/bin/env python3
"""Benchmark the compiled kernel against the pure-numpy fallback.

Times the per-position steering-products stage (the hot kernel) and the full
scenario evaluation under both backends, on identical inputs.

    python3 benchmarks/bench_kernels.py --positions 20000 --repeat 5
"""

import argparse
import time

import numpy as np

from twl.kernels import HAVE_NUMBA, steering_forms
from twl.scenario import Scenario, position_tables, sample_positions


def time_call(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--positions", type=int, default=20000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    scenario = Scenario.reference_defaults(n_samples=args.positions)
    positions = sample_positions(scenario.region, args.positions, scenario.seed)

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    if HAVE_NUMBA:
        position_tables(scenario, positions[:64], backend="numba")  # compile once

    # isolate the kernel itself
    from twl.beamforming import directional_beams, orthonormal_basis
    from twl.pose import rotation_matrix, _link_angles_batch

    geo = _link_angles_batch(positions, rotation_matrix(*scenario.orientation))
    dirs = scenario.anchor_beam_directions()
    f = directional_beams(scenario.bs_array, dirs, "transmit").matrix
    w = directional_beams(scenario.bs_array, dirs, "receive").matrix
    u = orthonormal_basis(w)
    kernel_args = (
        scenario.bs_array.elements, scenario.bs_array.wavelength,
        f.T.copy(), u.conj().T.copy(), w.conj().T.copy(),
        geo["theta1"], geo["phi1"],
    )

    print(f"{args.positions} positions, {scenario.bs_array.n_elements} elements, "
          f"{scenario.n_beams} beams, best of {args.repeat}")
    print(f"{'stage':<24}" + "".join(f"{b:>12}" for b in backends))

    rows = {
        "steering_forms": lambda b: steering_forms(*kernel_args, backend=b),
        "position_tables": lambda b: position_tables(scenario, positions, backend=b),
    }
    timings = {}
    for stage, fn in rows.items():
        cells = []
        for backend in backends:
            t = time_call(lambda: fn(backend), args.repeat)
            timings[(stage, backend)] = t
            cells.append(f"{t * 1e3:10.1f}ms")
        print(f"{stage:<24}" + "".join(f"{c:>12}" for c in cells))

    if HAVE_NUMBA:
        ratio = timings[("position_tables", "numpy")] / timings[("position_tables", "numba")]
        print(f"numba speedup on full evaluation: {ratio:.2f}x")


if __name__ == "__main__":
    main()
