"""Timing comparison of the decision-kernel backends.

Measures the raw kernel on grid sizes the harness actually uses, checks
that both backends return bitwise-identical objectives, and times one
full search on the stock benchmark problem. Run from the repo root:

    python3 benchmarks/kernel_benchmark.py [--repeats N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from scansim._kernels import (
    available_backends,
    decision_objectives,
    get_backend,
    set_backend,
)
from scansim.grid import GridConfig
from scansim.searchers import SearchConfig, run_search
from scansim.synthetic import benchmark_trial


def kernel_inputs(n_cells: int, n_samples: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    return dict(
        log_w=rng.normal(size=n_cells),
        probs=np.full(n_cells, 1.0 / n_cells),
        d2=rng.uniform(0.0, 1.0, (n_cells, n_cells)),
        mu0=rng.uniform(-0.5, 0.5, (n_cells, n_cells)),
        dmu=rng.uniform(0.5, 1.5, (n_cells, n_cells)),
        sigma=rng.uniform(0.1, 2.0, (n_cells, n_cells)),
        z=rng.standard_normal((n_samples, n_cells)),
    )


def best_of(fn, repeats: int) -> float:
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def time_kernel(repeats: int) -> None:
    cases = [
        ("16x12 grid", 192, 64),
        ("32x24 grid", 768, 32),
        ("32x24 grid", 768, 64),
        ("32x24 grid", 768, 128),
    ]
    print("raw kernel, one decision (candidates = cells):")
    print(f"{'case':<12} {'cells':>5} {'samples':>7} "
          f"{'numpy ms':>9} {'compiled ms':>11} {'speedup':>8}")
    for label, n_cells, n_samples in cases:
        inputs = kernel_inputs(n_cells, n_samples)
        results = {}
        timings = {}
        for backend in available_backends():
            set_backend(backend)
            results[backend] = decision_objectives(**inputs)
            timings[backend] = best_of(
                lambda: decision_objectives(**inputs), repeats
            )
        if len(results) == 2 and not np.array_equal(
            results["numpy"], results["compiled"]
        ):
            raise SystemExit("backends disagree; benchmark aborted")
        np_ms = timings.get("numpy", float("nan")) * 1e3
        cy_ms = timings.get("compiled", float("nan")) * 1e3
        ratio = np_ms / cy_ms if cy_ms == cy_ms else float("nan")
        print(f"{label:<12} {n_cells:>5} {n_samples:>7} "
              f"{np_ms:>9.2f} {cy_ms:>11.2f} {ratio:>7.1f}x")
    print()


def time_search(repeats: int) -> None:
    trial, context = benchmark_trial(GridConfig(image_width_px=1024, image_height_px=768))
    config = SearchConfig(policy="ibs", max_saccades=12, mc_samples=64, seed=0)
    print("full search, 32x24 grid, 12 saccades, mc_samples=64, ibs policy:")
    for backend in available_backends():
        set_backend(backend)
        t = best_of(lambda: run_search(trial, context, config), repeats)
        print(f"  {backend:<9} {t * 1e3:8.1f} ms")
    print()


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3, help="best-of repeats")
    args = parser.parse_args()
    saved = get_backend()
    try:
        print(f"available backends: {', '.join(available_backends())}\n")
        time_kernel(args.repeats)
        time_search(args.repeats)
    finally:
        set_backend(saved)


if __name__ == "__main__":
    main()
