"""Benchmark the numba kernels against the pure-numpy reference.

Runs each hot kernel on matched inputs through both backends and prints
a wall-time table with speedups.  Usage:

    python3 benchmarks/bench_kernels.py [--bits N] [--repeats K]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from ionramp import _kernels_numba as nb
from ionramp import _kernels_numpy as knp


def _problem(n_bits: int, seed: int = 7):
    rng = np.random.default_rng(seed)
    dim = 2**n_bits
    diag = rng.normal(size=dim)
    psi = rng.normal(size=dim) + 1.0j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    return diag, psi


def _time(fn, repeats: int) -> float:
    fn()  # warmup (first numba call compiles)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_apply_h(n_bits: int, repeats: int) -> tuple[float, float]:
    diag, psi = _problem(n_bits)
    t_np = _time(lambda: knp.apply_h(diag, 1.7, n_bits, psi), repeats)
    t_nb = _time(lambda: nb.apply_h(diag, 1.7, n_bits, psi), repeats)
    return t_np, t_nb


def bench_rk4_chunk(n_bits: int, repeats: int) -> tuple[float, float]:
    rng = np.random.default_rng(13)
    diag, psi = _problem(n_bits)
    n_steps = 200
    b_edges = np.abs(rng.normal(size=n_steps + 1)) + 0.1
    b_mids = 0.5 * (b_edges[:-1] + b_edges[1:])
    t_np = _time(
        lambda: knp.rk4_chunk(diag, n_bits, b_edges, b_mids, 1e-4, psi.copy()), repeats
    )
    t_nb = _time(
        lambda: nb.rk4_chunk(diag, n_bits, b_edges, b_mids, 1e-4, psi.copy()), repeats
    )
    return t_np, t_nb


def bench_lz_propagate(repeats: int) -> tuple[float, float]:
    psi0 = np.array([0.6, 0.8j], dtype=np.complex128)
    args = (5.0, 0.0, 0.13, 2.0, 200_000)
    t_np = _time(lambda: knp.lz_propagate(*args, psi0.copy()), repeats)
    t_nb = _time(lambda: nb.lz_propagate(*args, psi0.copy()), repeats)
    return t_np, t_nb


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--bits", type=int, default=12, help="spins for the state kernels")
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats (best-of)")
    args = parser.parse_args()

    rows = [
        (f"apply_h (n={args.bits})", *bench_apply_h(args.bits, args.repeats)),
        (f"rk4_chunk (n={args.bits}, 200 steps)", *bench_rk4_chunk(args.bits, args.repeats)),
        ("lz_propagate (200k steps)", *bench_lz_propagate(args.repeats)),
    ]
    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for name, t_np, t_nb in rows:
        print(
            f"{name:<{width}}  {t_np * 1e3:>8.2f}ms  {t_nb * 1e3:>8.2f}ms  "
            f"{t_np / t_nb:>7.1f}x"
        )


if __name__ == "__main__":
    main()
