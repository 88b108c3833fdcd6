"""Benchmark the compiled TEBD kernel against the pure-numpy twin.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times the isolated two-site update at several bond dimensions and a full
evolution workload (L = 16 chain at the model point), for both backends.
"""

import argparse
import time

import numpy as np

from opspread import _kernels_py
from opspread.evolution import QuenchParams, build_trotter_layer, step
from opspread.kernels import HAVE_COMPILED, set_backend
from opspread.mpo import HARD_CHI_CAP
from opspread.mps import local_operator_mps

try:
    from opspread import _kernels_cy
except ImportError:
    _kernels_cy = None


def bench_kernel(fn, chi, m, repeat):
    rng = np.random.default_rng(42)
    a = rng.standard_normal((chi, 4, m))
    b = rng.standard_normal((m, 4, chi))
    q, _ = np.linalg.qr(rng.standard_normal((16, 16)))
    gate = np.ascontiguousarray(q)
    fn(a, b, gate, chi, 1e-10, True, HARD_CHI_CAP)  # warm up
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(a, b, gate, chi, 1e-10, True, HARD_CHI_CAP)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_evolution(backend, n_steps=30, L=16, chi=64):
    set_backend(backend)
    p = QuenchParams(L=L)
    layer = build_trotter_layer(p, 0.02)
    st = local_operator_mps("x", L // 2, L)
    t0 = time.perf_counter()
    for n in range(1, n_steps + 1):
        step(st, layer, chi, 1e-10, time=n * 0.02)
    return time.perf_counter() - t0, max(st.bond_dims())


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=7)
    args = parser.parse_args()

    if not HAVE_COMPILED:
        print("compiled kernel not built; showing pure-python timings only")

    print(f"{'two-site update':<24}{'python':>12}{'compiled':>12}{'speedup':>10}")
    for chi, m in [(8, 8), (32, 32), (64, 64), (128, 128), (256, 256)]:
        t_py = bench_kernel(_kernels_py.two_site_apply, chi, m, args.repeat)
        row = f"chi={chi:<4} m={m:<14}{t_py * 1e3:>10.3f}ms"
        if HAVE_COMPILED:
            t_cy = bench_kernel(_kernels_cy.two_site_apply, chi, m, args.repeat)
            row += f"{t_cy * 1e3:>10.3f}ms{t_py / t_cy:>9.2f}x"
        print(row)

    print()
    t_py, chi_py = bench_evolution("python")
    print(f"30-step evolution (L=16, chi<=64)  python:   {t_py:.2f}s "
          f"(max bond {chi_py})")
    if HAVE_COMPILED:
        t_cy, chi_cy = bench_evolution("compiled")
        print(f"30-step evolution (L=16, chi<=64)  compiled: {t_cy:.2f}s "
              f"(max bond {chi_cy})  speedup {t_py / t_cy:.2f}x")


if __name__ == "__main__":
    main()
