"""Compare the compiled and pure-Python kernels on the two hot loops.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from rfilink import kernels
from rfilink.modem import Modulation


def _best(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _dfe_args(n: int, complex_: bool):
    rng = np.random.default_rng(0)
    mod = Modulation.QAM16 if complex_ else Modulation.PAM4
    x = rng.normal(size=n) + (1j * rng.normal(size=n) if complex_ else 0)
    lv = np.ascontiguousarray(mod.axis.levels, dtype=float)
    ref = mod.points[rng.integers(0, mod.order, n // 5)].astype(complex)

    def make():
        ffe = np.zeros(3, dtype=complex)
        ffe[0] = 1
        return (x.astype(complex), ffe, np.zeros(4, dtype=complex), 0, 0.005, ref, len(ref), lv,
                lv if complex_ else np.empty(0), 10.0)

    return make


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    py = kernels.get_backend("python")
    try:
        cy = kernels.get_backend("cython")
    except ImportError:
        raise SystemExit("compiled extension not built; run `pip install --no-build-isolation -e .`")

    cases = [
        ("lfsr PRBS31, 1e6 bits", lambda b: (lambda: b.lfsr_bits(31, 28, 1, 1_000_000))),
    ]
    for n, cplx in ((100_000, False), (100_000, True)):
        make = _dfe_args(n, cplx)
        label = f"dfe {'complex QAM16' if cplx else 'real PAM4'}, {n} symbols, 3 FFE + 4 DFE"
        cases.append((label, lambda b, make=make: (lambda: b.dfe_equalize(*make()))))

    print(f"{'kernel':48s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}")
    for label, bind in cases:
        tp = _best(bind(py), args.repeat)
        tc = _best(bind(cy), args.repeat)
        print(f"{label:48s} {tp:10.3f} {tc:10.4f} {tp / tc:7.0f}x")


if __name__ == "__main__":
    main()
