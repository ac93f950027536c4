"""Pure-Python versions of the compiled kernels.

Same signatures and bit-identical results as ``_kernels.pyx``; selected by
``rfilink.kernels`` when the extension is missing or disabled.
"""

from __future__ import annotations

import numpy as np


def lfsr_bits(order: int, tap: int, seed: int, n: int) -> np.ndarray:
    mask = (1 << order) - 1
    state = seed
    out = np.empty(n, dtype=np.uint8)
    for i in range(n):
        fb = ((state >> (order - 1)) ^ (state >> (tap - 1))) & 1
        state = ((state << 1) | fb) & mask
        out[i] = fb
    return out


def _nearest(levels, v: float) -> float:
    best = levels[0]
    dbest = abs(v - best)
    for lv in levels[1:]:
        d = abs(v - lv)
        if d < dbest:
            dbest = d
            best = lv
    return best


def dfe_equalize(x, ffe, dfe, ffe_cursor, mu, ref, n_train, levels_i, levels_q, tap_limit):
    xs = [complex(v) for v in x]
    refs = [complex(v) for v in ref]
    f = [complex(v) for v in ffe]
    b = [complex(v) for v in dfe]
    li = [float(v) for v in levels_i]
    lq = [float(v) for v in levels_q]
    n, nf, nb = len(xs), len(f), len(b)
    lim2 = tap_limit * tap_limit
    adapt = mu > 0.0
    diverged_at = -1

    y = [0j] * n
    dd = [0j] * n
    err = [0j] * n
    fb = [0j] * n
    for k in range(n):
        acc = 0j
        for j in range(nf):
            idx = k + j - ffe_cursor
            if 0 <= idx < n:
                acc += f[j] * xs[idx]
        for j in range(nb):
            idx = k - 1 - j
            if idx >= 0:
                acc -= b[j] * fb[idx]
        y[k] = acc
        if lq:
            dec = complex(_nearest(li, acc.real), _nearest(lq, acc.imag))
        else:
            dec = complex(_nearest(li, acc.real), 0.0)
        dd[k] = dec
        r = refs[k] if k < n_train else dec
        fb[k] = r
        e = r - acc
        err[k] = e
        if adapt:
            for j in range(nf):
                idx = k + j - ffe_cursor
                if 0 <= idx < n:
                    f[j] += mu * e * xs[idx].conjugate()
                    a2 = f[j].real ** 2 + f[j].imag ** 2
                    if a2 > lim2 or a2 != a2:
                        diverged_at = k
            for j in range(nb):
                idx = k - 1 - j
                if idx >= 0:
                    b[j] -= mu * e * fb[idx].conjugate()
                    a2 = b[j].real ** 2 + b[j].imag ** 2
                    if a2 > lim2 or a2 != a2:
                        diverged_at = k
            if diverged_at >= 0:
                adapt = False
    ffe[:] = f
    dfe[:] = b
    return (
        np.asarray(y, dtype=np.complex128),
        np.asarray(dd, dtype=np.complex128),
        np.asarray(err, dtype=np.complex128),
        diverged_at,
    )
