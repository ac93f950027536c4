"""Reference implementations written independently of the package code.

Each one is deliberately naive (loops, closed forms, brute force) so that a
bug in the fast path cannot hide behind the same bug in its check.
"""

from __future__ import annotations

import cmath
import math
from collections import deque
from itertools import product

import numpy as np


def lfsr_reference(order: int, tap: int, seed: int, n: int) -> list[int]:
    """Fibonacci LFSR, register held as a deque of bits (MSB = stage ``order``).

    Output bit = stage[order] XOR stage[tap]; that bit is shifted in at stage 1.
    """
    reg = deque(((seed >> i) & 1) for i in range(order))  # reg[i] = stage i+1
    out = []
    for _ in range(n):
        b = reg[order - 1] ^ reg[tap - 1]
        out.append(b)
        reg.pop()
        reg.appendleft(b)
    return out


def q_function(x: float) -> float:
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def nrz_ber(ebn0_db: float) -> float:
    return q_function(math.sqrt(2.0 * 10 ** (ebn0_db / 10)))


def invert_nrz_ber(target: float) -> float:
    """Eb/N0 in dB where Q(sqrt(2 Eb/N0)) = target, by bisection."""
    lo, hi = -10.0, 30.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if nrz_ber(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def direct_convolve(x, h) -> np.ndarray:
    x = list(x)
    h = list(h)
    out = [0.0] * (len(x) + len(h) - 1)
    for i, xi in enumerate(x):
        for j, hj in enumerate(h):
            out[i + j] += xi * hj
    return np.array(out)


def gray_pam_levels(m: int) -> dict[int, float]:
    """Gray label -> level for unit-energy PAM-m, from the reflected code."""
    scale = math.sqrt(3.0 / (m * m - 1))
    return {i ^ (i >> 1): (2 * i - (m - 1)) * scale for i in range(m)}


def cyclic_autocorrelation(bits) -> np.ndarray:
    s = 1 - 2 * np.asarray(bits, dtype=float)
    n = len(s)
    return np.array([np.dot(s, np.roll(s, k)) / n for k in range(n)])


def rc_pulse(t: float, rolloff: float) -> float:
    """Raised-cosine (RRC * RRC) value at time t in symbols."""
    if t == 0:
        return 1.0
    if rolloff > 0 and abs(abs(t) - 1 / (2 * rolloff)) < 1e-12:
        return math.pi / 4 * math.sin(math.pi / (2 * rolloff)) / (math.pi / (2 * rolloff))
    return math.sin(math.pi * t) / (math.pi * t) * math.cos(math.pi * rolloff * t) / (1 - (2 * rolloff * t) ** 2)


def dft_power(x) -> float:
    """Mean power from a plain DFT (Parseval)."""
    x = list(x)
    n = len(x)
    total = 0.0
    for k in range(n):
        acc = 0j
        for i, v in enumerate(x):
            acc += v * cmath.exp(-2j * math.pi * k * i / n)
        total += abs(acc) ** 2
    return total / n / n


def wiener_dfe(channel, ffe_len: int, dfe_len: int) -> tuple[np.ndarray, np.ndarray]:
    """MMSE FFE/DFE taps for a noiseless symbol-spaced channel with i.i.d. unit symbols.

    FFE taps act on x[k + j] (j = 0..ffe_len-1) and the DFE subtracts
    dfe[i] * a[k - 1 - i]. With perfect past decisions the optimum solves the
    normal equations over the joint regressor [x window, -past symbols].
    """
    h = np.asarray(channel, dtype=float)
    L = len(h)
    # regressor r = [x_k, ..., x_{k+F-1}, -a_{k-1}, ..., -a_{k-D}] in terms of symbols a_{k-D-L..k+F}
    lo = -(dfe_len + L)
    hi = ffe_len
    idx = list(range(lo, hi))
    pos = {v: i for i, v in enumerate(idx)}
    rows = []
    for j in range(ffe_len):  # x_{k+j} = sum_l h_l a_{k+j-l}
        r = np.zeros(len(idx))
        for l_, hl in enumerate(h):
            r[pos[j - l_]] += hl
        rows.append(r)
    for i in range(dfe_len):
        r = np.zeros(len(idx))
        r[pos[-1 - i]] = -1.0
        rows.append(r)
    A = np.array(rows)
    R = A @ A.T
    target = np.zeros(len(idx))
    target[pos[0]] = 1.0
    p = A @ target
    w = np.linalg.solve(R, p)
    return w[:ffe_len], w[ffe_len:]


def brute_force_allocation(candidates, max_bands: int) -> float:
    """Best total rate over pairwise-disjoint subsets; candidates are (lo, hi, rate)."""
    best = 0.0
    n = len(candidates)
    for mask in product((0, 1), repeat=n):
        chosen = [c for c, m in zip(candidates, mask) if m]
        if len(chosen) > max_bands:
            continue
        ok = all(a[1] <= b[0] or b[1] <= a[0] for i, a in enumerate(chosen) for b in chosen[i + 1 :])
        if ok:
            best = max(best, sum(c[2] for c in chosen))
    return best
