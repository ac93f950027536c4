"""BER, EVM and eye-diagram measurements."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .modem import Modulation, nearest_points
from .signal import SampledWaveform

_Z95 = 1.959963984540054


@dataclass(frozen=True)
class BerResult:
    ber: float
    ci95_low: float
    ci95_high: float
    n: int
    errors: int


def wilson_interval(errors: int, n: int, z: float = _Z95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = errors / n
    denom = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def measure_ber(tx_bits, rx_bits) -> BerResult:
    """Bit error ratio with a Wilson 95 % interval."""
    tx = np.asarray(tx_bits, dtype=np.uint8)
    rx = np.asarray(rx_bits, dtype=np.uint8)
    if tx.shape != rx.shape:
        raise ValueError(f"length mismatch: {tx.size} tx bits vs {rx.size} rx bits")
    n = int(tx.size)
    errors = int(np.count_nonzero(tx != rx))
    lo, hi = wilson_interval(errors, n)
    if errors == 0:
        lo = 0.0
    return BerResult(errors / n if n else 0.0, lo, hi, n, errors)


def measure_evm(rx_symbols, modulation: Modulation) -> float:
    """Decision-directed EVM in percent of the constellation rms."""
    mod = Modulation.parse(modulation)
    s = np.asarray(rx_symbols, dtype=complex)
    if s.size == 0:
        raise ValueError("no symbols")
    ideal = nearest_points(s, mod)
    ref_rms = np.sqrt(np.mean(np.abs(mod.points) ** 2))
    return float(100 * np.sqrt(np.mean(np.abs(s - ideal) ** 2)) / ref_rms)


@dataclass(frozen=True)
class EyeDiagram:
    counts: np.ndarray = field(repr=False)  # (bins_t, bins_v)
    t_edges: np.ndarray = field(repr=False)  # UI fraction
    v_edges: np.ndarray = field(repr=False)
    eye_height: float
    eye_width: float

    def rows(self):
        """(t_frac, v, count) triples at bin centres, for CSV export."""
        tc = 0.5 * (self.t_edges[:-1] + self.t_edges[1:])
        vc = 0.5 * (self.v_edges[:-1] + self.v_edges[1:])
        for i, t in enumerate(tc):
            for j, v in enumerate(vc):
                yield float(t), float(v), int(self.counts[i, j])


def _opening(profile: np.ndarray, thr_bins: list[int], bin_h: float) -> float:
    """Smallest empty-run height around each threshold bin (0 if the bin is hit)."""
    best = np.inf
    for b in thr_bins:
        if profile[b] > 0:
            return 0.0
        lo = b
        while lo > 0 and profile[lo - 1] == 0:
            lo -= 1
        hi = b
        while hi < len(profile) - 1 and profile[hi + 1] == 0:
            hi += 1
        # an empty run that reaches the histogram edge means a missing rail
        if lo == 0 or hi == len(profile) - 1:
            return 0.0
        best = min(best, (hi - lo + 1) * bin_h)
    return float(best)


def eye_histogram(
    wave: SampledWaveform,
    ui_s: float,
    bins_t: int = 64,
    bins_v: int = 128,
    skip_ui: int = 0,
    thresholds=None,
    t_offset_s: float = 0.0,
    v_range: tuple[float, float] | None = None,
) -> EyeDiagram:
    """Fold a waveform modulo one UI into a 2-D histogram and measure the eye.

    ``thresholds`` are the decision levels between adjacent rails (one for
    NRZ, N-1 for PAM-N); default is a single threshold at the sample mean.
    ``t_offset_s`` is the time that maps to UI fraction 0, so a sampling
    instant at ``t_offset_s + ui_s / 2`` lands in the centre of the eye.

    Eye height is the smallest vertical opening over all thresholds, taken
    from the samples in the centre 10 % of the UI. Eye width is the fraction
    of populated time bins whose own column shows a nonzero opening.
    """
    fs = wave.sample_rate_hz
    x = wave.samples
    t = np.arange(len(x)) / fs - t_offset_s
    keep = t >= skip_ui * ui_s
    if np.count_nonzero(keep) < 100 * ui_s * fs:
        raise ValueError(f"need at least {skip_ui} + 100 UI of samples")
    t, x = t[keep], x[keep]
    frac = np.mod(t / ui_s, 1.0)
    thr = [float(np.mean(x))] if thresholds is None else [float(v) for v in thresholds]
    if v_range is None:
        pad = 0.05 * max(float(np.ptp(x)), 1e-12)
        v_range = (float(x.min()) - pad, float(x.max()) + pad)
    t_edges = np.linspace(0.0, 1.0, bins_t + 1)
    v_edges = np.linspace(v_range[0], v_range[1], bins_v + 1)
    counts, _, _ = np.histogram2d(frac, x, bins=(t_edges, v_edges))
    counts = counts.astype(np.int64)
    bin_h = v_edges[1] - v_edges[0]
    thr_bins = [int(np.clip(np.searchsorted(v_edges, v) - 1, 0, bins_v - 1)) for v in thr]

    tc = 0.5 * (t_edges[:-1] + t_edges[1:])
    centre = np.abs(tc - 0.5) <= 0.05
    if not centre.any():
        centre[np.argmin(np.abs(tc - 0.5))] = True
    height = _opening(counts[centre].sum(axis=0), thr_bins, bin_h)
    # columns no sample falls into (bins_t > samples per UI) carry no information
    filled = [i for i in range(bins_t) if counts[i].any()]
    width = float(np.mean([_opening(counts[i], thr_bins, bin_h) > 0 for i in filled])) if filled else 0.0
    return EyeDiagram(counts, t_edges, v_edges, height, width)
