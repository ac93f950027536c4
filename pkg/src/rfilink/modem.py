"""Symbol mapping and multi-band waveform composition."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import signal as sps_signal

from .signal import (
    DEFAULT_ROLLOFF,
    ComplexEnvelope,
    SampledWaveform,
    downmix,
    mix_carrier,
    rrc_taps,
    shape_symbols,
)

# RRC span used by the modem; 32 symbols keeps out-of-band leakage near -50 dB.
RRC_SPAN = 32


class Modulation(enum.Enum):
    NRZ = ("pam", 1)
    PAM4 = ("pam", 2)
    PAM8 = ("pam", 3)
    PAM16 = ("pam", 4)
    OOK = ("ook", 1)
    QPSK = ("qam", 2)
    QAM16 = ("qam", 4)
    QAM64 = ("qam", 6)
    QAM256 = ("qam", 8)

    def __init__(self, family: str, bits_per_symbol: int) -> None:
        self.family = family
        self.bits_per_symbol = bits_per_symbol

    @property
    def order(self) -> int:
        return 1 << self.bits_per_symbol

    @property
    def is_complex(self) -> bool:
        return self.family == "qam"

    @classmethod
    def parse(cls, name: "str | Modulation") -> "Modulation":
        if isinstance(name, Modulation):
            return name
        key = str(name).upper().replace("-", "").replace("_", "")
        aliases = {"PAM2": "NRZ", "QAM4": "QPSK", "4QAM": "QPSK"}
        key = aliases.get(key, key)
        if key.endswith("QAM") and key[:-3].isdigit():
            key = "QAM" + key[:-3]
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown modulation {name!r}") from None

    @cached_property
    def axis(self) -> "_Axis":
        """Per-dimension level table (I; Q uses the same table for QAM)."""
        if self.family == "ook":
            return _Axis(levels=np.array([0.0, math.sqrt(2.0)]), labels=np.array([0, 1]))
        m = self.order if self.family == "pam" else 1 << (self.bits_per_symbol // 2)
        if self.family == "pam":
            scale = math.sqrt(3.0 / (m * m - 1))
        else:
            scale = math.sqrt(3.0 / (2.0 * (m * m - 1)))
        idx = np.arange(m)
        return _Axis(levels=(2 * idx - (m - 1)) * scale, labels=idx ^ (idx >> 1))

    @cached_property
    def points(self) -> np.ndarray:
        """Constellation indexed by bit label (integer value of the bit group, MSB first)."""
        ax = self.axis
        if not self.is_complex:
            out = np.empty(self.order)
            out[ax.labels] = ax.levels
            return out.astype(complex)
        half = self.bits_per_symbol // 2
        m = 1 << half
        by_label = np.empty(m)
        by_label[ax.labels] = ax.levels
        li = np.arange(self.order) >> half
        lq = np.arange(self.order) & (m - 1)
        return by_label[li] + 1j * by_label[lq]

    @cached_property
    def min_distance(self) -> float:
        p = self.points
        d = np.abs(p[:, None] - p[None, :])
        return float(d[d > 0].min())


@dataclass(frozen=True)
class _Axis:
    levels: np.ndarray  # ascending
    labels: np.ndarray  # Gray label of each level


def _bits_to_labels(bits: np.ndarray, k: int) -> np.ndarray:
    groups = bits.reshape(-1, k).astype(np.int64)
    weights = 1 << np.arange(k - 1, -1, -1)
    return groups @ weights


def _labels_to_bits(labels: np.ndarray, k: int) -> np.ndarray:
    shifts = np.arange(k - 1, -1, -1)
    return ((labels[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def map_symbols(bits, modulation: Modulation) -> np.ndarray:
    """Gray-map a bit sequence onto unit-average-energy constellation points."""
    mod = Modulation.parse(modulation)
    b = np.asarray(bits, dtype=np.uint8).ravel()
    k = mod.bits_per_symbol
    if len(b) % k:
        raise ValueError(f"{len(b)} bits is not a multiple of {k} bits/symbol for {mod.name}")
    if b.size and b.max() > 1:
        raise ValueError("bits must be 0/1")
    return mod.points[_bits_to_labels(b, k)]


def _slice_axis(v: np.ndarray, axis: _Axis) -> np.ndarray:
    """Nearest level label per value; exact ties go to the lower Gray label."""
    lv = axis.levels
    pos = np.searchsorted(lv, v)
    lo = np.clip(pos - 1, 0, len(lv) - 1)
    hi = np.clip(pos, 0, len(lv) - 1)
    dlo = np.abs(v - lv[lo])
    dhi = np.abs(v - lv[hi])
    pick = np.where(dlo < dhi, lo, hi)
    tie = dlo == dhi
    if tie.any():
        better = np.where(axis.labels[lo] < axis.labels[hi], lo, hi)
        pick = np.where(tie, better, pick)
    return axis.labels[pick]


def slice_symbols(symbols, modulation: Modulation) -> np.ndarray:
    """Return the bit labels of the nearest constellation points."""
    mod = Modulation.parse(modulation)
    s = np.asarray(symbols, dtype=complex)
    ax = mod.axis
    if not mod.is_complex:
        return _slice_axis(s.real, ax)
    half = mod.bits_per_symbol // 2
    return (_slice_axis(s.real, ax) << half) | _slice_axis(s.imag, ax)


def demap_symbols(symbols, modulation: Modulation) -> np.ndarray:
    """Minimum-distance hard decisions back to bits."""
    mod = Modulation.parse(modulation)
    labels = slice_symbols(symbols, mod)
    return _labels_to_bits(np.asarray(labels, dtype=np.int64), mod.bits_per_symbol)


def nearest_points(symbols, modulation: Modulation) -> np.ndarray:
    mod = Modulation.parse(modulation)
    return mod.points[slice_symbols(symbols, mod)]


@dataclass(frozen=True)
class Band:
    carrier_hz: float
    modulation: Modulation
    symbol_rate_hz: float
    rolloff: float = DEFAULT_ROLLOFF
    power_scale: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "modulation", Modulation.parse(self.modulation))
        if self.carrier_hz < 0:
            raise ValueError("carrier_hz must be >= 0")
        if not self.symbol_rate_hz > 0:
            raise ValueError("symbol_rate_hz must be > 0")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError("rolloff must be in [0, 1]")
        if self.power_scale < 0:
            raise ValueError("power_scale must be >= 0")
        if self.carrier_hz == 0 and self.modulation.is_complex:
            raise ValueError(f"{self.modulation.name} needs a carrier; baseband carries real constellations only")
        lo, _ = self.occupied
        if lo < 0:
            raise ValueError(f"band at {self.carrier_hz:g} Hz extends below DC")

    @property
    def half_width_hz(self) -> float:
        return self.symbol_rate_hz * (1 + self.rolloff) / 2

    @property
    def occupied(self) -> tuple[float, float]:
        if self.carrier_hz == 0:
            return (0.0, self.half_width_hz)
        return (self.carrier_hz - self.half_width_hz, self.carrier_hz + self.half_width_hz)

    @property
    def bit_rate(self) -> float:
        return self.modulation.bits_per_symbol * self.symbol_rate_hz

    def overlaps(self, other: "Band") -> bool:
        a0, a1 = self.occupied
        b0, b1 = other.occupied
        return a0 < b1 and b0 < a1

    def samples_per_symbol(self, sample_rate_hz: float) -> int:
        sps = sample_rate_hz / self.symbol_rate_hz
        r = round(sps)
        if abs(sps - r) > 1e-9 * sps or r < 2:
            raise ValueError(
                f"sample rate {sample_rate_hz:g} Hz is not an integer multiple (>=2) "
                f"of symbol rate {self.symbol_rate_hz:g} Hz"
            )
        return int(r)

    def to_dict(self) -> dict:
        return {
            "carrier_hz": float(self.carrier_hz),
            "modulation": self.modulation.name,
            "symbol_rate_hz": float(self.symbol_rate_hz),
            "rolloff": float(self.rolloff),
            "power_scale": float(self.power_scale),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Band":
        return cls(
            carrier_hz=float(d["carrier_hz"]),
            modulation=Modulation.parse(d["modulation"]),
            symbol_rate_hz=float(d["symbol_rate_hz"]),
            rolloff=float(d.get("rolloff", DEFAULT_ROLLOFF)),
            power_scale=float(d.get("power_scale", 1.0)),
        )


@dataclass(frozen=True)
class BandPlan:
    bands: tuple[Band, ...]

    def __post_init__(self) -> None:
        bands = tuple(self.bands)
        object.__setattr__(self, "bands", bands)
        for i, a in enumerate(bands):
            for b in bands[i + 1 :]:
                if a.overlaps(b):
                    raise ValueError(f"bands overlap: {a.occupied} and {b.occupied}")

    def __len__(self) -> int:
        return len(self.bands)

    def __iter__(self):
        return iter(self.bands)

    @property
    def aggregate_bps(self) -> float:
        return float(sum(b.bit_rate for b in self.bands))

    def auto_sample_rate(self, oversample: int = 8) -> float:
        """Smallest common multiple of the symbol rates that is at least
        ``oversample`` x (highest occupied frequency) and ``oversample`` x the
        fastest symbol rate."""
        if not self.bands:
            raise ValueError("empty band plan has no sample rate")
        top = max(b.occupied[1] for b in self.bands)
        fmin = oversample * max(top, max(b.symbol_rate_hz for b in self.bands))
        rates = [int(round(b.symbol_rate_hz)) for b in self.bands]
        if any(abs(r - b.symbol_rate_hz) > 1e-6 for r, b in zip(rates, self.bands)):
            raise ValueError("auto sample rate needs integer-Hz symbol rates")
        base = math.lcm(*rates)
        return float(base * math.ceil(fmin / base))

    def to_dict(self) -> dict:
        return {"bands": [b.to_dict() for b in self.bands]}

    @classmethod
    def from_dict(cls, d: dict) -> "BandPlan":
        return cls(tuple(Band.from_dict(b) for b in d["bands"]))


def _band_taps(band: Band, sample_rate_hz: float) -> tuple[np.ndarray, int]:
    sps = band.samples_per_symbol(sample_rate_hz)
    return rrc_taps(band.rolloff, RRC_SPAN, sps), sps


def _check_nyquist(band: Band, sample_rate_hz: float) -> None:
    if band.occupied[1] >= sample_rate_hz / 2:
        raise ValueError(
            f"band occupying up to {band.occupied[1]:g} Hz aliases at sample rate {sample_rate_hz:g} Hz"
        )


def modulate_symbols(symbols, band: Band, sample_rate_hz: float, phase_rad: float = 0.0) -> SampledWaveform:
    """Shape and mix already-mapped symbols (lets a TX FIR sit between map and shape)."""
    _check_nyquist(band, sample_rate_hz)
    taps, sps = _band_taps(band, sample_rate_hz)
    env = ComplexEnvelope(sample_rate_hz, shape_symbols(symbols, taps, sps))
    wave = mix_carrier(env, band.carrier_hz, phase_rad, bandwidth_hz=0.0)
    return SampledWaveform(sample_rate_hz, wave.samples * band.power_scale)


def modulate_band(bits, band: Band, sample_rate_hz: float) -> SampledWaveform:
    """Map, RRC-shape, mix onto ``band.carrier_hz`` and scale by ``power_scale``."""
    b = np.asarray(bits, dtype=np.uint8)
    if b.size == 0:
        raise ValueError("cannot modulate an empty bit list")
    return modulate_symbols(map_symbols(b, band.modulation), band, sample_rate_hz)


def sum_waveforms(waves: list[SampledWaveform]) -> SampledWaveform:
    fs = waves[0].sample_rate_hz
    if any(w.sample_rate_hz != fs for w in waves):
        raise ValueError("waveforms have different sample rates")
    n = max(len(w) for w in waves)
    out = np.zeros(n)
    for w in waves:
        out[: len(w)] += w.samples
    return SampledWaveform(fs, out)


def compose_tx(streams, plan: BandPlan, sample_rate_hz: float) -> SampledWaveform:
    """Sum per-band waveforms on one time axis (shorter bands zero-padded)."""
    if len(streams) != len(plan.bands):
        raise ValueError(f"{len(streams)} streams for {len(plan.bands)} bands")
    BandPlan(plan.bands)  # re-validates disjointness
    waves = [modulate_band(s, b, sample_rate_hz) for s, b in zip(streams, plan.bands)]
    return sum_waveforms(waves)


def matched_filter(wave: SampledWaveform, band: Band, phase_rad: float = 0.0) -> np.ndarray:
    """Down-mix and RRC matched-filter; returns the full-rate complex output."""
    _check_nyquist(band, wave.sample_rate_hz)
    taps, _ = _band_taps(band, wave.sample_rate_hz)
    x = downmix(wave, band.carrier_hz, phase_rad)
    if band.carrier_hz == 0:
        return sps_signal.oaconvolve(x.real, taps).astype(complex)
    return sps_signal.oaconvolve(x.real, taps) + 1j * sps_signal.oaconvolve(x.imag, taps)


def symbol_sample_index(band: Band, sample_rate_hz: float, timing_offset_samples: int = 0) -> tuple[int, int]:
    """(index of the first symbol instant in the matched-filter output, sps)."""
    taps, sps = _band_taps(band, sample_rate_hz)
    return len(taps) - 1 + int(timing_offset_samples), sps


def demodulate_band(
    wave: SampledWaveform,
    band: Band,
    phase_rad: float = 0.0,
    timing_offset_samples: int = 0,
    n_symbols: int | None = None,
) -> np.ndarray:
    """Coherent down-mix, matched filter, symbol-instant sampling, power_scale removal.

    Carrier phase and symbol timing are taken as known (forwarded clock);
    ``phase_rad`` and ``timing_offset_samples`` model a static offset.
    """
    y = matched_filter(wave, band, phase_rad)
    start, sps = symbol_sample_index(band, wave.sample_rate_hz, timing_offset_samples)
    if n_symbols is None:
        n_taps = RRC_SPAN * sps + 1
        n_symbols = (len(wave) - n_taps) // sps + 1
    idx = start + sps * np.arange(n_symbols)
    out = np.zeros(n_symbols, dtype=complex)
    ok = (idx >= 0) & (idx < len(y))
    out[ok] = y[idx[ok]]
    scale = band.power_scale if band.power_scale > 0 else 1.0
    out = out / scale
    if not band.modulation.is_complex and band.carrier_hz == 0:
        out = out.real.astype(complex)
    return out
