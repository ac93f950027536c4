"""Sampled-signal primitives: bit sources, pulse shaping, carrier mixing, PSD."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps_signal

from . import kernels

# Fibonacci LFSR feedback taps (x^order + x^tap + 1).
PRBS_TAPS = {7: 6, 15: 14, 31: 28}

DEFAULT_ROLLOFF = 0.25
DEFAULT_SPS = 8


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SampledWaveform:
    """Real line voltage sampled at ``sample_rate_hz``."""

    sample_rate_hz: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", _frozen(s))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    @property
    def mean_power(self) -> float:
        return float(np.mean(self.samples**2)) if len(self.samples) else 0.0


@dataclass(frozen=True)
class ComplexEnvelope:
    """Complex baseband representation of one band before mixing."""

    sample_rate_hz: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        object.__setattr__(self, "samples", _frozen(s))

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class BitStream:
    bits: np.ndarray = field(repr=False)
    bit_rate_hz: float

    def __post_init__(self) -> None:
        b = np.asarray(self.bits)
        if b.size and not np.all((b == 0) | (b == 1)):
            raise ValueError("bits must contain only 0 and 1")
        if not self.bit_rate_hz > 0:
            raise ValueError("bit_rate_hz must be > 0")
        object.__setattr__(self, "bits", _frozen(b.astype(np.uint8)))


def prbs_generate(order: int, seed: int, n: int) -> np.ndarray:
    """Return ``n`` bits of the maximal-length PRBS of the given order.

    Parameters
    ----------
    order : {7, 15, 31}
        Selects the generator polynomial x^7+x^6+1, x^15+x^14+1 or x^31+x^28+1.
    seed : int
        Initial register state, in ``[1, 2**order - 1]``. Zero is the LFSR
        lock-up state and is rejected.
    n : int
        Number of output bits.
    """
    if order not in PRBS_TAPS:
        raise ValueError(f"unsupported PRBS order {order}; choose from {sorted(PRBS_TAPS)}")
    if seed == 0:
        raise ValueError("PRBS seed must be nonzero (all-zero state locks the LFSR)")
    if not 0 < seed < (1 << order):
        raise ValueError(f"PRBS-{order} seed must be in [1, {(1 << order) - 1}], got {seed}")
    if n < 1:
        raise ValueError("n must be >= 1")
    return kernels.lfsr_bits(order, PRBS_TAPS[order], int(seed), int(n))


def rrc_taps(rolloff: float, span_symbols: int, samples_per_symbol: int) -> np.ndarray:
    """Unit-energy root-raised-cosine taps, ``span*sps + 1`` long."""
    if not 0.0 <= rolloff <= 1.0:
        raise ValueError(f"rolloff must be in [0, 1], got {rolloff}")
    if span_symbols < 2 or span_symbols % 2:
        raise ValueError(f"span_symbols must be a positive even count, got {span_symbols}")
    if samples_per_symbol < 2:
        raise ValueError(f"samples_per_symbol must be >= 2, got {samples_per_symbol}")

    n = span_symbols * samples_per_symbol
    # integer offsets keep t exactly symmetric and hit singular points exactly
    k = np.arange(n + 1) - n // 2
    t = k / samples_per_symbol
    b = rolloff
    h = np.empty(n + 1)
    center = k == 0
    if b > 0:
        # t = +-1/(4b)  <=>  4*b*k == sps
        sing = np.isclose(np.abs(4.0 * b * k), samples_per_symbol, rtol=0, atol=1e-9)
    else:
        sing = np.zeros(n + 1, dtype=bool)
    reg = ~(center | sing)
    tr = t[reg]
    h[reg] = (np.sin(np.pi * tr * (1 - b)) + 4 * b * tr * np.cos(np.pi * tr * (1 + b))) / (
        np.pi * tr * (1 - (4 * b * tr) ** 2)
    )
    h[center] = 1 - b + 4 * b / np.pi
    if sing.any():
        h[sing] = (b / np.sqrt(2)) * (
            (1 + 2 / np.pi) * np.sin(np.pi / (4 * b)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b))
        )
    return h / np.sqrt(np.sum(h**2))


def shape_symbols(symbols, taps, samples_per_symbol: int) -> np.ndarray:
    """Zero-stuff by ``samples_per_symbol`` and filter with ``taps``.

    Output length is ``(n_symbols - 1) * sps + len(taps)``.
    """
    sym = np.asarray(symbols, dtype=complex)
    h = np.asarray(taps, dtype=float)
    if sym.size == 0 or h.size == 0:
        raise ValueError("symbols and taps must be nonempty")
    up = np.zeros((len(sym) - 1) * samples_per_symbol + 1, dtype=complex)
    up[::samples_per_symbol] = sym
    if np.all(sym.imag == 0):
        return sps_signal.oaconvolve(up.real, h).astype(complex)
    return sps_signal.oaconvolve(up.real, h) + 1j * sps_signal.oaconvolve(up.imag, h)


def mix_carrier(
    envelope: ComplexEnvelope,
    carrier_hz: float,
    phase_rad: float = 0.0,
    bandwidth_hz: float = 0.0,
) -> SampledWaveform:
    """Mix a complex envelope onto a real carrier.

    ``carrier_hz == 0`` is baseband: the real part passes unchanged. Otherwise
    the output is ``sqrt(2) * Re{env * exp(j(2 pi fc n / fs + phase))}``, which
    keeps passband power equal to envelope power. ``bandwidth_hz`` is the
    occupied (two-sided) envelope bandwidth used for the aliasing check.
    """
    fs = envelope.sample_rate_hz
    if carrier_hz < 0:
        raise ValueError("carrier_hz must be >= 0")
    if carrier_hz + bandwidth_hz / 2 >= fs / 2:
        raise ValueError(
            f"carrier {carrier_hz:g} Hz + half bandwidth {bandwidth_hz / 2:g} Hz "
            f"aliases at sample rate {fs:g} Hz"
        )
    env = envelope.samples
    if carrier_hz == 0:
        return SampledWaveform(fs, env.real.copy())
    n = np.arange(len(env))
    lo = np.exp(1j * (2 * np.pi * carrier_hz * n / fs + phase_rad))
    return SampledWaveform(fs, np.sqrt(2.0) * (env * lo).real)


def downmix(wave: SampledWaveform, carrier_hz: float, phase_rad: float = 0.0) -> np.ndarray:
    """Coherent down-conversion, the inverse of :func:`mix_carrier` before filtering."""
    x = wave.samples
    if carrier_hz == 0:
        return x.astype(complex)
    n = np.arange(len(x))
    return np.sqrt(2.0) * x * np.exp(-1j * (2 * np.pi * carrier_hz * n / wave.sample_rate_hz + phase_rad))


def estimate_psd(wave: SampledWaveform, segment_len: int) -> tuple[np.ndarray, np.ndarray]:
    """One-sided averaged-periodogram PSD (Hann window, 50 % overlap).

    Returns ``(freqs_hz, psd)`` on ``[0, fs/2]`` in power per Hz; the sum of
    ``psd * df`` equals the time-domain mean power.
    """
    if len(wave) < segment_len:
        raise ValueError(f"need at least {segment_len} samples, got {len(wave)}")
    f, p = sps_signal.welch(
        wave.samples,
        fs=wave.sample_rate_hz,
        window="hann",
        nperseg=segment_len,
        noverlap=segment_len // 2,
        detrend=False,
        scaling="density",
        return_onesided=True,
    )
    return f, p


def integrate_psd(freqs: np.ndarray, psd: np.ndarray) -> float:
    """Total power of a uniform-grid PSD from :func:`estimate_psd`."""
    return float(np.sum(psd) * (freqs[1] - freqs[0]))


def seed_stream(seed: int, n: int) -> list[int]:
    """Derive ``n`` independent 31-bit nonzero seeds from one integer seed."""
    ss = np.random.SeedSequence(int(seed))
    words = ss.generate_state(n, dtype=np.uint32)
    return [int(w % ((1 << 31) - 1)) + 1 for w in words]
