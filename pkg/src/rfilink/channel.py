"""Channel models, impulse synthesis, noise and single-bit ISI analysis."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import signal as sps_signal

from .signal import SampledWaveform, rrc_taps

DEFAULT_N_TAPS = 2048
# time-aliasing guard for the frequency-sampled inverse transform
_FFT_OVERSAMPLE = 16
_CAUSAL_LEAK = 1e-9
_ENERGY_CAPTURE = 0.999


class ChannelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    freqs_hz: np.ndarray = field(repr=False)
    gains: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        f = np.asarray(self.freqs_hz, dtype=float)
        g = np.asarray(self.gains, dtype=complex)
        if f.ndim != 1 or f.shape != g.shape:
            raise ChannelError("freqs_hz and gains must be 1-D and the same length")
        if f.size == 0:
            raise ChannelError("empty frequency response")
        if f[0] < 0:
            raise ChannelError("frequencies must be nonnegative")
        if np.any(np.diff(f) <= 0):
            raise ChannelError("frequencies must be strictly ascending")
        if not np.all(np.isfinite(g)):
            raise ChannelError("gains must be finite")
        if f[0] == 0:
            g = g.copy()
            g[0] = g[0].real
        f.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "freqs_hz", f)
        object.__setattr__(self, "gains", g)

    @property
    def mag_db(self) -> np.ndarray:
        return 20 * np.log10(np.maximum(np.abs(self.gains), 1e-300))

    @property
    def phase_deg(self) -> np.ndarray:
        return np.degrees(np.unwrap(np.angle(self.gains)))

    @classmethod
    def from_db(cls, freqs_hz, mag_db, phase_deg) -> "FrequencyResponse":
        mag = 10 ** (np.asarray(mag_db, dtype=float) / 20)
        return cls(np.asarray(freqs_hz, dtype=float), mag * np.exp(1j * np.radians(phase_deg)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FrequencyResponse):
            return NotImplemented
        return np.array_equal(self.freqs_hz, other.freqs_hz) and np.array_equal(self.gains, other.gains)

    def __hash__(self) -> int:
        return hash((self.freqs_hz.tobytes(), self.gains.tobytes()))


class ChannelModel:
    """Base for the channel variants; ``response`` gives H(f) on a grid."""

    bulk_delay_s: float = 0.0

    def response(self, freqs_hz: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def is_passive(self) -> bool:
        return True


@dataclass(frozen=True)
class Identity(ChannelModel):
    def response(self, freqs_hz):
        return np.ones(len(freqs_hz), dtype=complex)


@dataclass(frozen=True)
class LumpedC(ChannelModel):
    """Single-pole RC channel."""

    f3db_hz: float

    def __post_init__(self) -> None:
        if not self.f3db_hz > 0:
            raise ChannelError("f3db_hz must be > 0")

    def response(self, freqs_hz):
        f = np.asarray(freqs_hz, dtype=float)
        return 1.0 / (1.0 + 1j * f / self.f3db_hz)


@dataclass(frozen=True)
class LossyLine(ChannelModel):
    """Transmission line with skin (sqrt f) and dielectric (f) loss plus pure delay.

    ``k_skin`` is in Np/(m sqrt(Hz)), ``k_diel`` in Np/(m Hz).
    """

    k_skin: float
    k_diel: float
    length_m: float
    delay_s_per_m: float = 0.0

    def __post_init__(self) -> None:
        if self.k_skin < 0 or self.k_diel < 0:
            raise ChannelError("loss coefficients must be >= 0")
        if not self.length_m > 0:
            raise ChannelError("length_m must be > 0")
        if self.delay_s_per_m < 0:
            raise ChannelError("delay_s_per_m must be >= 0")

    @property
    def bulk_delay_s(self) -> float:  # type: ignore[override]
        return self.delay_s_per_m * self.length_m

    def response(self, freqs_hz):
        f = np.asarray(freqs_hz, dtype=float)
        loss = (self.k_skin * np.sqrt(f) + self.k_diel * f) * self.length_m
        return np.exp(-loss) * np.exp(-2j * np.pi * f * self.bulk_delay_s)


@dataclass(frozen=True)
class Notch:
    f0_hz: float
    depth_db: float
    q: float

    def __post_init__(self) -> None:
        if not (self.f0_hz > 0 and self.depth_db > 0 and self.q > 0):
            raise ChannelError("notch needs f0_hz > 0, depth_db > 0, q > 0")

    def response(self, freqs_hz):
        s = 2j * np.pi * np.asarray(freqs_hz, dtype=float)
        w0 = 2 * np.pi * self.f0_hz
        g = 10 ** (self.depth_db / 20)
        return (s * s + s * w0 / (self.q * g) + w0 * w0) / (s * s + s * w0 / self.q + w0 * w0)


@dataclass(frozen=True)
class Notched(ChannelModel):
    base: ChannelModel
    notches: tuple[Notch, ...]

    def __post_init__(self) -> None:
        if isinstance(self.base, Notched):
            raise ChannelError("Notched base must not itself be Notched")
        object.__setattr__(self, "notches", tuple(self.notches))

    @property
    def bulk_delay_s(self) -> float:  # type: ignore[override]
        return self.base.bulk_delay_s

    @property
    def is_passive(self) -> bool:
        return self.base.is_passive

    def response(self, freqs_hz):
        h = self.base.response(freqs_hz)
        for n in self.notches:
            h = h * n.response(freqs_hz)
        return h


@dataclass(frozen=True)
class Tabulated(ChannelModel):
    """Measured/tabulated response, interpolated in (dB, unwrapped phase).

    ``delay_s`` optionally declares a known bulk delay for causal synthesis.
    """

    table: FrequencyResponse
    delay_s: float = 0.0

    @property
    def bulk_delay_s(self) -> float:  # type: ignore[override]
        return self.delay_s

    @property
    def is_passive(self) -> bool:
        return bool(np.all(np.abs(self.table.gains) <= 1 + 1e-12))

    def response(self, freqs_hz):
        f = np.asarray(freqs_hz, dtype=float)
        tf = self.table.freqs_hz
        if f.size and (f.min() < tf[0] - 1e-9 * max(tf[-1], 1.0) or f.max() > tf[-1] * (1 + 1e-12)):
            raise ChannelError(
                f"frequency outside tabulated range [{tf[0]:g}, {tf[-1]:g}] Hz (no extrapolation)"
            )
        mag_db = np.interp(f, tf, self.table.mag_db)
        ph = np.interp(f, tf, np.unwrap(np.angle(self.table.gains)))
        return 10 ** (mag_db / 20) * np.exp(1j * ph)


def evaluate_response(model: ChannelModel, freqs_hz) -> FrequencyResponse:
    f = np.asarray(freqs_hz, dtype=float)
    if f.size and (f[0] < 0 or np.any(np.diff(f) <= 0)):
        raise ChannelError("freqs must be nonnegative and strictly ascending")
    return FrequencyResponse(f, model.response(f))


def jitter_notches(model: ChannelModel, fraction: float, seed: int) -> ChannelModel:
    """Move every notch centre by a uniform random factor in ``1 +- fraction``."""
    if not isinstance(model, Notched):
        return model
    rng = np.random.default_rng(seed)
    moved = tuple(replace(n, f0_hz=n.f0_hz * (1 + rng.uniform(-fraction, fraction))) for n in model.notches)
    return Notched(model.base, moved)


@dataclass(frozen=True, eq=False)
class Impulse:
    taps: np.ndarray
    sample_rate_hz: float
    delay_samples: float  # analytic latency: causal pre-shift + model bulk delay
    captured_energy: float


def _spectral_taper(f: np.ndarray, fs: float) -> np.ndarray:
    # flat to fs/4, raised-cosine to zero at Nyquist; suppresses Gibbs ringing
    w = np.ones_like(f)
    knee = fs / 4
    sel = f > knee
    w[sel] = 0.5 * (1 + np.cos(np.pi * (f[sel] - knee) / (fs / 2 - knee)))
    return w


def _synthesize(model: ChannelModel, fs: float, n_taps: int) -> Impulse:
    if isinstance(model, Identity):
        taps = np.zeros(n_taps)
        taps[0] = 1.0
        return Impulse(taps, fs, 0.0, 1.0)

    nfft = 1 << int(np.ceil(np.log2(max(_FFT_OVERSAMPLE * n_taps, 8192))))
    f = np.arange(nfft // 2 + 1) * fs / nfft
    tau = float(model.bulk_delay_s)
    h0 = model.response(f) * np.exp(2j * np.pi * f * tau) * _spectral_taper(f, fs)
    h0[0] = h0[0].real
    h0[-1] = h0[-1].real
    circ = np.fft.irfft(h0, nfft)
    total = float(np.sum(circ**2))
    if total == 0:
        raise ChannelError("channel response is identically zero")

    # smallest pre-shift that leaves negligible energy before t=0
    neg = circ[nfft // 2 :][::-1]  # neg[k] is time -(k+1)
    tail = np.cumsum((neg**2)[::-1])[::-1]  # energy at times <= -(k+1)
    pre = int(np.argmax(tail <= _CAUSAL_LEAK * total)) if np.any(tail <= _CAUSAL_LEAK * total) else len(neg)
    pre = min(pre, n_taps // 2)

    d = pre + tau * fs
    h1 = h0 * np.exp(-2j * np.pi * f * d / fs)
    full = np.fft.irfft(h1, nfft)
    taps = full[:n_taps].copy()
    captured = float(np.sum(taps**2) / np.sum(full**2))
    if captured < _ENERGY_CAPTURE:
        raise ChannelError(
            f"n_taps={n_taps} captures only {100 * captured:.3f}% of impulse energy "
            f"(need {100 * _ENERGY_CAPTURE:.1f}%); increase n_taps"
        )
    m = max(n_taps // 10, 1)
    taps[-m:] *= 0.5 * (1 + np.cos(np.pi * np.arange(1, m + 1) / m))
    return Impulse(taps, fs, d, captured)


@lru_cache(maxsize=64)
def _synthesize_cached(model: ChannelModel, fs: float, n_taps: int) -> Impulse:
    return _synthesize(model, fs, n_taps)


def channel_impulse(model: ChannelModel, sample_rate_hz: float, n_taps: int = DEFAULT_N_TAPS) -> Impulse:
    """Synthesized FIR plus its known latency in samples."""
    if n_taps < 1:
        raise ChannelError("n_taps must be >= 1")
    try:
        return _synthesize_cached(model, float(sample_rate_hz), int(n_taps))
    except TypeError:  # unhashable model
        return _synthesize(model, float(sample_rate_hz), int(n_taps))


def synthesize_impulse(response, sample_rate_hz: float, n_taps: int = DEFAULT_N_TAPS) -> np.ndarray:
    """Real FIR taps for a channel model or a tabulated :class:`FrequencyResponse`.

    The response is sampled on a uniform grid to Nyquist, band-limited with a
    raised-cosine taper above fs/4, inverse transformed, shifted by the bulk
    delay plus the smallest pre-shift that makes it causal, then truncated to
    ``n_taps`` with a raised-cosine tail. Raises :class:`ChannelError` if the
    window holds less than 99.9 % of the impulse energy.
    """
    model = Tabulated(response) if isinstance(response, FrequencyResponse) else response
    return channel_impulse(model, sample_rate_hz, n_taps).taps


def apply_channel(wave: SampledWaveform, model: ChannelModel, n_taps: int = DEFAULT_N_TAPS) -> SampledWaveform:
    """Full linear convolution with the synthesized impulse (length N + n_taps - 1)."""
    imp = channel_impulse(model, wave.sample_rate_hz, n_taps)
    if isinstance(model, Identity):
        out = np.concatenate([wave.samples, np.zeros(n_taps - 1)])
    else:
        out = sps_signal.fftconvolve(wave.samples, imp.taps)
    return SampledWaveform(wave.sample_rate_hz, out)


def add_awgn(wave: SampledWaveform, sigma: float, seed: int) -> SampledWaveform:
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return SampledWaveform(wave.sample_rate_hz, wave.samples)
    rng = np.random.default_rng(seed)
    return SampledWaveform(wave.sample_rate_hz, wave.samples + rng.normal(0.0, sigma, len(wave)))


@dataclass(frozen=True)
class BitResponse:
    pulse: SampledWaveform
    tail_ui: int
    cursor_index: int
    samples_per_ui: int


def single_bit_response(
    model: ChannelModel,
    bit_rate_hz: float,
    threshold_fraction: float,
    samples_per_symbol: int = 8,
    rolloff: float = 0.25,
    span_symbols: int = 32,
    n_taps: int = DEFAULT_N_TAPS,
) -> BitResponse:
    """Response to one isolated RRC-shaped bit after the RX matched filter.

    ``tail_ui`` counts the symbol-spaced samples after the main cursor whose
    magnitude exceeds ``threshold_fraction`` of the cursor.
    """
    if not 0 < threshold_fraction < 1:
        raise ValueError("threshold_fraction must be in (0, 1)")
    fs = bit_rate_hz * samples_per_symbol
    g = rrc_taps(rolloff, span_symbols, samples_per_symbol)
    tx = SampledWaveform(fs, g)
    rx = apply_channel(tx, model, n_taps)
    pulse = np.convolve(rx.samples, g)
    peak = int(np.argmax(np.abs(pulse)))
    post = pulse[peak + samples_per_symbol :: samples_per_symbol]
    tail = int(np.count_nonzero(np.abs(post) > threshold_fraction * abs(pulse[peak])))
    return BitResponse(SampledWaveform(fs, pulse), tail, peak, samples_per_symbol)
