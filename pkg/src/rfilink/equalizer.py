"""TX FIR pre-emphasis, RX CTLE and adaptive FFE/DFE (LMS) at symbol rate."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import signal as sps_signal

from . import kernels
from .modem import Band, Modulation, demodulate_band, map_symbols, modulate_band
from .signal import SampledWaveform, prbs_generate, seed_stream

# |tap| beyond this is treated as LMS divergence
TAP_LIMIT = 10.0


class EqualizerDivergence(RuntimeError):
    pass


@dataclass(frozen=True)
class TxFir:
    taps: tuple[float, ...]
    cursor_index: int = 0

    def __post_init__(self) -> None:
        taps = tuple(float(t) for t in self.taps)
        object.__setattr__(self, "taps", taps)
        if not taps:
            raise ValueError("TX FIR needs at least one tap")
        if not 0 <= self.cursor_index < len(taps):
            raise ValueError("cursor_index out of range")
        if sum(abs(t) for t in taps) > 1 + 1e-12:
            raise ValueError("sum of |taps| must be <= 1 (peak-power constraint)")


def tx_fir_apply(symbols, fir: TxFir) -> np.ndarray:
    """Symbol-rate FIR; tap ``cursor_index`` multiplies the current symbol."""
    x = np.asarray(symbols)
    full = np.convolve(x, np.asarray(fir.taps))
    return full[fir.cursor_index : fir.cursor_index + len(x)]


@dataclass(frozen=True)
class CtleConfig:
    """dc_gain * (1 + s/wz) / ((1 + s/wp1)(1 + s/wp2)); ``pole2_hz=None`` drops the second pole."""

    zero_hz: float
    pole1_hz: float
    pole2_hz: float | None = None
    dc_gain: float = 1.0

    def __post_init__(self) -> None:
        if not (self.zero_hz > 0 and self.dc_gain > 0):
            raise ValueError("zero_hz and dc_gain must be > 0")
        poles = [self.pole1_hz] + ([self.pole2_hz] if self.pole2_hz is not None else [])
        if any(p < self.zero_hz for p in poles):
            raise ValueError("CTLE poles must sit at or above the zero (peaking shape)")

    def analog(self) -> tuple[np.ndarray, np.ndarray]:
        wz = 2 * np.pi * self.zero_hz
        b = self.dc_gain * np.array([1 / wz, 1.0])
        a = np.array([1 / (2 * np.pi * self.pole1_hz), 1.0])
        if self.pole2_hz is not None:
            a = np.polymul(a, [1 / (2 * np.pi * self.pole2_hz), 1.0])
        return b, a

    def analog_response(self, freqs_hz) -> np.ndarray:
        b, a = self.analog()
        s = 2j * np.pi * np.asarray(freqs_hz, dtype=float)
        return np.polyval(b, s) / np.polyval(a, s)

    def digital(self, sample_rate_hz: float) -> tuple[np.ndarray, np.ndarray]:
        top = max(self.pole1_hz, self.pole2_hz or 0.0)
        if top >= sample_rate_hz / 2:
            raise ValueError(f"CTLE pole at {top:g} Hz is above Nyquist ({sample_rate_hz / 2:g} Hz)")
        b, a = self.analog()
        return sps_signal.bilinear(b, a, fs=sample_rate_hz)


def ctle_apply(wave: SampledWaveform, config: CtleConfig) -> SampledWaveform:
    """Bilinear-transform (no pre-warp) discretization of the CTLE prototype."""
    bz, az = config.digital(wave.sample_rate_hz)
    return SampledWaveform(wave.sample_rate_hz, sps_signal.lfilter(bz, az, wave.samples))


@dataclass(frozen=True)
class DfeState:
    """FFE taps act on ``x[k + j - ffe_cursor]``; DFE taps on past decisions.

    Taps are complex for passband (QAM) bands and real otherwise.
    """

    ffe_taps: np.ndarray = field(repr=False)
    dfe_taps: np.ndarray = field(repr=False)
    mu: float
    trained: bool = False
    modulation: Modulation = Modulation.NRZ
    ffe_cursor: int = 0

    def __post_init__(self) -> None:
        ffe = np.array(self.ffe_taps)
        dfe = np.array(self.dfe_taps)
        if ffe.ndim != 1 or ffe.size == 0:
            raise ValueError("FFE needs at least the cursor tap")
        if not (np.all(np.isfinite(ffe)) and np.all(np.isfinite(dfe))):
            raise ValueError("equalizer taps must be finite")
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if not 0 <= self.ffe_cursor < ffe.size:
            raise ValueError("ffe_cursor out of range")
        ffe.setflags(write=False)
        dfe.setflags(write=False)
        object.__setattr__(self, "ffe_taps", ffe)
        object.__setattr__(self, "dfe_taps", dfe.reshape(-1))
        object.__setattr__(self, "modulation", Modulation.parse(self.modulation))

    @classmethod
    def initial(
        cls,
        ffe_len: int,
        dfe_len: int,
        mu: float,
        modulation: Modulation = Modulation.NRZ,
        ffe_cursor: int = 0,
        complex_taps: bool = False,
    ) -> "DfeState":
        dtype = complex if complex_taps else float
        ffe = np.zeros(ffe_len, dtype=dtype)
        ffe[ffe_cursor] = 1.0
        return cls(ffe, np.zeros(dfe_len, dtype=dtype), mu, False, modulation, ffe_cursor)

    @property
    def max_abs_tap(self) -> float:
        taps = np.concatenate([np.abs(self.ffe_taps), np.abs(self.dfe_taps)])
        return float(taps.max()) if taps.size else 0.0


@dataclass(frozen=True)
class DfeResult:
    decisions: np.ndarray
    output: np.ndarray  # pre-slicer equalizer output
    state: DfeState
    error_trace: np.ndarray
    diverged_at: int | None


def _axis_levels(mod: Modulation) -> tuple[np.ndarray, np.ndarray]:
    lv = np.ascontiguousarray(mod.axis.levels, dtype=float)
    return lv, (lv if mod.is_complex else np.empty(0))


def dfe_run(soft_symbols, state: DfeState, training_bits=None) -> DfeResult:
    """Run the FFE/DFE over ``soft_symbols``, adapting with LMS when ``mu > 0``.

    Per symbol: ``y = FFE(window) - sum(dfe * past)``; the slicer picks the
    nearest constellation level. While training symbols are available they
    replace the decision in the feedback path and as the LMS reference; after
    that adaptation is decision-directed. ``training_bits`` may cover a prefix.
    """
    x = np.asarray(soft_symbols)
    mod = state.modulation
    is_complex = (
        mod.is_complex
        or np.iscomplexobj(state.ffe_taps)
        or np.iscomplexobj(state.dfe_taps)
        or bool(np.any(np.imag(x) != 0))
    )
    xc = np.ascontiguousarray(x, dtype=np.complex128)

    if training_bits is not None:
        tb = np.asarray(training_bits, dtype=np.uint8)
        ref = map_symbols(tb, mod).astype(np.complex128)
        if len(ref) > len(xc):
            raise ValueError(f"{len(ref)} training symbols for {len(xc)} received symbols")
    else:
        ref = np.empty(0, dtype=np.complex128)
    ref = np.ascontiguousarray(ref)
    ffe = np.array(state.ffe_taps, dtype=np.complex128)
    dfe = np.array(state.dfe_taps, dtype=np.complex128)
    li, lq = _axis_levels(mod)

    y, dec, err, div = kernels.dfe_equalize(
        xc, ffe, dfe, int(state.ffe_cursor), float(state.mu), ref, len(ref), li, lq, TAP_LIMIT
    )
    if not is_complex:
        y, dec, err = y.real, dec.real, err.real
        ffe, dfe = ffe.real, dfe.real
    new_state = replace(
        state,
        ffe_taps=ffe,
        dfe_taps=dfe,
        trained=state.trained or (len(ref) > 0 and div < 0),
    )
    return DfeResult(dec, y, new_state, err, None if div < 0 else int(div))


def agc_normalize(soft_symbols, reference_rms: float = 1.0) -> tuple[np.ndarray, float]:
    """Scale soft symbols to ``reference_rms``; returns (scaled, gain)."""
    x = np.asarray(soft_symbols)
    rms = float(np.sqrt(np.mean(np.abs(x) ** 2))) if x.size else 0.0
    gain = reference_rms / rms if rms > 0 else 1.0
    return x * gain, gain


@dataclass(frozen=True)
class LmsConfig:
    ffe_len: int = 3
    dfe_len: int = 4
    mu: float = 0.01
    n_train: int = 4000
    ffe_cursor: int = 0
    n_taps: int = 2048


def lms_train(model, band: Band, config: LmsConfig, seed: int) -> DfeState:
    """Train an FFE/DFE for ``band`` over ``model`` with a PRBS-31 sequence.

    The channel is noiseless here; the returned state has ``trained=True``.
    Raises :class:`EqualizerDivergence` if any tap magnitude exceeds 10.
    """
    from .channel import apply_channel, channel_impulse
    from .modem import BandPlan

    if config.ffe_len < 1 or config.dfe_len < 0 or config.mu <= 0 or config.n_train < 1:
        raise ValueError("need ffe_len >= 1, dfe_len >= 0, mu > 0, n_train >= 1")
    k = band.modulation.bits_per_symbol
    bits = prbs_generate(31, seed_stream(seed, 1)[0], config.n_train * k)
    fs = BandPlan((band,)).auto_sample_rate()
    tx = modulate_band(bits, band, fs)
    rx = apply_channel(tx, model, config.n_taps)
    delay = channel_impulse(model, fs, config.n_taps).delay_samples
    phase = -2 * np.pi * band.carrier_hz * delay / fs
    soft = demodulate_band(rx, band, phase, int(round(delay)), config.n_train)
    soft, _ = agc_normalize(soft)
    state = DfeState.initial(
        config.ffe_len,
        config.dfe_len,
        config.mu,
        band.modulation,
        config.ffe_cursor,
        complex_taps=band.modulation.is_complex or band.carrier_hz > 0,
    )
    res = dfe_run(soft, state, bits)
    if res.diverged_at is not None:
        raise EqualizerDivergence(
            f"LMS diverged at symbol {res.diverged_at} (|tap| > {TAP_LIMIT:g}); reduce mu"
        )
    return res.state
