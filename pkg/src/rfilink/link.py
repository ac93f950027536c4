"""End-to-end multi-band link simulation.

Block order: PRBS -> map -> TX FIR -> RRC shape / mix -> sum -> channel ->
AWGN -> CTLE -> per-band coherent demod -> gain control -> FFE/DFE -> demap.
The receiver knows symbol timing and carrier phase (forwarded clock); the
channel latency is taken from the synthesized impulse, not searched for,
unless the scenario asks for ``timing: correlate``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelModel, add_awgn, apply_channel, channel_impulse
from .cognitive import (
    AllocationResult,
    ChannelProfile,
    allocate_bands,
    power_scale_for_density,
    probe_channel,
    probe_sample_rate,
    required_snr_table,
    sigma_for_density,
)
from .equalizer import DfeState, ctle_apply, dfe_run, tx_fir_apply
from .metrics import EyeDiagram, eye_histogram, measure_ber, measure_evm
from .modem import (
    Band,
    BandPlan,
    demap_symbols,
    map_symbols,
    matched_filter,
    modulate_symbols,
    sum_waveforms,
    symbol_sample_index,
)
from .scenario import DEFAULT_TX_DENSITY_DBHZ, AutoPlan, ScenarioConfig, ScenarioError, build_channel
from .signal import SampledWaveform, prbs_generate, seed_stream

TRAIN_FRACTION = 0.2
MIN_TRAIN_SYMBOLS = 2000
SNR_CAP_DB = 200.0


def training_symbols(n_symbols: int) -> int:
    """Training prefix length: 20 % of the symbols, at least 2000."""
    return max(math.ceil(TRAIN_FRACTION * n_symbols), MIN_TRAIN_SYMBOLS)


@dataclass(frozen=True)
class BandReport:
    carrier_hz: float
    modulation: str
    symbol_rate: float
    snr_db: float
    evm_percent: float
    ber: float
    ber_ci95: tuple[float, float]
    n_bits: int
    bit_errors: int
    eye_height: float | None
    eye_width: float | None
    pipeline_delay_ui: float
    equalizer: dict | None

    def to_dict(self) -> dict:
        return {
            "carrier_hz": self.carrier_hz,
            "modulation": self.modulation,
            "symbol_rate": self.symbol_rate,
            "snr_db": self.snr_db,
            "evm_percent": self.evm_percent,
            "ber": self.ber,
            "ber_ci95": list(self.ber_ci95),
            "n_bits": self.n_bits,
            "bit_errors": self.bit_errors,
            "eye_height": self.eye_height,
            "eye_width": self.eye_width,
            "pipeline_delay_ui": self.pipeline_delay_ui,
            "equalizer": self.equalizer,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BandReport":
        return cls(**{**d, "ber_ci95": tuple(d["ber_ci95"])})


@dataclass(frozen=True)
class LinkReport:
    per_band: tuple[BandReport, ...]
    aggregate_bps: float
    aggregate_ber: float
    sample_rate_hz: float
    sigma: float
    seed: int
    config: dict
    allocation: dict | None = None
    # run artifacts, not serialized
    eye: EyeDiagram | None = field(default=None, compare=False, repr=False)
    rx_wave: SampledWaveform | None = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict:
        return {
            "per_band": [b.to_dict() for b in self.per_band],
            "aggregate_bps": self.aggregate_bps,
            "aggregate_ber": self.aggregate_ber,
            "sample_rate_hz": self.sample_rate_hz,
            "sigma": self.sigma,
            "seed": self.seed,
            "config": self.config,
            "allocation": self.allocation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinkReport":
        return cls(
            tuple(BandReport.from_dict(b) for b in d["per_band"]),
            d["aggregate_bps"],
            d["aggregate_ber"],
            d["sample_rate_hz"],
            d["sigma"],
            d["seed"],
            d["config"],
            d.get("allocation"),
        )


@dataclass(frozen=True)
class ResolvedLink:
    plan: BandPlan
    channel: ChannelModel
    n_taps: int
    sample_rate_hz: float
    sigma: float
    profile: ChannelProfile | None = None
    allocation: AllocationResult | None = None


def _auto_allocate(config: ScenarioConfig, auto: AutoPlan, channel, n_taps, seeds) -> tuple[ChannelProfile, AllocationResult]:
    tx_db = DEFAULT_TX_DENSITY_DBHZ if config.tx_power_density_dbhz is None else config.tx_power_density_dbhz
    n0_db = config.noise_density_dbhz if config.noise_density_dbhz is not None else tx_db - config.snr_db
    freqs = auto.probe_freqs
    fs_probe = probe_sample_rate(freqs)
    profile = probe_channel(
        channel,
        freqs,
        auto.tone_power,
        sigma_for_density(n0_db, fs_probe),
        auto.tone_duration_symbols,
        seeds[0],
        fs_probe,
        n_taps,
    )
    table = required_snr_table(auto.target_ber, n_trials=auto.table_trials, seed=seeds[1])
    return profile, allocate_bands(profile, table, auto.constraints, tx_db)


def resolve_link(config: ScenarioConfig) -> ResolvedLink:
    """Concrete plan (with power scales), channel, sample rate and noise sigma."""
    channel, n_taps = build_channel(config.channel, config.base_dir)
    root = seed_stream(config.seed, 4)
    profile = allocation = None
    if isinstance(config.plan, AutoPlan):
        profile, allocation = _auto_allocate(config, config.plan, channel, n_taps, seed_stream(root[2], 2))
        plan = allocation.plan
    else:
        plan = config.plan
    if not plan.bands:
        raise ScenarioError("band plan is empty; nothing to simulate")
    fs = plan.auto_sample_rate() if config.sample_rate == "auto" else float(config.sample_rate)

    tx_db = config.tx_power_density_dbhz
    if tx_db is None and isinstance(config.plan, AutoPlan):
        tx_db = DEFAULT_TX_DENSITY_DBHZ
    if tx_db is not None:
        a = power_scale_for_density(tx_db, fs)
        plan = BandPlan(tuple(replace(b, power_scale=a) for b in plan.bands))

    if config.sigma is not None:
        sigma = config.sigma
    else:
        if config.noise_density_dbhz is not None:
            n0_db = config.noise_density_dbhz
        else:
            # snr_db is Es/N0 of the strongest band at the transmitter
            ref = max(b.power_scale**2 / fs for b in plan.bands)
            if ref <= 0:
                raise ScenarioError("snr_db needs at least one band with power_scale > 0")
            n0_db = 10 * math.log10(ref) - config.snr_db
        sigma = sigma_for_density(n0_db, fs)
    return ResolvedLink(plan, channel, n_taps, fs, sigma, profile, allocation)


def _gain_control(soft: np.ndarray, ref: np.ndarray) -> float:
    """Data-aided magnitude gain over the training prefix (phase left alone)."""
    num = abs(np.vdot(ref, soft[: len(ref)]))
    den = float(np.vdot(ref, ref).real)
    return den / num if num > 0 else 1.0


def _snr_db(y: np.ndarray, ref: np.ndarray, real_only: bool = False) -> float:
    """Data-aided Es/N0 in dB. A real (baseband) detector sees noise in one
    dimension only, i.e. N0/2, so its sample SNR is halved to match."""
    if y.size == 0:
        return 0.0
    a = np.vdot(ref, y) / np.vdot(ref, ref)
    err = float(np.mean(np.abs(y - a * ref) ** 2))
    sig = float(abs(a) ** 2 * np.mean(np.abs(ref) ** 2))
    if err <= sig * 10 ** (-SNR_CAP_DB / 10):
        return SNR_CAP_DB
    if real_only:
        err *= 2
    return 10 * math.log10(sig / err) if sig > 0 else -SNR_CAP_DB


def _correlate_timing(y: np.ndarray, start: int, sps: int, ref: np.ndarray, search: int) -> tuple[int, float]:
    """Sample offset in [0, search) and phase maximizing |<y_offset, ref>|."""
    k = np.arange(len(ref)) * sps
    best, best_off, best_c = -1.0, 0, 0j
    for off in range(search):
        idx = start + off + k
        if idx[-1] >= len(y):
            break
        c = np.vdot(ref, y[idx])
        if abs(c) > best:
            best, best_off, best_c = abs(c), off, c
    return best_off, float(np.angle(best_c))


def _tap_list(t: np.ndarray) -> list:
    if np.iscomplexobj(t):
        return [[float(v.real), float(v.imag)] for v in t]
    return [float(v) for v in t]


def run_link(config: ScenarioConfig, keep_waveform: bool = False) -> LinkReport:
    """Simulate the scenario end to end and measure every band."""
    link = resolve_link(config)
    plan, fs = link.plan, link.sample_rate_hz
    root = seed_stream(config.seed, 4)
    data_seeds = seed_stream(root[0], len(plan.bands))
    eq = config.equalizer

    streams, symbols, waves = [], [], []
    for i, band in enumerate(plan.bands):
        k = band.modulation.bits_per_symbol
        n_sym = math.ceil(config.n_bits_per_stream / k)
        if n_sym <= training_symbols(n_sym):
            raise ScenarioError(
                f"n_bits_per_stream={config.n_bits_per_stream} leaves no payload after "
                f"{training_symbols(n_sym)} training symbols"
            )
        bits = prbs_generate(31, data_seeds[i], n_sym * k)
        sym = map_symbols(bits, band.modulation)
        tx_sym = sym
        if eq is not None and eq.for_band(i).tx_fir is not None:
            tx_sym = tx_fir_apply(sym, eq.for_band(i).tx_fir)
        streams.append(bits)
        symbols.append(sym)
        waves.append(modulate_symbols(tx_sym, band, fs))

    tx = sum_waveforms(waves)
    rx = apply_channel(tx, link.channel, link.n_taps)
    rx = add_awgn(rx, link.sigma, root[1])
    if eq is not None and eq.ctle is not None:
        rx = ctle_apply(rx, eq.ctle)

    delay = channel_impulse(link.channel, fs, link.n_taps).delay_samples
    reports = []
    total_err = total_bits = 0
    eye = None
    for i, band in enumerate(plan.bands):
        bits, sym = streams[i], symbols[i]
        mod = band.modulation
        k = mod.bits_per_symbol
        n_sym = len(sym)
        n_train = training_symbols(n_sym)
        phase = -2 * np.pi * band.carrier_hz * delay / fs + config.phase_error_rad
        y_full = matched_filter(rx, band, phase)
        start, sps = symbol_sample_index(band, fs, int(round(delay)) + config.timing_offset_samples)
        if config.timing == "correlate":
            off, rot = _correlate_timing(y_full, start - int(round(delay)), sps, sym[:n_train], link.n_taps)
            start = start - int(round(delay)) + off
            if band.carrier_hz > 0:
                y_full = y_full * np.exp(-1j * rot)
        idx = start + sps * np.arange(n_sym)
        soft = np.zeros(n_sym, dtype=complex)
        ok = idx < len(y_full)
        soft[ok] = y_full[idx[ok]]
        if not (mod.is_complex or band.carrier_hz > 0):
            soft = soft.real.astype(complex)
        gain = _gain_control(soft, sym[:n_train])
        soft = soft * gain

        eq_info = None
        lookahead = 0
        if eq is None:
            y = soft
        else:
            be = eq.for_band(i)
            state = DfeState.initial(
                be.ffe_len, be.dfe_len, be.mu, mod, be.ffe_cursor, complex_taps=band.carrier_hz > 0
            )
            res = dfe_run(soft, state, bits[: n_train * k])
            y = res.output
            # FFE taps reach ahead by (ffe_len - 1 - cursor) symbols
            lookahead = be.ffe_len - 1 - be.ffe_cursor
            eq_info = {
                "ffe_len": be.ffe_len,
                "dfe_len": be.dfe_len,
                "mu": be.mu,
                "converged": res.diverged_at is None,
                "diverged_at": res.diverged_at,
                "ffe_taps": _tap_list(res.state.ffe_taps),
                "dfe_taps": _tap_list(res.state.dfe_taps),
            }
        y_meas = y[n_train:]
        if not mod.is_complex:
            y_meas = y_meas.real
        rx_bits = demap_symbols(y_meas, mod)
        ber = measure_ber(bits[n_train * k :], rx_bits)
        total_err += ber.errors
        total_bits += ber.n

        eye_h = eye_w = None
        if band.carrier_hz == 0:
            levels = np.sort(mod.axis.levels)
            thr = 0.5 * (levels[1:] + levels[:-1])
            # payload window only, folded so symbol instants sit at UI fraction 0.5
            a = start + n_train * sps - sps // 2
            b = min(start + n_sym * sps - sps // 2, len(y_full))
            mf = SampledWaveform(fs, y_full.real[a:b] * gain)
            t0 = -(sps / 2 - sps // 2) / fs
            e = eye_histogram(mf, 1.0 / band.symbol_rate_hz, thresholds=thr, t_offset_s=t0, v_range=_eye_range(levels))
            eye_h, eye_w = e.eye_height, e.eye_width
            eye = e
        reports.append(
            BandReport(
                carrier_hz=float(band.carrier_hz),
                modulation=mod.name,
                symbol_rate=float(band.symbol_rate_hz),
                snr_db=_snr_db(y[n_train:], sym[n_train:].astype(complex), band.carrier_hz == 0),
                evm_percent=measure_evm(y_meas, mod),
                ber=ber.ber,
                ber_ci95=(ber.ci95_low, ber.ci95_high),
                n_bits=ber.n,
                bit_errors=ber.errors,
                eye_height=eye_h,
                eye_width=eye_w,
                pipeline_delay_ui=start / sps + lookahead,
                equalizer=eq_info,
            )
        )
    return LinkReport(
        per_band=tuple(reports),
        aggregate_bps=plan.aggregate_bps,
        aggregate_ber=total_err / total_bits if total_bits else 0.0,
        sample_rate_hz=fs,
        sigma=float(link.sigma),
        seed=config.seed,
        config=config.to_dict(),
        allocation=None if link.allocation is None else link.allocation.to_dict(),
        eye=eye,
        rx_wave=rx if keep_waveform else None,
    )


def _eye_range(levels: np.ndarray) -> tuple[float, float]:
    span = float(levels[-1] - levels[0]) if len(levels) > 1 else 1.0
    return float(levels[0] - span), float(levels[-1] + span)


def single_band_nrz(aggregate_bps: float, rolloff: float = 0.25) -> BandPlan:
    return BandPlan((Band(0.0, "NRZ", aggregate_bps, rolloff),))
