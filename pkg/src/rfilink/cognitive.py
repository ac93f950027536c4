"""Channel learning by CW sweep, SNR requirements and greedy band allocation.

Power bookkeeping used throughout:

* noise density ``N0 = 2 sigma^2 / fs`` (one-sided, per Hz) for white noise of
  per-sample std ``sigma`` at sample rate ``fs``;
* TX power density of a band = band power / symbol rate, i.e. the symbol
  energy ``Es``. A band of amplitude ``power_scale`` at rate ``fs`` has
  ``Es = power_scale**2 / fs``.

With these, ``tx_density + gain_db - noise_density`` is the symbol SNR
``Es/N0`` seen by the matched-filter receiver, which is what the
:class:`ModulationTable` is indexed by.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import DEFAULT_N_TAPS, ChannelModel, add_awgn, apply_channel
from .modem import Band, BandPlan, Modulation, demap_symbols, map_symbols
from .signal import DEFAULT_ROLLOFF, DEFAULT_SPS, SampledWaveform, seed_stream

NOISE_FLOOR_DBHZ = -300.0
SNR_SEARCH_RANGE_DB = (-20.0, 70.0)


def noise_density_dbhz(sigma: float, sample_rate_hz: float) -> float:
    if sigma <= 0:
        return NOISE_FLOOR_DBHZ
    return 10 * math.log10(2 * sigma * sigma / sample_rate_hz)


def sigma_for_density(density_dbhz: float, sample_rate_hz: float) -> float:
    if density_dbhz <= NOISE_FLOOR_DBHZ:
        return 0.0
    return math.sqrt(10 ** (density_dbhz / 10) * sample_rate_hz / 2)


def power_scale_for_density(tx_density_dbhz: float, sample_rate_hz: float) -> float:
    return math.sqrt(10 ** (tx_density_dbhz / 10) * sample_rate_hz)


def default_probe_freqs(n: int = 64, fmin: float = 0.1e9, fmax: float = 10e9) -> np.ndarray:
    return np.geomspace(fmin, fmax, n)


def probe_sample_rate(probe_freqs) -> float:
    """8x the highest probe tone, rounded up to a whole MHz."""
    top = float(np.max(probe_freqs))
    return float(math.ceil(DEFAULT_SPS * top / 1e6) * 1e6)


@dataclass(frozen=True)
class ChannelProfile:
    probe_freqs_hz: np.ndarray = field(repr=False)
    gain_db: np.ndarray = field(repr=False)
    noise_density_dbhz: float
    sample_rate_hz: float | None = None

    def __post_init__(self) -> None:
        f = np.asarray(self.probe_freqs_hz, dtype=float)
        g = np.asarray(self.gain_db, dtype=float)
        if f.shape != g.shape or f.ndim != 1 or f.size == 0:
            raise ValueError("probe_freqs_hz and gain_db must be equal-length 1-D lists")
        if np.any(np.diff(f) <= 0):
            raise ValueError("probe frequencies must be strictly ascending")
        if not np.all(np.isfinite(g)):
            raise ValueError("gains must be finite")
        object.__setattr__(self, "probe_freqs_hz", f)
        object.__setattr__(self, "gain_db", g)

    def to_dict(self) -> dict:
        d = {
            "probe_freqs_hz": [float(v) for v in self.probe_freqs_hz],
            "gain_db": [float(v) for v in self.gain_db],
            "noise_density_dbhz": float(self.noise_density_dbhz),
        }
        if self.sample_rate_hz is not None:
            d["sample_rate_hz"] = float(self.sample_rate_hz)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelProfile":
        return cls(
            np.asarray(d["probe_freqs_hz"], dtype=float),
            np.asarray(d["gain_db"], dtype=float),
            float(d["noise_density_dbhz"]),
            d.get("sample_rate_hz"),
        )


def probe_channel(
    model: ChannelModel,
    probe_freqs,
    tone_power: float = 1.0,
    sigma: float = 0.0,
    tone_duration_symbols: int = 2048,
    seed: int = 0,
    sample_rate_hz: float | None = None,
    n_taps: int = DEFAULT_N_TAPS,
) -> ChannelProfile:
    """Learn |H(f)| by sending one CW tone per probe frequency.

    Each tone of mean power ``tone_power`` goes through the channel and the
    AWGN source; the detector averages the squared RX samples over a
    steady-state window of ``tone_duration_symbols`` symbols at 8 samples per
    symbol (trimmed to whole tone periods). The noise power measured on a
    zero-input interval is subtracted before forming
    ``gain_db = 10 log10(P_rx / P_tx)``.
    """
    freqs = np.asarray(probe_freqs, dtype=float)
    if freqs.ndim != 1 or freqs.size == 0 or np.any(np.diff(freqs) <= 0) or freqs[0] <= 0:
        raise ValueError("probe frequencies must be positive and strictly ascending")
    fs = probe_sample_rate(freqs) if sample_rate_hz is None else float(sample_rate_hz)
    if freqs[-1] >= fs / 2:
        raise ValueError(f"probe tone {freqs[-1]:g} Hz is not below Nyquist of {fs:g} Hz")
    if tone_power <= 0:
        raise ValueError("tone_power must be > 0")
    window = int(tone_duration_symbols) * DEFAULT_SPS
    seeds = seed_stream(seed, len(freqs) + 1)

    noise_only = add_awgn(SampledWaveform(fs, np.zeros(window)), sigma, seeds[-1])
    p_noise = float(np.mean(noise_only.samples**2))

    gains = np.empty(len(freqs))
    amp = math.sqrt(2 * tone_power)
    for i, f in enumerate(freqs):
        period = fs / f
        n_periods = math.floor(window / period)
        w = int(round(n_periods * period)) if n_periods >= 1 else window
        n = np.arange(n_taps + w)
        tone = SampledWaveform(fs, amp * np.cos(2 * np.pi * f * n / fs))
        rx = add_awgn(apply_channel(tone, model, n_taps), sigma, seeds[i])
        steady = rx.samples[n_taps : n_taps + w]
        p_rx = float(np.mean(steady**2)) - p_noise
        # keep deep notches finite when the tone sinks below the noise estimate
        p_rx = max(p_rx, 1e-3 * p_noise, 1e-30 * tone_power)
        gains[i] = 10 * math.log10(p_rx / tone_power)
    return ChannelProfile(freqs, gains, noise_density_dbhz(sigma, fs), fs)


class UnreachableBer(ValueError):
    pass


@dataclass(frozen=True)
class ModulationTable:
    entries: dict = field(repr=True)  # Modulation -> required Es/N0 in dB
    target_ber: float

    def __post_init__(self) -> None:
        if not 0 < self.target_ber <= 0.5:
            raise ValueError("target_ber must be in (0, 0.5]")
        object.__setattr__(self, "entries", {Modulation.parse(k): float(v) for k, v in self.entries.items()})

    def required(self, modulation: Modulation) -> float:
        return self.entries[Modulation.parse(modulation)]

    def to_dict(self) -> dict:
        return {"target_ber": self.target_ber, "entries": {m.name: v for m, v in self.entries.items()}}

    @classmethod
    def from_dict(cls, d: dict) -> "ModulationTable":
        return cls(dict(d["entries"]), float(d["target_ber"]))


def _awgn_ber(mod: Modulation, bits: np.ndarray, unit_noise: np.ndarray, snr_db: float) -> float:
    # Es = 1, noise per real dimension has variance N0/2 = 1/(2 snr)
    sym = map_symbols(bits, mod)
    sigma = math.sqrt(1.0 / (2.0 * 10 ** (snr_db / 10)))
    rx = sym + sigma * unit_noise
    return float(np.mean(demap_symbols(rx, mod) != bits))


def required_snr_table(
    target_ber: float,
    modulations=tuple(Modulation),
    n_trials: int = 200_000,
    seed: int = 0,
    tol_db: float = 0.01,
) -> ModulationTable:
    """Monte-Carlo symbol SNR (Es/N0, dB) needed to reach ``target_ber``.

    ``n_trials`` is the number of bits simulated per modulation. The same
    noise realization is rescaled at every bisection step, so the BER curve
    being searched is (essentially) monotone.
    """
    if not 0 < target_ber <= 0.5:
        raise ValueError("target_ber must be in (0, 0.5]")
    if target_ber * n_trials < 10:
        raise UnreachableBer(
            f"{n_trials} trials cannot resolve BER {target_ber:g}; need at least {math.ceil(10 / target_ber)}"
        )
    lo0, hi0 = SNR_SEARCH_RANGE_DB
    entries = {}
    for mod, s in zip(modulations, seed_stream(seed, len(modulations))):
        mod = Modulation.parse(mod)
        k = mod.bits_per_symbol
        n_bits = k * math.ceil(n_trials / k)
        rng = np.random.default_rng(s)
        bits = rng.integers(0, 2, n_bits, dtype=np.uint8)
        n_sym = n_bits // k
        if mod.is_complex:
            noise = rng.standard_normal(n_sym) + 1j * rng.standard_normal(n_sym)
        else:
            noise = rng.standard_normal(n_sym).astype(complex)
        if _awgn_ber(mod, bits, noise, lo0) <= target_ber:
            entries[mod] = lo0
            continue
        if _awgn_ber(mod, bits, noise, hi0) > target_ber:
            raise UnreachableBer(f"{mod.name} does not reach BER {target_ber:g} below {hi0} dB")
        lo, hi = lo0, hi0
        while hi - lo > tol_db:
            mid = 0.5 * (lo + hi)
            if _awgn_ber(mod, bits, noise, mid) <= target_ber:
                hi = mid
            else:
                lo = mid
        entries[mod] = round(hi, 6)
    return ModulationTable(entries, target_ber)


class ProbeRangeError(ValueError):
    pass


def _min_gain_db(profile: ChannelProfile, lo: float, hi: float) -> float:
    f = profile.probe_freqs_hz
    g = profile.gain_db
    if hi > f[-1] * (1 + 1e-12) or (lo > 0 and lo < f[0] * (1 - 1e-12)):
        raise ProbeRangeError(f"band [{lo:g}, {hi:g}] Hz is outside the probed range [{f[0]:g}, {f[-1]:g}] Hz")
    # a baseband band is allowed to start below the first tone; the DC
    # region is taken flat at the first probed gain
    lo = max(lo, f[0])
    inside = g[(f > lo) & (f < hi)]
    edges = np.interp([lo, hi], f, g)
    return float(min(edges.min(), inside.min() if inside.size else np.inf))


def predict_band_snr(profile: ChannelProfile, band: Band, tx_power_density_dbhz: float) -> float:
    """Es/N0 in dB using the minimum probed gain over the band's occupied interval."""
    lo, hi = band.occupied
    return tx_power_density_dbhz + _min_gain_db(profile, lo, hi) - profile.noise_density_dbhz


@dataclass(frozen=True)
class AllocationConstraints:
    max_bands: int
    carrier_grid_hz: tuple[float, ...]
    symbol_rates_hz: tuple[float, ...]
    snr_margin_db: float = 3.0
    usable_band_hz: float = math.inf
    rolloff: float = DEFAULT_ROLLOFF
    guard_hz: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "carrier_grid_hz", tuple(sorted(float(c) for c in self.carrier_grid_hz)))
        object.__setattr__(self, "symbol_rates_hz", tuple(sorted(float(r) for r in self.symbol_rates_hz)))
        if self.max_bands < 1:
            raise ValueError("max_bands must be >= 1")
        if not self.carrier_grid_hz or not self.symbol_rates_hz:
            raise ValueError("carrier grid and symbol-rate set must be nonempty")
        if self.snr_margin_db < 0:
            raise ValueError("snr_margin_db must be >= 0")

    def to_dict(self) -> dict:
        return {
            "max_bands": self.max_bands,
            "carrier_grid_hz": list(self.carrier_grid_hz),
            "symbol_rates_hz": list(self.symbol_rates_hz),
            "snr_margin_db": self.snr_margin_db,
            "usable_band_hz": None if math.isinf(self.usable_band_hz) else self.usable_band_hz,
            "rolloff": self.rolloff,
            "guard_hz": self.guard_hz,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AllocationConstraints":
        ub = d.get("usable_band_hz")
        return cls(
            max_bands=int(d["max_bands"]),
            carrier_grid_hz=tuple(d["carrier_grid_hz"]),
            symbol_rates_hz=tuple(d["symbol_rates_hz"]),
            snr_margin_db=float(d.get("snr_margin_db", 3.0)),
            usable_band_hz=math.inf if ub is None else float(ub),
            rolloff=float(d.get("rolloff", DEFAULT_ROLLOFF)),
            guard_hz=float(d.get("guard_hz", 0.0)),
        )


@dataclass(frozen=True)
class AllocationResult:
    plan: BandPlan
    per_band_predicted_snr_db: tuple[float, ...]
    aggregate_bps: float
    tx_power_density_dbhz: float
    noise_density_dbhz: float

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "per_band_predicted_snr_db": [float(v) for v in self.per_band_predicted_snr_db],
            "aggregate_bps": float(self.aggregate_bps),
            "tx_power_density_dbhz": float(self.tx_power_density_dbhz),
            "noise_density_dbhz": float(self.noise_density_dbhz),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AllocationResult":
        return cls(
            BandPlan.from_dict(d["plan"]),
            tuple(d["per_band_predicted_snr_db"]),
            float(d["aggregate_bps"]),
            float(d["tx_power_density_dbhz"]),
            float(d["noise_density_dbhz"]),
        )


@dataclass(frozen=True)
class Candidate:
    band: Band
    predicted_snr_db: float
    required_snr_db: float


def feasible_candidates(
    profile: ChannelProfile,
    table: ModulationTable,
    constraints: AllocationConstraints,
    tx_power_density_dbhz: float,
) -> list[Candidate]:
    """Every (carrier, rate, modulation) that fits the band and meets SNR + margin."""
    out = []
    for fc, rs, mod in itertools.product(constraints.carrier_grid_hz, constraints.symbol_rates_hz, table.entries):
        if fc > 0 and mod.family == "pam":
            continue  # PAM/NRZ only as the baseband band
        try:
            band = Band(fc, mod, rs, constraints.rolloff)
        except ValueError:
            continue
        if band.occupied[1] > constraints.usable_band_hz:
            continue
        try:
            snr = predict_band_snr(profile, band, tx_power_density_dbhz)
        except ProbeRangeError:
            continue
        req = table.required(mod)
        if snr >= req + constraints.snr_margin_db:
            out.append(Candidate(band, snr, req))
    return out


def _clashes(a: Band, b: Band, guard: float) -> bool:
    a0, a1 = a.occupied
    b0, b1 = b.occupied
    return a0 < b1 + guard and b0 < a1 + guard


def allocate_bands(
    profile: ChannelProfile,
    table: ModulationTable,
    constraints: AllocationConstraints,
    tx_power_density_dbhz: float,
) -> AllocationResult:
    """Greedy band plan: highest bit rate first among non-overlapping feasible bands.

    Ties go to the lower required SNR, then the lower carrier. Every band in
    the result meets ``required + margin`` on the probed profile. An empty plan
    (fully blocked channel) is a valid result.
    """
    cands = feasible_candidates(profile, table, constraints, tx_power_density_dbhz)
    cands.sort(
        key=lambda c: (
            -c.band.bit_rate,
            c.required_snr_db,
            c.band.carrier_hz,
            c.band.symbol_rate_hz,
            c.band.modulation.name,
        )
    )
    chosen: list[Candidate] = []
    for c in cands:
        if len(chosen) >= constraints.max_bands:
            break
        if any(_clashes(c.band, x.band, constraints.guard_hz) for x in chosen):
            continue
        chosen.append(c)
    chosen.sort(key=lambda c: c.band.carrier_hz)
    plan = BandPlan(tuple(c.band for c in chosen))
    return AllocationResult(
        plan,
        tuple(c.predicted_snr_db for c in chosen),
        plan.aggregate_bps,
        float(tx_power_density_dbhz),
        float(profile.noise_density_dbhz),
    )


def brute_force_allocation(
    profile: ChannelProfile,
    table: ModulationTable,
    constraints: AllocationConstraints,
    tx_power_density_dbhz: float,
) -> float:
    """Best achievable aggregate bit rate by exhaustive search (small instances only)."""
    cands = feasible_candidates(profile, table, constraints, tx_power_density_dbhz)
    best = 0.0
    for k in range(1, constraints.max_bands + 1):
        for combo in itertools.combinations(cands, k):
            bands = [c.band for c in combo]
            if any(_clashes(a, b, constraints.guard_hz) for a, b in itertools.combinations(bands, 2)):
                continue
            best = max(best, sum(b.bit_rate for b in bands))
    return best
