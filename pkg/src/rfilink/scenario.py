"""Scenario configuration: YAML schema, validation and channel-spec parsing.

A scenario file is a YAML mapping::

    seed: 7
    plan:                      # or: {auto: {...}}  or: {file: plan.json}
      bands:
        - {carrier_hz: 0, modulation: PAM8, symbol_rate_hz: 1.0e9}
    channel: mdb               # preset name, CSV path, or a model mapping
    snr_db: 30                 # exactly one of sigma / snr_db / noise_density_dbhz
    tx_power_density_dbhz: -90 # optional; sets every band's power_scale
    equalizer: {ffe_len: 3, dfe_len: 4, mu: 0.01}   # or: off
    n_bits_per_stream: 100000
    sample_rate: auto          # or a number in Hz

See the README for the full key list.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .channel import (
    DEFAULT_N_TAPS,
    ChannelModel,
    Identity,
    LossyLine,
    LumpedC,
    Notch,
    Notched,
    Tabulated,
    jitter_notches,
)
from .cognitive import AllocationConstraints, default_probe_freqs
from .equalizer import CtleConfig, TxFir
from .fileio import estimate_bulk_delay, load_channel_csv, read_json
from .modem import BandPlan
from .presets import channel_preset, scenario_text

DEFAULT_TX_DENSITY_DBHZ = -90.0


class ScenarioError(ValueError):
    pass


# -- channel specs ---------------------------------------------------------

_MODEL_KEYS = {
    "identity": (),
    "lumped_c": ("f3db_hz",),
    "lossy_line": ("k_skin", "k_diel", "length_m", "delay_s_per_m"),
    "notched": ("base", "notches"),
}


def _model_from_mapping(spec: dict) -> ChannelModel:
    name = spec.get("model")
    if name not in _MODEL_KEYS:
        raise ScenarioError(f"unknown channel model {name!r}; known: {', '.join(_MODEL_KEYS)}")
    extra = set(spec) - {"model", "n_taps", "jitter", *_MODEL_KEYS[name]}
    if extra:
        raise ScenarioError(f"unexpected keys for {name}: {', '.join(sorted(extra))}")
    try:
        if name == "identity":
            return Identity()
        if name == "lumped_c":
            return LumpedC(float(spec["f3db_hz"]))
        if name == "lossy_line":
            return LossyLine(
                float(spec["k_skin"]),
                float(spec["k_diel"]),
                float(spec["length_m"]),
                float(spec.get("delay_s_per_m", 0.0)),
            )
        base, _ = _resolve_channel(spec["base"], None)
        notches = tuple(Notch(float(n["f0_hz"]), float(n["depth_db"]), float(n["q"])) for n in spec["notches"])
        return Notched(base, notches)
    except KeyError as e:
        raise ScenarioError(f"channel model {name} is missing {e.args[0]!r}") from None


def _resolve_channel(spec, base_dir: Path | None) -> tuple[ChannelModel, int]:
    if isinstance(spec, str):
        if spec.endswith(".csv"):
            spec = {"csv": spec}
        else:
            try:
                p = channel_preset(spec)
            except KeyError as e:
                raise ScenarioError(str(e.args[0])) from None
            return p.model, p.n_taps
    if not isinstance(spec, dict):
        raise ScenarioError(f"cannot interpret channel spec {spec!r}")
    n_taps = spec.get("n_taps")
    if "preset" in spec:
        try:
            p = channel_preset(spec["preset"])
        except KeyError as e:
            raise ScenarioError(str(e.args[0])) from None
        model, default_taps = p.model, p.n_taps
    elif "csv" in spec:
        path = Path(spec["csv"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        resp = load_channel_csv(path)
        delay = spec.get("delay_s", "auto")
        delay = estimate_bulk_delay(resp) if delay == "auto" else float(delay)
        model, default_taps = Tabulated(resp, delay), DEFAULT_N_TAPS
    else:
        model, default_taps = _model_from_mapping(spec), DEFAULT_N_TAPS
    if "jitter" in spec:
        j = spec["jitter"]
        model = jitter_notches(model, float(j["fraction"]), int(j["seed"]))
    return model, int(n_taps) if n_taps is not None else default_taps


def build_channel(spec, base_dir=None) -> tuple[ChannelModel, int]:
    """Channel model and FIR length for a scenario channel spec."""
    return _resolve_channel(spec, Path(base_dir) if base_dir is not None else None)


# -- equalizer ---------------------------------------------------------------


@dataclass(frozen=True)
class BandEqualizer:
    ffe_len: int = 1
    dfe_len: int = 0
    mu: float = 0.01
    ffe_cursor: int = 0
    tx_fir: TxFir | None = None

    def __post_init__(self) -> None:
        if self.ffe_len < 1 or self.dfe_len < 0 or self.mu < 0:
            raise ScenarioError("equalizer needs ffe_len >= 1, dfe_len >= 0, mu >= 0")
        if not 0 <= self.ffe_cursor < self.ffe_len:
            raise ScenarioError("ffe_cursor must index an FFE tap")


@dataclass(frozen=True)
class EqualizerConfig:
    default: BandEqualizer = BandEqualizer()
    ctle: CtleConfig | None = None
    per_band: tuple[BandEqualizer, ...] = ()

    def for_band(self, i: int) -> BandEqualizer:
        return self.per_band[i] if self.per_band else self.default


_BAND_EQ_KEYS = ("ffe_len", "dfe_len", "mu", "ffe_cursor", "tx_fir")


def _band_eq_from(d: dict, base: BandEqualizer | None = None) -> BandEqualizer:
    extra = set(d) - set(_BAND_EQ_KEYS)
    if extra:
        raise ScenarioError(f"unexpected equalizer keys: {', '.join(sorted(extra))}")
    kw = {} if base is None else dict(base.__dict__)
    for k in ("ffe_len", "dfe_len", "ffe_cursor"):
        if k in d:
            kw[k] = int(d[k])
    if "mu" in d:
        kw["mu"] = float(d["mu"])
    if "tx_fir" in d:
        t = d["tx_fir"]
        kw["tx_fir"] = None if t is None else TxFir(tuple(t["taps"]), int(t.get("cursor_index", 0)))
    return BandEqualizer(**kw)


def _band_eq_to(e: BandEqualizer) -> dict:
    d = {"ffe_len": e.ffe_len, "dfe_len": e.dfe_len, "mu": e.mu, "ffe_cursor": e.ffe_cursor}
    if e.tx_fir is not None:
        d["tx_fir"] = {"taps": list(e.tx_fir.taps), "cursor_index": e.tx_fir.cursor_index}
    return d


def parse_equalizer(spec) -> EqualizerConfig | None:
    if spec is None or spec is False or spec == "off":
        return None
    if not isinstance(spec, dict):
        raise ScenarioError(f"equalizer must be 'off' or a mapping, got {spec!r}")
    d = dict(spec)
    ctle = d.pop("ctle", None)
    per_band = d.pop("per_band", None) or ()
    default = _band_eq_from(d)
    ctle_cfg = None
    if ctle is not None:
        p2 = ctle.get("pole2_hz")
        ctle_cfg = CtleConfig(
            float(ctle["zero_hz"]),
            float(ctle["pole1_hz"]),
            None if p2 is None else float(p2),
            float(ctle.get("dc_gain", 1.0)),
        )
    return EqualizerConfig(default, ctle_cfg, tuple(_band_eq_from(b, default) for b in per_band))


def equalizer_to_dict(eq: EqualizerConfig | None):
    if eq is None:
        return "off"
    d = _band_eq_to(eq.default)
    if eq.ctle is not None:
        d["ctle"] = {
            "zero_hz": eq.ctle.zero_hz,
            "pole1_hz": eq.ctle.pole1_hz,
            "pole2_hz": eq.ctle.pole2_hz,
            "dc_gain": eq.ctle.dc_gain,
        }
    if eq.per_band:
        d["per_band"] = [_band_eq_to(b) for b in eq.per_band]
    return d


# -- plan ----------------------------------------------------------------------


@dataclass(frozen=True)
class AutoPlan:
    """Probe the channel, build the SNR table and allocate bands at run time."""

    constraints: AllocationConstraints
    target_ber: float = 1e-3
    probe_fmin_hz: float = 0.1e9
    probe_fmax_hz: float = 10e9
    probe_points: int = 64
    tone_power: float = 1.0
    tone_duration_symbols: int = 2048
    table_trials: int = 200_000

    @property
    def probe_freqs(self) -> np.ndarray:
        return default_probe_freqs(self.probe_points, self.probe_fmin_hz, self.probe_fmax_hz)

    def to_dict(self) -> dict:
        return {
            "constraints": self.constraints.to_dict(),
            "target_ber": self.target_ber,
            "probe_fmin_hz": self.probe_fmin_hz,
            "probe_fmax_hz": self.probe_fmax_hz,
            "probe_points": self.probe_points,
            "tone_power": self.tone_power,
            "tone_duration_symbols": self.tone_duration_symbols,
            "table_trials": self.table_trials,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AutoPlan":
        d = dict(d)
        constraints = AllocationConstraints.from_dict(d.pop("constraints"))
        known = {f for f in cls.__dataclass_fields__ if f != "constraints"}
        extra = set(d) - known
        if extra:
            raise ScenarioError(f"unexpected auto-plan keys: {', '.join(sorted(extra))}")
        return cls(constraints, **d)


def _parse_plan(spec, base_dir: Path | None):
    if not isinstance(spec, dict):
        raise ScenarioError("plan must be a mapping with 'bands', 'auto' or 'file'")
    if "bands" in spec:
        return BandPlan.from_dict(spec)
    if "auto" in spec:
        return AutoPlan.from_dict(spec["auto"])
    if "file" in spec:
        path = Path(spec["file"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        d = read_json(path)
        # accept a bare plan or an allocate output
        return BandPlan.from_dict(d["plan"] if "plan" in d else d)
    raise ScenarioError("plan must contain 'bands', 'auto' or 'file'")


# -- scenario ------------------------------------------------------------------

_TOP_KEYS = {
    "seed",
    "plan",
    "channel",
    "sigma",
    "snr_db",
    "noise_density_dbhz",
    "tx_power_density_dbhz",
    "equalizer",
    "n_bits_per_stream",
    "sample_rate",
    "timing",
    "phase_error_rad",
    "timing_offset_samples",
    "metadata",
}


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    plan: BandPlan | AutoPlan
    channel: object  # the spec as written; resolved by build_channel
    sigma: float | None = None
    snr_db: float | None = None
    noise_density_dbhz: float | None = None
    tx_power_density_dbhz: float | None = None
    equalizer: EqualizerConfig | None = None
    n_bits_per_stream: int = 100_000
    sample_rate: float | str = "auto"
    timing: str = "analytic"
    phase_error_rad: float = 0.0
    timing_offset_samples: int = 0
    metadata: dict = field(default_factory=dict)
    base_dir: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        noise = [v for v in (self.sigma, self.snr_db, self.noise_density_dbhz) if v is not None]
        if len(noise) != 1:
            raise ScenarioError("give exactly one of sigma, snr_db, noise_density_dbhz")
        if self.sigma is not None and self.sigma < 0:
            raise ScenarioError("sigma must be >= 0")
        if isinstance(self.plan, AutoPlan) and self.sigma is not None:
            raise ScenarioError("an auto plan needs noise as snr_db or noise_density_dbhz, not sigma")
        if self.n_bits_per_stream < 1:
            raise ScenarioError("n_bits_per_stream must be >= 1")
        if self.sample_rate != "auto" and not (isinstance(self.sample_rate, (int, float)) and self.sample_rate > 0):
            raise ScenarioError("sample_rate must be 'auto' or a positive number")
        if self.timing not in ("analytic", "correlate"):
            raise ScenarioError("timing must be 'analytic' or 'correlate'")
        if (
            self.equalizer is not None
            and self.equalizer.per_band
            and isinstance(self.plan, BandPlan)
            and len(self.equalizer.per_band) != len(self.plan.bands)
        ):
            raise ScenarioError("equalizer.per_band must list one entry per band")

    @classmethod
    def from_dict(cls, d: dict, base_dir=None) -> "ScenarioConfig":
        if not isinstance(d, dict):
            raise ScenarioError("scenario must be a mapping")
        extra = set(d) - _TOP_KEYS
        if extra:
            raise ScenarioError(f"unknown scenario keys: {', '.join(sorted(extra))}")
        for k in ("seed", "plan", "channel"):
            if k not in d:
                raise ScenarioError(f"scenario is missing {k!r}")
        bd = Path(base_dir) if base_dir is not None else None

        def opt(k):
            return None if d.get(k) is None else float(d[k])

        sr = d.get("sample_rate", "auto")
        if sr != "auto":
            try:
                sr = float(sr)
            except (TypeError, ValueError):
                raise ScenarioError(f"sample_rate must be 'auto' or a number in Hz, got {sr!r}") from None
        try:
            return cls(
                seed=int(d["seed"]),
                plan=_parse_plan(d["plan"], bd),
                channel=copy.deepcopy(d["channel"]),
                sigma=opt("sigma"),
                snr_db=opt("snr_db"),
                noise_density_dbhz=opt("noise_density_dbhz"),
                tx_power_density_dbhz=opt("tx_power_density_dbhz"),
                equalizer=parse_equalizer(d.get("equalizer", "off")),
                n_bits_per_stream=int(d.get("n_bits_per_stream", 100_000)),
                sample_rate=sr,
                timing=str(d.get("timing", "analytic")),
                phase_error_rad=float(d.get("phase_error_rad", 0.0)),
                timing_offset_samples=int(d.get("timing_offset_samples", 0)),
                metadata=copy.deepcopy(d.get("metadata") or {}),
                base_dir=None if bd is None else str(bd),
            )
        except ScenarioError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise ScenarioError(f"invalid scenario: {e}") from None

    def to_dict(self) -> dict:
        d = {
            "seed": self.seed,
            "plan": self.plan.to_dict() if isinstance(self.plan, BandPlan) else {"auto": self.plan.to_dict()},
            "channel": copy.deepcopy(self.channel),
        }
        for k in ("sigma", "snr_db", "noise_density_dbhz", "tx_power_density_dbhz"):
            v = getattr(self, k)
            if v is not None:
                d[k] = v
        d["equalizer"] = equalizer_to_dict(self.equalizer)
        d["n_bits_per_stream"] = self.n_bits_per_stream
        d["sample_rate"] = self.sample_rate
        d["timing"] = self.timing
        d["phase_error_rad"] = self.phase_error_rad
        d["timing_offset_samples"] = self.timing_offset_samples
        if self.metadata:
            d["metadata"] = copy.deepcopy(self.metadata)
        return d

    def with_plan(self, plan: BandPlan) -> "ScenarioConfig":
        return replace(self, plan=plan)


def load_scenario(path) -> ScenarioConfig:
    p = Path(path)
    try:
        d = yaml.safe_load(p.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ScenarioError(f"{p}: invalid YAML: {e}") from None
    return ScenarioConfig.from_dict(d, base_dir=p.parent)


def load_preset_scenario(name: str) -> ScenarioConfig:
    return ScenarioConfig.from_dict(yaml.safe_load(scenario_text(name)))


def resolve_scenario(ref) -> ScenarioConfig:
    """A scenario file path or a bundled preset name."""
    p = Path(ref)
    if p.exists():
        return load_scenario(p)
    try:
        return load_preset_scenario(str(ref))
    except KeyError:
        raise ScenarioError(f"no scenario file or preset named {ref!r}") from None


def set_param(d: dict, dotted: str, value) -> dict:
    """Copy of ``d`` with the dotted path (list indices allowed) set to ``value``."""
    out = copy.deepcopy(d)
    keys = dotted.split(".")
    node = out
    for k in keys[:-1]:
        if isinstance(node, list):
            node = node[int(k)]
            continue
        if not isinstance(node.get(k), (dict, list)):
            node[k] = {}  # e.g. equalizer: off -> a mapping with defaults
        node = node[k]
    last = keys[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value
    return out
