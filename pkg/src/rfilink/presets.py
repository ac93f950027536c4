"""Named channel models and bundled scenario files.

Channel parameters are desk-scale fixtures chosen to exhibit the behaviours
each preset stands for (bandwidth limit, long ISI tail, 40 dB notches); they
are not fitted to measured hardware.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .channel import DEFAULT_N_TAPS, ChannelModel, Identity, LossyLine, LumpedC, Notch, Notched

# loss coefficients: k_skin in Np/(m sqrt(Hz)), k_diel in Np/(m Hz)
FR4_TRACE = dict(k_skin=1.4e-5, k_diel=4.2e-10, delay_s_per_m=6.7e-9)
CABLE = dict(k_skin=2.5e-5, k_diel=2e-10, delay_s_per_m=5e-9)


@dataclass(frozen=True)
class ChannelPreset:
    model: ChannelModel
    n_taps: int
    description: str


CHANNEL_PRESETS: dict[str, ChannelPreset] = {
    "identity": ChannelPreset(Identity(), DEFAULT_N_TAPS, "ideal wire"),
    "on_chip": ChannelPreset(LumpedC(4e9), DEFAULT_N_TAPS, "on-chip wire as a lumped RC, 4 GHz corner"),
    "fr4_2in": ChannelPreset(LossyLine(length_m=0.0508, **FR4_TRACE), DEFAULT_N_TAPS, "2 inch FR4 trace"),
    "mdb": ChannelPreset(
        Notched(LossyLine(length_m=0.2, **FR4_TRACE), (Notch(2.2e9, 40.0, 6.0), Notch(4.5e9, 40.0, 10.0))),
        DEFAULT_N_TAPS,
        "multi-drop bus: 20 cm FR4 with two 40 dB stub notches",
    ),
    "low_cost_cable": ChannelPreset(
        Notched(LossyLine(length_m=1.0, **CABLE), (Notch(4.5e9, 40.0, 8.0),)),
        4096,
        "1 m low-cost cable with a 40 dB connector notch at 4.5 GHz",
    ),
    "notch_fixture": ChannelPreset(
        Notched(LossyLine(length_m=0.3, **FR4_TRACE), (Notch(2.0e9, 40.0, 1.0),)),
        DEFAULT_N_TAPS,
        "30 cm FR4 with a broad 40 dB notch at 2 GHz (notch-avoidance fixture)",
    ),
    "long_tail": ChannelPreset(
        LossyLine(k_skin=8e-5, k_diel=1e-11, length_m=1.0, delay_s_per_m=5e-9),
        16384,
        "skin-loss dominated 1 m line; single-bit tail longer than 20 UI at 10 Gb/s",
    ),
}

SCENARIO_PRESETS = ("gen2009", "gen2012", "gen2015", "gen2016isscc", "gen2016vlsi", "fig5")


def channel_preset(name: str) -> ChannelPreset:
    try:
        return CHANNEL_PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown channel preset {name!r}; known: {', '.join(CHANNEL_PRESETS)}") from None


def scenario_text(name: str) -> str:
    if name not in SCENARIO_PRESETS:
        raise KeyError(f"unknown scenario preset {name!r}; known: {', '.join(SCENARIO_PRESETS)}")
    return resources.files(__package__).joinpath("scenarios", f"{name}.yaml").read_text(encoding="utf-8")
