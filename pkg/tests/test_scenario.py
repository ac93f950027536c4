from __future__ import annotations

import pytest
import yaml

from rfilink.channel import Identity, LossyLine, LumpedC, Notched, Tabulated
from rfilink.fileio import save_channel_csv
from rfilink.channel import evaluate_response
from rfilink.modem import BandPlan
from rfilink.presets import CHANNEL_PRESETS, SCENARIO_PRESETS, channel_preset
from rfilink.scenario import (
    AutoPlan,
    ScenarioConfig,
    ScenarioError,
    build_channel,
    load_preset_scenario,
    load_scenario,
    resolve_scenario,
    set_param,
)
import numpy as np

BASE = {
    "seed": 1,
    "plan": {"bands": [{"carrier_hz": 0, "modulation": "NRZ", "symbol_rate_hz": 1e9}]},
    "channel": "identity",
    "sigma": 0,
}


class TestChannelSpec:
    def test_preset_name(self):
        m, n = build_channel("mdb")
        assert m == CHANNEL_PRESETS["mdb"].model and n == CHANNEL_PRESETS["mdb"].n_taps

    def test_unknown_preset(self):
        with pytest.raises((ScenarioError, KeyError)):
            build_channel("nope")
        with pytest.raises(KeyError):
            channel_preset("nope")

    def test_model_mappings(self):
        assert build_channel({"model": "identity"})[0] == Identity()
        assert build_channel({"model": "lumped_c", "f3db_hz": 2e9})[0] == LumpedC(2e9)
        m, _ = build_channel(
            {
                "model": "notched",
                "base": {"model": "lossy_line", "k_skin": 1e-5, "k_diel": 0, "length_m": 0.1},
                "notches": [{"f0_hz": 3e9, "depth_db": 40, "q": 5}],
                "n_taps": 4096,
            }
        )
        assert isinstance(m, Notched) and isinstance(m.base, LossyLine)
        assert build_channel({"model": "lumped_c", "f3db_hz": 2e9, "n_taps": 512})[1] == 512

    def test_unexpected_key(self):
        with pytest.raises(ScenarioError, match="unexpected"):
            build_channel({"model": "lumped_c", "f3db_hz": 1e9, "colour": "red"})

    def test_csv_path_relative(self, tmp_path):
        resp = evaluate_response(LumpedC(3e9), np.linspace(0, 40e9, 401))
        save_channel_csv(tmp_path / "ch.csv", resp)
        m, _ = build_channel("ch.csv", tmp_path)
        assert isinstance(m, Tabulated)
        m2, _ = build_channel({"csv": "ch.csv", "delay_s": "auto"}, tmp_path)
        assert m2.bulk_delay_s >= 0

    def test_jitter(self):
        a, _ = build_channel({"preset": "mdb", "jitter": {"fraction": 0.1, "seed": 4}})
        b, _ = build_channel({"preset": "mdb", "jitter": {"fraction": 0.1, "seed": 4}})
        assert a == b and a != CHANNEL_PRESETS["mdb"].model


class TestConfig:
    def test_round_trip(self):
        cfg = ScenarioConfig.from_dict(BASE)
        assert ScenarioConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()

    @pytest.mark.parametrize(
        "patch,msg",
        [
            ({"snr_db": 10}, "exactly one"),
            ({"sigma": None}, "exactly one"),
            ({"sigma": -1}, "sigma"),
            ({"n_bits_per_stream": 0}, "n_bits"),
            ({"timing": "psychic"}, "timing"),
            ({"sample_rate": "fast"}, "sample_rate"),
            ({"colour": 1}, "unknown scenario keys"),
        ],
    )
    def test_validation(self, patch, msg):
        d = {**BASE, **patch}
        d = {k: v for k, v in d.items() if v is not None}
        with pytest.raises(ScenarioError, match=msg):
            ScenarioConfig.from_dict(d)

    def test_missing_key(self):
        with pytest.raises(ScenarioError, match="missing"):
            ScenarioConfig.from_dict({"seed": 1, "channel": "identity", "sigma": 0})

    def test_overlapping_plan_rejected(self):
        d = {
            **BASE,
            "plan": {
                "bands": [
                    {"carrier_hz": 2e9, "modulation": "QPSK", "symbol_rate_hz": 1e9},
                    {"carrier_hz": 2.5e9, "modulation": "QPSK", "symbol_rate_hz": 1e9},
                ]
            },
        }
        with pytest.raises(ScenarioError):
            ScenarioConfig.from_dict(d)

    def test_auto_plan_rejects_sigma(self):
        d = {
            **BASE,
            "plan": {"auto": {"constraints": {"max_bands": 1, "carrier_grid_hz": [0], "symbol_rates_hz": [1e9]}}},
        }
        with pytest.raises(ScenarioError, match="auto plan"):
            ScenarioConfig.from_dict(d)
        d = {k: v for k, v in d.items() if k != "sigma"} | {"snr_db": 30}
        assert isinstance(ScenarioConfig.from_dict(d).plan, AutoPlan)

    def test_equalizer_off_forms(self):
        for v in ("off", False, None):
            assert ScenarioConfig.from_dict({**BASE, "equalizer": v}).equalizer is None

    def test_plan_from_file(self, tmp_path):
        (tmp_path / "plan.json").write_text(
            '{"plan": {"bands": [{"carrier_hz": 3e9, "modulation": "QAM16", "symbol_rate_hz": 1e9}]}}'
        )
        cfg = ScenarioConfig.from_dict({**BASE, "plan": {"file": "plan.json"}}, base_dir=tmp_path)
        assert isinstance(cfg.plan, BandPlan) and cfg.plan.bands[0].carrier_hz == 3e9

    @pytest.mark.parametrize("name", SCENARIO_PRESETS)
    def test_presets_load(self, name):
        cfg = load_preset_scenario(name)
        assert cfg.metadata or name == "fig5"

    def test_resolve_path_or_preset(self, tmp_path):
        p = tmp_path / "s.yaml"
        p.write_text(yaml.safe_dump(BASE))
        assert load_scenario(p).to_dict() == resolve_scenario(str(p)).to_dict()
        assert resolve_scenario("fig5").to_dict() == load_preset_scenario("fig5").to_dict()
        with pytest.raises((ScenarioError, KeyError, OSError)):
            resolve_scenario("missing.yaml")


class TestSetParam:
    def test_nested_and_copy(self):
        d = {"a": {"b": 1}, "l": [{"x": 1}]}
        e = set_param(d, "a.b", 2)
        assert e["a"]["b"] == 2 and d["a"]["b"] == 1
        assert set_param(d, "l.0.x", 5)["l"][0]["x"] == 5

    def test_replaces_scalar_node(self):
        assert set_param({"equalizer": "off"}, "equalizer.dfe_len", 3) == {"equalizer": {"dfe_len": 3}}
