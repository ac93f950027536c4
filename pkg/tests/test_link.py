from __future__ import annotations

import numpy as np
import pytest

from rfilink.channel import LossyLine, evaluate_response
from rfilink.fileio import dumps_json, save_channel_csv
from rfilink.link import LinkReport, run_link, single_band_nrz, training_symbols
from rfilink.modem import Modulation
from rfilink.presets import FR4_TRACE
from rfilink.scenario import ScenarioConfig, load_preset_scenario


def cfg(bands, **kw):
    d = {"seed": 3, "plan": {"bands": bands}, "channel": "identity", "sigma": 0, "n_bits_per_stream": 24000}
    d.update(kw)
    return ScenarioConfig.from_dict(d, base_dir=kw.pop("base_dir", None))


ALL_BANDS = [
    {"carrier_hz": 0, "modulation": "PAM4", "symbol_rate_hz": 1e9},
    {"carrier_hz": 2.5e9, "modulation": "QAM256", "symbol_rate_hz": 1e9},
    {"carrier_hz": 4.5e9, "modulation": "OOK", "symbol_rate_hz": 1e9},
]


def test_training_length():
    assert training_symbols(1000) == 2000
    assert training_symbols(50_000) == 10_000


def test_identity_lossless():
    r = run_link(cfg(ALL_BANDS))
    for b in r.per_band:
        assert b.ber == 0 and b.bit_errors == 0
        assert b.evm_percent < 1
        assert b.ber_ci95[0] == 0 <= b.ber <= b.ber_ci95[1]


def test_training_excluded_from_ber():
    r = run_link(cfg(ALL_BANDS[:1]))
    n_sym = 24000 // 2
    assert r.per_band[0].n_bits == 2 * (n_sym - training_symbols(n_sym))


def test_aggregate_conservation():
    r = run_link(cfg(ALL_BANDS))
    assert r.aggregate_bps == 2e9 + 8e9 + 1e9


def test_fig5_aggregate_and_lossless():
    r = run_link(load_preset_scenario("fig5"))
    assert r.aggregate_bps == 15e9
    assert all(b.ber == 0 for b in r.per_band)


def test_eye_only_for_baseband():
    r = run_link(cfg(ALL_BANDS))
    assert r.per_band[0].eye_height is not None and r.per_band[0].eye_height > 0
    assert r.per_band[1].eye_height is None and r.per_band[2].eye_height is None
    assert r.eye is not None


def test_report_round_trip_byte_identical():
    r = run_link(load_preset_scenario("gen2016isscc"))
    text = dumps_json(r.to_dict())
    import json

    assert dumps_json(LinkReport.from_dict(json.loads(text)).to_dict()) == text


def test_determinism():
    c = load_preset_scenario("gen2015")
    assert dumps_json(run_link(c).to_dict()) == dumps_json(run_link(c).to_dict())


def test_noise_raises_ber_and_lowers_snr():
    bands = ALL_BANDS[:1]
    clean = run_link(cfg(bands, tx_power_density_dbhz=-90, snr_db=40, sigma=None))
    noisy = run_link(cfg(bands, tx_power_density_dbhz=-90, snr_db=8, sigma=None))
    assert noisy.per_band[0].ber > clean.per_band[0].ber
    assert noisy.per_band[0].snr_db < clean.per_band[0].snr_db
    assert noisy.per_band[0].snr_db == pytest.approx(8, abs=1.0)


def test_notch_closes_single_band_nrz():
    c = cfg(
        [b.to_dict() for b in single_band_nrz(8e9).bands],
        channel="notch_fixture",
        tx_power_density_dbhz=-90,
        snr_db=40,
        sigma=None,
        n_bits_per_stream=20000,
    )
    assert run_link(c).per_band[0].ber > 0.1


def test_equalizer_reported():
    c = cfg(ALL_BANDS[:2], channel="fr4_2in", equalizer={"ffe_len": 3, "dfe_len": 2, "mu": 0.005, "ffe_cursor": 1})
    r = run_link(c)
    for b in r.per_band:
        assert b.equalizer["ffe_len"] == 3 and b.equalizer["dfe_len"] == 2
        assert b.equalizer["converged"]
        assert b.pipeline_delay_ui > 0


def test_correlate_timing_on_csv(tmp_path):
    m = LossyLine(length_m=0.1, **FR4_TRACE)
    save_channel_csv(tmp_path / "line.csv", evaluate_response(m, np.linspace(0, 60e9, 6001)))
    bands = [{"carrier_hz": 0, "modulation": "NRZ", "symbol_rate_hz": 2e9}]
    c = ScenarioConfig.from_dict(
        {"seed": 1, "plan": {"bands": bands}, "channel": "line.csv", "sigma": 0, "timing": "correlate", "n_bits_per_stream": 8000},
        base_dir=tmp_path,
    )
    assert run_link(c).per_band[0].ber == 0


def test_phase_error_rotates_qam():
    b = [{"carrier_hz": 3e9, "modulation": "QPSK", "symbol_rate_hz": 1e9}]
    ok = run_link(cfg(b, phase_error_rad=0.3)).per_band[0]
    bad = run_link(cfg(b, phase_error_rad=np.pi / 2 + 0.2)).per_band[0]
    assert ok.ber == 0 and ok.evm_percent > 10
    assert bad.ber > 0.1


def test_single_band_nrz_helper():
    p = single_band_nrz(12e9)
    assert p.aggregate_bps == 12e9 and p.bands[0].modulation is Modulation.NRZ
