from __future__ import annotations

import numpy as np
import pytest

from rfilink.channel import LossyLine, evaluate_response
from rfilink.fileio import (
    CsvFormatError,
    dumps_json,
    estimate_bulk_delay,
    format_channel_csv,
    load_channel_csv,
    parse_channel_csv,
    read_json,
    save_channel_csv,
    write_json,
)
from rfilink.presets import CHANNEL_PRESETS


def test_two_point_example():
    r = parse_channel_csv("freq_hz,mag_db,phase_deg\n0,0,0\n1e9,-3.01,-45\n")
    assert r.freqs_hz.tolist() == [0.0, 1e9]
    assert r.mag_db[1] == pytest.approx(-3.01)
    assert r.phase_deg[1] == pytest.approx(-45.0)


def test_comments_and_blank_lines():
    r = parse_channel_csv("# made by hand\n\nfreq_hz,mag_db,phase_deg\n# row\n0,0,0\n")
    assert len(r.freqs_hz) == 1


@pytest.mark.parametrize(
    "text,line,kind",
    [
        ("0,0,0\n", 1, "missing header"),
        ("freq_hz,mag_db,phase_deg\n0,0,0\n1e9,-3\n", 3, "malformed row"),
        ("freq_hz,mag_db,phase_deg\n0,0,0\n1e9,x,0\n", 3, "malformed row"),
        ("freq_hz,mag_db,phase_deg\n0,0,0\n1e9,nan,0\n", 3, "malformed row"),
        ("freq_hz,mag_db,phase_deg\n0,0,0\n1e9,-1,0\n1e9,-2,0\n", 4, "non-ascending"),
        ("freq_hz,mag_db,phase_deg\n0,0,0\n2e9,-1,0\n1e9,-2,0\n", 4, "non-ascending"),
        ("freq_hz,mag_db,phase_deg\n5,0,0\n", 2, "first frequency"),
    ],
)
def test_diagnostics_name_the_line(text, line, kind):
    with pytest.raises(CsvFormatError, match=rf"ch\.csv:{line}: {kind}"):
        parse_channel_csv(text, "ch.csv")


def test_empty_file():
    with pytest.raises(CsvFormatError, match="missing header"):
        parse_channel_csv("# nothing\n", "e.csv")


@pytest.mark.parametrize("name", ["fr4_2in", "mdb", "low_cost_cable"])
def test_synth_round_trip(tmp_path, name):
    f = np.linspace(0, 20e9, 801)
    resp = evaluate_response(CHANNEL_PRESETS[name].model, f)
    p = tmp_path / "c.csv"
    save_channel_csv(p, resp, comment="round trip")
    back = load_channel_csv(p)
    assert np.max(np.abs(back.mag_db - resp.mag_db)) < 1e-6
    assert np.max(np.abs(back.phase_deg - resp.phase_deg)) < 1e-6


def test_format_is_stable():
    resp = evaluate_response(CHANNEL_PRESETS["on_chip"].model, [0, 1e9, 2e9])
    text = format_channel_csv(resp)
    assert format_channel_csv(parse_channel_csv(text)) == text


def test_bulk_delay_estimate():
    m = LossyLine(k_skin=1e-5, k_diel=1e-10, length_m=0.3, delay_s_per_m=6e-9)
    resp = evaluate_response(m, np.linspace(0, 20e9, 2001))
    assert estimate_bulk_delay(resp) == pytest.approx(1.8e-9, rel=1e-6)


def test_json_round_trip_byte_identical(tmp_path):
    obj = {"a": [1.0, 2.5e-9, 1 / 3], "b": {"c": None, "d": "x"}, "e": 7}
    p = tmp_path / "r.json"
    write_json(p, obj)
    assert dumps_json(read_json(p)) == p.read_text(encoding="utf-8")


def test_json_rejects_nan():
    with pytest.raises(ValueError):
        dumps_json({"x": float("nan")})
