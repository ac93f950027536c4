from __future__ import annotations

import csv
import json
import subprocess
import sys

import pytest
import yaml

from rfilink.cli import main
from rfilink.fileio import load_channel_csv

SMALL = {
    "seed": 2,
    "plan": {
        "bands": [
            {"carrier_hz": 0, "modulation": "NRZ", "symbol_rate_hz": 1e9},
            {"carrier_hz": 3e9, "modulation": "QAM16", "symbol_rate_hz": 1e9},
        ]
    },
    "channel": "fr4_2in",
    "tx_power_density_dbhz": -90,
    "snr_db": 30,
    "equalizer": "off",
    "n_bits_per_stream": 12000,
}


@pytest.fixture
def scenario(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text(yaml.safe_dump(SMALL))
    return p


def run(*argv):
    return main([str(a) for a in argv])


def test_simulate_with_eye_and_spectrum(tmp_path, scenario):
    out, eye, psd = tmp_path / "r.json", tmp_path / "eye.csv", tmp_path / "psd.csv"
    assert run("simulate", "--config", scenario, "--out", out, "--eye", eye, "--spectrum", psd) == 0
    rep = json.loads(out.read_text())
    assert rep["aggregate_bps"] == 5e9 and len(rep["per_band"]) == 2
    for key in ("carrier_hz", "modulation", "symbol_rate", "snr_db", "evm_percent", "ber", "ber_ci95"):
        assert key in rep["per_band"][0]
    assert eye.read_text().splitlines()[0] == "t_frac,v,count"
    assert psd.read_text().splitlines()[0] == "freq_hz,psd_db"


def test_simulate_preset(tmp_path):
    assert run("simulate", "--config", "fig5", "--out", tmp_path / "r.json") == 0
    assert json.loads((tmp_path / "r.json").read_text())["aggregate_bps"] == 15e9


def test_probe_then_allocate(tmp_path):
    prof, plan = tmp_path / "p.json", tmp_path / "plan.json"
    assert run("probe", "--channel", "mdb", "--points", 16, "--out", prof) == 0
    p = json.loads(prof.read_text())
    assert len(p["gain_db"]) == 16 and p["channel"] == "mdb"
    assert run("allocate", "--profile", prof, "--trials", 20000, "--carrier-grid", "0:8e9:1e9", "--out", plan) == 0
    a = json.loads(plan.read_text())
    assert {"plan", "aggregate_bps", "per_band_predicted_snr_db", "modulation_table"} <= set(a)


def test_probe_model_spec(tmp_path):
    out = tmp_path / "p.json"
    assert run("probe", "--channel", "lumped_c:f3db_hz=2e9", "--points", 4, "--out", out) == 0


def test_allocated_plan_feeds_simulate(tmp_path):
    prof, plan = tmp_path / "p.json", tmp_path / "plan.json"
    run("probe", "--channel", "fr4_2in", "--points", 32, "--out", prof)
    run("allocate", "--profile", prof, "--trials", 20000, "--max-bands", 2, "--out", plan)
    s = dict(SMALL, plan={"file": "plan.json"}, n_bits_per_stream=40000)
    (tmp_path / "s.yaml").write_text(yaml.safe_dump(s))
    assert run("simulate", "--config", tmp_path / "s.yaml", "--out", tmp_path / "r.json") == 0


@pytest.mark.parametrize("jobs", [1, 2])
def test_sweep(tmp_path, scenario, jobs):
    out = tmp_path / "sw.csv"
    assert run("sweep", "--config", scenario, "--param", "snr_db", "--from", 5, "--to", 25, "--steps", 3, "--jobs", jobs, "--out", out) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0][:3] == ["snr_db", "aggregate_bps", "aggregate_ber"]
    assert [float(r[0]) for r in rows[1:]] == [5.0, 15.0, 25.0]
    bers = [float(r[2]) for r in rows[1:]]
    assert bers[0] >= bers[-1]


def test_sweep_into_off_equalizer(tmp_path, scenario):
    out = tmp_path / "sw.csv"
    assert run("sweep", "--config", scenario, "--param", "equalizer.dfe_len", "--from", 0, "--to", 2, "--steps", 2, "--out", out) == 0


def test_synth_channel_round_trip(tmp_path):
    out = tmp_path / "c.csv"
    assert run("synth-channel", "--model", "notched", "--params", "k_skin=1e-5", "k_diel=0", "length_m=0.2",
               "notch=3e9:40:5", "--fmax", 20e9, "--points", 201, "--out", out) == 0
    r = load_channel_csv(out)
    assert r.freqs_hz[0] == 0 and len(r.freqs_hz) == 201
    assert r.mag_db[r.freqs_hz.tolist().index(3e9)] < -39


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--config", "nope.yaml", "--out", "x.json"],
        ["simulate", "--out", "x.json"],
        ["probe", "--channel", "no_such_preset", "--out", "p.json"],
        ["probe", "--channel", "mdb", "--fmin", "5e9", "--fmax", "1e9", "--out", "p.json"],
        ["allocate", "--profile", "missing.json", "--out", "a.json"],
        ["synth-channel", "--model", "lumped_c", "--params", "oops", "--out", "c.csv"],
        ["synth-channel", "--model", "notched", "--params", "length_m=1", "--out", "c.csv"],
        ["frobnicate"],
    ],
)
def test_errors_are_one_line(tmp_path, monkeypatch, capsys, argv):
    monkeypatch.chdir(tmp_path)
    assert main(argv) != 0
    err = capsys.readouterr().err.strip()
    assert err.startswith("rfilink: error:") and "\n" not in err


def test_console_script_exit_codes(tmp_path):
    ok = subprocess.run([sys.executable, "-m", "rfilink.cli", "--version"], capture_output=True, text=True)
    assert ok.returncode == 0 and "rfilink" in ok.stdout
    bad = subprocess.run([sys.executable, "-m", "rfilink.cli", "simulate", "--config", str(tmp_path / "x.yaml"), "--out", "r.json"],
                         capture_output=True, text=True)
    assert bad.returncode == 2 and len(bad.stderr.strip().splitlines()) == 1
