"""``rfilink`` command-line interface."""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .channel import ChannelError, evaluate_response
from .cognitive import (
    AllocationConstraints,
    ChannelProfile,
    UnreachableBer,
    allocate_bands,
    probe_channel,
    required_snr_table,
)
from .fileio import dumps_json, read_json, save_channel_csv, write_eye_csv, write_json, write_psd_csv, write_rows
from .link import run_link
from .scenario import ScenarioConfig, ScenarioError, build_channel, resolve_scenario, set_param
from .signal import estimate_psd


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # one-line diagnostic instead of usage + message
        raise CliError(message)


def _parse_kv(items) -> dict:
    out: dict = {}
    for item in items or ():
        if "=" not in item:
            raise CliError(f"expected K=V, got {item!r}")
        k, v = item.split("=", 1)
        k = k.strip()
        if k == "notch":
            parts = v.split(":")
            if len(parts) != 3:
                raise CliError(f"notch must be f0_hz:depth_db:q, got {v!r}")
            out.setdefault("notches", []).append(
                {"f0_hz": float(parts[0]), "depth_db": float(parts[1]), "q": float(parts[2])}
            )
            continue
        try:
            out[k] = float(v)
        except ValueError:
            out[k] = v
    return out


_BASE_KEYS = ("k_skin", "k_diel", "length_m", "delay_s_per_m", "f3db_hz")


def model_spec(name: str, params: dict):
    """Scenario-style channel spec for a model name plus K=V parameters."""
    if name not in ("identity", "lumped_c", "lossy_line", "notched"):
        if params:
            raise CliError(f"preset {name!r} takes no parameters")
        return name
    if name != "notched":
        return {"model": name, **params}
    params = dict(params)
    notches = params.pop("notches", [])
    if not notches:
        raise CliError("notched model needs at least one notch=f0_hz:depth_db:q")
    base_name = params.pop("base", "lossy_line")
    base = {"model": base_name, **{k: params.pop(k) for k in _BASE_KEYS if k in params}}
    if params:
        raise CliError(f"unknown notched parameters: {', '.join(sorted(params))}")
    return {"model": "notched", "base": base, "notches": notches}


def channel_spec_arg(text: str):
    """--channel value: preset name, CSV path, YAML/JSON spec file, or NAME:K=V,K=V."""
    p = Path(text)
    if p.suffix.lower() in (".yaml", ".yml", ".json") and p.exists():
        return yaml.safe_load(p.read_text(encoding="utf-8")), p.parent
    if ":" in text and not p.exists():
        name, _, rest = text.partition(":")
        return model_spec(name, _parse_kv([kv for kv in rest.split(",") if kv])), None
    return text, None


def cmd_simulate(args) -> None:
    cfg = resolve_scenario(args.config)
    report = run_link(cfg, keep_waveform=args.spectrum is not None)
    write_json(args.out, report.to_dict())
    if args.eye:
        if report.eye is None:
            raise CliError("--eye needs a baseband band in the plan")
        write_eye_csv(args.eye, report.eye)
    if args.spectrum:
        w = report.rx_wave
        seg = min(args.psd_segment, len(w))
        f, p = estimate_psd(w, seg)
        write_psd_csv(args.spectrum, f, p)


def cmd_probe(args) -> None:
    spec, base = channel_spec_arg(args.channel)
    model, n_taps = build_channel(spec, base)
    if args.n_taps:
        n_taps = args.n_taps
    if not 0 < args.fmin < args.fmax:
        raise CliError("need 0 < fmin < fmax")
    freqs = np.geomspace(args.fmin, args.fmax, args.points)
    prof = probe_channel(model, freqs, args.tone_power, args.sigma, args.tone_duration, args.seed, n_taps=n_taps)
    d = prof.to_dict()
    d["channel"] = spec
    write_json(args.out, d)


def _grid(text: str) -> list[float]:
    if ":" in text:
        a, b, step = (float(v) for v in text.split(":"))
        n = int(round((b - a) / step))
        return [a + i * step for i in range(n + 1)]
    return [float(v) for v in text.split(",")]


def cmd_allocate(args) -> None:
    prof = ChannelProfile.from_dict(read_json(args.profile))
    grid = _grid(args.carrier_grid) if args.carrier_grid else _grid(f"0:{prof.probe_freqs_hz[-1]}:0.5e9")
    usable = args.usable_band_hz if args.usable_band_hz is not None else float(prof.probe_freqs_hz[-1])
    cons = AllocationConstraints(
        max_bands=args.max_bands,
        carrier_grid_hz=tuple(grid),
        symbol_rates_hz=tuple(_grid(args.symbol_rates)),
        snr_margin_db=args.margin_db,
        usable_band_hz=usable,
        guard_hz=args.guard_hz,
    )
    table = required_snr_table(args.target_ber, n_trials=args.trials, seed=args.seed)
    res = allocate_bands(prof, table, cons, args.tx_density_dbhz)
    d = res.to_dict()
    d["target_ber"] = args.target_ber
    d["modulation_table"] = table.to_dict()["entries"]
    d["constraints"] = cons.to_dict()
    write_json(args.out, d)


def _sweep_one(payload):
    d, base_dir = payload
    r = run_link(ScenarioConfig.from_dict(d, base_dir=base_dir))
    row = [r.aggregate_bps, r.aggregate_ber]
    for b in r.per_band:
        row += [b.ber, b.snr_db, b.evm_percent]
    return row, len(r.per_band)


def _get_param(d, dotted):
    node = d
    for k in dotted.split("."):
        try:
            node = node[int(k)] if isinstance(node, list) else node[k]
        except (KeyError, IndexError, ValueError, TypeError):
            return None
    return node


def cmd_sweep(args) -> None:
    cfg = resolve_scenario(args.config)
    base = cfg.to_dict()
    if args.steps < 1:
        raise CliError("--steps must be >= 1")
    values = np.linspace(args.from_, args.to, args.steps)
    as_int = isinstance(_get_param(base, args.param), int) and not isinstance(_get_param(base, args.param), bool)
    vals = [int(round(v)) if as_int else float(v) for v in values]
    payloads = [(set_param(base, args.param, v), cfg.base_dir) for v in vals]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_sweep_one, payloads))  # map keeps parameter order
    else:
        results = [_sweep_one(p) for p in payloads]
    n_bands = max(n for _, n in results)
    header = [args.param, "aggregate_bps", "aggregate_ber"]
    for i in range(n_bands):
        header += [f"band{i}_ber", f"band{i}_snr_db", f"band{i}_evm_percent"]
    rows = []
    for v, (row, n) in zip(vals, results):
        rows.append([v, *row, *([""] * 3 * (n_bands - n))])
    write_rows(args.out, header, rows)


def cmd_synth_channel(args) -> None:
    spec = model_spec(args.model, _parse_kv(args.params))
    model, _ = build_channel(spec)
    if args.points < 2 or args.fmax <= 0:
        raise CliError("need --points >= 2 and --fmax > 0")
    resp = evaluate_response(model, np.linspace(0.0, args.fmax, args.points))
    save_channel_csv(args.out, resp, comment=f"rfilink synth-channel {args.model}\n{dumps_json(spec).strip()}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rfilink", description="Multi-band serial link simulator and planner.")
    p.add_argument("--version", action="version", version=f"rfilink {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a scenario and write a JSON report")
    s.add_argument("--config", required=True, help="scenario YAML file or preset name")
    s.add_argument("--out", required=True)
    s.add_argument("--eye", help="eye histogram CSV (baseband band)")
    s.add_argument("--spectrum", help="RX power spectral density CSV")
    s.add_argument("--psd-segment", type=int, default=8192)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("probe", help="CW-sweep a channel and write a profile JSON")
    s.add_argument("--channel", required=True)
    s.add_argument("--fmin", type=float, default=0.1e9)
    s.add_argument("--fmax", type=float, default=10e9)
    s.add_argument("--points", type=int, default=64)
    s.add_argument("--tone-power", type=float, default=1.0)
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tone-duration", type=int, default=2048, help="steady-state window in 8-sample symbols")
    s.add_argument("--n-taps", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_probe)

    s = sub.add_parser("allocate", help="choose a band plan from a probed profile")
    s.add_argument("--profile", required=True)
    s.add_argument("--target-ber", type=float, default=1e-3)
    s.add_argument("--max-bands", type=int, default=3)
    s.add_argument("--margin-db", type=float, default=3.0)
    s.add_argument("--carrier-grid", help="start:stop:step or comma list (Hz)")
    s.add_argument("--symbol-rates", default="0.5e9,1e9,2e9")
    s.add_argument("--usable-band-hz", type=float, default=None)
    s.add_argument("--guard-hz", type=float, default=0.0)
    s.add_argument("--tx-density-dbhz", type=float, default=-90.0)
    s.add_argument("--trials", type=int, default=200_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_allocate)

    s = sub.add_parser("sweep", help="run a scenario over a range of one parameter")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True, help="dotted scenario key, e.g. snr_db or equalizer.dfe_len")
    s.add_argument("--from", dest="from_", type=float, required=True)
    s.add_argument("--to", type=float, required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("synth-channel", help="tabulate a channel model to CSV")
    s.add_argument("--model", required=True, help="identity, lumped_c, lossy_line, notched, or a preset name")
    s.add_argument("--params", nargs="*", default=[], metavar="K=V")
    s.add_argument("--fmax", type=float, default=50e9)
    s.add_argument("--points", type=int, default=5001)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth_channel)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    except (CliError, ScenarioError, ChannelError, UnreachableBer, ValueError, KeyError, OSError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"rfilink: error: {msg}".splitlines()[0], file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
