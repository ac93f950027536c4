"""Channel CSV, report JSON and the eye/PSD CSV exports."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .channel import ChannelError, FrequencyResponse

CHANNEL_HEADER = ("freq_hz", "mag_db", "phase_deg")


class CsvFormatError(ChannelError):
    """Malformed channel CSV; the message names the offending line."""


def parse_channel_csv(text: str, source: str = "<string>") -> FrequencyResponse:
    header_seen = False
    freqs: list[float] = []
    mags: list[float] = []
    phases: list[float] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = [c.strip() for c in line.split(",")]
        if not header_seen:
            if tuple(cells) != CHANNEL_HEADER:
                raise CsvFormatError(f"{source}:{lineno}: missing header, expected '{','.join(CHANNEL_HEADER)}'")
            header_seen = True
            continue
        if len(cells) != 3:
            raise CsvFormatError(f"{source}:{lineno}: malformed row, expected 3 fields, got {len(cells)}")
        try:
            f, m, p = (float(c) for c in cells)
        except ValueError:
            raise CsvFormatError(f"{source}:{lineno}: malformed row, non-numeric field in {line!r}") from None
        if not all(math.isfinite(v) for v in (f, m, p)):
            raise CsvFormatError(f"{source}:{lineno}: malformed row, non-finite value")
        if not freqs and f != 0:
            raise CsvFormatError(f"{source}:{lineno}: first frequency must be 0, got {f:g}")
        if freqs and f <= freqs[-1]:
            raise CsvFormatError(f"{source}:{lineno}: non-ascending frequency {f:g} after {freqs[-1]:g}")
        freqs.append(f)
        mags.append(m)
        phases.append(p)
    if not header_seen:
        raise CsvFormatError(f"{source}: missing header, expected '{','.join(CHANNEL_HEADER)}'")
    if not freqs:
        raise CsvFormatError(f"{source}: no data rows")
    return FrequencyResponse.from_db(freqs, mags, phases)


def load_channel_csv(path) -> FrequencyResponse:
    p = Path(path)
    return parse_channel_csv(p.read_text(encoding="utf-8"), str(p))


def format_channel_csv(response: FrequencyResponse, comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    buf.write(",".join(CHANNEL_HEADER) + "\n")
    for f, m, ph in zip(response.freqs_hz, response.mag_db, response.phase_deg):
        buf.write(f"{float(f)!r},{float(m)!r},{float(ph)!r}\n")
    return buf.getvalue()


def save_channel_csv(path, response: FrequencyResponse, comment: str | None = None) -> None:
    Path(path).write_text(format_channel_csv(response, comment), encoding="utf-8")


def estimate_bulk_delay(response: FrequencyResponse) -> float:
    """Least-squares group delay of the unwrapped phase, weighted by |H|^2."""
    f = response.freqs_hz
    if f.size < 2:
        return 0.0
    ph = np.unwrap(np.angle(response.gains))
    w = np.abs(response.gains) ** 2
    slope = np.sum(w * f * ph) / np.sum(w * f * f)
    return max(0.0, float(-slope / (2 * np.pi)))


def dumps_json(obj) -> str:
    """Canonical JSON text used for every report, profile and plan file."""
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj), encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_rows(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def write_eye_csv(path, eye) -> None:
    write_rows(path, ("t_frac", "v", "count"), eye.rows())


def write_psd_csv(path, freqs, psd) -> None:
    psd_db = 10 * np.log10(np.maximum(np.asarray(psd, dtype=float), 1e-300))
    write_rows(path, ("freq_hz", "psd_db"), zip(np.asarray(freqs, dtype=float), psd_db))
