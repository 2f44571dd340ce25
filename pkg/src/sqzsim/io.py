"""File formats for time series, spectra and check reports.

Time series
    ``<name>.f64``       raw little-endian float64 samples, no header.
    ``<name>.meta.json`` sidecar record: format tag, sample rate,
                         duration, sample count, seed, scenario digest
                         and the full scenario (unit-suffixed keys).

Spectra
    ``<name>.csv``       columns: frequency_hz, psd_rel_vacuum,
                         db_rel_vacuum, segment_index, rbw_hz, n_averages
    ``<name>.json``      metadata block: plan, provenance digest, units,
                         floor flags per segment.

Check reports
    ``<name>.json``      list of CheckReport dicts plus an overall flag.

All writes are atomic (temp file + rename) and refuse to overwrite an
existing path unless ``force`` is set.
"""

from __future__ import annotations

import csv
import io as _stringio
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .spectral import StitchedSpectrum
from .synth import SimScenario, scenario_digest, scenario_to_dict
from .verify import CheckReport

TIMESERIES_FORMAT = "f64le"


def _atomic_write_bytes(path: Path, data: bytes, force: bool) -> None:
    path = Path(path)
    if path.exists() and not force:
        raise FileExistsError(f"{path} exists (use force to overwrite)")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path: Path, text: str, force: bool) -> None:
    _atomic_write_bytes(path, text.encode(), force)


def write_text(path: Path, text: str, force: bool = False) -> Path:
    """Atomically write a small text file, refusing to overwrite sans force."""
    _atomic_write_text(Path(path), text, force)
    return Path(path)


def meta_path_for(path: Path) -> Path:
    path = Path(path)
    return path.with_suffix(".meta.json")


def write_timeseries(
    path: Path,
    samples: np.ndarray,
    scenario: SimScenario,
    force: bool = False,
) -> Path:
    """Write raw samples plus the sidecar metadata record."""
    path = Path(path)
    samples = np.asarray(samples, dtype="<f8")
    meta = {
        "format": TIMESERIES_FORMAT,
        "sample_rate_hz": scenario.sample_rate_hz,
        "duration_s": scenario.duration_s,
        "n_samples": int(samples.size),
        "seed": int(scenario.seed),
        "scenario_digest": scenario_digest(scenario),
        "scenario": scenario_to_dict(scenario),
    }
    _atomic_write_bytes(path, samples.tobytes(), force)
    _atomic_write_text(meta_path_for(path), json.dumps(meta, indent=2) + "\n", force)
    return path


def read_timeseries(path: Path) -> tuple[np.ndarray, dict]:
    """Read raw samples and their sidecar; validates format and length."""
    path = Path(path)
    with open(meta_path_for(path)) as fh:
        meta = json.load(fh)
    if meta.get("format") != TIMESERIES_FORMAT:
        raise ConfigError(f"unsupported time-series format {meta.get('format')!r}")
    samples = np.fromfile(path, dtype="<f8")
    if samples.size != meta["n_samples"]:
        raise ConfigError(
            f"{path}: expected {meta['n_samples']} samples, found {samples.size}"
        )
    return samples, meta


def _db_value(linear: float) -> float:
    return 10.0 * math.log10(linear) if linear > 0.0 else -math.inf


def write_spectrum(
    path_base: Path,
    spectrum: StitchedSpectrum,
    plan_bands: list | None = None,
    force: bool = False,
) -> tuple[Path, Path]:
    """Write a stitched spectrum as CSV plus a JSON metadata block."""
    path_base = Path(path_base)
    csv_path = path_base.with_suffix(".csv")
    json_path = path_base.with_suffix(".json")

    rows = []
    for i, seg in enumerate(spectrum.segments):
        for f, v in zip(seg.frequencies, seg.psd):
            if spectrum.units == "db_rel_vacuum":
                psd_lin, db = 10.0 ** (v / 10.0), v
            else:
                psd_lin, db = v, _db_value(v)
            rows.append((f, psd_lin, db, i, seg.rbw_hz, seg.n_averages))

    buf = _stringio.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        ["frequency_hz", "psd_rel_vacuum", "db_rel_vacuum",
         "segment_index", "rbw_hz", "n_averages"]
    )
    for row in rows:
        writer.writerow([repr(x) if isinstance(x, float) else x for x in row])
    _atomic_write_text(csv_path, buf.getvalue(), force)

    meta = {
        "units": spectrum.units,
        "provenance": spectrum.provenance,
        "segments": [
            {
                "f_lo_hz": seg.f_lo,
                "f_hi_hz": seg.f_hi,
                "rbw_hz": seg.rbw_hz,
                "n_averages": seg.n_averages,
                "n_bins": int(seg.frequencies.size),
                "n_floored": (
                    int(seg.floored.sum()) if seg.floored is not None else 0
                ),
                "floored_frequencies_hz": (
                    [float(f) for f in seg.frequencies[seg.floored]]
                    if seg.floored is not None else []
                ),
            }
            for seg in spectrum.segments
        ],
    }
    if plan_bands is not None:
        meta["plan"] = [list(b) for b in plan_bands]
    _atomic_write_text(json_path, json.dumps(meta, indent=2) + "\n", force)
    return csv_path, json_path


def read_spectrum_csv(path: Path) -> list[dict]:
    """Rows of a spectrum CSV as dicts with parsed floats."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append({
                "frequency_hz": float(row["frequency_hz"]),
                "psd_rel_vacuum": float(row["psd_rel_vacuum"]),
                "db_rel_vacuum": float(row["db_rel_vacuum"]),
                "segment_index": int(row["segment_index"]),
                "rbw_hz": float(row["rbw_hz"]),
                "n_averages": int(row["n_averages"]),
            })
    return out


def write_check_reports(path: Path, reports: list[CheckReport],
                        force: bool = False) -> Path:
    path = Path(path)
    payload = {
        "passed": all(r.passed for r in reports),
        "checks": [r.to_dict() for r in reports],
    }
    _atomic_write_text(path, json.dumps(payload, indent=2) + "\n", force)
    return path
