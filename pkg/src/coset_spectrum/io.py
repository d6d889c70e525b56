"""CSV readers/writers for autocorrelations, spectra, correlations and samples."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .estimator import GroupCorrelations
from .ruler import DomainError
from .sim import NmseResult
from .system import AutocorrelationVector, PowerSpectrum, pair_indices


def _fmt(x: float) -> str:
    return repr(float(x))


def write_autocorrelation(path: Path, rx: AutocorrelationVector) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "lag_or_bin", "real", "imag"])
        for i, (lag, v) in enumerate(zip(rx.lags(), rx.values)):
            w.writerow([i, int(lag), _fmt(v.real), _fmt(v.imag)])


def write_spectrum(path: Path, spectrum: PowerSpectrum) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "lag_or_bin", "real", "imag"])
        for k, v in enumerate(spectrum.values):
            w.writerow([k, k, _fmt(v.real), _fmt(v.imag)])


def _read_vector(path: Path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    rows.sort(key=lambda r: int(r["index"]))
    return np.array([float(r["real"]) + 1j * float(r["imag"]) for r in rows])


def read_autocorrelation(path: Path) -> AutocorrelationVector:
    return AutocorrelationVector(_read_vector(path))


def read_spectrum(path: Path) -> PowerSpectrum:
    return PowerSpectrum(_read_vector(path))


def write_group_correlations(path: Path, groups: Sequence[GroupCorrelations], bank) -> None:
    """One row per measurement: ``group,block,m,m_prime,lag,real,imag``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["group", "block", "m", "m_prime", "lag", "real", "imag"])
        for g, pattern in zip(groups, bank):
            i, j = pair_indices(len(pattern))
            for m, v in enumerate(g.r0_zero_lag):
                w.writerow([g.group, "r0", m, m, 0, _fmt(v), _fmt(0.0)])
            for a, b, v in zip(j, i, g.plus_zero_lag):
                w.writerow([g.group, "plus", int(a), int(b), 0, _fmt(v.real), _fmt(v.imag)])
            for a, b, v in zip(i, j, g.minus_lag_one):
                w.writerow([g.group, "minus", int(a), int(b), 1, _fmt(v.real), _fmt(v.imag)])


def write_nmse_results(path: Path, results: Iterable[NmseResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["M", "P", "L", "runs", "nmse"])
        for r in results:
            w.writerow([r.m, r.p, r.l, r.runs, _fmt(r.nmse)])


def read_samples(source: Path) -> dict[int, np.ndarray]:
    """Complex Nyquist samples per sensor id.

    ``source`` is a CSV file or a directory of CSV files with columns
    ``sensor_id,sample_index,real,imag``.  Sample indices of each sensor must
    be exactly ``0..K-1``.
    """
    source = Path(source)
    files = sorted(source.glob("*.csv")) if source.is_dir() else [source]
    if not files:
        raise DomainError(f"no sample CSV files in {source}")
    raw: dict[int, dict[int, complex]] = defaultdict(dict)
    for f in files:
        with open(f, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = {"sensor_id", "sample_index", "real", "imag"} - set(reader.fieldnames or ())
            if missing:
                raise DomainError(f"{f}: missing columns {sorted(missing)}")
            for row in reader:
                sid, idx = int(row["sensor_id"]), int(row["sample_index"])
                if idx in raw[sid]:
                    raise DomainError(f"{f}: duplicate sample {idx} for sensor {sid}")
                raw[sid][idx] = complex(float(row["real"]), float(row["imag"]))
    out = {}
    for sid, samples in raw.items():
        if set(samples) != set(range(len(samples))):
            raise DomainError(f"sensor {sid}: sample indices are not contiguous from 0")
        out[sid] = np.array([samples[k] for k in range(len(samples))])
    return out


def write_samples(path: Path, samples: dict[int, np.ndarray]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sensor_id", "sample_index", "real", "imag"])
        for sid in sorted(samples):
            for k, v in enumerate(samples[sid]):
                w.writerow([sid, k, _fmt(v.real), _fmt(v.imag)])
