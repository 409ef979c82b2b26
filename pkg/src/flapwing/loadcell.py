"""Load-cell CSV ingestion and flap-frequency detection.

File layout (this package's own contract; no vendor format is assumed)::

    # airspeed_mps = 1.65          optional metadata comments
    # frequency_hz = 4.5
    t_s,fx_N,fy_N,fz_N,tx_Nmm,ty_Nmm,tz_Nmm
    0.0000,0.012,...

Rows with a missing or NaN value are dropped and counted. Times must be
strictly increasing, the median sample rate may not exceed the configured
ceiling, and no step may exceed five median steps.
"""
from dataclasses import dataclass, field
import csv
import io
import logging
from pathlib import Path

import numpy as np
from scipy import signal

from .errors import FormatError, GapError

log = logging.getLogger(__name__)

HEADER = ("t_s", "fx_N", "fy_N", "fz_N", "tx_Nmm", "ty_Nmm", "tz_Nmm")
MAX_RATE_HZ = 7000.0
GAP_FACTOR = 5.0


@dataclass
class LoadCellTrace:
    """Forces in N and torques in N mm against time in s."""

    t: np.ndarray
    force: np.ndarray
    torque: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def fx(self):
        return self.force[:, 0]

    @property
    def fy(self):
        return self.force[:, 1]

    @property
    def fz(self):
        return self.force[:, 2]

    @property
    def rate(self):
        return 1.0 / float(np.median(np.diff(self.t)))

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])

    def __len__(self):
        return len(self.t)

    def filtered(self, cutoff_hz, order=4):
        return LoadCellTrace(self.t, lowpass(self.t, self.force, cutoff_hz, order),
                             lowpass(self.t, self.torque, cutoff_hz, order),
                             {**self.meta, "cutoff_hz": cutoff_hz})


def _metadata(line):
    body = line.lstrip("#").strip()
    for sep in ("=", ":"):
        if sep in body:
            k, v = body.split(sep, 1)
            try:
                return k.strip(), float(v)
            except ValueError:
                return k.strip(), v.strip()
    return None


def parse_loadcell(text, source="<string>", max_rate_hz=MAX_RATE_HZ):
    """Parse load-cell CSV text; see the module docstring for the layout."""
    lines = text.splitlines()
    meta = {"source": source}
    i = 0
    while i < len(lines) and (not lines[i].strip() or lines[i].lstrip().startswith("#")):
        kv = _metadata(lines[i]) if lines[i].strip() else None
        if kv:
            meta[kv[0]] = kv[1]
        i += 1
    if i == len(lines):
        raise FormatError(f"{source} is empty", field="header", line=None)
    header = tuple(h.strip() for h in lines[i].split(","))
    if header != HEADER:
        raise FormatError(f"{source}: expected header {','.join(HEADER)}, got {lines[i].strip()!r}",
                          field="header", line=i + 1)
    rows, rejected = [], 0
    for j, rec in enumerate(csv.reader(io.StringIO("\n".join(lines[i + 1:]))), start=i + 2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) != len(HEADER):
            raise FormatError(f"{source}: expected {len(HEADER)} columns, found {len(rec)}",
                              field="row", line=j)
        try:
            vals = [float(c) if c.strip() else np.nan for c in rec]
        except ValueError:
            raise FormatError(f"{source}: non-numeric value", field="row", line=j) from None
        if not np.all(np.isfinite(vals)):
            rejected += 1
            continue
        rows.append(vals)
    if rejected:
        log.warning("%s: rejected %d row(s) with missing or NaN values", source, rejected)
    meta["rejected_rows"] = rejected
    if len(rows) < 2:
        raise FormatError(f"{source}: fewer than two valid samples", field="row", line=None)
    data = np.array(rows)
    t = data[:, 0]
    dt = np.diff(t)
    if np.any(dt <= 0):
        k = int(np.flatnonzero(dt <= 0)[0])
        raise FormatError(f"{source}: time not strictly increasing at t={t[k + 1]:.6g} s",
                          field="t_s", line=None)
    med = float(np.median(dt))
    # timestamps rounded to ~9 digits put a nominal 7 kHz file a few ppm over the line
    if 1.0 / med > max_rate_hz * (1.0 + 1e-4):
        raise FormatError(f"{source}: sample rate {1.0 / med:.1f} Hz exceeds {max_rate_hz:g} Hz",
                          field="t_s", line=None)
    big = np.flatnonzero(dt > GAP_FACTOR * med)
    if len(big):
        k = int(big[0])
        raise GapError(f"{source}: gap of {dt[k]:.6g} s after t={t[k]:.6g} s "
                       f"(median step {med:.6g} s)", field="t_s", line=None)
    return LoadCellTrace(t, data[:, 1:4], data[:, 4:7], meta)


def ingest_loadcell(path, cutoff_hz=None, order=4, max_rate_hz=MAX_RATE_HZ):
    """Read a load-cell CSV file, optionally low-pass filtered (zero-phase Butterworth)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise FormatError(f"cannot read {path}: {err.strerror}", field="path", line=None) from None
    trace = parse_loadcell(text, str(path), max_rate_hz)
    return trace.filtered(cutoff_hz, order) if cutoff_hz else trace


def lowpass(t, x, cutoff_hz, order=4):
    """Zero-phase Butterworth low-pass along axis 0."""
    fs = 1.0 / float(np.median(np.diff(t)))
    if not 0 < cutoff_hz < 0.5 * fs:
        raise FormatError(f"cutoff {cutoff_hz} Hz must lie below Nyquist ({0.5 * fs:.1f} Hz)",
                          field="loadcell.cutoff_hz", line=None)
    sos = signal.butter(order, cutoff_hz, fs=fs, output="sos")
    x = np.asarray(x, dtype=float)
    if len(x) <= 3 * (2 * len(sos) + 1):
        return x.copy()
    return signal.sosfiltfilt(sos, x, axis=0)


def detect_frequency(t, x, pad=8, min_cycles=2.0, rel_tol=1e-9):
    """Dominant frequency of ``x(t)`` in Hz, or ``None`` for a flat trace.

    Hann-windowed FFT on a uniform grid, zero-padded ``pad`` times, with a
    parabolic fit through the log-magnitude peak. Peaks below
    ``min_cycles / duration`` are treated as non-periodic.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if len(t) < 8:
        return None
    dt = float(np.median(np.diff(t)))
    grid = np.arange(t[0], t[-1] + 0.5 * dt, dt)
    y = np.interp(grid, t, x)
    y = y - y.mean()
    scale = max(float(np.abs(x).max()), 1e-300)
    if float(np.std(y)) <= rel_tol * scale:
        return None
    n = len(y)
    nfft = int(2 ** np.ceil(np.log2(n * pad)))
    mag = np.abs(np.fft.rfft(y * np.hanning(n), nfft))
    mag[0] = 0.0
    k = int(np.argmax(mag))
    if 0 < k < len(mag) - 1:
        a, b, c = np.log(mag[k - 1:k + 2] + 1e-300)
        denom = a - 2 * b + c
        k = k + (0.5 * (a - c) / denom if denom != 0 else 0.0)
    f = k / (nfft * dt)
    duration = grid[-1] - grid[0]
    if f * duration < min_cycles:
        return None
    return float(f)


def trace_frequency(trace):
    """Flap frequency of a trace from its larger-variance force channel (x or z)."""
    ch = trace.fx if np.var(trace.fx) >= np.var(trace.fz) else trace.fz
    return detect_frequency(trace.t, ch)


def write_loadcell(path, t, force, torque=None, meta=None):
    """Write a trace in the ingest format, values as ``%.17g``."""
    force = np.asarray(force, dtype=float)
    torque = np.zeros_like(force) if torque is None else np.asarray(torque, dtype=float)
    out = io.StringIO()
    for k, v in sorted((meta or {}).items()):
        out.write(f"# {k} = {v}\n")
    out.write(",".join(HEADER) + "\n")
    for row in np.column_stack([t, force, torque]):
        out.write(",".join(f"{v:.17g}" for v in row) + "\n")
    Path(path).write_text(out.getvalue())
    return Path(path)
