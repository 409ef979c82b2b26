"""Model-versus-measurement comparison.

Model lift (+z) is compared with the load-cell x channel and model drag
(along the freestream) with the z channel, matching how the robot sits on
the cell. Both series go onto the coarser of the two time grids over their
overlap. The lift channels are aligned by cross-correlation within half a
flap period before the RMS errors are taken.
"""
from dataclasses import dataclass, field, asdict
import logging

import numpy as np
from scipy import signal

from .errors import InsufficientOverlapError
from .loadcell import detect_frequency

log = logging.getLogger(__name__)

MIN_PERIODS = 2.0


@dataclass
class ComparisonReport:
    rms_lift: float
    rms_drag: float
    offset_s: float
    lag_samples: int
    dt: float
    n_samples: int
    frequency_hz: float | None
    model_frequency_hz: float | None
    cycle_phase: np.ndarray = field(repr=False)
    cycle_model: dict = field(repr=False)
    cycle_measured: dict = field(repr=False)
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["cycle_phase"] = self.cycle_phase.tolist()
        d["cycle_model"] = {k: np.asarray(v).tolist() for k, v in self.cycle_model.items()}
        d["cycle_measured"] = {k: np.asarray(v).tolist() for k, v in self.cycle_measured.items()}
        return d


def correlation_lag(a, b, max_lag):
    """Integer lag ``L`` (|L| <= max_lag) maximizing the correlation of ``a[i]`` with ``b[i + L]``.

    Each lag is scored by the Pearson coefficient over its overlapping
    windows, so identical series peak at exactly zero lag. Swapping ``a``
    and ``b`` negates the lag.
    """
    # centring first only improves conditioning; Pearson ignores constant offsets
    a = np.asarray(a, dtype=float) - np.mean(a)
    b = np.asarray(b, dtype=float) - np.mean(b)
    n = len(a)
    if len(b) != n:
        raise ValueError("series must have equal length")
    max_lag = int(min(max_lag, n - 2))
    full = signal.correlate(b, a, mode="full", method="direct" if n < 4096 else "fft")
    lags = np.arange(-(n - 1), n)
    sel = np.abs(lags) <= max_lag
    L = lags[sel]
    m = n - np.abs(L)
    # a[i] pairs with b[i + L]; window sums via cumulative sums
    sa, sb = np.maximum(0, -L), np.maximum(0, L)

    def window(x, start):
        c1 = np.concatenate([[0.0], np.cumsum(x)])
        c2 = np.concatenate([[0.0], np.cumsum(x * x)])
        return c1[start + m] - c1[start], c2[start + m] - c2[start]

    s1a, s2a = window(a, sa)
    s1b, s2b = window(b, sb)
    cov = full[sel] - s1a * s1b / m
    var = np.maximum((s2a - s1a ** 2 / m) * (s2b - s1b ** 2 / m), 1e-300)
    score = cov / np.sqrt(var)
    return int(L[np.argmax(score)])


def _overlap_grid(t_a, t_b):
    t0, t1 = max(t_a[0], t_b[0]), min(t_a[-1], t_b[-1])
    da, db = np.median(np.diff(t_a)), np.median(np.diff(t_b))
    coarse = t_a if da >= db else t_b
    grid = coarse[(coarse >= t0 - 1e-12) & (coarse <= t1 + 1e-12)]
    return grid, float(max(da, db))


def cycle_average(t, x, frequency, bins=100):
    """Mean of ``x`` in ``bins`` phase bins of a cycle at ``frequency``."""
    phase = np.mod((np.asarray(t) - t[0]) * frequency, 1.0)
    idx = np.minimum((phase * bins).astype(int), bins - 1)
    sums = np.bincount(idx, weights=x, minlength=bins)
    counts = np.bincount(idx, minlength=bins)
    with np.errstate(invalid="ignore"):
        avg = sums / counts
    return (np.arange(bins) + 0.5) / bins, avg


def rms(x):
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.mean(x * x))) if len(x) else 0.0


def compare_series(t_model, lift, drag, t_meas, meas_lift, meas_drag, frequency=None, bins=100):
    """Align and compare two lift/drag pairs; see :func:`compare`."""
    t_model = np.asarray(t_model, dtype=float)
    t_meas = np.asarray(t_meas, dtype=float)
    detected = detect_frequency(t_meas, meas_lift)
    f = frequency or detected or detect_frequency(t_model, lift)
    if not f:
        raise InsufficientOverlapError("no flap frequency given or detectable")
    grid, dt = _overlap_grid(t_model, t_meas)
    span = grid[-1] - grid[0] if len(grid) > 1 else 0.0
    if span < MIN_PERIODS / f - 1e-12:
        raise InsufficientOverlapError(
            f"overlap {span:.4g} s is shorter than {MIN_PERIODS:g} flap periods ({MIN_PERIODS / f:.4g} s)")
    mL = np.interp(grid, t_model, lift)
    mD = np.interp(grid, t_model, drag)
    xL = np.interp(grid, t_meas, meas_lift)
    xD = np.interp(grid, t_meas, meas_drag)
    lag = correlation_lag(mL, xL, int(np.floor(0.5 / (f * dt))))
    if lag >= 0:
        sl_m, sl_x = slice(0, len(grid) - lag), slice(lag, len(grid))
    else:
        sl_m, sl_x = slice(-lag, len(grid)), slice(0, len(grid) + lag)
    g = grid[sl_m]
    _, cml = cycle_average(g, mL[sl_m], f, bins)
    _, cmd = cycle_average(g, mD[sl_m], f, bins)
    _, cxl = cycle_average(g, xL[sl_x], f, bins)
    phase, cxd = cycle_average(g, xD[sl_x], f, bins)
    return ComparisonReport(
        rms_lift=rms(mL[sl_m] - xL[sl_x]), rms_drag=rms(mD[sl_m] - xD[sl_x]),
        offset_s=lag * dt, lag_samples=lag, dt=dt, n_samples=len(g),
        frequency_hz=detected, model_frequency_hz=frequency,
        cycle_phase=phase, cycle_model={"lift": cml, "drag": cmd},
        cycle_measured={"lift": cxl, "drag": cxd})


def compare(record, trace, bins=100):
    """Compare a simulated record with a load-cell trace.

    Parameters
    ----------
    record : ForceRecord
    trace : LoadCellTrace
    bins : int
        Phase bins for the cycle-averaged curves.

    Raises
    ------
    InsufficientOverlapError
        If the traces overlap for fewer than two flap periods.
    """
    f = record.meta.get("frequency")
    rep = compare_series(record.t, record.lift, record.drag, trace.t, trace.fx, trace.fz, f, bins)
    rep.meta.update({"aero_mode": record.meta.get("aero_mode"), "source": trace.meta.get("source")})
    return rep
