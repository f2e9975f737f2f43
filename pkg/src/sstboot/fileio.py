"""CSV and PNG artifacts.

Every float is written with 17 significant digits so re-reading reproduces
the written values exactly.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np
from PIL import Image

from .core import FreqGrid, SstBootError, Tfr, TfrKind, TimeSeries
from .recon import ComponentEstimate, Ridge

__all__ = [
    "MissingRate",
    "MalformedCsv",
    "read_series_csv",
    "write_series_csv",
    "write_tfr_csv",
    "read_tfr_csv",
    "write_ridge_csv",
    "write_recon_csv",
    "write_grid_csv",
    "colorize",
    "write_png",
    "write_manifest",
]

FMT = "%.17g"


class MissingRate(SstBootError):
    """A single-column series was given without a sampling rate."""


class MalformedCsv(SstBootError):
    pass


def _num(v: float) -> str:
    return FMT % v


def read_series_csv(path, rate_hz: float | None = None) -> TimeSeries:
    """Read ``time_s,value`` or a single ``value`` column (header optional).

    With a time column the rate is inferred from the sample spacing unless
    ``rate_hz`` is given; a single column needs ``rate_hz``.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise MalformedCsv(f"{path}: no data")
    header = None
    try:
        float(rows[0][0])
    except ValueError:
        header = [c.strip().lower() for c in rows[0]]
        rows = rows[1:]
    try:
        data = np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise MalformedCsv(f"{path}: {exc}") from exc
    if data.ndim != 2 or data.shape[0] == 0:
        raise MalformedCsv(f"{path}: no numeric rows")
    if header is not None and "value" in header:
        vcol = header.index("value")
        tcol = header.index("time_s") if "time_s" in header else None
    elif data.shape[1] == 1:
        vcol, tcol = 0, None
    else:
        tcol, vcol = 0, 1
    x = data[:, vcol]
    if tcol is None:
        if rate_hz is None:
            raise MissingRate("rate_hz is required for a single-column series")
        return TimeSeries(x, rate_hz)
    t = data[:, tcol]
    if rate_hz is None:
        if t.size < 2:
            raise MissingRate("rate_hz cannot be inferred from fewer than two samples")
        dt = np.diff(t)
        step = float(np.median(dt))
        if not step > 0 or np.max(np.abs(dt - step)) > 1e-6 * step:
            raise MalformedCsv(f"{path}: time column is not uniformly sampled")
        rate_hz = 1.0 / step
    return TimeSeries(x, rate_hz, float(t[0]))


def _write(path, header: list[str], cols: list[np.ndarray], fmts: list[str] | None = None) -> Path:
    path = Path(path)
    mat = np.column_stack([np.asarray(c) for c in cols])
    fmt = fmts or [FMT] * len(cols)
    np.savetxt(path, mat, fmt=fmt, delimiter=",", header=",".join(header), comments="")
    return path


def write_series_csv(path, ts: TimeSeries, extra: dict[str, np.ndarray] | None = None) -> Path:
    extra = extra or {}
    return _write(path, ["time_s", "value", *extra], [ts.times, ts.samples, *extra.values()])


def write_tfr_csv(path, tfr: Tfr) -> Path:
    """Long format ``time_s,freq_hz,re,im``, time-major."""
    n, d = tfr.shape
    t = np.repeat(tfr.time_axis, d)
    f = np.tile(tfr.freq_axis.freqs_hz, n)
    v = tfr.values.ravel()
    return _write(path, ["time_s", "freq_hz", "re", "im"], [t, f, v.real, np.imag(v)])


def read_tfr_csv(path, kind: TfrKind = TfrKind.SST, bin_width_hz: float | None = None) -> Tfr:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    times = np.unique(data[:, 0])
    freqs = np.unique(data[:, 1])
    if data.shape[0] != times.size * freqs.size:
        raise MalformedCsv(f"{path}: not a complete time x frequency grid")
    vals = (data[:, 2] + 1j * data[:, 3]).reshape(times.size, freqs.size)
    bw = bin_width_hz if bin_width_hz is not None else float(np.median(np.diff(freqs))) if freqs.size > 1 else 1.0
    grid = FreqGrid(freqs, float(freqs[-1]), bw)
    return Tfr(vals, times, grid, kind)


def write_ridge_csv(path, ridge: Ridge) -> Path:
    return _write(
        path,
        ["time_s", "bin", "if_hz", "quality"],
        [ridge.time_axis, ridge.bins, ridge.if_hz, ridge.quality],
        [FMT, "%d", FMT, FMT],
    )


def write_recon_csv(path, est: ComponentEstimate) -> Path:
    z = est.complex_f
    return _write(
        path,
        ["time_s", "re", "im", "amplitude", "phase_cycles"],
        [est.time_axis, z.real, z.imag, est.amplitude, est.phase],
    )


def write_grid_csv(path, time_axis, freqs_hz, columns: dict[str, np.ndarray]) -> Path:
    """Long-format matrices sharing one grid, e.g. ``lower``/``upper`` bands."""
    n, d = len(time_axis), len(freqs_hz)
    t = np.repeat(np.asarray(time_axis, float), d)
    f = np.tile(np.asarray(freqs_hz, float), n)
    return _write(path, ["time_s", "freq_hz", *columns], [t, f, *(np.asarray(c).ravel() for c in columns.values())])


def _heat(u: np.ndarray) -> np.ndarray:
    # black -> red -> yellow -> white, each channel a clipped ramp
    r = np.clip(3 * u, 0, 1)
    g = np.clip(3 * u - 1, 0, 1)
    b = np.clip(3 * u - 2, 0, 1)
    return np.stack([r, g, b], axis=-1)


def colorize(mat: np.ndarray, cmap: str = "gray", scale: str = "linear") -> np.ndarray:
    """Map a non-negative matrix to 8-bit pixels.

    ``scale="log1p"`` applies ``log1p(x / median_positive)`` first. Values are
    then divided by their maximum; ``gray`` maps to one channel and ``heat``
    to the black-red-yellow-white ramp.
    """
    a = np.abs(np.asarray(mat, dtype=float))
    if scale == "log1p":
        pos = a[a > 0]
        ref = float(np.median(pos)) if pos.size else 1.0
        a = np.log1p(a / ref)
    elif scale != "linear":
        raise SstBootError(f"unknown scale {scale!r}")
    top = float(a.max()) if a.size else 0.0
    u = a / top if top > 0 else np.zeros_like(a)
    if cmap == "gray":
        return np.round(255 * u).astype(np.uint8)
    if cmap == "heat":
        return np.round(255 * _heat(u)).astype(np.uint8)
    raise SstBootError(f"unknown colormap {cmap!r}")


def write_png(path, tfr_or_mat, cmap: str = "gray", scale: str = "linear", ridge: Ridge | None = None) -> Path:
    """Time runs left to right, frequency bottom to top; the ridge, if given,
    is drawn in pure green (or white on grayscale)."""
    mat = tfr_or_mat.values if isinstance(tfr_or_mat, Tfr) else tfr_or_mat
    px = colorize(np.abs(mat), cmap, scale)
    if ridge is not None:
        cols = np.arange(px.shape[0])
        if px.ndim == 2:
            px[cols, ridge.bins] = 255
        else:
            px[cols, ridge.bins] = (0, 255, 0)
    img = np.ascontiguousarray(np.swapaxes(px, 0, 1)[::-1])
    path = Path(path)
    Image.fromarray(img).save(path, format="PNG")
    return path


def write_manifest(path, entries: dict[str, object], sources: dict[str, str] | None = None) -> Path:
    """``key = value  # source`` lines, sorted by key."""
    sources = sources or {}
    lines = []
    for k in sorted(entries):
        v = entries[k]
        if isinstance(v, float) and math.isfinite(v):
            v = repr(v)
        src = sources.get(k)
        lines.append(f"{k} = {v}" + (f"  # {src}" if src else ""))
    path = Path(path)
    path.write_text("\n".join(lines) + "\n")
    return path
