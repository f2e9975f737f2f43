"""Bootstrap percentile bands for |SST|, noise thresholds, and spline lifting
from a coarse time-frequency grid to the full one."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy.interpolate import CubicSpline

from .core import FreqGrid, SstBootError, Tfr, TfrKind, TimeSeries
from .pipeline import Pipeline

__all__ = [
    "MTooSmall",
    "GridOutsideAxes",
    "GridTooCoarse",
    "DimMismatch",
    "BandSpec",
    "Bands",
    "default_spec",
    "replicate_abs_sst",
    "bootstrap_bands",
    "noise_threshold",
    "apply_threshold",
    "spline_lift",
    "MIN_BOOT",
]

MIN_BOOT = 40


class MTooSmall(SstBootError):
    pass


class GridOutsideAxes(SstBootError):
    pass


class GridTooCoarse(SstBootError):
    pass


class DimMismatch(SstBootError):
    pass


@dataclass(frozen=True, eq=False)
class BandSpec:
    """Coarse evaluation grid and bootstrap size.

    ``grid_times`` are 0-based sample indices, ``grid_freqs`` are indices into
    the analysis frequency grid; both strictly increasing.
    """

    grid_times: np.ndarray
    grid_freqs: np.ndarray
    alpha_level: float = 0.05
    n_boot: int = 1000

    def __post_init__(self):
        for name in ("grid_times", "grid_freqs"):
            a = np.asarray(getattr(self, name), dtype=np.int64)
            if a.ndim != 1 or a.size == 0 or np.any(np.diff(a) <= 0) or a[0] < 0:
                raise SstBootError(f"{name} must be a non-empty increasing index array")
            object.__setattr__(self, name, a)
        if not 0 < self.alpha_level < 1:
            raise SstBootError("alpha_level must lie in (0, 1)")
        if self.n_boot < MIN_BOOT:
            raise MTooSmall(f"n_boot={self.n_boot}; at least {MIN_BOOT} replicates are needed")

    def check(self, n: int, d: int) -> None:
        if self.grid_times[-1] >= n or self.grid_freqs[-1] >= d:
            raise GridOutsideAxes(f"coarse grid exceeds the {n} x {d} analysis axes")


def default_spec(n: int, d: int, time_step: int = 8, n_freqs: int = 64, alpha_level: float = 0.05,
                 n_boot: int = 1000) -> BandSpec:
    """Every ``time_step``-th sample (plus the last) by ``n_freqs`` equally
    strided analysis-grid nodes ending at the top node."""
    t = np.arange(0, n, time_step)
    if t[-1] != n - 1:
        t = np.append(t, n - 1)
    n_freqs = min(n_freqs, d)
    f = (d - 1) - (d // n_freqs) * np.arange(n_freqs)[::-1]
    return BandSpec(t, f, alpha_level, n_boot)


@dataclass(frozen=True, eq=False)
class Bands:
    """Pointwise percentile envelopes of ``|S|`` on the full grid, plus the
    coarse-grid values they were lifted from."""

    lower: np.ndarray
    upper: np.ndarray
    coarse_lower: np.ndarray
    coarse_upper: np.ndarray
    spec: BandSpec
    time_axis: np.ndarray
    freq_axis: FreqGrid


def _sampler(model):
    if hasattr(model, "sample"):
        return model.sample
    if callable(model):
        return model
    raise SstBootError("model must provide sample(seed)")


def _chunk(pipe: Pipeline, model, base, rate, spec, out_grid, seeds):
    draw = _sampler(model)
    out = np.empty((len(seeds), spec.grid_times.size, spec.grid_freqs.size))
    for r, s in enumerate(seeds):
        x = draw(int(s))
        if base is not None:
            x = base + x
        out[r] = pipe.abs_sst(x, rate, spec.grid_times, out_grid)
    return out


def _jobs(n_jobs: int | None) -> int:
    if n_jobs is None or n_jobs == 0:
        return os.cpu_count() or 1
    return n_jobs if n_jobs > 0 else max(1, (os.cpu_count() or 1) + 1 + n_jobs)


def replicate_abs_sst(
    pipe: Pipeline,
    model,
    spec: BandSpec,
    n: int,
    rate_hz: float,
    signal: TimeSeries | np.ndarray | None = None,
    seed: int = 0,
    n_jobs: int | None = 1,
) -> np.ndarray:
    """``|S|`` of ``signal + model.sample(seed ^ r)``, ``r = 1..M``, on the coarse
    grid; shape ``(M, len(grid_times), len(grid_freqs))``.

    Each replicate depends only on its own seed, so the stack is identical for
    any ``n_jobs``.
    """
    spec.check(n, len(pipe.grid))
    base = None
    if signal is not None:
        base = np.asarray(signal.samples if isinstance(signal, TimeSeries) else signal, dtype=float)
        if base.size != n:
            raise DimMismatch(f"signal has {base.size} samples, expected {n}")
    out_grid = pipe.grid.subset(spec.grid_freqs)
    seeds = [seed ^ r for r in range(1, spec.n_boot + 1)]
    jobs = _jobs(n_jobs)
    if jobs == 1:
        return _chunk(pipe, model, base, rate_hz, spec, out_grid, seeds)
    parts = np.array_split(np.asarray(seeds), min(jobs * 4, len(seeds)))
    res = Parallel(n_jobs=jobs)(
        delayed(_chunk)(pipe, model, base, rate_hz, spec, out_grid, p.tolist()) for p in parts
    )
    return np.concatenate(res, axis=0)


def _axes(pipe: Pipeline, n: int, rate_hz: float, start_s: float):
    return start_s + np.arange(n) / rate_hz, pipe.grid


def bootstrap_bands(
    signal: TimeSeries | np.ndarray | None,
    model,
    spec: BandSpec,
    pipe: Pipeline,
    n: int | None = None,
    rate_hz: float | None = None,
    seed: int = 0,
    n_jobs: int | None = 1,
) -> Bands:
    """Percentile bands of ``|S(signal + bootstrap noise)|``.

    ``signal=None`` means a zero signal (the null case); then ``n`` and
    ``rate_hz`` must be given. Percentiles use linear interpolation between
    order statistics and are lifted with :func:`spline_lift`.
    """
    n, rate_hz, start = _shape(signal, n, rate_hz, pipe)
    stack = replicate_abs_sst(pipe, model, spec, n, rate_hz, signal, seed, n_jobs)
    a = spec.alpha_level
    lo, hi = np.percentile(stack, [100 * a / 2, 100 * (1 - a / 2)], axis=0, method="linear")
    t_full, grid = _axes(pipe, n, rate_hz, start)
    tc, fc = t_full[spec.grid_times], grid.freqs_hz[spec.grid_freqs]
    lower = spline_lift(lo, tc, fc, t_full, grid.freqs_hz)
    upper = spline_lift(hi, tc, fc, t_full, grid.freqs_hz)
    # the spline may cross itself between nodes; keep the envelope ordered
    lower, upper = np.minimum(lower, upper), np.maximum(lower, upper)
    return Bands(lower, upper, lo, hi, spec, t_full, grid)


def _shape(signal, n, rate_hz, pipe):
    if isinstance(signal, TimeSeries):
        return signal.n, signal.rate_hz, signal.start_time_s
    if signal is not None:
        n = np.asarray(signal).size
    if n is None or rate_hz is None:
        raise SstBootError("n and rate_hz are required without a TimeSeries signal")
    if abs(rate_hz - pipe.window.rate_hz) > 1e-9 * rate_hz:
        raise SstBootError("rate_hz differs from the pipeline's window rate")
    return n, rate_hz, 0.0


def noise_threshold(
    model,
    spec: BandSpec,
    pipe: Pipeline,
    n: int,
    rate_hz: float,
    seed: int = 0,
    n_jobs: int | None = 1,
    start_time_s: float = 0.0,
    return_coarse: bool = False,
):
    """``(1 - alpha)`` quantile of ``|S|`` over pure bootstrap noise, lifted to
    the full grid and clamped at 0."""
    n, rate_hz, _ = _shape(None, n, rate_hz, pipe)
    stack = replicate_abs_sst(pipe, model, spec, n, rate_hz, None, seed, n_jobs)
    coarse = np.percentile(stack, 100 * (1 - spec.alpha_level), axis=0, method="linear")
    t_full, grid = _axes(pipe, n, rate_hz, start_time_s)
    full = spline_lift(coarse, t_full[spec.grid_times], grid.freqs_hz[spec.grid_freqs], t_full, grid.freqs_hz)
    return (full, coarse) if return_coarse else full


def apply_threshold(s: Tfr, t: np.ndarray) -> Tfr:
    """Keep cells with ``|s| >= t``; zero the rest."""
    t = np.asarray(t, dtype=float)
    if t.shape != s.shape:
        raise DimMismatch(f"threshold shape {t.shape} does not match TFR shape {s.shape}")
    return s.replace(np.where(np.abs(s.values) >= t, s.values, 0), TfrKind.THRESHOLDED)


def spline_lift(coarse, t_coarse, f_coarse, t_full, f_full, clamp: bool = True) -> np.ndarray:
    """Tensor-product natural cubic spline: along time first, then frequency."""
    coarse = np.asarray(coarse, dtype=float)
    t_coarse, f_coarse = np.asarray(t_coarse, float), np.asarray(f_coarse, float)
    if coarse.shape != (t_coarse.size, f_coarse.size):
        raise DimMismatch("coarse values do not match the coarse axes")
    if t_coarse.size < 4 or f_coarse.size < 4:
        raise GridTooCoarse(f"need at least 4 nodes per axis, got {coarse.shape}")
    along_t = CubicSpline(t_coarse, coarse, axis=0, bc_type="natural")(np.asarray(t_full, float))
    out = CubicSpline(f_coarse, along_t, axis=1, bc_type="natural")(np.asarray(f_full, float))
    return np.maximum(out, 0.0) if clamp else out
