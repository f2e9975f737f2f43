"""Shared domain types, grid arithmetic and validation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SstBootError",
    "EmptySeries",
    "NonFiniteSample",
    "NonPositiveRate",
    "InvalidGridParams",
    "AxisMismatch",
    "TimeSeries",
    "FreqGrid",
    "WindowPair",
    "TfrKind",
    "Tfr",
    "validate_series",
    "uniform_grid",
]


class SstBootError(ValueError):
    """Base class for every error raised by this package."""


class EmptySeries(SstBootError):
    pass


class NonFiniteSample(SstBootError):
    def __init__(self, index: int, msg: str | None = None):
        self.index = int(index)
        super().__init__(msg or f"non-finite sample at index {self.index}")


class NonPositiveRate(SstBootError):
    pass


class InvalidGridParams(SstBootError):
    pass


class AxisMismatch(SstBootError):
    pass


def _first_nonfinite(x: np.ndarray) -> int | None:
    bad = np.flatnonzero(~np.isfinite(x))
    return int(bad[0]) if bad.size else None


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled real series; sample ``i`` (0-based) sits at
    ``start_time_s + i / rate_hz`` seconds."""

    samples: np.ndarray
    rate_hz: float
    start_time_s: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1:
            raise SstBootError("samples must be one-dimensional")
        x = x.copy()
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "rate_hz", float(self.rate_hz))
        object.__setattr__(self, "start_time_s", float(self.start_time_s))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.start_time_s + np.arange(self.n) / self.rate_hz

    @property
    def nyquist_hz(self) -> float:
        return self.rate_hz / 2.0

    def with_samples(self, samples) -> TimeSeries:
        """Same axis, new values."""
        return TimeSeries(samples, self.rate_hz, self.start_time_s)


def validate_series(ts: TimeSeries) -> None:
    """Raise if ``ts`` breaks a TimeSeries invariant; return None otherwise."""
    if ts.samples.size == 0:
        raise EmptySeries("time series has no samples")
    if not (np.isfinite(ts.rate_hz) and ts.rate_hz > 0):
        raise NonPositiveRate(f"rate_hz must be positive, got {ts.rate_hz}")
    idx = _first_nonfinite(ts.samples)
    if idx is not None:
        raise NonFiniteSample(idx)


@dataclass(frozen=True, eq=False)
class FreqGrid:
    """Strictly increasing positive frequencies (Hz).

    ``c_max_hz`` is the spectral cap and ``bin_width_hz`` the Riemann weight
    applied when integrating over the grid (``c_max_hz / d`` for uniform grids).
    """

    freqs_hz: np.ndarray
    c_max_hz: float
    bin_width_hz: float

    def __post_init__(self):
        f = np.asarray(self.freqs_hz, dtype=float).copy()
        if f.ndim != 1 or f.size == 0:
            raise InvalidGridParams("frequency grid must be a non-empty 1-D array")
        if not np.all(np.isfinite(f)) or f[0] <= 0 or np.any(np.diff(f) <= 0):
            raise InvalidGridParams("frequencies must be positive and strictly increasing")
        f.flags.writeable = False
        object.__setattr__(self, "freqs_hz", f)

    def __len__(self) -> int:
        return self.freqs_hz.size

    @property
    def spacing_hz(self) -> float:
        """Typical node spacing (median difference; bin width for one node)."""
        if self.freqs_hz.size < 2:
            return self.bin_width_hz
        return float(np.median(np.diff(self.freqs_hz)))

    def subset(self, idx) -> FreqGrid:
        """Sub-grid on the given node indices; keeps the parent's Riemann weight."""
        idx = np.asarray(idx, dtype=int)
        return FreqGrid(self.freqs_hz[idx], self.c_max_hz, self.bin_width_hz)


def uniform_grid(c_max_hz: float, d: int) -> FreqGrid:
    """``d`` nodes ``(k+1) * c_max_hz / d``, ``k = 0..d-1``; DC is excluded."""
    if not (np.isfinite(c_max_hz) and c_max_hz > 0) or int(d) != d or d < 1:
        raise InvalidGridParams(f"need c_max_hz > 0 and integer d >= 1, got ({c_max_hz}, {d})")
    d = int(d)
    freqs = np.arange(1, d + 1) * float(c_max_hz) / d
    return FreqGrid(freqs, float(c_max_hz), c_max_hz / d)


@dataclass(frozen=True, eq=False)
class WindowPair:
    """Discretized window ``h`` and its analytic derivative ``dh`` on
    ``2m+1`` taps centred at tap ``m``."""

    h: np.ndarray
    dh: np.ndarray
    m: int
    beta_s: float
    h_at_zero: float
    rate_hz: float

    @property
    def taps(self) -> int:
        return 2 * self.m + 1


class TfrKind(enum.Enum):
    STFT = "stft"
    STFT_DERIV = "stft_deriv"
    SST = "sst"
    THRESHOLDED = "thresholded"


@dataclass(frozen=True, eq=False)
class Tfr:
    """Complex time-frequency matrix, rows = time, columns = frequency.

    ``row_index`` holds the 0-based sample index of each row; transforms may be
    evaluated on a subset of the ``n_samples`` samples.
    """

    values: np.ndarray
    time_axis: np.ndarray
    freq_axis: FreqGrid
    kind: TfrKind
    row_index: np.ndarray = field(default=None)
    n_samples: int = None

    def __post_init__(self):
        v = np.asarray(self.values)
        t = np.asarray(self.time_axis, dtype=float)
        if v.shape != (t.size, len(self.freq_axis)):
            raise AxisMismatch(
                f"values shape {v.shape} does not match axes ({t.size}, {len(self.freq_axis)})"
            )
        if not np.all(np.isfinite(v)):
            raise SstBootError("TFR contains non-finite entries")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "time_axis", t)
        rows = np.arange(t.size) if self.row_index is None else np.asarray(self.row_index, dtype=int)
        object.__setattr__(self, "row_index", rows)
        if self.n_samples is None:
            object.__setattr__(self, "n_samples", t.size)

    @property
    def is_full(self) -> bool:
        """True when every sample of the source series has a row."""
        return self.row_index.size == self.n_samples

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def replace(self, values, kind: TfrKind | None = None) -> Tfr:
        return Tfr(values, self.time_axis, self.freq_axis, kind or self.kind, self.row_index, self.n_samples)

    def same_axes(self, other: Tfr) -> bool:
        return (
            self.shape == other.shape
            and np.array_equal(self.time_axis, other.time_axis)
            and np.array_equal(self.freq_axis.freqs_hz, other.freq_axis.freqs_hz)
        )
