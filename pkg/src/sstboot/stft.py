"""Window construction and the discretized STFT on arbitrary frequency grids.

The transform evaluated here is

    V(t_l, eta) = q**-0.5 * sum_{j=l-m}^{l+m} X_j h(j-l) exp(-2i pi eta (t_j - t_l))

with ``q`` the sampling rate, ``h`` a unit-norm vector of ``2m+1`` taps and
``X_j = 0`` outside the observed range (zero padding).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .core import (
    AxisMismatch,
    FreqGrid,
    SstBootError,
    Tfr,
    TfrKind,
    TimeSeries,
    WindowPair,
    validate_series,
)

__all__ = [
    "WindowTooShort",
    "FrequencyAboveNyquist",
    "GridEmpty",
    "OracleTooLarge",
    "WindowFamily",
    "make_window",
    "spectral_halfwidth",
    "stft",
    "stft_pair",
    "stft_oracle",
]


class WindowTooShort(SstBootError):
    pass


class FrequencyAboveNyquist(SstBootError):
    pass


class GridEmpty(SstBootError):
    pass


class OracleTooLarge(SstBootError):
    pass


_ROW_BLOCK = 256

BUMP = "bump"
TRUNC_GAUSS = "truncgauss"


@dataclass(frozen=True)
class WindowFamily:
    """Continuous window profile on ``[-beta_s, beta_s]``.

    ``kind`` is ``"bump"`` (``exp(-1/(1-t^2))``, C-infinity, compact support) or
    ``"truncgauss"`` (Gaussian with relative std ``rel_std`` cut at +-1).
    """

    kind: str = BUMP
    beta_s: float = 1.0
    rel_std: float = 0.25

    def __post_init__(self):
        if self.kind not in (BUMP, TRUNC_GAUSS):
            raise SstBootError(f"unknown window kind {self.kind!r}")
        if not self.beta_s > 0:
            raise SstBootError("beta_s must be positive")
        if self.kind == TRUNC_GAUSS and not 0 < self.rel_std <= 0.5:
            raise SstBootError("rel_std must lie in (0, 0.5]")

    def _raw(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        if self.kind == BUMP:
            inside = np.abs(t) < 1
            out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
        else:
            inside = np.abs(t) <= 1
            out[inside] = np.exp(-t[inside] ** 2 / (2 * self.rel_std**2))
        return out

    def _raw_deriv(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        if self.kind == BUMP:
            inside = np.abs(t) < 1
            ti = t[inside]
            out[inside] = np.exp(-1.0 / (1.0 - ti**2)) * (-2.0 * ti / (1.0 - ti**2) ** 2)
        else:
            inside = np.abs(t) <= 1
            ti = t[inside]
            out[inside] = -ti / self.rel_std**2 * np.exp(-ti**2 / (2 * self.rel_std**2))
        return out

    @property
    def _norm(self) -> float:
        return _profile_norm(self.kind, self.rel_std)

    def profile(self, t):
        """Unit-L2 profile on [-1, 1]."""
        return self._raw(t) / self._norm

    def profile_deriv(self, t):
        return self._raw_deriv(t) / self._norm

    def __call__(self, t):
        """Continuous window ``h0(t / beta) / sqrt(beta)``; unit L2 norm."""
        b = self.beta_s
        return self.profile(np.asarray(t, dtype=float) / b) / math.sqrt(b)

    def deriv(self, t):
        b = self.beta_s
        return self.profile_deriv(np.asarray(t, dtype=float) / b) / b**1.5


@lru_cache(maxsize=None)
def _profile_norm(kind: str, rel_std: float) -> float:
    fam = WindowFamily(kind, 1.0, rel_std)
    val, _ = integrate.quad(lambda t: float(fam._raw(np.array(t))) ** 2, -1, 1, limit=200)
    return math.sqrt(val)


def make_window(fam: WindowFamily, rate_hz: float) -> WindowPair:
    """Sample ``fam`` and its analytic derivative at ``(k - m) / rate`` for
    ``k = 0..2m``, ``m = ceil(beta * rate)``.

    Both vectors carry the ``1/sqrt(rate)`` factor and share one renormalization
    constant that makes ``sum(h**2) == 1``. ``h_at_zero`` is the continuous
    window at 0 times that same constant, so reconstruction stays consistent.
    """
    if not rate_hz > 0:
        raise SstBootError("rate_hz must be positive")
    # tolerance keeps beta*rate = 100.0000000001 from adding a tap
    m = int(math.ceil(fam.beta_s * rate_hz - 1e-9))
    if m < 4:
        raise WindowTooShort(f"window half-length m={m} < 4; increase beta_s or the rate")
    x = np.arange(-m, m + 1) / rate_hz
    # exploit symmetry so h is exactly even and dh exactly odd
    half = x[m:]
    h_half = fam(half) / math.sqrt(rate_hz)
    dh_half = fam.deriv(half) / math.sqrt(rate_hz)
    h = np.concatenate([h_half[:0:-1], h_half])
    dh = np.concatenate([-dh_half[:0:-1], dh_half])
    dh[m] = 0.0
    scale = 1.0 / math.sqrt(float(np.sum(h**2)))
    h *= scale
    dh *= scale
    h.flags.writeable = False
    dh.flags.writeable = False
    return WindowPair(
        h=h,
        dh=dh,
        m=m,
        beta_s=fam.beta_s,
        h_at_zero=float(fam(0.0)) * scale,
        rate_hz=float(rate_hz),
    )


def spectral_halfwidth(win: WindowPair, rel: float = 0.05, resolution_hz: float | None = None) -> float:
    """Largest ``|xi|`` at which the window's DTFT magnitude still reaches
    ``rel`` times its value at 0 (searched up to Nyquist)."""
    q = win.rate_hz
    step = resolution_hz or min(0.005, q / 2 / 4000)
    xi = np.arange(0.0, q / 2, step)
    k = np.arange(-win.m, win.m + 1)
    mag = np.abs(np.exp(-2j * np.pi * np.outer(xi, k) / q) @ win.h)
    above = np.flatnonzero(mag >= rel * mag[0])
    return float(xi[above[-1]]) if above.size else 0.0


def _check_inputs(ts: TimeSeries, win: WindowPair, grid: FreqGrid):
    validate_series(ts)
    if len(grid) == 0:
        raise GridEmpty("frequency grid is empty")
    if not math.isclose(win.rate_hz, ts.rate_hz, rel_tol=1e-12):
        raise AxisMismatch(f"window built for {win.rate_hz} Hz, series sampled at {ts.rate_hz} Hz")
    if grid.freqs_hz[-1] > ts.nyquist_hz * (1 + 1e-12):
        raise FrequencyAboveNyquist(
            f"grid reaches {grid.freqs_hz[-1]:.6g} Hz above Nyquist {ts.nyquist_hz:.6g} Hz"
        )


def _rows(ts: TimeSeries, rows) -> np.ndarray:
    if rows is None:
        return np.arange(ts.n)
    rows = np.asarray(rows, dtype=int)
    if rows.ndim != 1 or rows.size == 0 or rows.min() < 0 or rows.max() >= ts.n:
        raise AxisMismatch("row indices must be a non-empty subset of 0..n-1")
    return rows


def _modulated(taps: np.ndarray, m: int, freqs: np.ndarray, q: float) -> np.ndarray:
    return _modulated_cached(taps.tobytes(), m, freqs.tobytes(), float(q))


@lru_cache(maxsize=16)
def _modulated_cached(taps_b: bytes, m: int, freqs_b: bytes, q: float) -> np.ndarray:
    # keyed on content, so repeated calls with equal windows and grids share kernels
    taps = np.frombuffer(taps_b)
    freqs = np.frombuffer(freqs_b)
    lag = np.arange(-m, m + 1)
    k = taps[:, None] * np.exp(-2j * np.pi * np.outer(lag, freqs) / q) / math.sqrt(q)
    k.flags.writeable = False
    return k


def _transform(xpad: np.ndarray, rows: np.ndarray, kernels: list[np.ndarray]) -> list[np.ndarray]:
    # Fixed-size row blocks: every cell sees the same GEMM shape and hence the
    # same summation order, whatever the caller's row subset or worker count.
    taps = kernels[0].shape[0]
    frames_all = np.lib.stride_tricks.sliding_window_view(xpad, taps)
    out = [np.empty((rows.size, k.shape[1]), dtype=complex) for k in kernels]
    parts = [(np.ascontiguousarray(k.real), np.ascontiguousarray(k.imag)) for k in kernels]
    for start in range(0, rows.size, _ROW_BLOCK):
        idx = rows[start : start + _ROW_BLOCK]
        frames = np.zeros((_ROW_BLOCK, taps))
        frames[: idx.size] = frames_all[idx]
        for acc, (kr, ki) in zip(out, parts):
            acc[start : start + idx.size].real = (frames @ kr)[: idx.size]
            acc[start : start + idx.size].imag = (frames @ ki)[: idx.size]
    return out


def stft_pair(
    ts: TimeSeries, win: WindowPair, grid: FreqGrid, rows=None
) -> tuple[Tfr, Tfr]:
    """STFT with ``h`` and with ``dh`` in one pass over the data."""
    _check_inputs(ts, win, grid)
    rows = _rows(ts, rows)
    q = ts.rate_hz
    xpad = np.concatenate([np.zeros(win.m), ts.samples, np.zeros(win.m)])
    kh = _modulated(win.h, win.m, grid.freqs_hz, q)
    kdh = _modulated(win.dh, win.m, grid.freqs_hz, q)
    vh, vdh = _transform(xpad, rows, [kh, kdh])
    t = ts.times[rows]
    return (
        Tfr(vh, t, grid, TfrKind.STFT, rows, ts.n),
        Tfr(vdh, t, grid, TfrKind.STFT_DERIV, rows, ts.n),
    )


def stft(ts: TimeSeries, win: WindowPair, grid: FreqGrid, deriv: bool = False, rows=None) -> Tfr:
    """Discretized STFT of ``ts`` on ``grid`` at every sample (or at ``rows``).

    Parameters
    ----------
    ts : TimeSeries
    win : WindowPair
        Must have been built for ``ts.rate_hz``.
    grid : FreqGrid
        Any increasing grid up to Nyquist; no FFT alignment is assumed.
    deriv : bool
        Use the derivative window ``dh`` instead of ``h``.
    rows : array of int, optional
        0-based sample indices at which to evaluate. Default: all samples.
    """
    _check_inputs(ts, win, grid)
    rows = _rows(ts, rows)
    q = ts.rate_hz
    xpad = np.concatenate([np.zeros(win.m), ts.samples, np.zeros(win.m)])
    ker = _modulated(win.dh if deriv else win.h, win.m, grid.freqs_hz, q)
    (v,) = _transform(xpad, rows, [ker])
    kind = TfrKind.STFT_DERIV if deriv else TfrKind.STFT
    return Tfr(v, ts.times[rows], grid, kind, rows, ts.n)


def stft_oracle(ts: TimeSeries, win: WindowPair, grid: FreqGrid, deriv: bool = False) -> Tfr:
    """Brute-force STFT, accumulated in extended precision. Test use only."""
    _check_inputs(ts, win, grid)
    n, d = ts.n, len(grid)
    if n * d > 10**6:
        raise OracleTooLarge(f"n*d = {n * d} exceeds 1e6")
    taps = (win.dh if deriv else win.h).astype(np.longdouble)
    x = ts.samples.astype(np.longdouble)
    q = np.longdouble(ts.rate_hz)
    f = grid.freqs_hz.astype(np.longdouble)
    two_pi = 2 * np.longdouble(np.pi)
    m = win.m
    xpad = np.concatenate([np.zeros(m, np.longdouble), x, np.zeros(m, np.longdouble)])
    lag = np.arange(-m, m + 1).astype(np.longdouble)
    ph = two_pi * np.outer(lag, f) / q
    cos, sin = np.cos(ph), np.sin(ph)
    out = np.empty((n, d), dtype=complex)
    block = max(1, 2**20 // ((2 * m + 1) * d))
    for lo in range(0, n, block):
        rows = np.arange(lo, min(n, lo + block))
        w = xpad[rows[:, None] + np.arange(2 * m + 1)] * taps
        re = np.einsum("lk,kj->lj", w, cos)
        im = -np.einsum("lk,kj->lj", w, sin)
        out[rows] = (re / np.sqrt(q)).astype(float) + 1j * (im / np.sqrt(q)).astype(float)
    kind = TfrKind.STFT_DERIV if deriv else TfrKind.STFT
    return Tfr(out, ts.times, grid, kind)
