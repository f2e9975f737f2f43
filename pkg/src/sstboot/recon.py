"""Ridge extraction and SST-based reconstruction of one oscillatory component."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import AxisMismatch, SstBootError, Tfr, TfrKind, WindowPair
from .stft import spectral_halfwidth

__all__ = [
    "EmptyTfr",
    "EmptyBand",
    "Ridge",
    "ComponentEstimate",
    "extract_ridge",
    "reconstruct",
    "unwrap_cycles",
    "data_driven_nu",
    "offridge_magnitudes",
    "DEFAULT_BAND_BINS",
    "AMP_FLOOR",
]

DEFAULT_BAND_BINS = 8
AMP_FLOOR = 1e-8


class EmptyTfr(SstBootError):
    pass


class EmptyBand(SstBootError):
    def __init__(self, rows, msg: str | None = None):
        self.rows = np.asarray(rows, dtype=int)
        super().__init__(msg or f"no frequency node inside the reconstruction band at rows {self.rows[:10].tolist()}")


@dataclass(frozen=True, eq=False)
class Ridge:
    """One frequency per TFR row (a node of the TFR's grid) plus the
    half-width of the band used around it for reconstruction."""

    bins: np.ndarray
    if_hz: np.ndarray
    band_halfwidth_hz: float
    quality: np.ndarray
    time_axis: np.ndarray


@dataclass(frozen=True, eq=False)
class ComponentEstimate:
    complex_f: np.ndarray
    amplitude: np.ndarray
    phase: np.ndarray
    time_axis: np.ndarray
    row_index: np.ndarray
    valid_range: tuple[int, int]

    @property
    def interior(self) -> np.ndarray:
        """Rows whose window lies fully inside the observed samples."""
        lo, hi = self.valid_range
        return (self.row_index >= lo) & (self.row_index <= hi)

    @property
    def real(self) -> np.ndarray:
        """The real oscillation ``Re f~ = A cos(2 pi phi)``."""
        return self.complex_f.real


def extract_ridge(
    s: Tfr,
    lambda_pen: float = 1.0,
    delta_r: float | None = None,
    jump_cap: int = 2,
) -> Ridge:
    """Best bin path by dynamic programming.

    Maximizes ``sum_l |s(l, k_l)| - lambda_pen * sum_l (eta_{k_l} - eta_{k_{l-1}})**2``
    over paths that move at most ``jump_cap`` bins per row. The solution is
    exact for that objective; ties go to the lowest bin index.
    """
    if s.kind not in (TfrKind.SST, TfrKind.STFT, TfrKind.THRESHOLDED):
        raise AxisMismatch(f"cannot extract a ridge from a {s.kind.value} TFR")
    if s.values.size == 0:
        raise EmptyTfr("TFR is empty")
    if lambda_pen < 0:
        raise SstBootError("lambda_pen must be non-negative")
    if jump_cap < 0:
        raise SstBootError("jump_cap must be non-negative")
    eta = s.freq_axis.freqs_hz
    if delta_r is None:
        delta_r = DEFAULT_BAND_BINS * s.freq_axis.spacing_hz
    score = np.abs(s.values)
    n, d = score.shape
    steps = []
    for o in range(-jump_cap, jump_cap + 1):
        # row l bin k may come from bin k + o of row l - 1
        k = np.arange(max(0, -o), min(d, d - o))
        if k.size:
            steps.append((k, k + o, lambda_pen * (eta[k] - eta[k + o]) ** 2))

    back = np.zeros((n, d), dtype=np.int64)
    total = score[0].copy()
    for l in range(1, n):
        best = np.full(d, -np.inf)
        arg = np.zeros(d, dtype=np.int64)
        # predecessors scanned from the lowest bin up; strict '>' keeps the lowest on ties
        for k, prev, pen in steps:
            cand = total[prev] - pen
            upd = cand > best[k]
            best[k[upd]] = cand[upd]
            arg[k[upd]] = prev[upd]
        total = best + score[l]
        back[l] = arg

    path = np.empty(n, dtype=np.int64)
    path[-1] = int(np.argmax(total))
    for l in range(n - 1, 0, -1):
        path[l - 1] = back[l, path[l]]
    return Ridge(
        bins=path,
        if_hz=eta[path].copy(),
        band_halfwidth_hz=float(delta_r),
        quality=score[np.arange(n), path],
        time_axis=s.time_axis,
    )


def unwrap_cycles(z: np.ndarray, amp_floor: float = AMP_FLOOR) -> np.ndarray:
    """Unwrapped phase of ``z`` in cycles.

    Successive argument differences are mapped to ``(-0.5, 0.5]``; where
    ``|z| <= amp_floor`` the phase is carried forward unchanged.
    """
    z = np.asarray(z, dtype=complex)
    out = np.zeros(z.size)
    if z.size == 0:
        return out
    ang = np.angle(z) / (2 * np.pi)
    ok = np.abs(z) > amp_floor
    cur = ang[0] if ok[0] else 0.0
    ref = ang[0] if ok[0] else None
    out[0] = cur
    for i in range(1, z.size):
        if ok[i]:
            if ref is None:
                cur = ang[i]
            else:
                step = ang[i] - ref
                step -= np.ceil(step - 0.5)
                cur += step
            ref = ang[i]
        out[i] = cur
    return out


def reconstruct(s: Tfr, ridge: Ridge, win: WindowPair, one_sided: bool = True) -> ComponentEstimate:
    """Integrate the SST over ``[if - delta_r, if + delta_r]`` at every row.

    ``f~(t_l) = factor / h(0) * (C/d) * sum_{|xi_k - if_l| <= delta_r} S(t_l, xi_k)``

    A real oscillation splits its energy between positive and negative
    frequencies and only the positive half is squeezed, so ``factor = 2`` when
    ``one_sided`` (the default) and the estimate targets ``A exp(2 i pi phi)``.
    """
    if s.kind is not TfrKind.SST and s.kind is not TfrKind.THRESHOLDED:
        raise AxisMismatch("reconstruction expects a synchrosqueezed TFR")
    if ridge.if_hz.size != s.shape[0] or not np.array_equal(ridge.time_axis, s.time_axis):
        raise AxisMismatch("ridge and TFR time axes differ")
    xi = s.freq_axis.freqs_hz
    inband = np.abs(xi[None, :] - ridge.if_hz[:, None]) <= ridge.band_halfwidth_hz
    empty = np.flatnonzero(~inband.any(axis=1))
    if empty.size:
        raise EmptyBand(empty)
    factor = 2.0 if one_sided else 1.0
    scale = factor * s.freq_axis.bin_width_hz / win.h_at_zero
    cf = scale * np.sum(np.where(inband, s.values, 0.0), axis=1)
    n = s.n_samples
    return ComponentEstimate(
        complex_f=cf,
        amplitude=np.abs(cf),
        phase=unwrap_cycles(cf),
        time_axis=s.time_axis,
        row_index=s.row_index,
        valid_range=(win.m, n - 1 - win.m),
    )


def offridge_magnitudes(v_h: Tfr, win: WindowPair, ridge: Ridge | None = None, rows=None) -> np.ndarray:
    """``|V|`` at cells farther than the window's spectral half-width from the
    ridge (the per-row argmax of ``|V|`` when no ridge is given).

    ``rows`` restricts the pool to a boolean mask or index set over TFR rows.
    """
    mag = np.abs(v_h.values)
    eta = v_h.freq_axis.freqs_hz
    centre = ridge.if_hz if ridge is not None else eta[np.argmax(mag, axis=1)]
    off = np.abs(eta[None, :] - centre[:, None]) > spectral_halfwidth(win)
    if rows is not None:
        keep = np.zeros(mag.shape[0], dtype=bool)
        keep[rows] = True
        off &= keep[:, None]
    return mag[off]


def data_driven_nu(v_h: Tfr, win: WindowPair, quantile: float = 0.95, ridge: Ridge | None = None) -> float:
    """Noise-floor proxy for the reassignment threshold: the ``quantile`` of
    :func:`offridge_magnitudes` (all cells if none lie off the ridge)."""
    if not 0 < quantile < 1:
        raise SstBootError("quantile must lie in (0, 1)")
    mag = offridge_magnitudes(v_h, win, ridge)
    if mag.size == 0:
        warnings.warn("no cell lies off the ridge band; using all cells", stacklevel=2)
        mag = np.abs(v_h.values).ravel()
    return float(np.quantile(mag, quantile)) if mag.any() else 0.0
