"""Reassignment rule and the STFT-based synchrosqueezing transform."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import AxisMismatch, FreqGrid, SstBootError, Tfr, TfrKind

__all__ = [
    "SUPPRESSED",
    "DEFAULT_NU",
    "EmptyOutGrid",
    "ReassignMap",
    "SstParams",
    "default_alpha",
    "alpha_from_band",
    "gaussian_kernel",
    "reassign",
    "synchrosqueeze",
    "synchrosqueeze_dense",
]

SUPPRESSED = -np.inf
DEFAULT_NU = 1e-6
# kernel mass beyond this many sqrt(alpha) is exp(-64) ~ 1e-28 and is dropped
KERNEL_RADIUS = 8.0


class EmptyOutGrid(SstBootError):
    pass


@dataclass(frozen=True, eq=False)
class ReassignMap:
    """Reassigned frequency per (time, bin).

    ``omega`` is complex: the ratio ``-V_dh / (2 pi i V_h) + eta`` is not real
    off the ridge. Suppressed cells hold ``-inf`` in the real part.
    """

    omega: np.ndarray
    nu: float
    time_axis: np.ndarray
    freq_axis: FreqGrid

    @property
    def suppressed(self) -> np.ndarray:
        return np.isneginf(self.omega.real)

    @property
    def freq(self) -> np.ndarray:
        """Real part as a frequency, ``-inf`` where suppressed."""
        return self.omega.real


@dataclass(frozen=True)
class SstParams:
    """``alpha`` is the squeeze kernel resolution (Hz^2), ``nu`` the magnitude
    threshold below which cells are not reassigned. ``out_grid=None`` squeezes
    onto the analysis grid. With ``real_part=True`` (default) only ``Re(omega)``
    enters the kernel; ``False`` evaluates ``|xi - omega|^2`` with complex
    ``omega``, which also damps cells by ``exp(-Im(omega)^2 / alpha)``."""

    alpha: float
    nu: float = DEFAULT_NU
    out_grid: FreqGrid | None = None
    real_part: bool = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise SstBootError("alpha must be positive")
        if not self.nu >= 0:
            raise SstBootError("nu must be non-negative")


def default_alpha(grid: FreqGrid, bins: float = 4.0) -> float:
    """``(bins * spacing)**2``: the kernel spans roughly ``2 * bins`` nodes."""
    return (bins * grid.spacing_hz) ** 2


def alpha_from_band(delta_r_hz: float, c_alpha: float = 2.0) -> float:
    """Resolution tied to a reconstruction half-band: ``(delta_r / c_alpha)**2``.
    The kernel mass falling outside the band is ``erfc(c_alpha)``."""
    if not c_alpha > 1:
        raise SstBootError("c_alpha must exceed 1")
    return (delta_r_hz / c_alpha) ** 2


def gaussian_kernel(z, alpha: float):
    """``exp(-|z|^2 / alpha) / sqrt(pi alpha)``; unit L1 norm on the real line."""
    z = np.asarray(z)
    return np.exp(-np.abs(z) ** 2 / alpha) / math.sqrt(math.pi * alpha)


def reassign(v_h: Tfr, v_dh: Tfr, nu: float = DEFAULT_NU) -> ReassignMap:
    if v_h.kind is not TfrKind.STFT or v_dh.kind is not TfrKind.STFT_DERIV:
        raise AxisMismatch("reassign needs an STFT and a derivative-window STFT")
    if not v_h.same_axes(v_dh):
        raise AxisMismatch("STFT pair axes differ")
    if nu < 0:
        raise SstBootError("nu must be non-negative")
    vh = v_h.values
    keep = np.abs(vh) > nu
    omega = np.full(vh.shape, complex(SUPPRESSED, 0.0))
    eta = np.broadcast_to(v_h.freq_axis.freqs_hz, vh.shape)
    ratio = v_dh.values[keep] / vh[keep]
    omega[keep] = 1j * ratio / (2 * np.pi) + eta[keep]
    return ReassignMap(omega, float(nu), v_h.time_axis, v_h.freq_axis)


def _prepare(v_h: Tfr, omap: ReassignMap, p: SstParams):
    if v_h.shape != omap.omega.shape or not np.array_equal(v_h.time_axis, omap.time_axis):
        raise AxisMismatch("STFT and reassignment map axes differ")
    out = p.out_grid if p.out_grid is not None else v_h.freq_axis
    if len(out) == 0:
        raise EmptyOutGrid("output grid is empty")
    live = ~omap.suppressed
    r = np.where(live, omap.omega.real, 0.0)
    w = np.where(live, v_h.values, 0.0) * (v_h.freq_axis.bin_width_hz / math.sqrt(math.pi * p.alpha))
    if not p.real_part:
        w = w * np.exp(-np.where(live, omap.omega.imag, 0.0) ** 2 / p.alpha)
    return out, live, r, w


@njit(cache=True)
def _scatter(rows, rr, wre, wim, xi, alpha, radius, n_rows, uniform):
    # Cells are visited in row-major order and each spreads onto the nodes
    # within `radius`; the order is fixed, so output is bit-reproducible.
    J = xi.size
    out_re = np.zeros((n_rows, J))
    out_im = np.zeros((n_rows, J))
    s = xi[1] - xi[0] if J > 1 else 0.0
    step = math.exp(-2.0 * s * s / alpha)
    for e in range(rr.size):
        r = rr[e]
        j = np.searchsorted(xi, r - radius)
        if j >= J or xi[j] - r > radius:
            continue
        l = rows[e]
        a = wre[e]
        b = wim[e]
        dz = xi[j] - r
        if uniform:
            # exp(-(dz + k s)^2 / alpha) by multiplicative recurrence
            g = math.exp(-dz * dz / alpha)
            ratio = math.exp(-(2.0 * dz * s + s * s) / alpha)
            while j < J and xi[j] - r <= radius:
                out_re[l, j] += a * g
                out_im[l, j] += b * g
                g *= ratio
                ratio *= step
                j += 1
        else:
            while j < J and xi[j] - r <= radius:
                dz = xi[j] - r
                g = math.exp(-dz * dz / alpha)
                out_re[l, j] += a * g
                out_im[l, j] += b * g
                j += 1
    return out_re, out_im


def synchrosqueeze(v_h: Tfr, omap: ReassignMap, p: SstParams) -> Tfr:
    """``S(t_l, xi_j) = (C/d) sum_k V(t_l, eta_k) g_alpha(xi_j - omega(l, k))``.

    ``C/d`` is the analysis grid's bin width. The Gaussian is truncated at
    ``8 sqrt(alpha)``; the neglected mass is below 1e-27 relative.
    """
    out, live, r, w = _prepare(v_h, omap, p)
    xi = out.freqs_hz
    n_rows = v_h.shape[0]
    J = xi.size
    radius = KERNEL_RADIUS * math.sqrt(p.alpha)

    rows, cols = np.nonzero(live)
    rr = r[rows, cols]
    ww = w[rows, cols]
    d = np.diff(xi)
    uniform = bool(J > 1 and np.allclose(d, d[0], rtol=1e-9, atol=0.0))
    acc_re, acc_im = _scatter(
        rows.astype(np.int64), rr, ww.real.copy(), ww.imag.copy(), xi, float(p.alpha), radius, n_rows, uniform
    )
    s = acc_re + 1j * acc_im
    return Tfr(s, v_h.time_axis, out, TfrKind.SST, v_h.row_index, v_h.n_samples)


def synchrosqueeze_dense(v_h: Tfr, omap: ReassignMap, p: SstParams) -> Tfr:
    """Untruncated reference evaluation of the same sum (``O(n d J)``)."""
    out, live, r, w = _prepare(v_h, omap, p)
    xi = out.freqs_hz
    s = np.zeros((v_h.shape[0], xi.size), dtype=complex)
    for l in range(v_h.shape[0]):
        k = live[l]
        if not k.any():
            continue
        g = np.exp(-((xi[None, :] - r[l, k][:, None]) ** 2) / p.alpha)
        s[l] = w[l, k] @ g
    return Tfr(s, v_h.time_axis, out, TfrKind.SST, v_h.row_index, v_h.n_samples)
