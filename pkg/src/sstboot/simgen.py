"""Simulation generators: the locally stationary tvAR(2) null process, the
random adaptive-harmonic signal, and a Monte Carlo normality check of STFT
coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from .core import FreqGrid, SstBootError, TimeSeries, WindowPair
from .stft import stft

__all__ = [
    "phi1",
    "phi2",
    "modulation",
    "NullProcess",
    "gen_null",
    "AhmTruth",
    "gen_ahm",
    "GaussianityReport",
    "gaussianity_check",
]


def phi1(u):
    """First AR coefficient of the null process at rescaled time ``u``."""
    return -0.5 * (0.7 + 0.3 * np.cos(2 * np.pi * np.asarray(u, dtype=float)))


def phi2(u):
    return 0.3 * np.sqrt(0.1 + np.asarray(u, dtype=float) / 4)


def modulation(u):
    """Multiplicative envelope ``1 + 0.5 cos(2 pi u)`` applied to the tvAR output."""
    return 1 + 0.5 * np.cos(2 * np.pi * np.asarray(u, dtype=float))


def _tvar2(eta: np.ndarray) -> np.ndarray:
    n = eta.size
    u = np.arange(1, n + 1) / n
    a1, a2 = phi1(u).tolist(), phi2(u).tolist()
    e = eta.tolist()
    out = [0.0] * n
    out[0] = e[0]
    if n > 1:
        out[1] = e[1]
    for i in range(2, n):
        out[i] = a1[i] * out[i - 1] + a2[i] * out[i - 2] + e[i]
    return np.asarray(out)


def sampling_rate(n: int) -> float:
    """The simulation protocol samples ``n`` points at ``sqrt(n)`` Hz."""
    return math.sqrt(n)


def _series(x: np.ndarray) -> TimeSeries:
    q = sampling_rate(x.size)
    # sample i (1-based) sits at i / sqrt(n)
    return TimeSeries(x, q, 1.0 / q)


@dataclass(frozen=True)
class NullProcess:
    """The true null noise model; ``sample(seed)`` mirrors ``TvarModel.sample``."""

    n: int
    sigma: float = 1.0

    def sample(self, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        eta = rng.standard_normal(self.n)
        u = np.arange(1, self.n + 1) / self.n
        return self.sigma * modulation(u) * _tvar2(eta)

    def series(self, seed: int) -> TimeSeries:
        return _series(self.sample(seed))


def gen_null(n: int = 2048, seed: int = 0) -> TimeSeries:
    """One realization of the modulated tvAR(2) null process.

    ``eps_i = phi1(i/n) eps_{i-1} + phi2(i/n) eps_{i-2} + eta_i`` (``eps_1, eps_2``
    are the innovations themselves), then ``x_i = (1 + 0.5 cos(2 pi i/n)) eps_i``.
    """
    if n < 64:
        raise SstBootError("gen_null needs n >= 64")
    return NullProcess(n).series(seed)


@dataclass(frozen=True, eq=False)
class AhmTruth:
    f: TimeSeries
    am: np.ndarray
    inst_freq: np.ndarray
    phase: np.ndarray

    @property
    def analytic(self) -> np.ndarray:
        """``A(t) exp(2 i pi phi(t))``, the target of reconstruction."""
        return self.am * np.exp(2j * np.pi * self.phase)

    def slow_variation(self) -> dict[str, float]:
        """Finite-difference ``max |A'|/A`` and ``max |phi''|/phi'``."""
        q = self.f.rate_hz
        da = np.diff(self.am) * q
        dif = np.diff(self.inst_freq) * q
        return {
            "eps_am": float(np.max(np.abs(da) / self.am[:-1])),
            "eps_if": float(np.max(np.abs(dif) / self.inst_freq[:-1])),
            "min_if": float(self.inst_freq.min()),
        }


def _smooth(path: np.ndarray, support: int, kernel: str) -> np.ndarray:
    if kernel == "flat":
        k = np.ones(support)
    elif kernel == "hann":
        k = np.hanning(support + 2)[1:-1]
    else:
        raise SstBootError(f"unknown smoothing kernel {kernel!r}")
    return np.convolve(path, k / k.sum(), mode="valid")


def gen_ahm(n: int = 2048, seed: int = 0, kernel: str = "flat") -> AhmTruth:
    """Random AM-FM component sampled at ``sqrt(n)`` Hz.

    ``A = 3 + b / max|b|`` with ``b`` a Brownian path smoothed over 700 points;
    ``phi' = 4 + 0.5 i / (17 sqrt(n)) + 1.2 p / max|p|`` with ``p`` an
    independent Brownian path smoothed over 500 points; ``phi`` is the cumulative
    sum of ``phi'`` divided by ``sqrt(n)``.

    Each Brownian path is drawn ``support - 1`` steps longer than ``n`` and
    smoothed in ``valid`` mode, so the smoothed paths carry no edge effect.
    """
    if n < 1024:
        raise SstBootError("gen_ahm needs n >= 1024")
    rng = np.random.default_rng(seed)
    b = _smooth(np.cumsum(rng.standard_normal(n + 699)), 700, kernel)
    p = _smooth(np.cumsum(rng.standard_normal(n + 499)), 500, kernel)
    rq = math.sqrt(n)
    i = np.arange(1, n + 1)
    am = 3 + b / np.max(np.abs(b))
    inst = 4 + 0.5 * i / (17 * rq) + 1.2 * p / np.max(np.abs(p))
    phase = np.cumsum(inst) / rq
    f = am * np.cos(2 * np.pi * phase)
    return AhmTruth(_series(f), am, inst, phase)


@dataclass(frozen=True, eq=False)
class GaussianityReport:
    probe_rows: np.ndarray
    probe_freqs_hz: np.ndarray
    pvalues_re: np.ndarray
    pvalues_im: np.ndarray
    level: float

    @property
    def n_tests(self) -> int:
        return self.pvalues_re.size + self.pvalues_im.size

    @property
    def pass_fraction(self) -> float:
        """Share of (probe, Re/Im) tests not rejected at ``level``."""
        p = np.concatenate([self.pvalues_re.ravel(), self.pvalues_im.ravel()])
        return float(np.mean(p >= self.level))


def gaussianity_check(
    noise_gen: Callable[[int], np.ndarray],
    win: WindowPair,
    grid: FreqGrid,
    n_mc: int = 500,
    probe_rows=None,
    probe_freqs=None,
    level: float = 0.01,
    seed: int = 0,
    rate_hz: float | None = None,
) -> GaussianityReport:
    """Normality of STFT coefficients across Monte Carlo realizations.

    ``noise_gen(seed)`` returns one realization (array or TimeSeries).
    Realization ``r`` uses seed ``seed ^ r``. At every probe the
    D'Agostino-Pearson K^2 test (skewness + kurtosis omnibus) is applied to the
    real and imaginary parts separately.
    """
    if n_mc < 200:
        raise SstBootError("gaussianity_check needs n_mc >= 200")

    def draw(r):
        x = noise_gen(seed ^ r)
        if isinstance(x, TimeSeries):
            return x
        return TimeSeries(x, rate_hz or win.rate_hz)

    first = draw(0)
    n = first.n
    if probe_rows is None:
        probe_rows = np.linspace(win.m, n - 1 - win.m, 5).round().astype(int)
    probe_rows = np.asarray(probe_rows, dtype=int)
    if probe_freqs is None:
        probe_freqs = np.quantile(grid.freqs_hz, [0.1, 0.3, 0.5, 0.7, 0.9])
    probe_freqs = np.asarray(probe_freqs, dtype=float)
    if probe_rows.size * probe_freqs.size < 9:
        raise SstBootError("need at least 9 probes")
    pgrid = FreqGrid(probe_freqs, grid.c_max_hz, grid.bin_width_hz)

    coefs = np.empty((n_mc, probe_rows.size, probe_freqs.size), dtype=complex)
    for r in range(n_mc):
        ts = first if r == 0 else draw(r)
        coefs[r] = stft(ts, win, pgrid, rows=probe_rows).values
    p_re = stats.normaltest(coefs.real, axis=0).pvalue
    p_im = stats.normaltest(coefs.imag, axis=0).pvalue
    return GaussianityReport(probe_rows, probe_freqs, p_re, p_im, level)
