"""Time-varying AR approximation of locally stationary noise and the Gaussian
tvAR bootstrap.

The noise is approximated by ``x_i = sum_j phi_j(i/n) x_{i-j} + sigma_i eta_i``
with each ``phi_j`` expanded on orthonormal shifted Legendre polynomials over
``[0, 1]``; coefficients come from one least-squares solve.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre

from .core import NonFiniteSample, SstBootError, TimeSeries

__all__ = [
    "TooFewSamples",
    "SeriesTooShort",
    "SingularDesignWarning",
    "TvarModel",
    "legendre_basis",
    "fit_tvar",
    "innovations",
    "local_std",
    "sample_bootstrap",
    "select_order",
    "dump_model",
    "load_model",
    "DEFAULT_HALF_WINDOW",
]

DEFAULT_HALF_WINDOW = 20
_COND_LIMIT = 1e12


class TooFewSamples(SstBootError):
    pass


class SeriesTooShort(SstBootError):
    pass


class SingularDesignWarning(UserWarning):
    """The regression design was near singular; a small ridge penalty was used."""


def legendre_basis(u, m: int) -> np.ndarray:
    """``psi_k(u) = sqrt(2k+1) P_k(2u - 1)``, ``k = 0..m-1``; shape ``(m, len(u))``.

    Orthonormal in ``L^2[0, 1]``.
    """
    u = np.asarray(u, dtype=float)
    out = np.empty((m, u.size))
    for k in range(m):
        c = np.zeros(k + 1)
        c[k] = 1.0
        out[k] = math.sqrt(2 * k + 1) * legendre.legval(2 * u - 1, c)
    return out


@dataclass(frozen=True, eq=False)
class TvarModel:
    """Fitted tvAR model: ``phi_j(u) = sum_k coeffs[j, k] psi_k(u)`` and a
    per-sample innovation scale ``sigma_path``."""

    coeffs: np.ndarray
    sigma_path: np.ndarray
    basis: str = "legendre"
    regularized: bool = False

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        s = np.asarray(self.sigma_path, dtype=float)
        if not np.all(np.isfinite(c)):
            raise SstBootError("tvAR coefficients must be finite")
        if s.ndim != 1 or s.size == 0 or not np.all(s > 0):
            raise SstBootError("sigma_path must be a non-empty positive vector")
        if self.basis != "legendre":
            raise SstBootError(f"unsupported basis {self.basis!r}")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "sigma_path", s)

    @property
    def order_b(self) -> int:
        return self.coeffs.shape[0]

    @property
    def basis_order_m(self) -> int:
        return self.coeffs.shape[1]

    @property
    def n(self) -> int:
        return self.sigma_path.size

    def phi(self, u) -> np.ndarray:
        """Coefficient functions at rescaled times ``u``; shape ``(b, len(u))``."""
        return self.coeffs @ legendre_basis(u, self.basis_order_m)

    def phi_path(self) -> np.ndarray:
        """``phi_j(i/n)`` for ``i = 1..n``."""
        return self.phi(np.arange(1, self.n + 1) / self.n)

    def sample(self, seed: int) -> np.ndarray:
        return sample_bootstrap(self, seed)


def _design(x: np.ndarray, b: int, m: int):
    n = x.size
    i = np.arange(b + 1, n + 1)  # 1-based targets
    psi = legendre_basis(i / n, m)  # (m, n-b)
    cols = []
    for j in range(1, b + 1):
        lagged = x[i - 1 - j]
        for k in range(m):
            cols.append(psi[k] * lagged)
    return np.column_stack(cols), x[i - 1]


def _solve(X: np.ndarray, y: np.ndarray):
    xtx = X.T @ X
    cond = np.linalg.cond(xtx) if xtx.size else np.inf
    if np.isfinite(cond) and cond < _COND_LIMIT:
        beta, *_ = np.linalg.lstsq(X, y, rcond=None)
        return beta, False
    warnings.warn(
        f"tvAR design is near singular (cond={cond:.3g}); applying ridge penalty",
        SingularDesignWarning,
        stacklevel=3,
    )
    p = xtx.shape[0]
    lam = 1e-8 * max(np.trace(xtx) / p, np.finfo(float).tiny)
    return np.linalg.solve(xtx + lam * np.eye(p), X.T @ y), True


def fit_tvar(
    resid: TimeSeries | np.ndarray,
    b: int = 2,
    m: int = 4,
    half_window: int = DEFAULT_HALF_WINDOW,
) -> TvarModel:
    """Least-squares tvAR(b) fit with ``m`` basis functions per coefficient.

    Regresses ``x_i`` on ``psi_k(i/n) x_{i-j}`` for ``i = b+1..n``; the innovation
    scale is the moving standard deviation of the implied innovations.
    """
    x = np.asarray(resid.samples if isinstance(resid, TimeSeries) else resid, dtype=float)
    if b < 1 or m < 1:
        raise SstBootError("b and m must be at least 1")
    if x.size <= 10 * b * m:
        raise TooFewSamples(f"need n > 10*b*m = {10 * b * m}, got {x.size}")
    X, y = _design(x, b, m)
    beta, regularized = _solve(X, y)
    coeffs = beta.reshape(b, m)
    provisional = TvarModel(coeffs, np.ones(x.size), regularized=regularized)
    sig = local_std(innovations(provisional, x), half_window)
    return TvarModel(coeffs, sig, regularized=regularized)


def innovations(model: TvarModel, resid: TimeSeries | np.ndarray) -> np.ndarray:
    """``x_i - sum_j phi_j(i/n) x_{i-j}`` for ``i > b``; the first ``b`` values
    are passed through unchanged."""
    x = np.asarray(resid.samples if isinstance(resid, TimeSeries) else resid, dtype=float)
    b = model.order_b
    if x.size < b + 1:
        raise SeriesTooShort(f"series of length {x.size} is too short for order {b}")
    n = x.size
    phi = model.phi(np.arange(1, n + 1) / n)
    out = x.copy()
    for j in range(1, b + 1):
        out[b:] -= phi[j - 1, b:] * x[b - j : n - j]
    return out


def local_std(innov, half_window: int = DEFAULT_HALF_WINDOW, sigma_floor: float | None = None) -> np.ndarray:
    """Moving sample standard deviation over ``[i - I, i + I]`` clipped to the
    series, floored at ``sigma_floor`` (default ``1e-6 * std(innov)``)."""
    x = np.asarray(innov.samples if isinstance(innov, TimeSeries) else innov, dtype=float)
    if half_window < 1:
        raise SstBootError("half_window must be at least 1")
    if sigma_floor is None:
        sigma_floor = 1e-6 * float(np.std(x)) or 1e-12
    n = x.size
    width = 2 * half_window + 1
    padded = np.concatenate([np.full(half_window, np.nan), x, np.full(half_window, np.nan)])
    win = np.lib.stride_tricks.sliding_window_view(padded, width)
    cnt = np.sum(~np.isnan(win), axis=1)
    mean = np.nansum(win, axis=1) / cnt
    ss = np.nansum((win - mean[:, None]) ** 2, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        sd = np.sqrt(np.where(cnt > 1, ss / (cnt - 1), 0.0))
    return np.maximum(sd[:n], sigma_floor)


def sample_bootstrap(model: TvarModel, seed: int) -> np.ndarray:
    """One Gaussian tvAR path driven by ``default_rng(seed)``."""
    rng = np.random.default_rng(seed)
    n, b = model.n, model.order_b
    eta = rng.standard_normal(n)
    shock = (model.sigma_path * eta).tolist()
    phi = model.phi_path().T.tolist()  # (n, b)
    out = [0.0] * n
    for i in range(min(b, n)):
        out[i] = shock[i]
    for i in range(b, n):
        acc = shock[i]
        row = phi[i]
        for j in range(b):
            acc += row[j] * out[i - 1 - j]
        out[i] = acc
    arr = np.asarray(out)
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise NonFiniteSample(int(bad[0]), f"bootstrap recursion diverged at index {int(bad[0])}")
    return arr


def select_order(
    resid,
    b_values=(1, 2, 3, 4),
    m_values=(1, 2, 3, 4, 5),
    holdout: float = 0.25,
) -> tuple[int, int]:
    """Pick ``(b, m)`` minimizing one-step prediction MSE on the trailing
    ``holdout`` share of the series, fitting on the rest."""
    x = np.asarray(resid.samples if isinstance(resid, TimeSeries) else resid, dtype=float)
    n = x.size
    split = int(round(n * (1 - holdout)))
    best, best_mse = None, np.inf
    for b in b_values:
        for m in m_values:
            if split <= 10 * b * m:
                continue
            X, y = _design(x, b, m)
            train = np.arange(b + 1, n + 1) <= split
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", SingularDesignWarning)
                beta, _ = _solve(X[train], y[train])
            mse = float(np.mean((y[~train] - X[~train] @ beta) ** 2))
            if mse < best_mse:
                best, best_mse = (b, m), mse
    if best is None:
        raise TooFewSamples("series too short for every candidate order")
    return best


def dump_model(model: TvarModel) -> str:
    """Text form: ``b,m,basis`` then ``b`` coefficient rows then one sigma per line."""
    buf = io.StringIO()
    buf.write(f"{model.order_b},{model.basis_order_m},{model.basis}\n")
    for row in model.coeffs:
        buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
    for v in model.sigma_path:
        buf.write(f"{v:.17g}\n")
    return buf.getvalue()


def load_model(text: str) -> TvarModel:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    try:
        b_s, m_s, basis = lines[0].split(",")
        b, m = int(b_s), int(m_s)
        coeffs = np.array([[float(v) for v in ln.split(",")] for ln in lines[1 : 1 + b]])
        sigma = np.array([float(v) for v in lines[1 + b :]])
    except (ValueError, IndexError) as exc:
        raise SstBootError(f"malformed tvAR model text: {exc}") from exc
    if coeffs.shape != (b, m):
        raise SstBootError(f"expected {b}x{m} coefficients, got {coeffs.shape}")
    return TvarModel(coeffs, sigma, basis)
