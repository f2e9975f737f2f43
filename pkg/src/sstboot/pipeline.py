"""Analysis settings shared by the one-shot analysis and every bootstrap replicate."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from .core import FreqGrid, SstBootError, Tfr, TimeSeries, uniform_grid
from .recon import DEFAULT_BAND_BINS, ComponentEstimate, Ridge, data_driven_nu, extract_ridge, reconstruct
from .sst import DEFAULT_NU, SstParams, alpha_from_band, default_alpha, reassign, synchrosqueeze
from .stft import WindowFamily, make_window, stft_pair

__all__ = ["PipelineConfig", "Pipeline", "Analysis", "analyze"]

DEFAULT_D = 512


@dataclass(frozen=True)
class PipelineConfig:
    """User-facing knobs. ``None`` means "derive from the data".

    ``c_max_hz`` defaults to Nyquist, ``alpha`` to ``(4 * spacing)**2`` (or
    ``(delta_r / c_alpha)**2`` when ``delta_r_hz`` is given), ``delta_r_hz`` to
    8 grid spacings. Setting ``nu_quantile`` replaces the fixed ``nu`` by
    :func:`~sstboot.recon.data_driven_nu` on the analysed series.
    """

    window: str = "bump"
    beta_s: float = 1.0
    c_max_hz: float | None = None
    d: int = DEFAULT_D
    alpha: float | None = None
    c_alpha: float = 2.0
    nu: float = DEFAULT_NU
    nu_quantile: float | None = None
    real_part: bool = True
    lambda_pen: float = 1.0
    delta_r_hz: float | None = None
    jump_cap: int = 2

    def __post_init__(self):
        if self.d < 2:
            raise SstBootError("d must be at least 2")
        if self.c_max_hz is not None and not self.c_max_hz > 0:
            raise SstBootError("c_max_hz must be positive")
        if self.delta_r_hz is not None and not self.delta_r_hz > 0:
            raise SstBootError("delta_r_hz must be positive")

    def build(self, rate_hz: float) -> Pipeline:
        win = make_window(WindowFamily(self.window, self.beta_s), rate_hz)
        grid = uniform_grid(self.c_max_hz if self.c_max_hz is not None else rate_hz / 2, self.d)
        delta_r = self.delta_r_hz if self.delta_r_hz is not None else DEFAULT_BAND_BINS * grid.spacing_hz
        if self.alpha is not None:
            alpha = self.alpha
        elif self.delta_r_hz is not None:
            alpha = alpha_from_band(delta_r, self.c_alpha)
        else:
            alpha = default_alpha(grid)
        return Pipeline(self, win, grid, SstParams(alpha, self.nu, None, self.real_part), delta_r)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True, eq=False)
class Pipeline:
    """A :class:`PipelineConfig` resolved for one sampling rate."""

    config: PipelineConfig
    window: object
    grid: FreqGrid
    sst: SstParams
    delta_r_hz: float

    def with_nu(self, nu: float) -> Pipeline:
        return replace(self, sst=replace(self.sst, nu=float(nu)))

    def transform(self, ts: TimeSeries, rows=None, out_grid: FreqGrid | None = None) -> tuple[Tfr, Tfr]:
        """STFT and SST of ``ts``; the SST is evaluated on ``out_grid`` nodes."""
        v_h, v_dh = stft_pair(ts, self.window, self.grid, rows)
        omap = reassign(v_h, v_dh, self.sst.nu)
        p = self.sst if out_grid is None else replace(self.sst, out_grid=out_grid)
        return v_h, synchrosqueeze(v_h, omap, p)

    def abs_sst(self, x: np.ndarray, rate_hz: float, rows, out_grid: FreqGrid) -> np.ndarray:
        _, s = self.transform(TimeSeries(x, rate_hz), rows, out_grid)
        return np.abs(s.values)


@dataclass(frozen=True, eq=False)
class Analysis:
    pipeline: Pipeline
    stft: Tfr
    sst: Tfr
    ridge: Ridge
    component: ComponentEstimate
    nu: float = field(default=DEFAULT_NU)


def analyze(ts: TimeSeries, cfg: PipelineConfig | None = None) -> Analysis:
    """STFT, SST, ridge and reconstruction of the dominant component."""
    pipe = (cfg or PipelineConfig()).build(ts.rate_hz)
    c = pipe.config
    if c.nu_quantile is not None:
        v_h, _ = stft_pair(ts, pipe.window, pipe.grid)
        pipe = pipe.with_nu(data_driven_nu(v_h, pipe.window, c.nu_quantile))
    v_h, s = pipe.transform(ts)
    ridge = extract_ridge(s, c.lambda_pen, pipe.delta_r_hz, c.jump_cap)
    comp = reconstruct(s, ridge, pipe.window)
    return Analysis(pipe, v_h, s, ridge, comp, pipe.sst.nu)
