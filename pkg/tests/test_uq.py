import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sstboot.core import Tfr, TfrKind, uniform_grid
from sstboot.pipeline import PipelineConfig
from sstboot.simgen import NullProcess, gen_null
from sstboot.tvar import TvarModel, fit_tvar
from sstboot.uq import (
    BandSpec,
    DimMismatch,
    GridOutsideAxes,
    GridTooCoarse,
    MTooSmall,
    apply_threshold,
    bootstrap_bands,
    default_spec,
    noise_threshold,
    replicate_abs_sst,
    spline_lift,
)

N = 1024
RATE = math.sqrt(N)


@pytest.fixture(scope="module")
def pipe():
    return PipelineConfig(d=128).build(RATE)


@pytest.fixture(scope="module")
def model():
    return fit_tvar(gen_null(N, 0).samples, 2, 4)


def _tfr(vals):
    n, d = vals.shape
    return Tfr(vals, np.arange(n, dtype=float), uniform_grid(float(d), d), TfrKind.SST)


def test_default_spec_layout():
    spec = default_spec(2048, 512)
    assert spec.grid_times[0] == 0 and spec.grid_times[-1] == 2047
    assert np.all(np.diff(spec.grid_times[:-1]) == 8)
    assert spec.grid_freqs.size == 64 and spec.grid_freqs[-1] == 511
    assert np.all(np.diff(spec.grid_freqs) == 8)
    assert spec.alpha_level == 0.05 and spec.n_boot == 1000


def test_spec_validation():
    with pytest.raises(MTooSmall):
        BandSpec([0, 1], [0, 1], 0.05, 39)
    with pytest.raises(ValueError):
        BandSpec([1, 0], [0, 1], 0.05, 40)
    with pytest.raises(ValueError):
        BandSpec([0, 1], [0, 1], 1.0, 40)
    with pytest.raises(GridOutsideAxes):
        BandSpec([0, 5000], [0, 1], 0.05, 40).check(1024, 128)


def test_apply_threshold_trivial_cases():
    rng = np.random.default_rng(0)
    s = _tfr(rng.standard_normal((20, 10)) + 1j * rng.standard_normal((20, 10)))
    same = apply_threshold(s, np.zeros(s.shape))
    np.testing.assert_array_equal(same.values, s.values)
    assert same.kind is TfrKind.THRESHOLDED
    zero = apply_threshold(s, np.full(s.shape, 2 * np.abs(s.values).max()))
    assert not zero.values.any()
    tie = apply_threshold(s, np.abs(s.values))
    np.testing.assert_array_equal(tie.values, s.values)
    with pytest.raises(DimMismatch):
        apply_threshold(s, np.zeros((2, 2)))


@given(seed=st.integers(0, 2**32 - 1), level=st.floats(0, 3))
def test_threshold_idempotent(seed, level):
    rng = np.random.default_rng(seed)
    s = _tfr(rng.standard_normal((8, 6)) + 1j * rng.standard_normal((8, 6)))
    t = np.abs(rng.standard_normal((8, 6))) * level
    once = apply_threshold(s, t)
    np.testing.assert_array_equal(apply_threshold(once, t).values, once.values)


def test_spline_reproduces_constants_and_linears():
    tc, fc = np.linspace(0, 10, 7), np.linspace(1, 5, 6)
    tf, ff = np.linspace(0, 10, 41), np.linspace(1, 5, 33)
    np.testing.assert_allclose(spline_lift(np.full((7, 6), 2.5), tc, fc, tf, ff), 2.5, atol=1e-12)
    lin = 0.3 * tc[:, None] + 0.7 * fc[None, :] + 1
    np.testing.assert_allclose(
        spline_lift(lin, tc, fc, tf, ff), 0.3 * tf[:, None] + 0.7 * ff[None, :] + 1, atol=1e-12
    )


def test_spline_exact_at_nodes_and_smooth_error():
    tc = np.linspace(0, 3, 16)
    fc = np.linspace(0, 3, 16)
    surf = np.sin(tc)[:, None] * np.cos(fc)[None, :] + 2
    np.testing.assert_allclose(spline_lift(surf, tc, fc, tc, fc), surf, atol=1e-12)
    tf = np.linspace(0, 3, 301)
    dense = np.sin(tf)[:, None] * np.cos(tf)[None, :] + 2
    err = np.abs(spline_lift(surf, tc, fc, tf, tf) - dense)
    # natural end conditions cost accuracy near the edges only
    assert err[30:-30, 30:-30].max() < 1e-3
    assert err.max() < 2e-2


def test_spline_clamps_and_checks():
    tc = fc = np.arange(4.0)
    surf = np.zeros((4, 4))
    surf[1, 1] = 1.0
    out = spline_lift(surf, tc, fc, np.linspace(0, 3, 31), np.linspace(0, 3, 31))
    assert out.min() >= 0
    raw = spline_lift(surf, tc, fc, np.linspace(0, 3, 31), np.linspace(0, 3, 31), clamp=False)
    assert raw.min() < 0
    with pytest.raises(GridTooCoarse):
        spline_lift(np.zeros((3, 4)), np.arange(3.0), fc, tc, fc)


def test_bands_ordered_and_nonnegative(pipe, model):
    spec = default_spec(N, 128, time_step=16, n_freqs=16, n_boot=40)
    b = bootstrap_bands(None, model, spec, pipe, n=N, rate_hz=RATE, seed=3)
    assert b.lower.shape == b.upper.shape == (N, 128)
    assert np.all(b.lower >= 0) and np.all(b.lower <= b.upper)
    assert np.all(b.coarse_lower <= b.coarse_upper)


def test_bands_monotone_in_alpha(pipe, model):
    spec = default_spec(N, 128, time_step=32, n_freqs=16, n_boot=60)
    stack = replicate_abs_sst(pipe, model, spec, N, RATE, seed=4)
    for a1, a2 in ((0.05, 0.2), (0.01, 0.05), (0.1, 0.5)):
        lo1, hi1 = np.percentile(stack, [50 * a1, 100 - 50 * a1], axis=0, method="linear")
        lo2, hi2 = np.percentile(stack, [50 * a2, 100 - 50 * a2], axis=0, method="linear")
        assert np.all(lo1 <= lo2) and np.all(hi2 <= hi1)


def test_degenerate_model_gives_zero_bands(pipe):
    spec = default_spec(N, 128, time_step=64, n_freqs=8, n_boot=40)
    tiny = TvarModel(np.zeros((2, 4)), np.full(N, 1e-12))
    b = bootstrap_bands(None, tiny, spec, pipe, n=N, rate_hz=RATE)
    assert b.upper.max() <= 1e-9
    t = noise_threshold(tiny, spec, pipe, N, RATE)
    assert t.max() <= 1e-9


def test_results_independent_of_jobs(pipe, model):
    spec = default_spec(N, 128, time_step=32, n_freqs=16, n_boot=40)
    one = replicate_abs_sst(pipe, model, spec, N, RATE, seed=7, n_jobs=1)
    two = replicate_abs_sst(pipe, model, spec, N, RATE, seed=7, n_jobs=2)
    np.testing.assert_array_equal(one, two)
    again = bootstrap_bands(None, model, spec, pipe, n=N, rate_hz=RATE, seed=7)
    np.testing.assert_array_equal(again.upper, bootstrap_bands(None, model, spec, pipe, n=N, rate_hz=RATE, seed=7).upper)


def test_band_seed_stability():
    # 97.5% envelope from two independent seed sets, 32 x 32 coarse grid, n = 2048
    n = 2048
    rate = math.sqrt(n)
    pipe = PipelineConfig().build(rate)
    truth = NullProcess(n)
    spec = BandSpec(np.linspace(0, n - 1, 32).round().astype(int), 511 - 16 * np.arange(32)[::-1], 0.05, 200)
    a = bootstrap_bands(None, truth, spec, pipe, n=n, rate_hz=rate, seed=100_000).coarse_upper
    b = bootstrap_bands(None, truth, spec, pipe, n=n, rate_hz=rate, seed=200_000).coarse_upper
    rel = np.abs(a - b) / np.maximum(a, b)
    # a 97.5% percentile from 200 draws has ~8% relative standard error per node
    assert np.median(rel) <= 0.15
    assert np.mean(rel <= 0.15) >= 0.7


def test_threshold_grid_consistency(pipe, model):
    def spec(k):
        return BandSpec(np.linspace(0, N - 1, k).round().astype(int), np.linspace(0, 127, k).round().astype(int),
                        0.05, 100)

    t1 = noise_threshold(model, spec(16), pipe, N, RATE, seed=9)
    t2 = noise_threshold(model, spec(64), pipe, N, RATE, seed=9)
    m = pipe.window.m
    inner = (slice(m, N - m), slice(4, 124))
    rel = np.abs(t1[inner] - t2[inner]) / t2[inner]
    assert np.median(rel) <= 0.2
    assert np.mean(rel <= 0.2) >= 0.7


def test_signal_length_checked(pipe, model):
    spec = default_spec(N, 128, time_step=64, n_freqs=8, n_boot=40)
    with pytest.raises(DimMismatch):
        replicate_abs_sst(pipe, model, spec, N, RATE, signal=np.zeros(10))
