import numpy as np
import pytest
from hypothesis import given, strategies as st

from sstboot.core import (
    AxisMismatch,
    EmptySeries,
    FreqGrid,
    InvalidGridParams,
    NonFiniteSample,
    NonPositiveRate,
    Tfr,
    TfrKind,
    TimeSeries,
    uniform_grid,
    validate_series,
)


def test_series_basic_properties():
    ts = TimeSeries([1.0, 2.0, 3.0], 4.0, 0.5)
    assert ts.n == len(ts) == 3
    np.testing.assert_allclose(ts.times, [0.5, 0.75, 1.0])
    assert ts.nyquist_hz == 2.0
    assert not ts.samples.flags.writeable


def test_validate_series_rejects_bad_input():
    with pytest.raises(EmptySeries):
        validate_series(TimeSeries([], 1.0))
    with pytest.raises(NonPositiveRate):
        validate_series(TimeSeries([1.0], 0.0))
    with pytest.raises(NonFiniteSample) as err:
        validate_series(TimeSeries([0.0, 1.0, np.nan, np.inf], 1.0))
    assert err.value.index == 2


def test_validate_series_accepts_good_series():
    assert validate_series(TimeSeries(np.ones(4), 2.0)) is None


@given(st.integers(1, 500), st.floats(0.1, 1e4), st.floats(-100, 100))
def test_times_are_affine_in_index(n, rate, start):
    ts = TimeSeries(np.zeros(n), rate, start)
    np.testing.assert_allclose(ts.times, start + np.arange(n) / rate, rtol=1e-12, atol=1e-12)


def test_uniform_grid_nodes():
    g = uniform_grid(10.0, 4)
    np.testing.assert_allclose(g.freqs_hz, [2.5, 5.0, 7.5, 10.0])
    assert g.bin_width_hz == 2.5
    assert g.spacing_hz == pytest.approx(2.5)
    sub = g.subset([1, 3])
    np.testing.assert_allclose(sub.freqs_hz, [5.0, 10.0])
    assert sub.bin_width_hz == 2.5


def test_grid_validation():
    with pytest.raises(InvalidGridParams):
        uniform_grid(-1.0, 4)
    with pytest.raises(InvalidGridParams):
        uniform_grid(1.0, 0)
    with pytest.raises(InvalidGridParams):
        FreqGrid(np.array([1.0, 1.0]), 2.0, 1.0)


def test_tfr_checks_shapes():
    g = uniform_grid(1.0, 3)
    t = np.arange(2.0)
    tf = Tfr(np.zeros((2, 3), complex), t, g, TfrKind.STFT)
    assert tf.shape == (2, 3)
    with pytest.raises(AxisMismatch):
        Tfr(np.zeros((3, 3), complex), t, g, TfrKind.STFT)
    thr = tf.replace(np.ones((2, 3)), TfrKind.THRESHOLDED)
    assert thr.kind is TfrKind.THRESHOLDED and thr.same_axes(tf)
