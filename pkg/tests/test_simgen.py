import math

import numpy as np
import pytest

from sstboot.core import SstBootError
from sstboot.pipeline import PipelineConfig
from sstboot.simgen import NullProcess, gaussianity_check, gen_ahm, gen_null, modulation, phi1, phi2


def test_coefficient_functions():
    assert phi1(0.0) == pytest.approx(-0.5)
    assert phi1(0.5) == pytest.approx(-0.2)
    assert phi2(0.0) == pytest.approx(0.3 * math.sqrt(0.1))
    assert phi2(1.0) == pytest.approx(0.3 * math.sqrt(0.35))
    assert modulation(0.5) == pytest.approx(0.5)


def test_null_frozen_values_and_axis():
    ts = gen_null(64, 0)
    np.testing.assert_allclose(
        ts.samples[:4],
        [0.18829261895002505, -0.19688811598419687, 1.0618804133956945, -0.3793585069044857],
        rtol=1e-13,
    )
    assert ts.rate_hz == 8.0 and ts.times[0] == pytest.approx(1 / 8)


def test_null_recursion_by_hand():
    n = 64
    eta = np.random.default_rng(3).standard_normal(n)
    eps = np.zeros(n)
    for i in range(n):
        u = (i + 1) / n
        eps[i] = eta[i] if i < 2 else phi1(u) * eps[i - 1] + phi2(u) * eps[i - 2] + eta[i]
    expect = (1 + 0.5 * np.cos(2 * np.pi * np.arange(1, n + 1) / n)) * eps
    np.testing.assert_allclose(gen_null(n, 3).samples, expect, rtol=1e-13)


def test_null_determinism_and_precondition():
    np.testing.assert_array_equal(gen_null(128, 9).samples, gen_null(128, 9).samples)
    assert not np.array_equal(gen_null(128, 9).samples, gen_null(128, 10).samples)
    with pytest.raises(SstBootError):
        gen_null(32, 0)


def test_null_lag1_autocovariance_against_monte_carlo():
    n = 2048
    i = n // 2
    vals = np.array([(x := NullProcess(n).sample(s))[i] * x[i - 1] for s in range(3000)])
    # reference from the stationary tvAR(2) at u = 1/2 with modulation 1 + 0.5 cos(pi)
    a1, a2 = float(phi1(0.5)), float(phi2(0.5))
    rho1 = a1 / (1 - a2)
    var = (1 - a2) / ((1 + a2) * ((1 - a2) ** 2 - a1**2))
    ref = 0.25 * var * rho1
    se = vals.std() / math.sqrt(vals.size)
    assert abs(vals.mean() - ref) <= 3 * se + 0.01


def test_ahm_invariants():
    n = 2048
    tr = gen_ahm(n, 4)
    rq = math.sqrt(n)
    assert np.all((tr.am >= 2) & (tr.am <= 4))
    assert tr.inst_freq.min() >= 4 - 1.2
    assert tr.inst_freq.max() <= 4 + 0.5 * n / (17 * rq) + 1.2
    assert np.all(np.diff(tr.phase) > 0)
    np.testing.assert_allclose(np.diff(tr.phase) * rq, tr.inst_freq[1:], rtol=1e-12)
    np.testing.assert_allclose(tr.f.samples, tr.am * np.cos(2 * np.pi * tr.phase), atol=1e-12)
    np.testing.assert_allclose(tr.analytic.real, tr.f.samples, atol=1e-12)
    slow = tr.slow_variation()
    assert slow["eps_am"] < 0.1 and slow["eps_if"] < 0.1 and slow["min_if"] > 0


def test_ahm_frozen_and_kernels():
    tr = gen_ahm(1024, 0)
    assert tr.am[0] == pytest.approx(2.8421282460641404, rel=1e-12)
    assert tr.inst_freq[0] == pytest.approx(3.6836097901408915, rel=1e-12)
    assert tr.phase[-1] == pytest.approx(118.49838594099946, rel=1e-12)
    hann = gen_ahm(1024, 0, kernel="hann")
    assert not np.array_equal(hann.am, tr.am)
    with pytest.raises(SstBootError):
        gen_ahm(1024, 0, kernel="box")
    with pytest.raises(SstBootError):
        gen_ahm(512, 0)


@pytest.fixture(scope="module")
def small_pipe():
    return PipelineConfig(d=64).build(math.sqrt(1024))


def test_gaussian_noise_passes_normality(small_pipe):
    n = 1024

    def white(seed):
        return np.random.default_rng(seed).standard_normal(n)

    rep = gaussianity_check(white, small_pipe.window, small_pipe.grid, n_mc=300, seed=1)
    assert rep.n_tests == 50
    assert rep.pass_fraction >= 0.95


def test_skewed_noise_mostly_passes(small_pipe):
    n = 1024

    def expo(seed):
        return np.random.default_rng(seed).exponential(size=n) - 1.0

    rep = gaussianity_check(expo, small_pipe.window, small_pipe.grid, n_mc=300, seed=2)
    assert rep.pass_fraction >= 0.9


def test_gaussianity_preconditions(small_pipe):
    with pytest.raises(SstBootError):
        gaussianity_check(lambda s: np.zeros(1024), small_pipe.window, small_pipe.grid, n_mc=100)
    with pytest.raises(SstBootError):
        gaussianity_check(lambda s: np.zeros(1024), small_pipe.window, small_pipe.grid, n_mc=200,
                          probe_rows=[400], probe_freqs=[3.0, 4.0])
