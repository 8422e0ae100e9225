import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetnet import specfun

scipy_special = pytest.importorskip("scipy.special")
scipy_stats = pytest.importorskip("scipy.stats")


@given(st.floats(min_value=1e-3, max_value=150.0))
def test_gamma_matches_scipy(x):
    assert specfun.gamma(x) == pytest.approx(scipy_special.gamma(x), rel=1e-12)


@pytest.mark.parametrize("x", [1e-8, 0.1, 0.49, 0.5, 1.0, 2.0, 10.5])
def test_gamma_small(x):
    assert specfun.gamma(x) == pytest.approx(scipy_special.gamma(x), rel=1e-13)


@pytest.mark.parametrize("x", [0.0, -1.5, math.nan])
def test_gamma_domain(x):
    with pytest.raises(ValueError):
        specfun.gamma(x)


@pytest.mark.parametrize("n", range(1, 20))
def test_gamma_integers_are_factorials(n):
    assert specfun.gamma(n) == pytest.approx(math.factorial(n - 1), rel=1e-14)


@given(st.floats(min_value=1e-3, max_value=1e4))
def test_lgamma(x):
    assert specfun.lgamma(x) == pytest.approx(scipy_special.gammaln(x), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("x", [0.0, 1e-3, 0.5, 3.0, 14.9, 15.0, 15.1, 40.0, 300.0])
def test_bessel_i0e(x):
    assert specfun.bessel_i0e(x) == pytest.approx(scipy_special.i0e(x), rel=1e-13)


@pytest.mark.parametrize("x", [0.0, 2.0, 14.0, 30.0])
def test_bessel_i0(x):
    assert specfun.bessel_i0(x) == pytest.approx(scipy_special.i0(x), rel=1e-13)


@pytest.mark.parametrize("a", [-1.5, -0.5, -0.3025, 0.7, 2.0])
@pytest.mark.parametrize("z", [-90.0, -12.5, -1.0, 0.3, 8.0, 40.0])
def test_hyp1f1(a, z):
    assert specfun.hyp1f1(a, 1.0, z) == pytest.approx(scipy_special.hyp1f1(a, 1.0, z), rel=1e-11)


def test_hyp1f1_terminating_polynomial():
    # M(-2, 1, z) = 1 - 2z + z^2/2
    for z in (-3.0, 0.5, 7.0):
        assert specfun.hyp1f1(-2.0, 1.0, z) == pytest.approx(1 - 2 * z + z * z / 2, rel=1e-14)


def test_hyp1f1_domain():
    with pytest.raises(ValueError):
        specfun.hyp1f1(-0.5, 1.0, -500.0)
    with pytest.raises(ValueError):
        specfun.hyp1f1(0.5, -2.0, 1.0)


@pytest.mark.parametrize("a", [0.5, 1.0, 5.0, 30.0])
@pytest.mark.parametrize("x", [0.0, 0.1, 1.0, 10.0, 60.0])
def test_gammainc_upper(a, x):
    assert specfun.gammainc_upper(a, x) == pytest.approx(scipy_special.gammaincc(a, x), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("dof", [1, 2, 5, 20, 100])
@pytest.mark.parametrize("stat", [0.0, 0.5, 3.0, 25.0, 150.0])
def test_chi2_sf(dof, stat):
    assert specfun.chi2_sf(stat, dof) == pytest.approx(scipy_stats.chi2.sf(stat, dof), rel=1e-11, abs=1e-300)


@pytest.mark.parametrize("lam", [0.05, 0.3, 0.8, 1.0, 1.17, 1.19, 1.36, 2.0, 4.0])
def test_kolmogorov_sf(lam):
    assert specfun.kolmogorov_sf(lam) == pytest.approx(scipy_special.kolmogorov(lam), rel=1e-12, abs=1e-300)


def test_kolmogorov_sf_limits():
    assert specfun.kolmogorov_sf(0.0) == 1.0
    assert specfun.kolmogorov_sf(100.0) == 0.0


def test_norm_cdf():
    for x in (-8.0, -1.0, 0.0, 2.5):
        assert specfun.norm_cdf(x) == pytest.approx(scipy_special.ndtr(x), rel=1e-14)


class TestQuad:
    def test_polynomial(self):
        assert specfun.quad(lambda x: x**3, 0.0, 2.0) == pytest.approx(4.0, rel=1e-14)

    def test_vectorized_matches_scalar(self):
        f = lambda x: np.exp(-x) * np.sin(x)
        a = specfun.quad(f, 0.0, 10.0, vectorized=True)
        b = specfun.quad(lambda x: math.exp(-x) * math.sin(x), 0.0, 10.0)
        assert a == pytest.approx(b, rel=1e-13)

    def test_semi_infinite(self):
        val = specfun.quad(lambda x: np.exp(-x * x), 0.0, math.inf, 1e-14, vectorized=True)
        assert val == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-13)

    def test_endpoint_singularity(self):
        val = specfun.quad(lambda x: np.power(x, -0.5), 0.0, 1.0, 1e-12, vectorized=True)
        assert val == pytest.approx(2.0, rel=1e-9)

    def test_reversed_and_empty(self):
        assert specfun.quad(lambda x: x, 1.0, 1.0) == 0.0
        assert specfun.quad(lambda x: x, 1.0, 0.0) == pytest.approx(-0.5)

    def test_failure_raises(self):
        with pytest.raises(specfun.QuadratureError):
            specfun.quad(lambda x: np.sin(1.0 / x) / x, 0.0, 1.0, 1e-14, vectorized=True, max_intervals=20)

    @settings(max_examples=30)
    @given(st.floats(min_value=-3.0, max_value=3.0), st.floats(min_value=0.1, max_value=5.0))
    def test_additivity(self, a, w):
        f = lambda x: np.cos(x) + x * x
        b, c = a + w, a + 2 * w
        whole = specfun.quad(f, a, c, 1e-13, vectorized=True)
        parts = specfun.quad(f, a, b, 1e-13, vectorized=True) + specfun.quad(f, b, c, 1e-13, vectorized=True)
        assert whole == pytest.approx(parts, rel=1e-12, abs=1e-12)
