import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetnet.equivalence import (
    a_corrected_density,
    default_beta_prime,
    exponential_replacement_density,
    free_space_network,
    homogeneous_density,
    isotropic_lambda_integral,
    isotropic_representation,
    jensen_compare,
    radial_table,
    variability_order_check,
)
from hetnet.intensity import build_intensity
from hetnet.model import Constant, Discrete, Exponential, LogNormal, NetworkModel, TierSpec
from hetnet.moments import moment_closed

from conftest import simple_tier


def test_free_space_is_homogeneous():
    iso = free_space_network()
    assert iso.is_homogeneous
    assert np.allclose(iso.phi(np.array([0.1, 1.0, 10.0])), 1.0)


def test_self_representation_is_homogeneous():
    model = NetworkModel((simple_tier(1.0, 4.0),))
    iso = isotropic_representation(model, 4.0)
    assert iso.is_homogeneous
    assert iso.phi(3.0) == pytest.approx(1.0)


def test_free_space_reference_for_beta4():
    # single tier, exponent 4, reference exponent 2: density falls off as 1/r,
    # with the constant (beta'/beta) * lambda = 1/2 fixed by matching Lambda
    iso = isotropic_representation(NetworkModel((simple_tier(1.0, 4.0),)), 2.0)
    r = np.array([0.01, 0.5, 1.0, 20.0])
    assert np.allclose(iso.phi(r) * r, 0.5, rtol=1e-14)
    s = 9.0
    assert 2 * math.pi * 0.5 * math.sqrt(s) == pytest.approx(math.pi * s**0.5)
    assert isotropic_lambda_integral(iso, s) == pytest.approx(math.pi * 3.0, rel=1e-12)


def test_two_tier_density_formula(two_tier_shadowed):
    bp = 3.307
    iso = isotropic_representation(two_tier_shadowed, bp)
    r = 1.7
    expected = 0.0
    for tier in two_tier_shadowed.tiers:
        b = tier.beta.value
        c = tier.lam * moment_closed(tier.shadowing, 2 / b) * tier.A.value ** (-2 / b)
        expected += bp / b * c * r ** (2 * (bp / b - 1))
    assert iso.phi(r) == pytest.approx(expected, rel=1e-14)


def test_default_beta_prime_is_mean(two_tier):
    b = [t.beta.value for t in two_tier.tiers]
    assert default_beta_prime(two_tier) == pytest.approx(sum(b) / 2)


@pytest.mark.parametrize("bp", [2.0, 3.307, 4.0])
@pytest.mark.parametrize("t", [1.0, 2.0, math.inf])
def test_closed_form_identity(two_tier_shadowed, bp, t):
    iso = isotropic_representation(two_tier_shadowed, bp)
    a, b = build_intensity(two_tier_shadowed), iso.intensity()
    for s in np.logspace(-3, 16, 12):
        assert b(s, t) == pytest.approx(a(s, t), rel=1e-13)


@pytest.mark.parametrize("bp", [2.0, 3.307, 4.0])
def test_quadrature_identity(two_tier_shadowed, bp):
    iso = isotropic_representation(two_tier_shadowed, bp)
    im = build_intensity(two_tier_shadowed)
    for s in (1e-3, 1.0, 1e6, 1e14):
        for t in (1.0, 2.0, math.inf):
            assert isotropic_lambda_integral(iso, s, t) == pytest.approx(im(s, t), rel=1e-11)


@settings(max_examples=25, deadline=None)
@given(b1=st.floats(2.1, 6.0), b2=st.floats(2.1, 6.0), bp=st.floats(0.5, 8.0), log_s=st.floats(-3, 6))
def test_identity_property(b1, b2, bp, log_s):
    model = NetworkModel((simple_tier(1.0, b1, 1.0), simple_tier(2.0, b2, 2.0)))
    iso = isotropic_representation(model, bp)
    s = 10.0**log_s
    im = build_intensity(model)
    for t in (1.0, math.inf):
        assert isotropic_lambda_integral(iso, s, t) == pytest.approx(im(s, t), rel=1e-10)


def test_weights_sum_to_one_and_trend(two_tier):
    iso = isotropic_representation(two_tier, 3.307)
    r = np.logspace(-3, 2, 30)
    w = iso.weights(r)
    assert np.array_equal(w.sum(axis=0), np.ones_like(r)) or np.allclose(w.sum(axis=0), 1.0, atol=2e-16)
    # tier 1 has the larger exponent, so its density term decays faster in r
    assert np.all(np.diff(w[0]) < 0)


def test_equal_betas_give_constant_weights():
    model = NetworkModel((simple_tier(1.0, 3.5, 1.0), simple_tier(3.0, 3.5, 2.0)))
    iso = isotropic_representation(model, 3.0)
    w = iso.weights(np.array([0.1, 1.0, 10.0]))
    assert np.allclose(w[0], 0.25) and np.allclose(w[1], 0.75)


def test_radial_mass_matches_lambda(two_tier):
    iso = isotropic_representation(two_tier, 3.307)
    R = 4.0
    assert iso.radial_mass(R) == pytest.approx(build_intensity(two_tier)(R**3.307), rel=1e-13)


def test_homogeneous_density():
    model = NetworkModel((
        TierSpec(1.0, shadowing=LogNormal.mean_one(5.0), beta=Constant(4.0)),
        TierSpec(2.0, A=Constant(16.0), beta=Constant(4.0)),
    ))
    expected = moment_closed(LogNormal.mean_one(5.0), 0.5) + 2.0 * 16 ** -0.5
    assert homogeneous_density(model) == pytest.approx(expected, rel=1e-14)


def test_homogeneous_density_requires_common_beta(two_tier):
    with pytest.raises(ValueError, match="different"):
        homogeneous_density(two_tier)


def test_exponential_replacement():
    model = NetworkModel((TierSpec(1.0, shadowing=Exponential(1.0), beta=Constant(4.0)),))
    # Rayleigh-faded network replaced by itself: density is the original lambda
    assert exponential_replacement_density(model) == pytest.approx(1.0, rel=1e-14)


@pytest.mark.parametrize("beta", [2.5, 3.307, 4.0])
def test_jensen(beta):
    rnd, mean = jensen_compare(LogNormal.mean_one(5.0), beta, 2.0)
    assert rnd < mean == pytest.approx(2.0)


def test_jensen_equality_for_constant():
    rnd, mean = jensen_compare(Constant(3.0), 4.0)
    assert rnd == pytest.approx(mean)


def test_variability_order():
    v = variability_order_check(LogNormal.mean_one(3.0), LogNormal.mean_one(8.0), 4.0)
    assert v.sparser == 2 and v.moment_2 < v.moment_1
    assert variability_order_check(Constant(1.0), Constant(1.0), 4.0).label == "tie"
    with pytest.raises(ValueError, match="means"):
        variability_order_check(Constant(1.0), Constant(2.0), 4.0)


def test_a_correction_with_constant_A(two_tier):
    iso = isotropic_representation(two_tier, 3.307)
    corr = a_corrected_density(iso)
    # with S_tilde = 1/A, the corrected coefficients are (beta'/beta) * lambda
    for coef, tier in zip(corr.coefs, two_tier.tiers):
        assert coef == pytest.approx(3.307 / tier.beta.value * tier.lam, rel=1e-14)


def test_a_correction_single_tier_is_lambda(single_tier):
    b = single_tier.tiers[0].beta.value
    iso = isotropic_representation(single_tier, b)
    assert a_corrected_density(iso)(np.array([0.01, 5.0])) == pytest.approx([4.0, 4.0], rel=1e-14)


def test_a_correction_with_discrete_A():
    tier = TierSpec(1.0, A=Discrete(((1.0, 0.5), (16.0, 0.5))), beta=Constant(4.0))
    iso = isotropic_representation(NetworkModel((tier,)), 4.0)
    term = iso.terms[0]
    assert term.a_factor == pytest.approx(0.5 * 1 + 0.5 * 4)
    assert term.d * term.a_factor == pytest.approx((0.5 + 0.5 / 4) * 2.5)


def test_radial_table(two_tier):
    iso = isotropic_representation(two_tier, 3.307)
    header, rows = radial_table(iso, [0.5, 1.0])
    assert header == ["r", "phi", "phi_corrected", "p_1", "p_2"]
    assert rows[1][0] == 1.0 and rows[1][3] + rows[1][4] == pytest.approx(1.0)
    header, rows = radial_table(iso, [0.5], corrected=False)
    assert header == ["r", "phi", "p_1", "p_2"]


def test_bad_beta_prime(two_tier):
    with pytest.raises(ValueError):
        isotropic_representation(two_tier, 0.0)
