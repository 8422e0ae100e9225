import math

import numpy as np
import pytest

from hetnet import specfun
from hetnet.equivalence import free_space_network, isotropic_representation
from hetnet.intensity import build_intensity
from hetnet.model import Constant, Discrete, LogNormal, NetworkModel, TierSpec, Weibull
from hetnet.simulate import (
    InfeasiblePlan,
    SimPlan,
    missed_mass,
    pool,
    replicate,
    run_plan,
    sample_direct,
    sample_isotropic,
    sample_original,
    splitmix64,
    stream,
    thread_count,
    truncation_radius,
)

from conftest import simple_tier

SEED = 20240611


def test_splitmix64_reference_value():
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_streams_are_keyed():
    a = stream(1, 2, "count").uniforms(5)
    assert np.array_equal(a, stream(1, 2, "count").uniforms(5))
    assert not np.array_equal(a, stream(1, 3, "count").uniforms(5))
    assert not np.array_equal(a, stream(1, 2, "mark").uniforms(5))
    assert not np.array_equal(a, stream(2, 2, "count").uniforms(5))


@pytest.mark.parametrize("kw", [{"s_max": 0.0}, {"s_max": 1.0, "epsilon": 0.0},
                                {"s_max": 1.0, "replications": 0}, {"s_max": 1.0, "mode": "grid"}])
def test_plan_validation(kw):
    with pytest.raises(ValueError):
        SimPlan(**kw)


def test_free_space_count_mean():
    iso = free_space_network()
    plan = SimPlan(100.0, master_seed=SEED, replications=1000, mode="spatial-isotropic")
    counts = np.array([len(s) for s in replicate(sample_isotropic, iso, plan)])
    assert abs(counts.mean() - 100 * math.pi) < 3 * math.sqrt(100 * math.pi / 1000)


def test_free_space_direct_mean_and_variance():
    im = free_space_network().intensity()
    plan = SimPlan(10.0, master_seed=SEED, replications=1000)
    counts = np.array([len(s) for s in replicate(sample_direct, im, plan)])
    lam = 10 * math.pi
    assert abs(counts.mean() - lam) < 3 * math.sqrt(lam / 1000)
    # sd of the sample variance of Poisson(lam) is about lam * sqrt(2/n)
    assert abs(counts.var(ddof=1) - lam) < 4 * lam * math.sqrt(2 / 1000)


def test_free_space_points_uniform_in_s():
    im = free_space_network().intensity()
    plan = SimPlan(1.0, master_seed=SEED, replications=2000)
    y = pool(replicate(sample_direct, im, plan)).y
    from hetnet.kernels import ks_uniform_stat

    d = ks_uniform_stat(np.sort(y))
    assert specfun.kolmogorov_sf(math.sqrt(len(y)) * d) > 0.001


def test_beta4_loss_distribution(unit_beta4):
    # Y has CDF sqrt(s / s_max) on (0, s_max]
    plan = SimPlan(50.0, master_seed=SEED, replications=400, mode="spatial-original")
    y = pool(replicate(sample_original, unit_beta4, plan)).y
    from hetnet.kernels import ks_uniform_stat

    d = ks_uniform_stat(np.sqrt(y / 50.0))
    assert specfun.kolmogorov_sf(math.sqrt(len(y)) * d) > 0.001


@pytest.mark.parametrize("mode", ["spatial-original", "spatial-isotropic", "direct-propagation"])
def test_sample_invariants(two_tier_shadowed, mode):
    plan = SimPlan(4.866e14, master_seed=SEED, replications=20, mode=mode)
    for s in run_plan(plan, two_tier_shadowed, 3.307):
        assert np.all(s.y > 0) and np.all(s.y <= plan.s_max)
        assert np.all(np.diff(s.y) >= 0)
        assert set(np.unique(s.t)) <= {1.0, 2.0}
        assert np.array_equal(s.t, s.tier + 1.0)


def test_direct_sampler_has_no_s_tilde(two_tier):
    s = sample_direct(build_intensity(two_tier), SimPlan(1e14, master_seed=1), 0)
    assert s.s_tilde is None
    assert s.points[0][1].s_tilde is None if len(s) else True


def test_original_sampler_records_marks(two_tier_shadowed):
    s = sample_original(two_tier_shadowed, SimPlan(4.866e14, master_seed=2), 0)
    assert s.s_tilde is not None
    betas = {t.beta.value for t in two_tier_shadowed.tiers}
    assert set(np.unique(s.beta)) <= betas
    # the loss definition holds pointwise: y = r**beta / s_tilde with r inside the disk
    r = (s.y * s.s_tilde) ** (1.0 / s.beta)
    assert np.all(r <= s.meta["radius"] * (1 + 1e-12))


class TestTruncation:
    def test_deterministic_marks_exact_radius(self, unit_beta4):
        radius, missed = truncation_radius(unit_beta4, 16.0, 1e-3)
        assert radius == pytest.approx(2.0) and missed == 0.0

    def test_meets_target(self, two_tier_shadowed):
        radius, missed = truncation_radius(two_tier_shadowed, 4.866e14, 1e-3)
        assert missed <= 1e-3
        assert missed_mass(two_tier_shadowed, 4.866e14, radius * 0.99) > 1e-3

    def test_missed_mass_decreasing(self, two_tier_shadowed):
        vals = [missed_mass(two_tier_shadowed, 4.866e14, r) for r in (1.0, 3.0, 6.0, 10.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert missed_mass(two_tier_shadowed, 4.866e14, 0.0) == pytest.approx(
            build_intensity(two_tier_shadowed)(4.866e14), rel=1e-12
        )

    def test_lognormal_missed_mass_by_quadrature(self):
        shadow = LogNormal.mean_one(8.0)
        model = NetworkModel((TierSpec(2.0, shadowing=shadow, A=Constant(3.0), beta=Constant(3.5)),))
        s_max, R, q = 40.0, 2.0, 2 / 3.5

        def integrand(x):
            return np.maximum((s_max * x / 3.0) ** q - R * R, 0.0) * shadow.pdf(x)

        ref = 2.0 * math.pi * specfun.quad(integrand, 0.0, math.inf, 1e-300, rtol=1e-12, vectorized=True)
        assert missed_mass(model, s_max, R) == pytest.approx(ref, rel=1e-8)

    def test_continuous_factor_missed_mass(self):
        model = NetworkModel((TierSpec(1.0, power=Weibull(2.0, 1.0), shadowing=LogNormal(0.0, 0.5), beta=Constant(4.0)),))
        # Monte Carlo estimate of lam * pi * E[(s S)^(1/2) - R^2]^+
        rng = stream(3, 0, "mark")
        n = 10**6
        st_ = Weibull(2.0, 1.0).sample(rng, n) * LogNormal(0.0, 0.5).sample(rng, n)
        v = np.maximum(np.sqrt(100.0 * st_) - 9.0, 0.0) * math.pi
        assert abs(missed_mass(model, 100.0, 3.0) - v.mean()) < 5 * v.std() / math.sqrt(n)

    def test_infeasible(self):
        heavy = NetworkModel((TierSpec(1.0, shadowing=Weibull(0.1, 1.0), beta=Constant(4.0)),))
        with pytest.raises(InfeasiblePlan) as err:
            truncation_radius(heavy, 1e4, 1e-12)
        assert err.value.achievable > 1e-12


def test_thread_count_does_not_change_output(two_tier_shadowed):
    plan = SimPlan(4.866e14, master_seed=SEED, replications=12, mode="spatial-original")
    one = replicate(sample_original, two_tier_shadowed, plan, threads=1)
    four = replicate(sample_original, two_tier_shadowed, plan, threads=4)
    for a, b in zip(one, four):
        assert np.array_equal(a.y, b.y) and np.array_equal(a.t, b.t)


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("HETNET_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("HETNET_THREADS", "0")
    assert thread_count() >= 1
    monkeypatch.setenv("HETNET_THREADS", "-1")
    with pytest.raises(ValueError):
        thread_count()


def test_joint_atom_sampling():
    from hetnet.model import JointAtom

    atoms = (JointAtom(1, 1, 1, 3, 1.0, 0.5), JointAtom(4, 1, 1, 4, 2.0, 0.5))
    model = NetworkModel((TierSpec(3.0, joint_atoms=atoms),))
    plan = SimPlan(5.0, master_seed=SEED, replications=500, mode="spatial-original")
    samples = replicate(sample_original, model, plan)
    s = pool(samples)
    # beta and threshold move together in this tier
    assert np.array_equal(s.t == 1.0, s.beta == 3.0)
    im = build_intensity(model)
    assert abs(len(s) / 500 - im(5.0)) < 4 * math.sqrt(im(5.0) / 500)
    assert abs(np.sum(s.t == 1.0) / 500 - im(5.0, 1.0)) < 4 * math.sqrt(im(5.0, 1.0) / 500)


def test_pool():
    im = free_space_network().intensity()
    samples = replicate(sample_direct, im, SimPlan(3.0, master_seed=1, replications=3))
    p = pool(samples)
    assert len(p) == sum(len(s) for s in samples)
    assert np.all(np.diff(p.y) >= 0)
    with pytest.raises(ValueError):
        pool([])
