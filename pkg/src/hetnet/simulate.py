"""Monte Carlo samplers for the typical-user propagation process.

Three independent routes produce the same law:

* ``spatial-original``: drop Poisson stations on a disk of radius R, draw
  their marks and map each to ``Y = A |X|**beta / (P S)``;
* ``spatial-isotropic``: drop stations with the radial density of an
  :class:`~hetnet.equivalence.IsotropicModel` and map ``Y = |X|**beta'``;
* ``direct-propagation``: invert ``Lambda`` on the half-line.

Randomness comes from counter-based Philox streams keyed by
``(master_seed, replication, purpose)`` through splitmix64 mixing, so a
replication's output never depends on scheduling or thread count. Purposes
and their draw order:

* ``count``: one Poisson count per tier (spatial-original) or one count;
* ``position``: radii, tier by tier;
* ``mark``: per tier P, S, A, beta, T in that order (or one uniform per
  station for joint atoms); for the other samplers, one uniform per point
  selecting its term, then term marks term by term.
"""

from __future__ import annotations

import functools
import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels, specfun
from .equivalence import IsotropicModel
from .intensity import IntensityMeasure, build_intensity
from .model import (
    LogNormal,
    NetworkModel,
    PropagationSample,
)

__all__ = [
    "SimPlan",
    "Stream",
    "InfeasiblePlan",
    "stream",
    "splitmix64",
    "truncation_radius",
    "missed_mass",
    "sample_original",
    "sample_isotropic",
    "sample_direct",
    "replicate",
    "pool",
    "thread_count",
    "MODES",
]

MODES = ("spatial-original", "spatial-isotropic", "direct-propagation")
_MASK = (1 << 64) - 1
_TAGS = {"count": 0x636F756E74, "position": 0x706F736974696F6E, "mark": 0x6D61726B}


class InfeasiblePlan(RuntimeError):
    """No truncation radius up to the cap meets the missed-mass target."""

    def __init__(self, message: str, achievable: float):
        super().__init__(message)
        self.achievable = achievable


@dataclass(frozen=True)
class SimPlan:
    s_max: float
    epsilon: float = 1e-3
    master_seed: int = 0
    replications: int = 1
    mode: str = "direct-propagation"
    r_cap: float = 1e4

    def __post_init__(self):
        if not (self.s_max > 0 and math.isfinite(self.s_max)):
            raise ValueError("s_max must be positive and finite")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


class Stream:
    """Keyed random stream; thin wrapper over a Philox generator."""

    def __init__(self, key: tuple[int, int]):
        self.key = key
        self._gen = np.random.Generator(np.random.Philox(key=np.array(key, dtype=np.uint64)))

    def uniforms(self, n: int) -> np.ndarray:
        return self._gen.random(n)

    def normals(self, n: int) -> np.ndarray:
        # Box-Muller on two uniforms per normal: fixed draw count
        u = self._gen.random(2 * n)
        return kernels.box_muller(u[:n], u[n:])

    def gammas(self, shape: float, n: int) -> np.ndarray:
        return self._gen.standard_gamma(shape, n)

    def poisson(self, mean: float) -> int:
        return int(self._gen.poisson(mean))


def stream(master_seed: int, rep: int, tag: str) -> Stream:
    """Stream for one (seed, replication, purpose) triple."""
    k = splitmix64(int(master_seed) & _MASK)
    k = splitmix64(k ^ (int(rep) & _MASK))
    return Stream((k, splitmix64(k ^ _TAGS[tag])))


# ---------------------------------------------------------------- truncation


def _tail_expectation(scale, lognormal, conts, c) -> float:
    """``E[(scale * L * prod_i Z_i**p_i - c)^+]`` for a log-normal L, continuous Z_i."""
    if not conts:
        if lognormal is None:
            return max(scale - c, 0.0)
        mu, var = lognormal
        m = math.log(scale) + mu
        if var == 0.0:
            return max(math.exp(m) - c, 0.0)
        mean = math.exp(m + 0.5 * var)
        if c <= 0.0:
            return mean
        sd = math.sqrt(var)
        lc = math.log(c)
        return mean * specfun.norm_cdf((m + var - lc) / sd) - c * specfun.norm_cdf((m - lc) / sd)
    (dist, p), rest = conts[0], conts[1:]
    if not rest and lognormal is None:
        lo = (c / scale) ** (1.0 / p) if c > 0 else 0.0

        def active(z):
            with np.errstate(over="ignore", invalid="ignore"):
                val = np.maximum(scale * z**p - c, 0.0) * dist.pdf(z)
            return np.where(np.isfinite(val), val, 0.0)

        # heavy tails can hold their mass many decades above lo, so integrate in log z
        def log_tail(w):
            with np.errstate(over="ignore", invalid="ignore"):
                z = np.exp(w)
                return np.nan_to_num(active(z) * z, nan=0.0, posinf=0.0)

        if lo > 0.0:
            return specfun.quad(log_tail, math.log(lo), math.inf, 1e-300, rtol=1e-10, vectorized=True)
        return specfun.quad(active, 0.0, 1.0, 1e-300, rtol=1e-10, vectorized=True) + specfun.quad(
            log_tail, 0.0, math.inf, 1e-300, rtol=1e-10, vectorized=True
        )

    def nested(z):
        return dist.pdf(np.array([z]))[0] * _tail_expectation(scale * z**p, lognormal, rest, c)

    return specfun.quad(nested, 0.0, math.inf, 1e-300, rtol=1e-9)


def _tier_pieces(tier, q, s_max):
    """Decompose ``(s_max * S_tilde)**q`` into atoms x log-normal x continuous factors."""
    atoms = [(s_max**q, 1.0)]
    mu = var = 0.0
    has_lognormal = False
    conts = []
    for dist, power in ((tier.power, q), (tier.shadowing, q), (tier.A, -q)):
        if dist.atomic:
            atoms = [(v * a**power, w * pa) for (v, w), (a, pa) in itertools.product(atoms, dist.support_atoms())]
        elif isinstance(dist, LogNormal):
            has_lognormal = True
            mu += power * dist.mu
            var += power * power * dist.sigma**2
        elif power > 0:
            conts.append((dist, power))
        else:
            raise ValueError(f"continuous {dist.kind} path-loss constant is not supported")
    return atoms, ((mu, var) if has_lognormal else None), conts


def _support_bound(model: NetworkModel, s_max: float) -> float | None:
    """Largest ``(s_max S_tilde)**(2/beta)`` if every mark is atomic, else None."""
    top = 0.0
    for tier in model.tiers:
        if tier.joint_atoms is not None:
            for a in tier.joint_atoms:
                if a.prob > 0:
                    top = max(top, (s_max * a.s_tilde) ** (2.0 / a.beta))
            continue
        for b, w in tier.beta_atoms():
            if w == 0:
                continue
            atoms, logn, conts = _tier_pieces(tier, 2.0 / b, s_max)
            if logn is not None or conts:
                return None
            top = max(top, max(v for v, p in atoms if p > 0))
    return top


def missed_mass(model: NetworkModel, s_max: float, radius: float) -> float:
    """Expected in-window propagation points from stations beyond ``radius``.

    ``sum_k lambda_k pi E[((s_max S_tilde_k)**(2/beta_k) - radius**2)^+]``.
    """
    c = radius * radius
    total = 0.0
    for tier in model.tiers:
        acc = 0.0
        if tier.joint_atoms is not None:
            for a in tier.joint_atoms:
                acc += a.prob * max((s_max * a.s_tilde) ** (2.0 / a.beta) - c, 0.0)
        else:
            for b, w in tier.beta_atoms():
                atoms, logn, conts = _tier_pieces(tier, 2.0 / b, s_max)
                for v, p in atoms:
                    if p > 0:
                        acc += w * p * _tail_expectation(v, logn, conts, c)
        total += tier.lam * math.pi * acc
    return total


@functools.lru_cache(maxsize=64)
def truncation_radius(
    model: NetworkModel, s_max: float, epsilon: float, r_cap: float = 1e4
) -> tuple[float, float]:
    """Smallest disk radius whose outside contributes at most ``epsilon`` points.

    Returns ``(radius, missed_mass_at_radius)``. Deterministic marks give the
    exact support radius with zero missed mass.

    Raises
    ------
    InfeasiblePlan
        When even ``r_cap`` leaves more than ``epsilon`` expected points.
    """
    bound = _support_bound(model, s_max)
    if bound is not None:
        return math.sqrt(bound), 0.0
    at_cap = missed_mass(model, s_max, r_cap)
    if at_cap > epsilon:
        raise InfeasiblePlan(
            f"missed mass {at_cap:.6g} at radius cap {r_cap:g} exceeds epsilon {epsilon:g}", at_cap
        )
    lo, hi = 0.0, r_cap
    # shrink the bracket geometrically first so bisection starts near the answer
    while hi > 1e-12 and missed_mass(model, s_max, hi / 2.0) <= epsilon:
        hi /= 2.0
    lo = hi / 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if missed_mass(model, s_max, mid) <= epsilon:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * hi:
            break
    return hi, missed_mass(model, s_max, hi)


# ------------------------------------------------------------------ samplers


def _draw_marks_by_term(terms, choice: np.ndarray, ms: Stream) -> np.ndarray:
    t = np.empty(len(choice))
    for j, term in enumerate(terms):
        sel = choice == j
        n = int(sel.sum())
        if n:
            t[sel] = term.mark.sample(ms, n)
    return t


def _choose_terms(weights: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Pick one term per column of ``weights`` (unnormalized) using uniforms ``u``."""
    cum = np.cumsum(weights, axis=0)
    target = u * cum[-1]
    return np.minimum((cum <= target).sum(axis=0), weights.shape[0] - 1)


def sample_original(model: NetworkModel, plan: SimPlan, rep: int) -> PropagationSample:
    """One replication of the original heterogeneous network, mapped to losses."""
    radius, missed = truncation_radius(model, plan.s_max, plan.epsilon, plan.r_cap)
    cs = stream(plan.master_seed, rep, "count")
    ps = stream(plan.master_seed, rep, "position")
    ms = stream(plan.master_seed, rep, "mark")
    cols = {k: [] for k in ("y", "t", "tier", "beta", "s_tilde")}
    for k, tier in enumerate(model.tiers):
        n = cs.poisson(tier.lam * math.pi * radius * radius)
        r = radius * np.sqrt(ps.uniforms(n))
        if tier.joint_atoms is not None:
            atoms = tier.joint_atoms
            cum = np.cumsum([a.prob for a in atoms])
            idx = np.minimum(np.searchsorted(cum, ms.uniforms(n) * cum[-1], side="right"), len(atoms) - 1)
            P = np.array([a.power for a in atoms])[idx]
            S = np.array([a.shadowing for a in atoms])[idx]
            A = np.array([a.A for a in atoms])[idx]
            B = np.array([a.beta for a in atoms])[idx]
            T = np.array([a.threshold for a in atoms])[idx]
        else:
            P = tier.power.sample(ms, n)
            S = tier.shadowing.sample(ms, n)
            A = tier.A.sample(ms, n)
            B = tier.beta.sample(ms, n)
            T = tier.threshold.sample(ms, n)
        st = P * S / A
        y = r**B / st
        keep = y <= plan.s_max
        cols["y"].append(y[keep])
        cols["t"].append(T[keep])
        cols["tier"].append(np.full(int(keep.sum()), k))
        cols["beta"].append(B[keep])
        cols["s_tilde"].append(st[keep])
    cat = {k: np.concatenate(v) if v else np.empty(0) for k, v in cols.items()}
    return PropagationSample(
        cat["y"], cat["t"], cat["tier"], cat["beta"], cat["s_tilde"], plan.s_max,
        {"seed": plan.master_seed, "rep": rep, "mode": "spatial-original",
         "radius": radius, "missed_mass": missed},
    )


def sample_isotropic(iso: IsotropicModel, plan: SimPlan, rep: int) -> PropagationSample:
    """One replication of the isotropic representation, mapped to losses."""
    bp = iso.beta_prime
    radius = plan.s_max ** (1.0 / bp)
    mass = iso.radial_mass(radius)
    cs = stream(plan.master_seed, rep, "count")
    ps = stream(plan.master_seed, rep, "position")
    ms = stream(plan.master_seed, rep, "mark")
    n = cs.poisson(mass)
    coefs = np.array([2.0 * math.pi * t.d / (t.g + 2.0) for t in iso.terms])
    exps = np.array([t.g + 2.0 for t in iso.terms])
    r = np.minimum(kernels.invert_power_sum(coefs, exps, ps.uniforms(n) * mass), radius)
    if n:
        choice = _choose_terms(iso.density.terms(r), ms.uniforms(n))
    else:
        choice = np.zeros(0, dtype=np.int64)
    t = _draw_marks_by_term(iso.terms, choice, ms)
    tiers = np.array([term.tier for term in iso.terms], dtype=np.int64)[choice]
    y = np.minimum(r**bp, plan.s_max)
    return PropagationSample(
        y, t, tiers, np.full(n, bp), np.ones(n), plan.s_max,
        {"seed": plan.master_seed, "rep": rep, "mode": "spatial-isotropic",
         "radius": radius, "missed_mass": 0.0},
    )


def sample_direct(im: IntensityMeasure, plan: SimPlan, rep: int) -> PropagationSample:
    """One replication drawn on the half-line by inverting ``Lambda``."""
    total = im(plan.s_max)
    cs = stream(plan.master_seed, rep, "count")
    ps = stream(plan.master_seed, rep, "position")
    ms = stream(plan.master_seed, rep, "mark")
    n = cs.poisson(total)
    y = np.minimum(im.inverse(ps.uniforms(n) * total), plan.s_max)
    if n:
        # term posterior is proportional to d/ds of its Lambda contribution
        w = np.stack([t.coef * t.exponent * y ** (t.exponent - 1.0) for t in im.terms])
        choice = _choose_terms(w, ms.uniforms(n))
    else:
        choice = np.zeros(0, dtype=np.int64)
    t = _draw_marks_by_term(im.terms, choice, ms)
    tiers = np.array([term.tier for term in im.terms], dtype=np.int64)[choice]
    betas = np.array([term.beta for term in im.terms])[choice]
    return PropagationSample(
        y, t, tiers, betas, None, plan.s_max,
        {"seed": plan.master_seed, "rep": rep, "mode": "direct-propagation",
         "radius": None, "missed_mass": 0.0},
    )


def thread_count() -> int:
    """Worker threads from ``HETNET_THREADS`` (unset or 0 means one per CPU)."""
    raw = os.environ.get("HETNET_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("HETNET_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def replicate(
    sampler: Callable[[object, SimPlan, int], PropagationSample],
    target,
    plan: SimPlan,
    threads: int | None = None,
) -> list[PropagationSample]:
    """Run ``plan.replications`` independent replications of ``sampler``.

    Each replication depends only on ``(plan.master_seed, rep)``; the output
    list is in replication order whatever the thread count.
    """
    threads = thread_count() if threads is None else max(1, threads)
    reps = range(plan.replications)
    if sampler is sample_original:
        # warm the cache outside the pool
        truncation_radius(target, plan.s_max, plan.epsilon, plan.r_cap)
    if threads == 1 or plan.replications == 1:
        return [sampler(target, plan, i) for i in reps]
    with ThreadPoolExecutor(max_workers=threads) as pool_:
        return list(pool_.map(lambda i: sampler(target, plan, i), reps))


def run_plan(plan: SimPlan, model: NetworkModel, beta_prime: float | None = None) -> list[PropagationSample]:
    """Replicate the sampler named by ``plan.mode`` for ``model``."""
    if plan.mode == "spatial-original":
        return replicate(sample_original, model, plan)
    if plan.mode == "spatial-isotropic":
        from .equivalence import isotropic_representation

        return replicate(sample_isotropic, isotropic_representation(model, beta_prime), plan)
    return replicate(sample_direct, build_intensity(model), plan)


def pool(samples: list[PropagationSample]) -> PropagationSample:
    """Merge replications into one sample (sorted by ``y``)."""
    if not samples:
        raise ValueError("nothing to pool")
    s_max = samples[0].s_max
    has_st = all(s.s_tilde is not None for s in samples)
    return PropagationSample(
        np.concatenate([s.y for s in samples]),
        np.concatenate([s.t for s in samples]),
        np.concatenate([s.tier for s in samples]),
        np.concatenate([s.beta for s in samples]),
        np.concatenate([s.s_tilde for s in samples]) if has_st else None,
        s_max,
        {"replications": len(samples)},
    )
