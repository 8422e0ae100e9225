"""Goodness-of-fit tests of propagation samples against intensity measures.

The time-change test maps each loss through ``Lambda(y) / Lambda(s_max)``;
for a Poisson process with intensity ``Lambda`` these are i.i.d. uniform
given their number. Binned tests compare Poisson counts with their exact
expectations. :func:`equivalence_verdict` decides whether two networks
induce the same propagation process.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels, specfun
from .equivalence import IsotropicModel, isotropic_lambda_integral
from .intensity import IntensityMeasure, build_intensity
from .model import NetworkModel, PropagationSample
from .simulate import SimPlan, pool, replicate, sample_direct, sample_isotropic, sample_original

__all__ = [
    "GofReport",
    "VerdictReport",
    "UnsupportedTest",
    "time_change_ks",
    "poisson_count_pvalue",
    "ks_two_sample",
    "binned_chi2",
    "merge_bins",
    "mark_consistency",
    "tier_share_intervals",
    "wilson_interval",
    "equivalence_verdict",
    "P_FLOOR",
]

P_FLOOR = 1e-16
DEFAULT_ALPHA = 0.05
MIN_EXPECTED = 5.0


class UnsupportedTest(ValueError):
    """The requested test does not apply to this input."""


@dataclass
class GofReport:
    method: str
    statistic: float | None
    p_value: float | None
    n_points: int
    dof: int | None = None
    bins: list[dict] = field(default_factory=list)
    inconclusive: bool = False

    def verdict(self, alpha: float = DEFAULT_ALPHA) -> str:
        if self.inconclusive:
            return "inconclusive"
        return "consistent" if self.p_value > alpha else "rejected"

    def to_dict(self, alpha: float = DEFAULT_ALPHA) -> dict:
        return {
            "method": self.method,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n": self.n_points,
            "dof": self.dof,
            "bins": self.bins,
            "verdict": self.verdict(alpha),
        }

    def to_json(self, alpha: float = DEFAULT_ALPHA) -> str:
        return json.dumps(self.to_dict(alpha), indent=2)


def _clamp(p: float) -> float:
    return min(1.0, max(P_FLOOR, p))


def _ks_pvalue(d: float, en: float) -> float:
    return _clamp(specfun.kolmogorov_sf((en + 0.12 + 0.11 / en) * d))


def poisson_count_pvalue(n: int, mean: float) -> float:
    """Two-sided exact Poisson test: ``2 * min(P(N <= n), P(N >= n))``."""
    if mean <= 0:
        return 1.0 if n == 0 else P_FLOOR
    below = specfun.gammainc_upper(n + 1, mean)
    above = 1.0 if n == 0 else 1.0 - specfun.gammainc_upper(n, mean)
    return _clamp(2.0 * min(below, above))


def time_change_ks(
    sample: PropagationSample,
    im: IntensityMeasure,
    with_count: bool = False,
    replications: int | None = None,
) -> GofReport:
    """KS test of ``Lambda(Y)/Lambda(s_max)`` against Uniform(0, 1).

    Conditional on the number of points this only sees the shape of
    ``Lambda``; rescaling the intensity leaves the statistic unchanged. With
    ``with_count`` the KS p-value is combined (Fisher) with an exact Poisson
    test of the count against ``replications * Lambda(s_max)``, which also
    detects a wrong overall density. ``replications`` defaults to the value
    recorded by :func:`hetnet.simulate.pool`, else 1.
    """
    n = len(sample)
    method = "time-change-ks+count" if with_count else "time-change-ks"
    if n == 0:
        return GofReport(method, None, None, 0, inconclusive=True)
    total = im(sample.s_max)
    u = np.sort(np.asarray(im(sample.y)) / total)
    d = kernels.ks_uniform_stat(u)
    p = _ks_pvalue(d, math.sqrt(n))
    if not with_count:
        return GofReport(method, d, p, n)
    reps = replications if replications is not None else int(sample.meta.get("replications", 1))
    p_count = poisson_count_pvalue(n, reps * total)
    fisher = -2.0 * (math.log(p) + math.log(p_count))
    return GofReport(method, d, _clamp(specfun.chi2_sf(fisher, 4)), n)


def ks_two_sample(y1: Sequence[float], y2: Sequence[float]) -> GofReport:
    """Two-sample Kolmogorov-Smirnov test (asymptotic p-value)."""
    a = np.sort(np.asarray(y1, dtype=float))
    b = np.sort(np.asarray(y2, dtype=float))
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        return GofReport("ks-two-sample", None, None, n1 + n2, inconclusive=True)
    grid = np.concatenate([a, b])
    d = float(np.max(np.abs(
        np.searchsorted(a, grid, side="right") / n1 - np.searchsorted(b, grid, side="right") / n2
    )))
    return GofReport("ks-two-sample", d, _ks_pvalue(d, math.sqrt(n1 * n2 / (n1 + n2))), n1 + n2)


def merge_bins(edges: Sequence[float], observed: Sequence[float], expected: Sequence[float], minimum: float = MIN_EXPECTED):
    """Merge adjacent bins left to right until each expected count reaches ``minimum``.

    A short remainder at the right end is folded into the last kept bin.
    Returns ``(edges, observed, expected)`` of the merged bins.
    """
    out_e = [edges[0]]
    out_o: list[float] = []
    out_x: list[float] = []
    acc_o = acc_x = 0.0
    for j in range(len(observed)):
        acc_o += observed[j]
        acc_x += expected[j]
        if acc_x >= minimum:
            out_e.append(edges[j + 1])
            out_o.append(acc_o)
            out_x.append(acc_x)
            acc_o = acc_x = 0.0
    if acc_x > 0 or acc_o > 0:
        if out_x:
            out_o[-1] += acc_o
            out_x[-1] += acc_x
            out_e[-1] = edges[-1]
        else:
            out_e.append(edges[-1])
            out_o.append(acc_o)
            out_x.append(acc_x)
    return out_e, out_o, out_x


def binned_chi2(
    samples: Sequence[PropagationSample], im: IntensityMeasure, bin_edges: Sequence[float]
) -> GofReport:
    """Pearson test of pooled per-bin Poisson counts against ``reps * dLambda``.

    Bins whose pooled expectation is below 5 are merged with neighbours.
    The expected counts are fully specified (not conditioned on the total),
    so the reference distribution has one degree of freedom per bin.
    """
    edges = np.asarray(bin_edges, dtype=float)
    if edges.ndim != 1 or len(edges) < 3 or np.any(np.diff(edges) <= 0):
        raise ValueError("bin_edges must be increasing with at least two bins")
    reps = len(samples)
    ys = np.concatenate([s.y for s in samples]) if samples else np.empty(0)
    observed = np.histogram(ys, bins=edges)[0].astype(float)
    # histogram's last bin is closed; others half-open, matching Y <= s conventions closely enough
    lam = np.asarray(im(edges))
    expected = reps * np.diff(lam)
    e, o, x = merge_bins(edges.tolist(), observed.tolist(), expected.tolist())
    if len(o) < 2:
        raise ValueError("fewer than 2 usable bins after merging")
    o_arr, x_arr = np.array(o), np.array(x)
    stat = float(np.sum((o_arr - x_arr) ** 2 / x_arr))
    dof = len(o)
    bins = [{"lo": e[j], "hi": e[j + 1], "expected": x[j], "observed": o[j]} for j in range(len(o))]
    return GofReport("binned-chi2", stat, _clamp(specfun.chi2_sf(stat, dof)), int(len(ys)), dof, bins)


def _category_expectations(iso: IsotropicModel, lo: float, hi: float) -> dict[float, float]:
    """Expected points per mark value among radii in ``(lo, hi]`` (one replication)."""
    im = iso.intensity()
    bp = iso.beta_prime
    out: dict[float, float] = {}
    for term in im.terms:
        if not term.mark.atomic:
            raise UnsupportedTest("mark test needs discrete marks")
        mass = math.pi * term.coef * ((hi**bp) ** term.exponent - (lo**bp) ** term.exponent)
        for v, p in term.mark.support_atoms():
            out[v] = out.get(v, 0.0) + p * mass
    return out


def _radial_counts(samples, iso, radial_bins):
    edges = np.asarray(radial_bins, dtype=float)
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0) or edges[0] < 0:
        raise ValueError("radial_bins must be increasing, non-negative, with at least one bin")
    pooled = pool(list(samples))
    r = pooled.y ** (1.0 / iso.beta_prime)
    which = np.searchsorted(edges, r, side="left") - 1
    which[r == edges[0]] = 0
    return edges, pooled, which


def mark_consistency(
    samples: Sequence[PropagationSample], iso: IsotropicModel, radial_bins: Sequence[float]
) -> GofReport:
    """Chi-square test that marks within radial bins follow the mixture weights.

    Within each bin the expected mark composition is the exact bin average of
    ``sum_j p_j(r) P(T_j = t)``; counts are compared conditional on the bin
    total, giving ``categories - 1`` degrees of freedom per bin.
    """
    for term in iso.terms:
        if not term.mark.atomic:
            raise UnsupportedTest("mark test needs discrete marks (tier labels or threshold atoms)")
    edges, pooled, which = _radial_counts(samples, iso, radial_bins)
    raw = []
    for b in range(len(edges) - 1):
        exp_b = _category_expectations(iso, edges[b], edges[b + 1])
        sel = which == b
        cats = sorted(exp_b)
        obs = {c: float(np.sum(pooled.t[sel] == c)) for c in cats}
        raw.append((edges[b], edges[b + 1], obs, exp_b))
    # merge radial bins until every category with positive weight expects >= 5
    merged = []
    cur = None
    for lo, hi, obs, exp_b in raw:
        if cur is None:
            cur = [lo, hi, dict(obs), dict(exp_b)]
        else:
            cur[1] = hi
            for c in obs:
                cur[2][c] = cur[2].get(c, 0.0) + obs[c]
                cur[3][c] = cur[3].get(c, 0.0) + exp_b[c]
        n_b = sum(cur[2].values())
        tot = sum(cur[3].values())
        if n_b > 0 and all(n_b * w / tot >= MIN_EXPECTED for w in cur[3].values() if w > 0):
            merged.append(cur)
            cur = None
    if cur is not None:
        if merged:
            last = merged[-1]
            last[1] = cur[1]
            for c in cur[2]:
                last[2][c] = last[2].get(c, 0.0) + cur[2][c]
                last[3][c] = last[3].get(c, 0.0) + cur[3][c]
        elif sum(cur[2].values()) > 0:
            merged.append(cur)
    stat = 0.0
    dof = 0
    bins = []
    for lo, hi, obs, exp_b in merged:
        n_b = sum(obs.values())
        tot = sum(exp_b.values())
        cats = [c for c in exp_b if exp_b[c] > 0]
        expected = {c: n_b * exp_b[c] / tot for c in cats}
        if n_b > 0:
            stat += sum((obs[c] - expected[c]) ** 2 / expected[c] for c in cats)
            dof += len(cats) - 1
        bins.append({
            "lo": lo, "hi": hi,
            "expected": [expected[c] for c in cats],
            "observed": [obs[c] for c in cats],
            "categories": cats,
        })
    p = 1.0 if dof == 0 else _clamp(specfun.chi2_sf(stat, dof))
    return GofReport("mark-chi2", stat, p, len(pooled), dof, bins)


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return 0.0, 1.0
    z = _norm_ppf(0.5 + 0.5 * level)
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _norm_ppf(p: float) -> float:
    # bisection on the normal CDF; only used for a handful of interval widths
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if specfun.norm_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tier_share_intervals(
    samples: Sequence[PropagationSample],
    iso: IsotropicModel,
    radial_bins: Sequence[float],
    tier: int = 0,
    level: float = 0.95,
) -> list[dict]:
    """Per radial bin: observed share of ``tier``, its Wilson interval, and the
    exact bin-averaged mixture weight of that tier."""
    edges, pooled, which = _radial_counts(samples, iso, radial_bins)
    im = iso.intensity()
    bp = iso.beta_prime
    rows = []
    for b in range(len(edges) - 1):
        lo, hi = edges[b], edges[b + 1]
        masses = np.array([
            t.coef * ((hi**bp) ** t.exponent - (lo**bp) ** t.exponent) for t in im.terms
        ])
        share = float(masses[[t.tier == tier for t in im.terms]].sum() / masses.sum())
        sel = which == b
        n = int(sel.sum())
        k = int(np.sum(pooled.tier[sel] == tier))
        ci = wilson_interval(k, n, level)
        rows.append({"lo": lo, "hi": hi, "n": n, "observed": k / n if n else float("nan"),
                     "expected": share, "ci_lo": ci[0], "ci_hi": ci[1],
                     "inside": ci[0] <= share <= ci[1]})
    return rows


@dataclass
class VerdictReport:
    verdict: str
    max_rel_diff: float
    empirical: str | None = None
    reports: dict[str, GofReport] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "max_rel_diff": self.max_rel_diff,
            "empirical": self.empirical,
            "reports": {k: v.to_dict() for k, v in self.reports.items()},
        }


def _lambda_fn(model):
    if isinstance(model, IsotropicModel):
        return lambda s, t: isotropic_lambda_integral(model, s, t)
    im = build_intensity(model)
    return lambda s, t: im(s, t)


def _marks_of(model) -> list[float]:
    if isinstance(model, IsotropicModel):
        return sorted({v for term in model.terms if term.mark.atomic for v, _ in term.mark.support_atoms()})
    return build_intensity(model).mark_atoms()


def _intensity_of(model) -> IntensityMeasure:
    return model.intensity() if isinstance(model, IsotropicModel) else build_intensity(model)


def _samples_of(model, plan: SimPlan):
    if isinstance(model, IsotropicModel):
        return replicate(sample_isotropic, model, plan)
    if plan.mode == "spatial-original":
        return replicate(sample_original, model, plan)
    return replicate(sample_direct, build_intensity(model), plan)


def equivalence_verdict(
    model_a: NetworkModel,
    model_b: NetworkModel | IsotropicModel,
    plan: SimPlan | None = None,
    s_grid: Sequence[float] | None = None,
    rel_tol: float = 1e-10,
    alpha: float = 0.01,
) -> VerdictReport:
    """Decide whether two networks induce the same propagation process.

    The analytic comparison of ``Lambda(s, t)`` on a log grid (and at every
    mark atom) is decisive. With a ``plan``, both networks are also simulated
    (seeds ``plan.master_seed`` and ``plan.master_seed + 1``) and each pooled
    sample is tested against the other's intensity, counts included, plus a
    two-sample KS.
    """
    if s_grid is None:
        s_grid = np.logspace(-3, 6, 37)
    la, lb = _lambda_fn(model_a), _lambda_fn(model_b)
    ts = sorted(set(_marks_of(model_a)) | set(_marks_of(model_b))) + [math.inf]
    worst = 0.0
    for s in s_grid:
        for t in ts:
            a, b = la(float(s), t), lb(float(s), t)
            scale = max(abs(a), abs(b))
            if scale > 0:
                worst = max(worst, abs(a - b) / scale)
    verdict = "equivalent-analytic" if worst <= rel_tol else "rejected"
    report = VerdictReport(verdict, worst)
    if plan is None:
        return report
    from dataclasses import replace

    samples_a = pool(_samples_of(model_a, plan))
    samples_b = pool(_samples_of(model_b, replace(plan, master_seed=plan.master_seed + 1)))
    report.reports = {
        "a_vs_lambda_b": time_change_ks(samples_a, _intensity_of(model_b), with_count=True),
        "b_vs_lambda_a": time_change_ks(samples_b, _intensity_of(model_a), with_count=True),
        "two_sample": ks_two_sample(samples_a.y, samples_b.y),
    }
    ok = all(not r.inconclusive and r.p_value > alpha for r in report.reports.values())
    report.empirical = "consistent-empirical" if ok else "rejected"
    return report
