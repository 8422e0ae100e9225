"""Intensity measure of the typical-user propagation process.

For a superposition of homogeneous marked Poisson tiers the losses
``Y = |X|**beta / S_tilde`` form a Poisson process on the half-line with

    Lambda(s, t) = pi * sum_j c_j * s**e_j * F_j(t),

one term per (tier, path-loss-exponent atom), where ``e_j = 2/beta_j``,
``c_j = lambda_j * P(beta_j) * E[S_tilde**e_j | beta_j]`` and ``F_j`` is the
CDF of the mark T within the term. Keeping the measure as this finite power
mixture makes derivatives and inverses exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .model import Discrete, ModelError, NetworkModel, ScalarDistribution
from .moments import composite_terms

__all__ = [
    "PowerTerm",
    "IntensityMeasure",
    "build_intensity",
    "eval_lambda",
    "phi_rt",
    "mark_cdf",
    "term_weights",
]


@dataclass(frozen=True)
class PowerTerm:
    """One term ``pi * coef * s**exponent * mark.cdf(t)`` of an intensity."""

    coef: float
    exponent: float
    mark: ScalarDistribution
    tier: int
    beta: float

    def mark_cdf(self, t: float) -> float:
        return 1.0 if math.isinf(t) and t > 0 else self.mark.cdf(t)


@dataclass(frozen=True)
class IntensityMeasure:
    terms: tuple[PowerTerm, ...]
    model: NetworkModel | None = None

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("an intensity measure needs at least one term")
        for term in self.terms:
            if not (term.coef >= 0.0 and math.isfinite(term.coef)):
                raise ModelError(f"intensity coefficient must be finite and >= 0, got {term.coef}")
            if not term.exponent > 0.0:
                raise ModelError("intensity exponents must be positive")

    @property
    def coefs(self) -> np.ndarray:
        return np.array([t.coef for t in self.terms])

    @property
    def exponents(self) -> np.ndarray:
        return np.array([t.exponent for t in self.terms])

    def term_values(self, s, t: float = math.inf) -> np.ndarray:
        """Per-term contributions, shape ``(len(terms),) + shape(s)``."""
        s = np.asarray(s, dtype=float)
        return np.stack([
            math.pi * term.coef * term.mark_cdf(t) * s**term.exponent for term in self.terms
        ])

    def __call__(self, s, t: float = math.inf):
        vals = self.term_values(s, t).sum(axis=0)
        return float(vals) if vals.ndim == 0 else vals

    def inverse(self, values):
        """Marginal ``Lambda^{-1}``; exact for single terms, Newton otherwise.

        A scalar argument gives a float, an array gives an array.
        """
        v = np.asarray(values, dtype=float)
        keep = self.coefs > 0
        out = kernels.invert_power_sum(math.pi * self.coefs[keep], self.exponents[keep], np.atleast_1d(v))
        return float(out[0]) if v.ndim == 0 else out.reshape(v.shape)

    def mark_atoms(self) -> list[float]:
        """Distinct mark values across atomic term marks (for grids and tests)."""
        vals = set()
        for term in self.terms:
            if term.mark.atomic:
                vals.update(v for v, _ in term.mark.support_atoms())
        return sorted(vals)


def build_intensity(model: NetworkModel) -> IntensityMeasure:
    """Exact finite power-mixture intensity of ``model``'s propagation process."""
    terms = []
    for k, tier in enumerate(model.tiers):
        for b, w, m in composite_terms(tier, lambda beta: 2.0 / beta):
            coef = tier.lam * w * m
            if not math.isfinite(coef):
                raise ModelError("E[S_tilde^(2/beta)] is infinite", tier=k)
            if tier.joint_atoms is None:
                mark = tier.threshold
            else:
                q = 2.0 / b
                group = [a for a in tier.joint_atoms if a.beta == b]
                weights: dict[float, float] = {}
                for a in group:
                    weights[a.threshold] = weights.get(a.threshold, 0.0) + a.prob * a.s_tilde**q
                total = math.fsum(weights.values())
                mark = Discrete(tuple((v, p / total) for v, p in sorted(weights.items())))
            terms.append(PowerTerm(coef, 2.0 / b, mark, k, b))
    return IntensityMeasure(tuple(terms), model)


def eval_lambda(im: IntensityMeasure, s, t: float = math.inf):
    """``Lambda(s, t)``; ``t=inf`` gives the marginal ``Lambda(s)``."""
    if np.any(np.asarray(s) < 0):
        raise ValueError("s must be non-negative")
    return im(s, t)


def _phi_terms(im: IntensityMeasure, beta_prime: float, r, t: float = math.inf) -> np.ndarray:
    if not beta_prime > 0:
        raise ValueError("beta_prime must be positive")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be non-negative")
    out = []
    for term in im.terms:
        g = beta_prime * term.exponent - 2.0
        if np.any(r == 0) and g < 0:
            raise ValueError(
                f"radial density is singular at r=0 (exponent {g:.6g} < 0)"
            )
        with np.errstate(divide="ignore"):
            out.append(0.5 * beta_prime * term.coef * term.exponent * term.mark_cdf(t) * r**g)
    return np.stack(out)


def phi_rt(im: IntensityMeasure, beta_prime: float, r, t: float = math.inf):
    """Radial station density ``phi(r, t) = (2 pi r)^-1 d/dr Lambda(r**beta', t)``."""
    vals = _phi_terms(im, beta_prime, r, t).sum(axis=0)
    return float(vals) if vals.ndim == 0 else vals


def term_weights(im: IntensityMeasure, beta_prime: float, r) -> np.ndarray:
    """Probabilities ``p_j(r)`` that a station at radius ``r`` comes from term j."""
    parts = _phi_terms(im, beta_prime, r)
    total = parts.sum(axis=0)
    if np.any(~(total > 0)) or np.any(~np.isfinite(total)):
        raise ValueError("phi(r) must be positive and finite")
    return parts / total


def mark_cdf(im: IntensityMeasure, beta_prime: float, r, t: float):
    """Location-dependent mark CDF ``phi(r, t) / phi(r)``."""
    p = term_weights(im, beta_prime, r)
    cdfs = np.array([term.mark_cdf(t) for term in im.terms]).reshape((-1,) + (1,) * (p.ndim - 1))
    vals = (p * cdfs).sum(axis=0)
    vals = np.minimum(vals, 1.0)
    return float(vals) if vals.ndim == 0 else vals


def intensity_grid(im: IntensityMeasure, s_grid: Sequence[float], t: float = math.inf) -> list[tuple[float, float]]:
    """Rows ``(s, Lambda(s, t))`` for CSV output."""
    s = np.asarray(s_grid, dtype=float)
    return list(zip(s.tolist(), np.atleast_1d(im(s, t)).tolist()))
