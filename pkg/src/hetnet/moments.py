"""Fractional moments E[Z**q] of mark distributions.

Closed forms cover the fading/shadowing families (log-normal, exponential,
Weibull, Nakagami, Rice) plus atomic distributions; ``moment_quad``
integrates ``s**q`` against the density and serves as an independent check.
The moment that matters for propagation is ``E[S_tilde**(2/beta)]`` with
``S_tilde = P*S/A``; :func:`composite_moment` assembles it for a tier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import specfun
from .model import (
    Constant,
    Discrete,
    Exponential,
    LogNormal,
    ModelError,
    Nakagami,
    Rice,
    ScalarDistribution,
    TierSpec,
    Weibull,
)

__all__ = [
    "MomentRequest",
    "moment_closed",
    "moment_quad",
    "composite_moment",
    "composite_terms",
    "UnsupportedMoment",
]


class UnsupportedMoment(ValueError):
    """The requested moment is infinite or has no closed form here."""


def _min_order(dist: ScalarDistribution) -> float:
    """Infimum of orders q for which E[Z**q] is finite."""
    if isinstance(dist, (Constant, Discrete, LogNormal)):
        return -math.inf
    if isinstance(dist, Exponential):
        return -1.0
    if isinstance(dist, Weibull):
        return -dist.k
    if isinstance(dist, Nakagami):
        return -2.0 * dist.m
    if isinstance(dist, Rice):
        return -2.0
    raise UnsupportedMoment(f"unsupported distribution {dist!r}")


@dataclass(frozen=True)
class MomentRequest:
    """A validated request for E[dist**q]."""

    dist: ScalarDistribution
    q: float

    def __post_init__(self):
        q = float(self.q)
        if not math.isfinite(q):
            raise UnsupportedMoment(f"moment order must be finite, got {self.q!r}")
        if q <= _min_order(self.dist):
            raise UnsupportedMoment(f"E[Z^{q}] is infinite for {self.dist.kind}")
        object.__setattr__(self, "q", q)


def moment_closed(dist: ScalarDistribution, q: float) -> float:
    """Closed-form ``E[dist**q]``."""
    q = MomentRequest(dist, q).q
    if q == 0.0:
        return 1.0
    if isinstance(dist, Constant):
        return dist.value**q
    if isinstance(dist, Discrete):
        return math.fsum(p * v**q for v, p in dist.atoms)
    if isinstance(dist, LogNormal):
        return math.exp(q * dist.mu + 0.5 * q * q * dist.sigma**2)
    if isinstance(dist, Exponential):
        return dist.rate ** (-q) * specfun.gamma(q + 1.0)
    if isinstance(dist, Weibull):
        return dist.scale**q * specfun.gamma(q / dist.k + 1.0)
    if isinstance(dist, Nakagami):
        m = dist.m
        return math.exp(specfun.lgamma(m + 0.5 * q) - specfun.lgamma(m)) * (dist.omega / m) ** (0.5 * q)
    if isinstance(dist, Rice):
        s2 = dist.sigma**2
        return (
            (2.0 * s2) ** (0.5 * q)
            * specfun.gamma(0.5 * q + 1.0)
            * specfun.hyp1f1(-0.5 * q, 1.0, -dist.nu**2 / (2.0 * s2))
        )
    raise UnsupportedMoment(f"no closed form for {dist.kind}; use moment_quad")


def _scale_point(dist: ScalarDistribution) -> float:
    if isinstance(dist, LogNormal):
        return math.exp(dist.mu)
    return dist.mean()


def moment_quad(dist: ScalarDistribution, q: float, tol: float = 1e-13) -> float:
    """``E[dist**q]`` by numerical integration of ``s**q`` against the density.

    ``tol`` is used both as the absolute target and as a relative target on
    each piece of the split integral.
    """
    q = MomentRequest(dist, q).q
    if dist.atomic:
        return math.fsum(p * v**q for v, p in dist.support_atoms())
    if isinstance(dist, LogNormal) and dist.sigma == 0.0:
        return math.exp(q * dist.mu)

    def integrand(s):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            val = s**q * dist.pdf(s)
        return np.where((s > 0) & np.isfinite(val), val, 0.0)

    m = _scale_point(dist)
    head = specfun.quad(integrand, 0.0, m, tol, rtol=tol, vectorized=True)
    tail = specfun.quad(integrand, m, math.inf, tol, rtol=tol, vectorized=True)
    return head + tail


def _factor_moment(dist: ScalarDistribution, q: float, name: str) -> float:
    if q < 0 and not isinstance(dist, (Constant, Discrete, LogNormal)):
        raise UnsupportedMoment(
            f"{name} enters S_tilde inversely; a {dist.kind} {name} needs a finite negative "
            "moment without closed form here (use constant, discrete or log-normal)"
        )
    return moment_closed(dist, q)


def composite_terms(tier: TierSpec, q_of_beta: Callable[[float], float]) -> list[tuple[float, float, float]]:
    """Per path-loss-exponent atom: ``(beta, P(beta), E[S_tilde**q(beta) | beta])``.

    Under independent marks the conditional moment factorizes as
    ``E[P**q] E[S**q] E[A**-q]``; with joint atoms it is summed directly.
    """
    out = []
    if tier.joint_atoms is not None:
        betas = sorted({a.beta for a in tier.joint_atoms})
        for b in betas:
            group = [a for a in tier.joint_atoms if a.beta == b]
            w = math.fsum(a.prob for a in group)
            if w == 0.0:
                continue
            q = q_of_beta(b)
            m = math.fsum(a.prob * a.s_tilde**q for a in group) / w
            out.append((b, w, m))
        return out
    for b, w in tier.beta_atoms():
        if w == 0.0:
            continue
        q = q_of_beta(b)
        m = (
            _factor_moment(tier.power, q, "power")
            * _factor_moment(tier.shadowing, q, "shadowing")
            * _factor_moment(tier.A, -q, "A")
        )
        out.append((b, w, m))
    return out


def composite_moment(tier: TierSpec, q_of_beta: Callable[[float], float]) -> float:
    """``E[S_tilde**q(beta)]`` for one tier, averaging over its beta atoms."""
    total = math.fsum(w * m for _, w, m in composite_terms(tier, q_of_beta))
    if not math.isfinite(total):
        raise ModelError("E[S_tilde^(2/beta)] is not finite")
    return total
