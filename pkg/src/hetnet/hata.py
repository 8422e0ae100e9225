"""COST231-Hata path-loss parameters as a power law ``A * d**beta``.

Only the metropolitan large-city branch is implemented. Distances are in km,
so densities built from these parameters are per km^2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

from .model import Constant, LogNormal, NetworkModel, TierSpec

__all__ = [
    "HataParams",
    "HataValidityWarning",
    "hata_params",
    "validity_issues",
    "average_height",
    "two_tier_network",
    "single_tier_network",
    "EXAMPLE_DENSITIES",
    "EXAMPLE_HEIGHTS",
]

ENVIRONMENTS = ("metropolitan",)

# densities (per km^2) and antenna heights (m) of the worked two-tier example
EXAMPLE_DENSITIES = (1.8, 2.2)
EXAMPLE_HEIGHTS = (20.0, 100.0)


class HataValidityWarning(UserWarning):
    """Input lies outside the nominal COST231-Hata validity range."""


@dataclass(frozen=True)
class HataParams:
    base_height: float
    user_height: float = 1.0
    frequency: float = 1800.0
    environment: str = "metropolitan"

    def __post_init__(self):
        for name in ("base_height", "user_height", "frequency"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")


def validity_issues(p: HataParams) -> list[str]:
    """Messages for inputs outside the model's nominal range."""
    issues = []
    if not 30.0 <= p.base_height <= 200.0:
        issues.append(f"base station height {p.base_height} m outside nominal 30-200 m")
    if not 1.0 <= p.user_height <= 10.0:
        issues.append(f"user height {p.user_height} m outside nominal 1-10 m")
    if not 1500.0 <= p.frequency <= 2000.0:
        issues.append(f"frequency {p.frequency} MHz outside nominal 1500-2000 MHz")
    return issues


def _mobile_correction(h_m: float) -> float:
    # large-city correction, f >= 300 MHz
    return 3.2 * math.log10(11.75 * h_m) ** 2 - 4.97


def hata_params(p: HataParams) -> tuple[float, float]:
    """Path-loss exponent and constant ``(beta, A)`` for distance in km.

    Out-of-range inputs emit :class:`HataValidityWarning` but still evaluate.
    """
    if p.environment not in ENVIRONMENTS:
        raise ValueError(f"unsupported environment {p.environment!r}; expected one of {ENVIRONMENTS}")
    for msg in validity_issues(p):
        warnings.warn(msg, HataValidityWarning, stacklevel=2)
    h_b = p.base_height
    beta = (44.9 - 6.55 * math.log10(h_b)) / 10.0
    loss_db = (
        46.3
        + 33.9 * math.log10(p.frequency)
        - 13.82 * math.log10(h_b)
        - _mobile_correction(p.user_height)
        + 3.0
    )
    return beta, 10.0 ** (loss_db / 10.0)


def average_height(lambdas: Sequence[float], heights: Sequence[float]) -> float:
    """Density-weighted mean antenna height."""
    if len(lambdas) != len(heights):
        raise ValueError("lambdas and heights must have the same length")
    if not lambdas:
        raise ValueError("need at least one tier")
    if any(not lam > 0 for lam in lambdas):
        raise ValueError("densities must be positive")
    return math.fsum(l * h for l, h in zip(lambdas, heights)) / math.fsum(lambdas)


def _tier(lam: float, height: float, sigma_db: float, label: float, **kw) -> TierSpec:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HataValidityWarning)
        beta, A = hata_params(HataParams(height, **kw))
    shadow = LogNormal.mean_one(sigma_db) if sigma_db > 0 else Constant(1.0)
    return TierSpec(lam, Constant(1.0), shadow, Constant(A), Constant(beta), Constant(label))


def two_tier_network(
    sigma_db: float = 0.0,
    lambdas: Sequence[float] = EXAMPLE_DENSITIES,
    heights: Sequence[float] = EXAMPLE_HEIGHTS,
    **kw,
) -> NetworkModel:
    """Two COST231-Hata tiers with tier labels 1, 2 as threshold marks."""
    return NetworkModel(tuple(
        _tier(lam, h, sigma_db, float(i + 1), **kw) for i, (lam, h) in enumerate(zip(lambdas, heights))
    ))


def single_tier_network(
    sigma_db: float = 0.0,
    lambdas: Sequence[float] = EXAMPLE_DENSITIES,
    heights: Sequence[float] = EXAMPLE_HEIGHTS,
    **kw,
) -> NetworkModel:
    """One tier with the summed density at the density-weighted mean height."""
    return NetworkModel((_tier(math.fsum(lambdas), average_height(lambdas, heights), sigma_db, 1.0, **kw),))
