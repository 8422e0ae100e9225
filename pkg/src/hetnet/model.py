"""Network description types, mark distributions and JSON config ingestion.

A heterogeneous network is a list of tiers. Each tier is a homogeneous
Poisson process of base stations with i.i.d. marks (P, S, A, beta, T):
emitted power, propagation effect (shadowing/fading), path-loss constant,
path-loss exponent and a per-station parameter such as an SINR threshold.
The path loss of a station at distance r is ``A * r**beta``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, ClassVar, Iterator

import numpy as np

from . import specfun

__all__ = [
    "ModelError",
    "ScalarDistribution",
    "Constant",
    "LogNormal",
    "Exponential",
    "Weibull",
    "Nakagami",
    "Rice",
    "Discrete",
    "JointAtom",
    "TierSpec",
    "NetworkModel",
    "CompositeMark",
    "PropagationSample",
    "parse_model",
    "load_model",
    "model_to_dict",
    "dump_model",
    "dist_from_dict",
    "sample_scalar",
]

_PROB_TOL = 1e-12


class ModelError(ValueError):
    """Invalid network configuration.

    ``tier`` and ``field`` locate the offending entry when known.
    """

    def __init__(self, message: str, tier: int | None = None, field: str | None = None):
        where = []
        if tier is not None:
            where.append(f"tier {tier}")
        if field is not None:
            where.append(f"field '{field}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.tier = tier
        self.field = field


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise ModelError(f"{name} must be a finite positive number, got {value!r}")
    return value


class ScalarDistribution:
    """Base class for positive scalar mark distributions.

    Subclasses are frozen dataclasses; equality is field-wise.
    """

    kind: ClassVar[str] = ""
    atomic: ClassVar[bool] = False

    def mean(self) -> float:
        raise NotImplementedError

    def pdf(self, s: np.ndarray) -> np.ndarray:
        raise TypeError(f"{self.kind} distribution has no density")

    def cdf(self, t: float) -> float:
        raise NotImplementedError

    def sample(self, stream, n: int) -> np.ndarray:
        raise NotImplementedError

    def support_atoms(self) -> tuple[tuple[float, float], ...]:
        """(value, probability) pairs for atomic distributions."""
        raise TypeError(f"{self.kind} distribution is not atomic")

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(ScalarDistribution):
    value: float
    kind: ClassVar[str] = "constant"
    atomic: ClassVar[bool] = True

    def __post_init__(self):
        object.__setattr__(self, "value", _positive("constant value", self.value))

    def mean(self):
        return self.value

    def cdf(self, t):
        return 1.0 if t >= self.value else 0.0

    def sample(self, stream, n):
        return np.full(n, self.value)

    def support_atoms(self):
        return ((self.value, 1.0),)

    def to_dict(self):
        return {"kind": "constant", "value": self.value}


@dataclass(frozen=True)
class LogNormal(ScalarDistribution):
    """Log-normal with log-scale location ``mu`` and log-scale std ``sigma``.

    Build the mean-one variant with :meth:`mean_one`, which records the
    decibel spread so that serialization reproduces the original form.
    """

    mu: float
    sigma: float
    sigma_db: float | None = None
    kind: ClassVar[str] = "lognormal"

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ModelError(f"lognormal mu must be finite, got {self.mu!r}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0.0):
            raise ModelError(f"lognormal sigma must be >= 0, got {self.sigma!r}")

    @classmethod
    def mean_one(cls, sigma_db: float) -> "LogNormal":
        sigma_db = float(sigma_db)
        if not (math.isfinite(sigma_db) and sigma_db >= 0.0):
            raise ModelError(f"sigma_db must be >= 0, got {sigma_db!r}")
        sigma = sigma_db * math.log(10.0) / 10.0
        return cls(mu=-0.5 * sigma * sigma, sigma=sigma, sigma_db=sigma_db)

    def mean(self):
        return math.exp(self.mu + 0.5 * self.sigma**2)

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        pos = s > 0
        z = (np.log(s[pos]) - self.mu) / self.sigma
        out[pos] = np.exp(-0.5 * z * z) / (s[pos] * math.sqrt(2.0 * math.pi) * self.sigma)
        return out

    def cdf(self, t):
        if t <= 0.0:
            return 0.0
        if self.sigma == 0.0:
            return 1.0 if math.log(t) >= self.mu else 0.0
        return specfun.norm_cdf((math.log(t) - self.mu) / self.sigma)

    def sample(self, stream, n):
        return np.exp(self.mu + self.sigma * stream.normals(n))

    def to_dict(self):
        if self.sigma_db is not None:
            return {"kind": "lognormal", "sigma_db": self.sigma_db, "mean_one": True}
        return {"kind": "lognormal", "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class Exponential(ScalarDistribution):
    rate: float
    kind: ClassVar[str] = "exponential"

    def __post_init__(self):
        object.__setattr__(self, "rate", _positive("exponential rate", self.rate))

    def mean(self):
        return 1.0 / self.rate

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s >= 0, self.rate * np.exp(-self.rate * np.maximum(s, 0.0)), 0.0)

    def cdf(self, t):
        return 0.0 if t <= 0 else -math.expm1(-self.rate * t)

    def sample(self, stream, n):
        return -np.log1p(-stream.uniforms(n)) / self.rate

    def to_dict(self):
        return {"kind": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class Weibull(ScalarDistribution):
    k: float
    scale: float
    kind: ClassVar[str] = "weibull"

    def __post_init__(self):
        object.__setattr__(self, "k", _positive("weibull k", self.k))
        object.__setattr__(self, "scale", _positive("weibull scale", self.scale))

    def mean(self):
        return self.scale * specfun.gamma(1.0 + 1.0 / self.k)

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        x = np.maximum(s, 0.0) / self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (self.k / self.scale) * x ** (self.k - 1.0) * np.exp(-(x**self.k))
        return np.where(s > 0, out, 0.0)

    def cdf(self, t):
        return 0.0 if t <= 0 else -math.expm1(-((t / self.scale) ** self.k))

    def sample(self, stream, n):
        return self.scale * (-np.log1p(-stream.uniforms(n))) ** (1.0 / self.k)

    def to_dict(self):
        return {"kind": "weibull", "k": self.k, "scale": self.scale}


@dataclass(frozen=True)
class Nakagami(ScalarDistribution):
    """Nakagami-m amplitude distribution with shape ``m`` and spread ``omega``."""

    m: float
    omega: float
    kind: ClassVar[str] = "nakagami"

    def __post_init__(self):
        m = float(self.m)
        if not (math.isfinite(m) and m >= 0.5):
            raise ModelError(f"nakagami m must be >= 0.5, got {self.m!r}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "omega", _positive("nakagami omega", self.omega))

    def mean(self):
        m = self.m
        return math.exp(specfun.lgamma(m + 0.5) - specfun.lgamma(m)) * math.sqrt(self.omega / m)

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        m, om = self.m, self.omega
        x = np.maximum(s, 0.0)
        logc = math.log(2.0) + m * math.log(m) - specfun.lgamma(m) - m * math.log(om)
        with np.errstate(divide="ignore"):
            out = np.exp(logc + (2.0 * m - 1.0) * np.log(x) - (m / om) * x * x)
        return np.where(s > 0, out, 0.0)

    def cdf(self, t):
        if t <= 0:
            return 0.0
        return 1.0 - specfun.gammainc_upper(self.m, self.m * t * t / self.omega)

    def sample(self, stream, n):
        return np.sqrt(stream.gammas(self.m, n) * (self.omega / self.m))

    def to_dict(self):
        return {"kind": "nakagami", "m": self.m, "omega": self.omega}


@dataclass(frozen=True)
class Rice(ScalarDistribution):
    """Rician amplitude: ``|nu + sigma * (Z1 + i Z2)|`` for standard normals Z."""

    nu: float
    sigma: float
    kind: ClassVar[str] = "rice"

    def __post_init__(self):
        nu = float(self.nu)
        if not (math.isfinite(nu) and nu >= 0.0):
            raise ModelError(f"rice nu must be >= 0, got {self.nu!r}")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "sigma", _positive("rice sigma", self.sigma))

    def mean(self):
        s2 = self.sigma**2
        return (
            self.sigma
            * math.sqrt(math.pi / 2.0)
            * specfun.hyp1f1(-0.5, 1.0, -self.nu**2 / (2.0 * s2))
        )

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        s2 = self.sigma**2
        out = np.zeros_like(s)
        for i, x in np.ndenumerate(s):
            if x > 0:
                arg = x * self.nu / s2
                # scaled I0 keeps large arguments finite
                out[i] = (x / s2) * math.exp(-((x - self.nu) ** 2) / (2.0 * s2)) * specfun.bessel_i0e(arg)
        return out

    def cdf(self, t):
        if t <= 0:
            return 0.0
        val = specfun.quad(self.pdf, 0.0, t, 1e-13, rtol=1e-12, vectorized=True)
        return min(1.0, val)

    def sample(self, stream, n):
        z1 = stream.normals(n)
        z2 = stream.normals(n)
        return np.hypot(self.nu + self.sigma * z1, self.sigma * z2)

    def to_dict(self):
        return {"kind": "rice", "nu": self.nu, "sigma": self.sigma}


@dataclass(frozen=True)
class Discrete(ScalarDistribution):
    atoms: tuple[tuple[float, float], ...]
    kind: ClassVar[str] = "discrete"
    atomic: ClassVar[bool] = True

    def __post_init__(self):
        atoms = tuple((float(v), float(p)) for v, p in self.atoms)
        if not atoms:
            raise ModelError("discrete distribution needs at least one atom")
        for v, p in atoms:
            if not (math.isfinite(v) and v > 0.0):
                raise ModelError(f"discrete atom values must be positive, got {v!r}")
            if not (p >= 0.0):
                raise ModelError(f"discrete probabilities must be >= 0, got {p!r}")
        total = math.fsum(p for _, p in atoms)
        if abs(total - 1.0) > _PROB_TOL:
            raise ModelError(f"discrete probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "atoms", atoms)

    def mean(self):
        return math.fsum(v * p for v, p in self.atoms)

    def cdf(self, t):
        return min(1.0, math.fsum(p for v, p in self.atoms if v <= t))

    def sample(self, stream, n):
        values = np.array([v for v, _ in self.atoms])
        cum = np.cumsum([p for _, p in self.atoms])
        idx = np.searchsorted(cum, stream.uniforms(n) * cum[-1], side="right")
        return values[np.minimum(idx, len(values) - 1)]

    def support_atoms(self):
        return self.atoms

    def to_dict(self):
        return {"kind": "discrete", "atoms": [[v, p] for v, p in self.atoms]}


_DIST_KINDS = {
    "constant": (Constant, ("value",)),
    "exponential": (Exponential, ("rate",)),
    "weibull": (Weibull, ("k", "scale")),
    "nakagami": (Nakagami, ("m", "omega")),
    "rice": (Rice, ("nu", "sigma")),
}


def _number(d: dict, key: str) -> float:
    if key not in d:
        raise ModelError(f"missing parameter '{key}'")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ModelError(f"parameter '{key}' must be a number, got {type(v).__name__}")
    return float(v)


def dist_from_dict(d: Any) -> ScalarDistribution:
    """Build a distribution from its JSON object form."""
    if not isinstance(d, dict):
        raise ModelError(f"distribution must be an object, got {type(d).__name__}")
    kind = d.get("kind")
    if kind in _DIST_KINDS:
        cls, keys = _DIST_KINDS[kind]
        return cls(*(_number(d, k) for k in keys))
    if kind == "lognormal":
        if "sigma_db" in d:
            if d.get("mean_one") is not True:
                raise ModelError("lognormal with sigma_db requires \"mean_one\": true")
            return LogNormal.mean_one(_number(d, "sigma_db"))
        return LogNormal(_number(d, "mu"), _number(d, "sigma"))
    if kind == "discrete":
        atoms = d.get("atoms")
        if not isinstance(atoms, list) or not all(
            isinstance(a, list) and len(a) == 2 for a in atoms
        ):
            raise ModelError("discrete 'atoms' must be a list of [value, probability] pairs")
        return Discrete(tuple((float(v), float(p)) for v, p in atoms))
    raise ModelError(f"unknown distribution kind {kind!r}")


@dataclass(frozen=True)
class JointAtom:
    """One atom of a dependent joint mark distribution over (P, S, A, beta, T)."""

    power: float
    shadowing: float
    A: float
    beta: float
    threshold: float
    prob: float

    @property
    def s_tilde(self) -> float:
        return self.power * self.shadowing / self.A


_TIER_DISTS = ("power", "shadowing", "A", "beta", "threshold")


@dataclass(frozen=True)
class TierSpec:
    """One homogeneous Poisson tier of base stations.

    Marks are independent across the five coordinates unless
    ``joint_atoms`` is given, in which case they follow that finite joint
    distribution and the per-coordinate fields are derived marginals.
    """

    lam: float
    power: ScalarDistribution = field(default_factory=lambda: Constant(1.0))
    shadowing: ScalarDistribution = field(default_factory=lambda: Constant(1.0))
    A: ScalarDistribution = field(default_factory=lambda: Constant(1.0))
    beta: ScalarDistribution = field(default_factory=lambda: Constant(4.0))
    threshold: ScalarDistribution = field(default_factory=lambda: Constant(1.0))
    joint_atoms: tuple[JointAtom, ...] | None = None

    def __post_init__(self):
        lam = float(self.lam)
        if not (math.isfinite(lam) and lam > 0.0):
            raise ModelError(f"density must be finite and positive, got {self.lam!r}", field="lambda")
        object.__setattr__(self, "lam", lam)
        if self.joint_atoms is not None:
            atoms = tuple(self.joint_atoms)
            if not atoms:
                raise ModelError("joint_atoms must not be empty", field="joint_atoms")
            for a in atoms:
                for name in ("power", "shadowing", "A", "threshold"):
                    if not getattr(a, name) > 0.0:
                        raise ModelError(f"joint atom {name} must be positive", field="joint_atoms")
                if not a.beta > 2.0:
                    raise ModelError(f"path-loss exponent must exceed 2, got {a.beta}", field="beta")
                if a.prob < 0.0:
                    raise ModelError("joint atom probabilities must be >= 0", field="joint_atoms")
            total = math.fsum(a.prob for a in atoms)
            if abs(total - 1.0) > _PROB_TOL:
                raise ModelError(f"joint atom probabilities sum to {total!r}", field="joint_atoms")
            object.__setattr__(self, "joint_atoms", atoms)
            for name in _TIER_DISTS:
                object.__setattr__(self, name, _marginal(atoms, name))
            return
        if not isinstance(self.beta, (Constant, Discrete)):
            raise ModelError("path-loss exponent must be constant or discrete", field="beta")
        for b, _ in self.beta.support_atoms():
            if not b > 2.0:
                raise ModelError(f"path-loss exponent must exceed 2, got {b}", field="beta")

    @property
    def independent_marks(self) -> bool:
        return self.joint_atoms is None

    def beta_atoms(self) -> tuple[tuple[float, float], ...]:
        return self.beta.support_atoms()


def _marginal(atoms: tuple[JointAtom, ...], name: str) -> Discrete:
    acc: dict[float, float] = {}
    for a in atoms:
        acc[getattr(a, name)] = acc.get(getattr(a, name), 0.0) + a.prob
    total = math.fsum(acc.values())
    return Discrete(tuple((v, p / total) for v, p in sorted(acc.items())))


@dataclass(frozen=True)
class NetworkModel:
    """Independent superposition of one or more tiers."""

    tiers: tuple[TierSpec, ...]

    def __post_init__(self):
        tiers = tuple(self.tiers)
        if not tiers:
            raise ModelError("a network needs at least one tier")
        object.__setattr__(self, "tiers", tiers)

    def __len__(self) -> int:
        return len(self.tiers)

    def __iter__(self) -> Iterator[TierSpec]:
        return iter(self.tiers)

    def scaled(self, factor: float) -> "NetworkModel":
        """Same network with every tier density multiplied by ``factor``."""
        from dataclasses import replace

        return NetworkModel(tuple(replace(t, lam=t.lam * factor) for t in self.tiers))


@dataclass(frozen=True)
class CompositeMark:
    """Marks carried by one propagation point.

    ``s_tilde`` is ``P*S/A`` and is ``None`` for samplers that work on the
    half-line directly and never realize it.
    """

    s_tilde: float | None
    beta: float
    t: float
    tier_index: int


@dataclass
class PropagationSample:
    """Propagation losses ``y`` seen by the typical user, with their marks.

    Column arrays are aligned and sorted by ``y``; every ``y`` lies in
    ``(0, s_max]``.
    """

    y: np.ndarray
    t: np.ndarray
    tier: np.ndarray
    beta: np.ndarray
    s_tilde: np.ndarray | None
    s_max: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        order = np.argsort(self.y, kind="stable")
        self.y = np.asarray(self.y, dtype=float)[order]
        self.t = np.asarray(self.t, dtype=float)[order]
        self.tier = np.asarray(self.tier, dtype=np.int64)[order]
        self.beta = np.asarray(self.beta, dtype=float)[order]
        if self.s_tilde is not None:
            self.s_tilde = np.asarray(self.s_tilde, dtype=float)[order]

    def __len__(self) -> int:
        return len(self.y)

    @property
    def points(self) -> list[tuple[float, CompositeMark]]:
        st = self.s_tilde
        return [
            (
                float(self.y[i]),
                CompositeMark(
                    None if st is None else float(st[i]),
                    float(self.beta[i]),
                    float(self.t[i]),
                    int(self.tier[i]),
                ),
            )
            for i in range(len(self.y))
        ]


def sample_scalar(dist: ScalarDistribution, stream) -> float:
    """Draw one value of ``dist`` from ``stream``."""
    return float(dist.sample(stream, 1)[0])


def _tier_from_dict(i: int, d: Any) -> TierSpec:
    if not isinstance(d, dict):
        raise ModelError("tier must be an object", tier=i)
    if "lambda" not in d:
        raise ModelError("missing required field", tier=i, field="lambda")
    lam = d["lambda"]
    if isinstance(lam, bool) or not isinstance(lam, (int, float)):
        raise ModelError("must be a number", tier=i, field="lambda")
    independent = d.get("independent_marks", True)
    if not isinstance(independent, bool):
        raise ModelError("must be a boolean", tier=i, field="independent_marks")
    try:
        if "joint_atoms" in d:
            rows = d["joint_atoms"]
            if not isinstance(rows, list) or not all(isinstance(r, list) and len(r) == 6 for r in rows):
                raise ModelError(
                    "must be a list of [P, S, A, beta, T, prob] rows", tier=i, field="joint_atoms"
                )
            atoms = tuple(JointAtom(*(float(x) for x in r)) for r in rows)
            return TierSpec(lam=float(lam), joint_atoms=atoms)
        if not independent:
            raise ModelError(
                "dependent marks must be given as 'joint_atoms'", tier=i, field="independent_marks"
            )
        kwargs = {}
        for name in _TIER_DISTS:
            if name not in d:
                raise ModelError("missing required field", tier=i, field=name)
            try:
                kwargs[name] = dist_from_dict(d[name])
            except ModelError as exc:
                raise ModelError(str(exc), tier=i, field=name) from None
        return TierSpec(lam=float(lam), **kwargs)
    except ModelError as exc:
        if exc.tier is None:
            raise ModelError(str(exc), tier=i, field=exc.field) from None
        raise


def parse_model(config_text: str) -> NetworkModel:
    """Parse and validate a JSON network configuration.

    Raises
    ------
    ModelError
        On malformed JSON, schema violations, or domain violations such as
        a path-loss exponent not exceeding 2.
    """
    try:
        doc = json.loads(config_text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("tiers"), list):
        raise ModelError("top level must be an object with a 'tiers' list")
    return NetworkModel(tuple(_tier_from_dict(i, t) for i, t in enumerate(doc["tiers"])))


def load_model(path) -> NetworkModel:
    with open(path, encoding="utf-8") as fh:
        return parse_model(fh.read())


def model_to_dict(model: NetworkModel) -> dict:
    tiers = []
    for tier in model.tiers:
        if tier.joint_atoms is not None:
            tiers.append({
                "lambda": tier.lam,
                "independent_marks": False,
                "joint_atoms": [
                    [a.power, a.shadowing, a.A, a.beta, a.threshold, a.prob] for a in tier.joint_atoms
                ],
            })
            continue
        entry = {"lambda": tier.lam}
        for name in _TIER_DISTS:
            entry[name] = getattr(tier, name).to_dict()
        tiers.append(entry)
    return {"tiers": tiers}


def dump_model(model: NetworkModel) -> str:
    return json.dumps(model_to_dict(model), indent=2)
