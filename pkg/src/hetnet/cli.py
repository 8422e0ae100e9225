"""``hetnet`` command-line interface.

Exit codes: 0 on success, 2 on input errors, 3 when a simulation plan cannot
meet its missed-mass target.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import csvio
from .equivalence import (
    a_corrected_density,
    default_beta_prime,
    isotropic_representation,
    radial_table,
)
from .gof import binned_chi2, mark_consistency, time_change_ks
from .hata import HataParams, HataValidityWarning, hata_params, single_tier_network, two_tier_network
from .intensity import build_intensity
from .model import ModelError, load_model
from .simulate import InfeasiblePlan, SimPlan, run_plan, truncation_radius

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 2, 3

_MODE_NAMES = {
    "original": "spatial-original",
    "isotropic": "spatial-isotropic",
    "direct": "direct-propagation",
}


class InputError(Exception):
    pass


def _bool(text: str) -> bool:
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _grid(lo: float, hi: float, points: int, log: bool) -> np.ndarray:
    if points < 2:
        raise InputError("--points must be at least 2")
    if log:
        if not 0 < lo < hi:
            raise InputError("log grid needs 0 < lower bound < upper bound")
        return np.logspace(math.log10(lo), math.log10(hi), points)
    return np.linspace(lo, hi, points)


def _load(path) -> object:
    try:
        return load_model(path)
    except FileNotFoundError:
        raise InputError(f"config not found: {path}") from None


def cmd_intensity(args) -> int:
    model = _load(args.config)
    if not args.s_max > 0:
        raise InputError("--s-max must be positive")
    s_min = args.s_min if args.s_min is not None else args.s_max * 1e-6
    s = _grid(0.0 if not args.log_grid else s_min, args.s_max, args.points, args.log_grid)
    im = build_intensity(model)
    lam = np.atleast_1d(im(s, args.t))
    csvio.write_table(args.out, ["s", "lambda"], zip(s.tolist(), lam.tolist()))
    return EXIT_OK


def cmd_equivalent(args) -> int:
    model = _load(args.config)
    if args.beta_prime is not None and not args.beta_prime > 0:
        raise InputError("--beta-prime must be positive")
    if not args.r_max > 0:
        raise InputError("--r-max must be positive")
    iso = isotropic_representation(model, args.beta_prime)
    if args.log_grid:
        r_min = args.r_min if args.r_min is not None else args.r_max * 1e-3
        r = _grid(r_min, args.r_max, args.points, True)
    else:
        # the origin is skipped: densities with negative exponents diverge there
        r = _grid(args.r_max / args.points, args.r_max, args.points, False)
    header, rows = radial_table(iso, r, corrected=args.corrected)
    csvio.write_table(args.out, header, rows)
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = _load(args.config)
    try:
        plan = SimPlan(args.s_max, args.eps, args.seed, args.reps, _MODE_NAMES[args.mode])
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.beta_prime is not None and not args.beta_prime > 0:
        raise InputError("--beta-prime must be positive")
    im = build_intensity(model)
    meta = {
        "seed": plan.master_seed,
        "mode": plan.mode,
        "s_max": plan.s_max,
        "replications": plan.replications,
        "epsilon": plan.epsilon,
        "lambda_s_max": im(plan.s_max),
        "radius": None,
        "missed_mass": 0.0,
        "beta_prime": None,
    }
    if plan.mode == "spatial-original":
        meta["radius"], meta["missed_mass"] = truncation_radius(model, plan.s_max, plan.epsilon, plan.r_cap)
    elif plan.mode == "spatial-isotropic":
        bp = args.beta_prime if args.beta_prime is not None else default_beta_prime(model)
        meta["beta_prime"] = bp
        meta["radius"] = plan.s_max ** (1.0 / bp)
    samples = run_plan(plan, model, meta["beta_prime"])
    csvio.write_samples(args.out, samples, meta)
    return EXIT_OK


def _mass_edges(im, s_max: float, bins: int) -> np.ndarray:
    # edges with equal expected counts
    total = im(s_max)
    inner = im.inverse(total * np.arange(1, bins) / bins)
    return np.concatenate([[0.0], inner, [s_max]])


def cmd_gof(args) -> int:
    model = _load(args.config)
    try:
        samples, meta = csvio.read_samples(args.samples, args.s_max)
    except FileNotFoundError:
        raise InputError(f"samples not found: {args.samples}") from None
    im = build_intensity(model)
    s_max = samples[0].s_max
    if args.bins < 2:
        raise InputError("--bins must be at least 2")
    if args.method == "ks":
        from .simulate import pool

        report = time_change_ks(pool(samples), im, with_count=args.with_count)
    elif args.method == "chi2":
        report = binned_chi2(samples, im, _mass_edges(im, s_max, args.bins))
    else:
        bp = args.beta_prime or meta.get("beta_prime") or default_beta_prime(model)
        iso = isotropic_representation(model, bp)
        r_edges = _mass_edges(im, s_max, args.bins) ** (1.0 / bp)
        report = mark_consistency(samples, iso, r_edges)
    text = report.to_json(args.alpha) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_hata(args) -> int:
    try:
        p = HataParams(args.height, args.user_height, args.freq, args.env)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", HataValidityWarning)
        beta, A = hata_params(p)
    out = {"beta": beta, "A": A, "warnings": [str(w.message) for w in caught]}
    sys.stdout.write(json.dumps(out) + "\n")
    return EXIT_OK


FIGURE_FILES = {
    ("two", True): "two_tier_shadowed.csv",
    ("two", False): "two_tier_unshadowed.csv",
    ("single", True): "single_tier_shadowed.csv",
    ("single", False): "single_tier_unshadowed.csv",
}


def figure_curves(sigma_db: float, r: np.ndarray, beta_prime: float | None = None) -> dict:
    """A-corrected radial densities for the two-tier and merged single-tier networks.

    Keys are ``(kind, shadowed)``; values are ``(header, rows)`` with columns
    ``r, phi_corrected, term_1..term_K``. The reference exponent defaults to
    that of the single-tier network.
    """
    single_beta = single_tier_network().tiers[0].beta.value
    bp = single_beta if beta_prime is None else beta_prime
    out = {}
    for shadowed in (True, False):
        sd = sigma_db if shadowed else 0.0
        for kind, net in (("two", two_tier_network(sd)), ("single", single_tier_network(sd))):
            mix = a_corrected_density(isotropic_representation(net, bp))
            parts = np.atleast_2d(mix.terms(r))
            header = ["r", "phi_corrected"] + [f"term_{j + 1}" for j in range(parts.shape[0])]
            rows = np.column_stack([r, parts.sum(axis=0), parts.T]).tolist()
            out[(kind, shadowed)] = (header, rows)
    return out


def cmd_figure1(args) -> int:
    if args.sigma_db < 0:
        raise InputError("--sigma-db must be non-negative")
    r = _grid(args.r_min, args.r_max, args.points, True)
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for key, (header, rows) in figure_curves(args.sigma_db, r).items():
            csvio.write_table(out_dir / FIGURE_FILES[key], header, rows)
    except OSError as exc:
        raise InputError(f"cannot write to {out_dir}: {exc}") from None
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hetnet", description="Propagation-process tools for heterogeneous Poisson networks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("intensity", help="tabulate Lambda(s, t)")
    p.add_argument("--config", required=True)
    p.add_argument("--s-max", type=float, required=True)
    p.add_argument("--s-min", type=float, default=None, help="lower end of a log grid")
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--t", type=float, default=math.inf)
    p.add_argument("--log-grid", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_intensity)

    p = sub.add_parser("equivalent", help="tabulate the isotropic radial density and mark weights")
    p.add_argument("--config", required=True)
    p.add_argument("--beta-prime", type=float, default=None)
    p.add_argument("--r-max", type=float, required=True)
    p.add_argument("--r-min", type=float, default=None, help="lower end of a log grid")
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--corrected", type=_bool, default=True)
    p.add_argument("--log-grid", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_equivalent)

    p = sub.add_parser("simulate", help="sample propagation losses")
    p.add_argument("--config", required=True)
    p.add_argument("--mode", choices=sorted(_MODE_NAMES), default="direct")
    p.add_argument("--s-max", type=float, required=True)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--beta-prime", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gof", help="test samples against a model's intensity")
    p.add_argument("--samples", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--method", choices=("ks", "chi2", "marks"), default="ks")
    p.add_argument("--with-count", action="store_true", help="ks: also test the point count")
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--beta-prime", type=float, default=None)
    p.add_argument("--s-max", type=float, default=None, help="override the sidecar value")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("hata", help="COST231-Hata power-law parameters")
    p.add_argument("--height", type=float, required=True)
    p.add_argument("--user-height", type=float, default=1.0)
    p.add_argument("--freq", type=float, default=1800.0)
    p.add_argument("--env", default="metropolitan")
    p.set_defaults(func=cmd_hata)

    p = sub.add_parser("figure1", help="radial density curves of the two-tier example")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--sigma-db", type=float, default=5.0)
    p.add_argument("--r-min", type=float, default=1e-2)
    p.add_argument("--r-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=200)
    p.set_defaults(func=cmd_figure1)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasiblePlan as exc:
        print(f"error: {exc} (achievable missed mass {exc.achievable:.6g})", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InputError, ModelError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
