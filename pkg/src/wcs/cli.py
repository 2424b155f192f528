"""Command-line surface.

Results go to stdout as JSON (frontier tables optionally to --out as CSV).
Exit codes: 0 success, 2 usage error, 3 domain error. Domain errors emit a
JSON payload {"code": <error class>, "message": ...} on stderr.

Input file schemas (CSV with header row):
  cost file:           cost[,prob]       missing prob column means uniform
  demand file:         demand[,prob]
  classification file: label,x1,...,xd   labels +-1

The environment variable WCS_SEED overrides the default --seed of the
generating subcommands when --seed is not given explicitly.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import dro, oracle, riskstats, sensitivity, worstcase
from .core import (
    Budgeted,
    Combination,
    PHI_BY_NAME,
    Scenario,
    SmoothPhi,
    SymmetricBox,
    TotalVariation,
    WassersteinL1,
    interpolated_cost,
    validate,
)
from .errors import WcsError
from .rng import SplitMix64

FAMILY_CHOICES = ("phi", "penalty-phi", "tv", "budgeted", "combo", "box", "wasserstein")


def _default_seed() -> int:
    return int(os.environ.get("WCS_SEED", "0"))


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _emit(payload: dict) -> None:
    sys.stdout.write(json.dumps(_jsonable(payload)) + "\n")


def _read_two_column(path: str, primary: str) -> tuple[list[float], list[float] | None]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0].strip() != primary:
        raise WcsError(f"{path}: expected header '{primary}[,prob]'")
    has_prob = len(rows[0]) > 1 and rows[0][1].strip() == "prob"
    vals, probs = [], []
    for row in rows[1:]:
        if not row:
            continue
        vals.append(float(row[0]))
        if has_prob:
            probs.append(float(row[1]))
    return vals, (probs if has_prob else None)


def _read_classification(path: str) -> dro.LabeledDataset:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0].strip() != "label":
        raise WcsError(f"{path}: expected header 'label,x1,...,xd'")
    labels = [float(r[0]) for r in rows[1:] if r]
    feats = [[float(v) for v in r[1:]] for r in rows[1:] if r]
    return dro.labeled_dataset(feats, labels)


def _scenario_from_args(args) -> Scenario:
    if getattr(args, "costs", None) is not None:
        probs = _floats(args.probs) if args.probs else None
        return validate(_floats(args.costs), probs)
    vals, probs = _read_two_column(args.cost_file, "cost")
    return validate(vals, probs)


def _family_from_args(args):
    name = args.family
    if name in ("phi", "penalty-phi"):
        return SmoothPhi(PHI_BY_NAME[args.phi])
    if name == "tv":
        return TotalVariation()
    if name == "budgeted":
        return Budgeted()
    if name == "combo":
        return Combination(args.alpha)
    if name == "box":
        return SymmetricBox()
    if name == "wasserstein":
        return WassersteinL1(cost_model=None)
    raise WcsError(f"unknown family {name!r}")


def _support_points(args, n: int) -> np.ndarray:
    if getattr(args, "points", None):
        pts = np.array(_floats(args.points))
        if pts.size != n:
            raise WcsError(f"{pts.size} support points for {n} costs")
        return pts
    return np.arange(n, dtype=float)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_sensitivity(args) -> int:
    s = _scenario_from_args(args)
    name = args.family
    if name == "phi":
        rep = sensitivity.smooth_phi_sensitivity(s, PHI_BY_NAME[args.phi])
    elif name == "penalty-phi":
        rep = sensitivity.penalty_phi_sensitivity(s, PHI_BY_NAME[args.phi])
    elif name == "tv":
        rep = sensitivity.tv_sensitivity(s)
    elif name == "budgeted":
        rep = sensitivity.budgeted_sensitivity(s)
    elif name == "combo":
        rep = sensitivity.combination_sensitivity(s, args.alpha)
    elif name == "box":
        rep = sensitivity.symmetric_box_sensitivity(s)
    else:  # wasserstein over piecewise-linear interpolation of the costs
        pts = _support_points(args, s.n)
        cost = interpolated_cost(pts, s.costs)
        rep = sensitivity.wasserstein_sensitivity(pts, s.probs, cost.ratio_from)
    _emit({"value": rep.value, "family": name, "growth": rep.growth})
    return 0


def _dual_payload(dual) -> dict | None:
    if dual is None:
        return None
    if isinstance(dual, worstcase.SmoothPhiDual):
        return {"delta": dual.delta, "c": dual.c}
    if isinstance(dual, worstcase.TvDual):
        return {"theta": dual.theta, "lambda": dual.lam}
    if isinstance(dual, worstcase.BudgetedDual):
        return {"slope": dual.slope}
    if isinstance(dual, worstcase.WassersteinDual):
        return {
            "lambda": dual.lam,
            "validity_radius": dual.validity_radius,
            "attained": dual.attained,
        }
    return None


def _cmd_worst_case(args) -> int:
    s = _scenario_from_args(args)
    name = args.family
    if name == "wasserstein":
        pts = _support_points(args, s.n)
        cost = interpolated_cost(pts, s.costs)
        res = worstcase.wc_wasserstein_pl(pts, s.probs, cost, args.eps)
    elif name == "phi":
        fam = SmoothPhi(PHI_BY_NAME[args.phi])
        res = worstcase.worst_case(s, fam, args.eps)
    else:
        res = worstcase.worst_case(s, _family_from_args(args), args.eps)
    _emit(
        {
            "family": name,
            "eps": args.eps,
            "value": res.value,
            "q": res.worst_q,
            "dual": _dual_payload(res.dual),
            "degenerate": res.degenerate,
            "clamped": res.clamped,
        }
    )
    return 0


def _demand_from_args(args) -> Scenario:
    if args.demand_file:
        vals, probs = _read_two_column(args.demand_file, "demand")
        return validate(vals, probs)
    if not args.gen:
        raise WcsError("need --demand-file or --gen n,muL,muH,pL,seed")
    parts = args.gen.split(",")
    n = int(parts[0])
    mu_low = float(parts[1]) if len(parts) > 1 else 10.0
    mu_high = float(parts[2]) if len(parts) > 2 else 100.0
    p_low = float(parts[3]) if len(parts) > 3 else 0.9
    seed = int(parts[4]) if len(parts) > 4 else _default_seed()
    return dro.demand_scenario(dro.gen_mixture_demand(n, mu_low, mu_high, p_low, seed))


def _params_from_args(args) -> dro.NewsvendorParams:
    return dro.NewsvendorParams(r=args.r, c=args.c, q=args.q, s=args.s)


def _eps_list_from_args(args) -> list[float]:
    if args.eps_list:
        return _floats(args.eps_list)
    if args.eps_geom:
        start, stop, count = args.eps_geom.split(":")
        return list(np.geomspace(float(start), float(stop), int(count)))
    raise WcsError("need --eps-list or --eps-geom start:stop:count")


def _cmd_frontier(args) -> int:
    fam = _family_from_args(args)
    eps_list = _eps_list_from_args(args)
    if args.data_file or args.gen_class:
        data = _classification_from_args(args)
        points = dro.frontier(
            data, None, fam, eps_list, args.measure,
            phi=PHI_BY_NAME[args.phi], alpha=args.alpha,
        )
    else:
        if args.r is None or args.c is None:
            raise WcsError("newsvendor frontier needs --r and --c (or use --data-file/--gen-class)")
        params = _params_from_args(args)
        demand = _demand_from_args(args)
        points = dro.frontier(
            params, demand, fam, eps_list, args.measure,
            phi=PHI_BY_NAME[args.phi], alpha=args.alpha,
        )
    if args.out:
        with open(args.out, "w", newline="") as fh:
            # vector decisions (weight fits) summarize to their 2-norm in CSV
            fh.write("eps,decision,nominal_mean,sensitivity\n")
            for pt in points:
                dec = pt.decision
                scalar = float(np.linalg.norm(dec)) if isinstance(dec, np.ndarray) else float(dec)
                fh.write(
                    f"{float(pt.eps)!r},{scalar!r},"
                    f"{float(pt.nominal_mean)!r},{float(pt.sensitivity)!r}\n"
                )
    else:
        _emit(
            {
                "family": args.family,
                "measure": args.measure,
                "points": [
                    {
                        "eps": pt.eps,
                        "decision": pt.decision,
                        "nominal_mean": pt.nominal_mean,
                        "sensitivity": pt.sensitivity,
                    }
                    for pt in points
                ],
            }
        )
    return 0


def _cmd_solve_newsvendor(args) -> int:
    params = _params_from_args(args)
    demand = _demand_from_args(args)
    if args.family is None:
        x = dro.saa_newsvendor(params, demand)
        s_x = dro.cost_scenario(params, demand, x)
        _emit({"x": x, "value": riskstats.mean(s_x), "eps": 0.0, "family": "saa"})
        return 0
    if args.eps is None:
        raise WcsError("--eps is required with --family")
    sol = dro.dro_newsvendor(params, demand, _family_from_args(args), args.eps)
    _emit({"x": sol.x, "value": sol.worst_case.value, "eps": args.eps, "family": args.family})
    return 0


def _classification_from_args(args) -> dro.LabeledDataset:
    if args.data_file:
        return _read_classification(args.data_file)
    if args.gen_class:
        parts = args.gen_class.split(",")
        n, d = int(parts[0]), int(parts[1])
        margin = float(parts[2]) if len(parts) > 2 else 1.0
        seed = int(parts[3]) if len(parts) > 3 else _default_seed()
        return dro.gen_synth_classification(n, d, margin, seed)
    raise WcsError("need --data-file or --gen-class n,d,margin,seed")


def _cmd_solve_logreg(args) -> int:
    data = _classification_from_args(args)
    fit, rep = dro.logreg_wasserstein(data, args.eps, tol=args.tol)
    _emit(
        {
            "eps": args.eps,
            "w": fit.w,
            "objective": fit.objective,
            "grad_norm": fit.grad_norm,
            "separable": fit.separable,
            "sensitivity": rep.value,
        }
    )
    return 0


def _cmd_verify(args) -> int:
    trials = args.trials
    seed = args.seed if args.seed is not None else _default_seed()
    report: dict = {}

    measures = {
        "phi": lambda s: sensitivity.smooth_phi_sensitivity(s, PHI_BY_NAME["chi2"]).value,
        "tv": lambda s: sensitivity.tv_sensitivity(s).value,
        "budgeted": lambda s: sensitivity.budgeted_sensitivity(s).value,
        "combo": lambda s: sensitivity.combination_sensitivity(s, 0.5).value,
        "box": lambda s: sensitivity.symmetric_box_sensitivity(s).value,
    }
    axioms = {}
    for name, m in measures.items():
        axioms[name] = oracle.deviation_axioms(m, trials, seed).all_passed
    axioms["penalty-phi"] = oracle.deviation_axioms(
        lambda s: sensitivity.penalty_phi_sensitivity(s, PHI_BY_NAME["chi2"]).value,
        trials,
        seed,
        homogeneity_degree=2.0,
    ).all_passed
    report["axioms"] = axioms

    rng = SplitMix64(seed + 1)
    fd_ok = True
    worst_gap = 0.0
    for _ in range(min(trials, 50)):
        s = oracle.random_scenario(rng, 2, 4, min_prob=1e-3)
        checks = [
            (
                sensitivity.smooth_phi_sensitivity(s, PHI_BY_NAME["chi2"]).value,
                lambda e, s=s: worstcase.wc_chi2(s, e).value,
                "sqrt",
                [10.0**-k for k in range(2, 9)],
            ),
            (
                sensitivity.tv_sensitivity(s).value,
                lambda e, s=s: worstcase.wc_tv(s, e).value,
                "linear",
                [float(np.min(s.probs)) * 10.0**-k for k in range(1, 5)],
            ),
            (
                sensitivity.budgeted_sensitivity(s).value,
                lambda e, s=s: worstcase.wc_budgeted(s, e).value,
                "linear",
                [10.0**-k for k in range(2, 6)],
            ),
        ]
        for closed, vfun, growth, eps_seq in checks:
            est = oracle.fd_sensitivity(vfun, growth, eps_seq).estimate
            gap = abs(est - closed) / max(1.0, abs(closed))
            worst_gap = max(worst_gap, gap)
            fd_ok = fd_ok and gap <= 1e-3
    report["closed_form_vs_fd"] = {"passed": fd_ok, "worst_relative_gap": worst_gap}

    rng = SplitMix64(seed + 2)
    bounds_ok = True
    for _ in range(trials):
        n = rng.randint(2, 6)
        s = validate([-10.0 + 20.0 * rng.uniform() for _ in range(n)])
        sv = math.sqrt(riskstats.variance(s))
        if sv > sensitivity.tv_sensitivity(s).value + 1e-9:
            bounds_ok = False
        alpha = 0.5 + 0.45 * rng.uniform()
        dev = riskstats.cvar_deviation(s, alpha)
        if dev > riskstats.c_alpha_n(n, alpha) * sv + 1e-9:
            bounds_ok = False
    report["bounds"] = {"passed": bounds_ok}

    passed = all(axioms.values()) and fd_ok and bounds_ok
    report["passed"] = passed
    _emit(report)
    if not passed:
        raise WcsError("verification failed; see report")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_scenario_flags(p: argparse.ArgumentParser):
    p.add_argument("--costs", help="comma-separated cost vector")
    p.add_argument("--probs", help="comma-separated probabilities (default uniform)")
    p.add_argument("--cost-file", help="CSV with header cost[,prob]")
    p.add_argument("--phi", choices=("chi2", "kl"), default="chi2")
    p.add_argument("--alpha", type=float, default=0.95, help="CVaR level for combo")
    p.add_argument("--points", help="support points for wasserstein (default 0..n-1)")


def _add_newsvendor_flags(p: argparse.ArgumentParser, required: bool = True):
    p.add_argument("--r", type=float, required=required, help="unit revenue")
    p.add_argument("--c", type=float, required=required, help="unit order cost")
    p.add_argument("--q", type=float, default=0.0, help="unit salvage value")
    p.add_argument("--s", type=float, default=0.0, help="unit shortage penalty")
    p.add_argument("--demand-file", help="CSV with header demand[,prob]")
    p.add_argument("--gen", help="synthetic demand: n,muL,muH,pL,seed")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="wcs",
        description="Worst-case sensitivities, worst-case distributions, and "
        "mean-sensitivity frontiers for DRO over discrete scenarios.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sensitivity", help="Table of closed-form worst-case sensitivities")
    p.add_argument("--family", choices=FAMILY_CHOICES, required=True)
    _add_scenario_flags(p)
    p.set_defaults(fn=_cmd_sensitivity)

    p = sub.add_parser("worst-case", help="exact V(eps), q(eps) and dual certificate")
    p.add_argument(
        "--family", choices=("phi", "tv", "budgeted", "combo", "box", "wasserstein"), required=True
    )
    p.add_argument("--eps", type=float, required=True)
    _add_scenario_flags(p)
    p.set_defaults(fn=_cmd_worst_case)

    p = sub.add_parser("frontier", help="mean-sensitivity frontier sweep")
    p.add_argument(
        "--family", choices=("phi", "tv", "budgeted", "combo", "box", "wasserstein"), required=True
    )
    p.add_argument("--eps-list", help="comma-separated ascending eps values")
    p.add_argument("--eps-geom", help="start:stop:count geometric eps grid")
    p.add_argument("--measure", choices=FAMILY_CHOICES, required=True)
    p.add_argument("--phi", choices=("chi2", "kl"), default="chi2")
    p.add_argument("--alpha", type=float, default=0.95)
    p.add_argument(
        "--out",
        help="write CSV (eps,decision,nominal_mean,sensitivity) here; vector "
        "decisions are summarized by their 2-norm",
    )
    _add_newsvendor_flags(p, required=False)
    p.add_argument("--data-file", help="CSV label,x1..xd: sweep the robust logistic fit instead")
    p.add_argument("--gen-class", help="synthetic classification data: n,d,margin,seed")
    p.set_defaults(fn=_cmd_frontier)

    p = sub.add_parser("solve-newsvendor", help="SAA or DRO order quantity")
    _add_newsvendor_flags(p)
    p.add_argument("--family", choices=("phi", "tv", "budgeted", "combo", "box", "wasserstein"))
    p.add_argument("--eps", type=float)
    p.add_argument("--phi", choices=("chi2", "kl"), default="chi2")
    p.add_argument("--alpha", type=float, default=0.95)
    p.set_defaults(fn=_cmd_solve_newsvendor)

    p = sub.add_parser("solve-logreg", help="norm-regularized (transport-robust) logistic fit")
    p.add_argument("--data-file", help="CSV with header label,x1,...,xd")
    p.add_argument("--gen-class", help="synthetic data: n,d,margin,seed")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(fn=_cmd_solve_logreg)

    p = sub.add_parser("verify", help="axioms, oracle-vs-closed-form, and bound checks")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_verify)

    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (WcsError, ValueError) as exc:
        payload = {"code": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(payload) + "\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
