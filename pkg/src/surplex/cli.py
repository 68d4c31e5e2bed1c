"""Capital adequacy tests on finite scenario sets.

Usage: ``surplex <command> [options]``.
Commands: evaluate, check, decompose, bound, dual, arbitrage.  Reports are
JSON (the contract) or a fixed-width text rendering.  Exit status is 0 on
success, 1 when ``--strict`` is set and a property violation was found, and
2 on input errors.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import sys

import numpy as np

from . import __version__
from .acceptance import (
    CheckBudget,
    Verdict,
    accepts,
    check_cone,
    check_convex,
    check_monotone,
    check_surplus_invariant,
    resolve_space,
)
from .dominance import StepCdf, closed_form_bound, construct_bound, tightness_envelope, verify_bound
from .errors import DecompositionMismatch, PCFull, SurplexError
from .io import load_scenarios, load_spec
from .numeraire import RescalingFactor, arbitrage_search, check_numeraire_invariance
from .prob_core import RandVar, uniform_space
from .risk_measures import es, expected_tail_loss, var
from .structure import decompose, dual_membership_check, refined_dual_grid

PROPERTIES = ("monotone", "convex", "cone", "surplus_invariant", "numeraire_invariant")
DEFAULT_QUANTILES = (0.001, 0.01, 0.05, 0.1, 0.25, 0.5)


class InputError(SurplexError):
    pass


# --------------------------------------------------------------------------
# JSON helpers
# --------------------------------------------------------------------------


def _plain(obj):
    """Convert report objects to JSON-ready values; non-finite floats
    become the strings "inf", "-inf", "nan"."""
    if hasattr(obj, "to_json"):
        return _plain(obj.to_json())
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, RandVar):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def _dumps(report) -> str:
    # json writes floats with repr, the shortest string that round-trips
    return json.dumps(_plain(report), indent=2, sort_keys=False, allow_nan=False) + "\n"


def _render_text(report) -> str:
    lines = [f"surplex {report['version']}  command={report['command']}  seed={report['seed']}"]
    results = _plain(report["results"])

    def table(rows):
        keys = []
        for r in rows:
            keys += [k for k in r if k not in keys and not isinstance(r[k], (dict, list))]
        width = {k: max(len(k), *(len(_fmt(r.get(k, ""))) for r in rows)) for k in keys}
        out = ["  ".join(k.ljust(width[k]) for k in keys)]
        out += ["  ".join(_fmt(r.get(k, "")).ljust(width[k]) for k in keys) for r in rows]
        return out

    def walk(obj, indent=0):
        pad = " " * indent
        if isinstance(obj, list) and obj and all(isinstance(r, dict) for r in obj):
            lines.extend(pad + s for s in table(obj))
        elif isinstance(obj, dict):
            for k, v in obj.items():
                if isinstance(v, list) and not any(isinstance(e, (dict, list)) for e in v):
                    lines.append(f"{pad}{k}: {_fmt_list(v)}")
                elif isinstance(v, (dict, list)) and v:
                    lines.append(f"{pad}{k}:")
                    walk(v, indent + 2)
                else:
                    lines.append(f"{pad}{k}: {_fmt(v)}")
        else:
            lines.append(pad + _fmt(obj))

    walk(results)
    return "\n".join(lines) + "\n"


TEXT_LIST_MAX = 12


def _fmt_list(v: list) -> str:
    # long arrays are abbreviated in text reports; JSON keeps every entry
    if len(v) <= TEXT_LIST_MAX:
        return f"[{', '.join(_fmt(e) for e in v)}]"
    head = ", ".join(_fmt(e) for e in v[:3])
    tail = ", ".join(_fmt(e) for e in v[-3:])
    return f"[{head}, ... {len(v) - 6} more ..., {tail}]"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    if v is None:
        return "-"
    return str(v)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _space_and_columns(args):
    if args.scenarios:
        return load_scenarios(args.scenarios, normalize=args.normalize)
    if args.atoms < 1:
        raise InputError("--atoms must be >= 1")
    return uniform_space(args.atoms), {}


def _spec(args, space):
    if not args.spec:
        raise InputError(f"{args.command} needs --spec")
    return load_spec(args.spec, space)


def _budget(args) -> CheckBudget:
    if args.budget < 1:
        raise InputError("--budget must be >= 1")
    return CheckBudget(samples=args.budget, seed=args.seed)


def _alphas(args, spec=None) -> list:
    if args.alpha_grid:
        return list(args.alpha_grid)
    if args.alpha is not None:
        return [args.alpha]
    a = getattr(spec, "alpha", None)
    return [a if a is not None else 0.05]


def cmd_evaluate(args):
    space, cols = _space_and_columns(args)
    if not cols:
        raise InputError("evaluate needs --scenarios with at least one position column")
    spec = _spec(args, space)
    alphas = _alphas(args, spec)
    rows = []
    for name, X in cols.items():
        row = {"name": name, "accepted": accepts(spec, X, slack=args.slack),
               "prob_default": space.prob(X.values < 0)}
        for a in alphas:
            suffix = "" if len(alphas) == 1 else f"@{a!r}"
            row["alpha" + suffix] = a
            row["var" + suffix] = var(X, a)
            row["es" + suffix] = es(X, a)
            row["etl" + suffix] = expected_tail_loss(X, a)
        rows.append(row)
    return {"spec": spec.to_json(), "positions": rows}, False


def cmd_check(args):
    space, _ = _space_and_columns(args)
    spec = _spec(args, space)
    space = resolve_space(spec, space)
    budget = _budget(args)
    wanted = args.properties or list(PROPERTIES)
    fns = {
        "monotone": check_monotone,
        "convex": check_convex,
        "cone": check_cone,
        "surplus_invariant": check_surplus_invariant,
        "numeraire_invariant": check_numeraire_invariance,
    }
    out = {}
    for p in wanted:
        if p not in fns:
            raise InputError(f"unknown property {p!r}; choose from {', '.join(PROPERTIES)}")
        v: Verdict = fns[p](spec, budget, space)
        out[p] = v.to_json()
    summary = {p: out[p]["holds"] for p in wanted}
    res = {"spec": spec.to_json(), "atoms": space.n, "summary": summary, "verdicts": out}
    if {"cone", "surplus_invariant", "numeraire_invariant"} <= set(wanted):
        res["numeraire_equivalence_consistent"] = (
            summary["numeraire_invariant"] == (summary["cone"] and summary["surplus_invariant"]))
    return res, not all(summary.values())


def cmd_decompose(args):
    space, _ = _space_and_columns(args)
    spec = _spec(args, space)
    space = resolve_space(spec, space)
    try:
        part = decompose(spec, cap_max=args.cap_max, verify_budget=_budget(args), space=space)
    except DecompositionMismatch as exc:
        return {"spec": spec.to_json(), "decomposed": False, "error": "DecompositionMismatch",
                "message": str(exc), "witness": exc.witness, "accepted": exc.actual,
                "predicted": exc.predicted, "partition": exc.partition}, True
    except PCFull as exc:
        return {"spec": spec.to_json(), "decomposed": False, "error": "PCFull", "message": str(exc)}, True
    return {"spec": spec.to_json(), "decomposed": True, "partition": part}, False


def cmd_bound(args):
    quantiles = list(args.alpha_grid or DEFAULT_QUANTILES)
    if args.spec:
        space, _ = _space_and_columns(args)
        spec = _spec(args, space)
        bound = closed_form_bound(spec, n_points=args.points)
        res = {"spec": spec.to_json(), "source": "closed_form", "bound": bound,
               "quantiles": bound.quantile_table(quantiles)}
        violated = False
        if args.verify:
            space = resolve_space(spec, space)
            part = decompose(spec, verify_budget=CheckBudget(samples=min(args.budget, 2000), seed=args.seed),
                             space=space)
            v = verify_bound(spec, part, bound, budget=_budget(args))
            res["verification"] = v.to_json()
            violated = not v.holds
        return res, violated
    if not args.scenarios:
        raise InputError("bound needs --spec, or --scenarios with nonpositive member columns")
    _, cols = load_scenarios(args.scenarios, normalize=args.normalize)
    if not cols:
        raise InputError("no member columns in scenario file")
    try:
        env = tightness_envelope(cols.values())
    except ValueError as exc:
        raise InputError(str(exc)) from None
    bound = construct_bound(env, margin=args.margin)
    return {"source": "envelope", "members": list(cols), "envelope": env, "bound": bound,
            "quantiles": bound.quantile_table(quantiles)}, False


def cmd_dual(args):
    space, cols = _space_and_columns(args)
    if not cols:
        raise InputError("dual needs --scenarios with at least one position column")
    spec = _spec(args, space)
    rows = []
    for name, X in cols.items():
        grid = refined_dual_grid(spec, X, seed=args.seed) if args.refined else None
        v = dual_membership_check(spec, X, grid, tol=args.tol)
        rows.append({"name": name, "dual_holds": v.holds, "accepted": v.accepted, "agrees": v.agrees,
                     "min_slack": v.min_slack, "directions": v.checked,
                     "worst_direction": None if v.worst is None else v.worst.tolist()})
    return {"spec": spec.to_json(), "refined": bool(args.refined), "positions": rows}, \
        not all(r["agrees"] for r in rows)


def cmd_arbitrage(args):
    if args.alpha is None:
        raise InputError("arbitrage needs --alpha")
    if args.rate is not None:
        if args.scenarios:
            space, _ = load_scenarios(args.scenarios, normalize=args.normalize)
        else:
            space = uniform_space(len(args.rate))
        if len(args.rate) != space.n:
            raise InputError(f"--rate has {len(args.rate)} entries for {space.n} outcomes")
        rate = RandVar(args.rate, space)
    else:
        if not args.scenarios:
            raise InputError("arbitrage needs --rate or --scenarios with --rate-column")
        space, cols = load_scenarios(args.scenarios, normalize=args.normalize)
        if args.rate_column not in cols:
            raise InputError(f"rate column {args.rate_column!r} not in scenario file")
        rate = cols[args.rate_column]
    try:
        R = RescalingFactor(rate)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    wit = arbitrage_search(args.measure, args.alpha, R, _budget(args))
    return {"measure": args.measure, "alpha": args.alpha, "R": R.tolist(), "found": wit is not None,
            "witness": wit}, wit is not None


COMMANDS = {
    "evaluate": cmd_evaluate,
    "check": cmd_check,
    "decompose": cmd_decompose,
    "bound": cmd_bound,
    "dual": cmd_dual,
    "arbitrage": cmd_arbitrage,
}


def _floats(text: str) -> list:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenarios", help="scenario CSV (outcome,prob,<columns>)")
    common.add_argument("--spec", help="acceptance spec JSON")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=1000, help="samples per check")
    common.add_argument("--alpha", type=float)
    common.add_argument("--alpha-grid", type=_floats, help="comma-separated levels")
    common.add_argument("--atoms", type=int, default=4, help="uniform space size when no scenarios are given")
    common.add_argument("--normalize", action="store_true", help="rescale probabilities that do not sum to 1")
    common.add_argument("--slack", type=float, default=0.0, help="relax acceptance thresholds by this amount")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--strict", action="store_true", help="exit 1 when a violation is found")
    common.add_argument("--deterministic", action="store_true", help="omit the timestamp")

    parser = argparse.ArgumentParser(prog="surplex", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"surplex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("evaluate", parents=[common], help="acceptance and risk figures per position")
    p = sub.add_parser("check", parents=[common], help="sampled structural property checks")
    p.add_argument("--properties", type=lambda s: [t.strip() for t in s.split(",") if t.strip()])
    p = sub.add_parser("decompose", parents=[common], help="{A, B, C} partition with default caps")
    p.add_argument("--cap-max", type=float, default=1e12)
    p = sub.add_parser("bound", parents=[common], help="stochastic bound for the default profile")
    p.add_argument("--margin", type=float)
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--verify", action="store_true", help="also sample members against the bound")
    p = sub.add_parser("dual", parents=[common], help="dual membership inequalities per position")
    p.add_argument("--refined", action="store_true", help="add position-adapted directions")
    p.add_argument("--tol", type=float, default=1e-9)
    p = sub.add_parser("arbitrage", parents=[common], help="cross-currency VaR/ES arbitrage search")
    p.add_argument("--measure", choices=("VaR", "ES"), default="ES")
    p.add_argument("--rate", type=_floats, help="comma-separated rescaling factor")
    p.add_argument("--rate-column", default="R")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("output",)}
    try:
        results, violated = COMMANDS[args.command](args)
    except (SurplexError, ValueError, OSError) as exc:
        print(f"surplex: error: {type(exc).__name__}: {exc}", file=stderr)
        return 2
    report = {"tool": "surplex", "version": __version__, "command": args.command, "seed": args.seed,
              "config": config, "results": results}
    if not args.deterministic:
        report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    text = _dumps(report) if args.format == "json" else _render_text(_plain(report))
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 1 if (args.strict and violated) else 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
