"""``fuzzycausal`` command line.

Exit codes: 0 success, 2 usage, 3 domain error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .errors import FuzzyCausalError
from .experiments import (
    FUZZY_ESTIMATORS,
    PAIR_NAMES,
    EffectTable,
    estimates,
    figure1_pair,
    rules_pipeline,
    sodium_effects,
    tipping_rulebase,
    tipping_surface,
    tipping_table,
)
from .mamdani import METHODS, RuleBase
from .prob import RandomSource
from .scm import (
    Dataset,
    ScmSpec,
    adjusted_outcome_curve,
    empirical_density,
    fit_adjustment,
    generate_dataset,
    sodium_scm,
)

EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 2, 3, 4
SEED_ENV = "FUZZY_CAUSAL_SEED"
BUILTIN_SCMS = {"sodium": sodium_scm}


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _list(s: str | None) -> list[str] | None:
    return None if s is None else [x.strip() for x in s.split(",") if x.strip()]


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _emit_table(table: EffectTable, out: str | None) -> None:
    print(table.to_text())
    if out:
        atomic_write(out, _csv_text(table.to_csv_rows()))
        print(f"wrote {out}")


# --- config --------------------------------------------------------------------------------


def _positive(name: str, value) -> None:
    if value is not None and value <= 0:
        raise UsageError(f"--{name.replace('_', '-')} must be positive")


def _fraction(name: str, value) -> None:
    if value is not None and not 0 < value <= 1:
        raise UsageError(f"--{name} must lie in (0, 1]")


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    """Values from ``--config`` fill flags the user did not pass."""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                conf = json.load(fh)
        except json.JSONDecodeError as e:
            raise UsageError(f"{args.config}: invalid JSON ({e})") from None
        if not isinstance(conf, dict):
            raise UsageError(f"{args.config}: config must be a JSON object")
        for k, v in conf.items():
            key = k.replace("-", "_")
            if not hasattr(args, key):
                raise UsageError(f"{args.config}: unknown option {k!r}")
            if getattr(args, key) is None:
                setattr(args, key, v)
    if args.seed is None:
        args.seed = _default_seed()
    for name in ("n", "n_mc", "grid", "rows", "partitions", "size"):
        _positive(name, getattr(args, name, None))
    for name in ("support", "confidence"):
        _fraction(name, getattr(args, name, None))
    for name in ("scm", "data", "rulebase", "config"):
        p = getattr(args, name, None)
        if p and not os.path.isfile(p):
            raise FileNotFoundError(f"{p}: no such file")
    return args


def _scm(args) -> ScmSpec | None:
    if getattr(args, "scm", None):
        return ScmSpec.load(args.scm)
    if getattr(args, "builtin", None):
        if args.builtin not in BUILTIN_SCMS:
            raise UsageError(f"unknown builtin {args.builtin!r}; available: {', '.join(BUILTIN_SCMS)}")
        return BUILTIN_SCMS[args.builtin]()
    return None


def _methods(args, default=METHODS) -> list[str]:
    methods = _list(args.defuzz) or list(default)
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise UsageError(f"unknown defuzzifier(s) {bad}; choose from {', '.join(METHODS)}")
    return methods


# --- commands -------------------------------------------------------------------------------


def cmd_generate(args) -> int:
    scm = _scm(args)
    if scm is None:
        raise UsageError("generate needs --builtin NAME or --scm PATH")
    data = generate_dataset(scm, args.n or 10_000, RandomSource(args.seed).child("data"))
    buf = io.StringIO()
    data.write_csv(buf)
    if args.out:
        atomic_write(args.out, buf.getvalue())
        print(f"wrote {data.n} rows to {args.out}")
    else:
        sys.stdout.write(buf.getvalue())
        return 0
    width = max(len(c) for c in data.names)
    for c in data.names:
        print(f"{c.ljust(width)}  mean {data[c].mean():.6f}")
    return 0


def cmd_effects(args) -> int:
    if not args.pair:
        raise UsageError("effects needs --pair (one of " + ", ".join(PAIR_NAMES) + ")")
    if args.pair not in PAIR_NAMES:
        raise UsageError(f"unknown pair {args.pair!r}; choose from {', '.join(PAIR_NAMES)}")
    scm = _scm(args)
    data = Dataset.from_csv(args.data) if args.data else None
    if scm is None and data is None:
        raise UsageError("effects needs --builtin, --scm or --data")
    if scm is not None and data is not None and args.treatment and args.treatment != scm.treatment:
        raise UsageError("--treatment conflicts with the SCM's treatment")
    estimators = [e.upper() for e in (_list(args.estimators) or ["ATE", *FUZZY_ESTIMATORS])]
    bad = [e for e in estimators if e not in ("ATE", *FUZZY_ESTIMATORS)]
    if bad:
        raise UsageError(f"unknown estimator(s) {bad}")
    if scm is None:
        if not (args.treatment and args.outcome):
            raise UsageError("data without an SCM needs --treatment and --outcome")
        table = _effects_from_data(data, args, estimators)
    else:
        table = sodium_effects(n=args.n or 10_000, seed=args.seed, n_mc=args.n_mc or 10_000,
                               pair_name=args.pair, scm=scm, data=data,
                               covariates=_list(args.covariates), estimators=estimators,
                               t_points=args.grid or 101)
    _emit_table(table, args.out)
    return 0


def _effects_from_data(data: Dataset, args, estimators) -> EffectTable:
    covs = _list(args.covariates) or []
    tr = args.treatment
    lo, hi = float(data[tr].min()), float(data[tr].max())
    model = fit_adjustment(data, args.outcome, tr, covs)
    curve = adjusted_outcome_curve(model, data, np.linspace(lo, hi, args.grid or 101))
    est = estimates(curve, adjusted_outcome_curve(model, data, [0.0, 1.0]), figure1_pair(args.pair, lo, hi),
                     empirical_density(data, tr), estimators)
    notes = [f"treatment {tr} on [{lo:.6g}, {hi:.6g}], pair {args.pair}, covariates {covs}, n={data.n}"]
    return EffectTable(list(est), ["estimate"], {(k, "estimate"): v for k, v in est.items()}, notes)


def _rulebase(args, probabilistic: bool) -> RuleBase:
    if args.rulebase:
        return RuleBase.load(args.rulebase)
    if args.builtin in (None, "tipping", "tipping-prob"):
        return tipping_rulebase(probabilistic or args.builtin == "tipping-prob")
    raise UsageError(f"unknown rule base {args.builtin!r}; use tipping, tipping-prob or --rulebase")


def cmd_tipping(args) -> int:
    prob = bool(args.probabilistic) or args.builtin == "tipping-prob"
    base = _rulebase(args, prob)
    prob = prob or not base.is_deterministic
    methods = _methods(args, ("centroid",) if prob else METHODS)
    table = tipping_table(prob, methods, n_mc=args.n_mc or 2000, seed=args.seed,
                          t_points=args.grid or 101, base=base)
    _emit_table(table, args.out)
    return 0


def cmd_surface(args) -> int:
    prob = bool(args.probabilistic) or args.builtin == "tipping-prob"
    base = _rulebase(args, prob)
    prob = prob or not base.is_deterministic
    methods = _methods(args, ("centroid",))
    size = args.size or 51
    surfaces = tipping_surface(base, methods, size, prob)
    out = Path(args.out or "surface.csv")
    for m, arr in surfaces.items():
        path = out if len(methods) == 1 else out.with_name(f"{out.stem}_{m}{out.suffix or '.csv'}")
        rows = [["quality", "service", "tip"]] + [[repr(float(x)) for x in row] for row in arr]
        atomic_write(path, _csv_text(rows))
        print(f"wrote {len(arr)} rows to {path} ({m})")
    return 0


def cmd_rules(args) -> int:
    if args.data:
        data = Dataset.from_csv(args.data)
    else:
        scm = _scm(args) or sodium_scm()
        data = generate_dataset(scm, args.n or 10_000, RandomSource(args.seed).child("data"))
    treatments = _list(args.treatment) or ["sodium", "age"]
    method = _methods(args, ("centroid",))[0]
    res = rules_pipeline(data, treatments, args.outcome or "bloodpressure", args.partitions or 8,
                         args.support or 0.05, args.confidence or 0.6, method, args.rows or 100,
                         args.n_mc or 200, args.seed)
    for r in res.base.rules:
        print(f"{r.describe()}  [support {r.support:.4f}, confidence {r.confidence:.4f}]")
    if args.rulebase_out:
        atomic_write(args.rulebase_out, json.dumps(res.base.to_dict(), indent=2) + "\n")
        print(f"wrote rule base to {args.rulebase_out}")
    _emit_table(res.table, args.out)
    return 0


# --- parser ---------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fuzzycausal", description="Fuzzy average treatment effects.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--builtin", help="built-in experiment or SCM name")
        sp.add_argument("--scm", help="SCM JSON file")
        sp.add_argument("--data", help="dataset CSV")
        sp.add_argument("--n", type=int, help="rows to generate")
        sp.add_argument("--n-mc", dest="n_mc", type=int, help="Monte Carlo draws")
        sp.add_argument("--grid", type=int, help="treatment grid points")
        sp.add_argument("--seed", type=int, help=f"random seed (default ${SEED_ENV} or 0)")
        sp.add_argument("--defuzz", help="comma-separated defuzzifiers")
        sp.add_argument("--out", help="output path")
        sp.add_argument("--config", help="JSON config; flags take precedence")
        return sp

    g = common(sub.add_parser("generate", help="simulate a dataset from an SCM"))
    g.set_defaults(func=cmd_generate)

    e = common(sub.add_parser("effects", help="ATE/FATE/NFATE/GFATE/NGFATE table"))
    e.add_argument("--pair", help="attribute pair: " + ", ".join(PAIR_NAMES))
    e.add_argument("--estimators", help="comma-separated subset of ATE,FATE,NFATE,GFATE,NGFATE")
    e.add_argument("--treatment")
    e.add_argument("--outcome")
    e.add_argument("--covariates", help="comma-separated adjustment set")
    e.set_defaults(func=cmd_effects)

    for name, func, help_ in (("tipping", cmd_tipping, "tipping effect table"),
                              ("surface", cmd_surface, "tip response surface CSV")):
        t = common(sub.add_parser(name, help=help_))
        t.add_argument("--rulebase", help="rule base JSON")
        t.add_argument("--probabilistic", action="store_true", default=None)
        if name == "surface":
            t.add_argument("--size", type=int, help="lattice points per axis")
        t.set_defaults(func=func)

    r = common(sub.add_parser("rules", help="mine rules from data and report effects"))
    r.add_argument("--support", type=float, help="minimum support (default 0.05)")
    r.add_argument("--confidence", type=float, help="minimum confidence (default 0.6)")
    r.add_argument("--partitions", type=int, help="Gaussian attributes per column (default 8)")
    r.add_argument("--rows", type=int, help="rows to predict (default 100)")
    r.add_argument("--treatment", help="comma-separated antecedent columns")
    r.add_argument("--outcome")
    r.add_argument("--rulebase-out", dest="rulebase_out", help="write the mined rule base JSON here")
    r.set_defaults(func=cmd_rules)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        args = _merge_config(args)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FuzzyCausalError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
