"""Built-in experiments: tipping rule bases, the sodium pipelines and the
closed-form attribute pairs on an interval."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import effects
from .fuzzy_core import (
    DEFAULT_GRID,
    AttributePair,
    FuzzyAttribute,
    Gaussian,
    Trapezoidal,
    Triangular,
    Universe,
    make_partition,
)
from .mamdani import (
    METHODS,
    FuzzyRule,
    FuzzyVariable,
    RuleBase,
    extract_rules_apriori,
    fuzzify_dataset,
    gaussian_partitions,
    outcome_curves_via_rules,
    predict,
)
from .prob import RandomSource, normal_density
from .scm import (
    Dataset,
    OutcomeCurve,
    ScmSpec,
    adjusted_outcome_curve,
    empirical_density,
    fit_adjustment,
    generate_dataset,
    potential_outcome_curve,
    sodium_scm,
)

PAIR_NAMES = ("fig1a", "fig1b", "fig1c", "fig1d")
FUZZY_ESTIMATORS = ("FATE", "NFATE", "GFATE", "NGFATE")


# --- attribute pairs ---------------------------------------------------------------


def figure1_pair(name: str, a: float, b: float, m: float | None = None,
                 points: int = DEFAULT_GRID) -> AttributePair:
    """"low"/"high" pairs on [a, b].

    fig1a: triangles meeting at the midpoint.  fig1b: triangles reaching zero
    at ``a + m`` and ``b - m``.  fig1c: trapezoids flat on the outer quarters.
    fig1d: Gaussians centred at the ends with std ``(b - a) / 4``.
    """
    u = Universe.interval(a, b, points)
    length = b - a
    mid = a + 0.5 * length
    if name == "fig1a":
        lo, hi = Triangular(a, a, mid), Triangular(mid, b, b)
    elif name == "fig1b":
        m = 0.75 * length if m is None else m
        if not 0 < m <= length:
            raise ValueError("fig1b needs 0 < M <= b - a")
        lo, hi = Triangular(a, a, a + m), Triangular(b - m, b, b)
    elif name == "fig1c":
        q = 0.25 * length
        lo, hi = Trapezoidal(a, a, a + q, mid), Trapezoidal(mid, b - q, b, b)
    elif name == "fig1d":
        s = 0.25 * length
        return AttributePair(FuzzyAttribute("low", u, Gaussian(a, s), require_zero=False),
                             FuzzyAttribute("high", u, Gaussian(b, s), require_zero=False))
    else:
        raise ValueError(f"unknown pair {name!r}; choose from {', '.join(PAIR_NAMES)}")
    return AttributePair(FuzzyAttribute("low", u, lo), FuzzyAttribute("high", u, hi))


def figure1_closed_form(name: str, length: float, beta: float, m: float | None = None) -> float:
    """FATE of a slope-``beta`` linear curve for the named pair on an interval of ``length``."""
    if name == "fig1a":
        return 2 * length * beta / 3
    if name == "fig1b":
        m = 0.75 * length if m is None else m
        return beta * (length - 2 * m / 3)
    if name == "fig1c":
        return 11 * length * beta / 18
    if name == "fig1d":
        # mean of a normal(0, L/4) truncated to [0, L], mirrored
        s = length / 4
        z = length / s
        phi = math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
        mean_low = s * (1 / math.sqrt(2 * math.pi) - phi) / (0.5 * math.erf(z / math.sqrt(2)))
        return beta * (length - 2 * mean_low)
    raise ValueError(f"unknown pair {name!r}")


# --- tipping -------------------------------------------------------------------------


TIPPING_ASSUMPTION = ("quality, service on [0,10]: poor/average/good triangles with peaks 0, 5, 10; "
                      "tip on [0,25]: low/medium/high triangles with peaks 0, 12.5, 25; "
                      "each triangle reaches zero at the neighbouring peaks")


def tipping_variables(output_points: int = 1001) -> tuple[FuzzyVariable, FuzzyVariable, FuzzyVariable]:
    q3 = ["poor", "average", "good"]
    quality = make_partition((0.0, 10.0), 3, labels=q3)
    service = make_partition((0.0, 10.0), 3, labels=q3)
    tip = make_partition((0.0, 25.0), 3, labels=["low", "medium", "high"])
    return (FuzzyVariable("quality", quality[0].universe, quality),
            FuzzyVariable("service", service[0].universe, service),
            FuzzyVariable("tip", tip[0].universe, tip, output_points))


def tipping_rulebase(probabilistic: bool = False, p: float = 0.7, output_points: int = 1001) -> RuleBase:
    quality, service, tip = tipping_variables(output_points)
    poor = (("quality", "poor"), ("service", "poor"))
    avg = (("service", "average"),)
    good = (("quality", "good"), ("service", "good"))
    if not probabilistic:
        rules = (FuzzyRule(poor, ("tip", "low"), "or"),
                 FuzzyRule(avg, ("tip", "medium"), "or"),
                 FuzzyRule(good, ("tip", "high"), "or"))
    else:
        q = 1.0 - p
        rules = (FuzzyRule(poor, ("tip", "low"), "or", p), FuzzyRule(poor, ("tip", "medium"), "or", q),
                 FuzzyRule(avg, ("tip", "medium"), "or", p), FuzzyRule(avg, ("tip", "high"), "or", q),
                 FuzzyRule(good, ("tip", "high"), "or", p), FuzzyRule(good, ("tip", "medium"), "or", q))
    return RuleBase((quality, service), tip, rules)


@dataclass
class EffectTable:
    """Rows are estimators, columns are defuzzifiers (or value/true)."""

    rows: list[str]
    cols: list[str]
    values: dict[tuple[str, str], float]
    notes: list[str] = field(default_factory=list)

    def get(self, row: str, col: str) -> float:
        return self.values[(row, col)]

    def to_csv_rows(self) -> list[list[str]]:
        out = [["estimator", *self.cols]]
        for r in self.rows:
            out.append([r] + [repr(self.values[(r, c)]) if (r, c) in self.values else "" for c in self.cols])
        return out

    def to_text(self, digits: int = 4) -> str:
        cells = [["", *self.cols]]
        for r in self.rows:
            cells.append([r] + [f"{self.values[(r, c)]:.{digits}f}" if (r, c) in self.values else "-"
                                for c in self.cols])
        widths = [max(len(row[i]) for row in cells) for i in range(len(cells[0]))]
        lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in cells]
        return "\n".join(lines + self.notes)


def fuzzy_effects(curve: OutcomeCurve, pair: AttributePair, f_t) -> dict[str, effects.EffectReport]:
    return {"FATE": effects.fate(curve, pair), "NFATE": effects.nfate(curve, pair),
            "GFATE": effects.gfate(curve, pair, f_t), "NGFATE": effects.ngfate(curve, pair, f_t)}


def tipping_table(probabilistic: bool = False, methods=METHODS, n_mc: int = 2000, seed: int = 0,
                  service_mean: float = 7.0, service_std: float = math.sqrt(2.0),
                  quality_mean: float = 5.0, quality_std: float = math.sqrt(2.0),
                  t_points: int = 101, base: RuleBase | None = None) -> EffectTable:
    """Effect of food quality on the tip, service as confounder.

    Pair = (poor, good) quality attributes; GFATE/NGFATE use a truncated
    normal f_T for quality.  Standard deviations default to the square root
    of the stated variance of 2.
    """
    methods = tuple(methods)
    if base is None:
        base = tipping_rulebase(probabilistic)
    quality = base.input("quality")
    service = base.input("service")
    pair = AttributePair(quality.partition[0], quality.partition[-1])
    s_dist = normal_density(service.universe, service_mean, service_std, "service")
    f_t = normal_density(quality.universe, quality_mean, quality_std, "quality")
    t_grid = np.linspace(quality.universe.a, quality.universe.b, t_points)
    curves = outcome_curves_via_rules(base, "quality", s_dist, t_grid, n_mc,
                                      RandomSource(seed).child("tipping"), methods, probabilistic)
    vals = {}
    for m in methods:
        for name, rep in fuzzy_effects(curves[m], pair, f_t).items():
            vals[(name, m)] = rep.value
    notes = [f"membership assumption: {TIPPING_ASSUMPTION}",
             f"service ~ normal({service_mean:g}, std {service_std:.4g}) truncated to [0,10]; "
             f"quality f_T ~ normal({quality_mean:g}, std {quality_std:.4g}); n_mc={n_mc}, seed={seed}",
             f"mode: {'probabilistic rule groups (exact enumeration)' if probabilistic else 'deterministic'}"]
    return EffectTable(list(FUZZY_ESTIMATORS), list(methods), vals, notes)


def tipping_surface(base: RuleBase, methods=("centroid",), size: int = 51,
                    probabilistic: bool = False) -> dict[str, np.ndarray]:
    """``(size*size, 3)`` arrays of (quality, service, tip) per defuzzifier."""
    from .mamdani import infer_batch

    q = np.linspace(base.input("quality").universe.a, base.input("quality").universe.b, size)
    s = np.linspace(base.input("service").universe.a, base.input("service").universe.b, size)
    qq, ss = np.meshgrid(q, s, indexing="ij")
    qq, ss = qq.ravel(), ss.ravel()
    out = infer_batch(base, {"quality": qq, "service": ss}, tuple(methods), probabilistic)
    return {m: np.column_stack([qq, ss, out[m]]) for m in methods}


# --- sodium --------------------------------------------------------------------------


def _range(x: np.ndarray) -> tuple[float, float]:
    return float(x.min()), float(x.max())


def sodium_effects(n: int = 10_000, seed: int = 0, n_mc: int = 10_000, bins: int = 50,
                   pair_name: str = "fig1a", scm: ScmSpec | None = None, data: Dataset | None = None,
                   covariates=None, estimators=("ATE", *FUZZY_ESTIMATORS), t_points: int = 101) -> EffectTable:
    """Regression-adjusted estimates next to oracle values from the SCM.

    The pair lives on the empirical treatment range; f_T for GFATE/NGFATE is the
    histogram density of the treatment column.
    """
    rng = RandomSource(seed)
    if scm is None and data is None:
        scm = sodium_scm()
    if data is None:
        data = generate_dataset(scm, n, rng.child("data"))
    treatment = scm.treatment if scm else "sodium"
    outcome = scm.outcome if scm else "bloodpressure"
    if covariates is None:
        covariates = scm.upstream_of_treatment() if scm else ["age"]
    lo, hi = _range(data[treatment])
    pair = figure1_pair(pair_name, lo, hi)
    t_grid = np.linspace(lo, hi, t_points)
    model = fit_adjustment(data, outcome, treatment, covariates)
    curve = adjusted_outcome_curve(model, data, t_grid)
    f_t = empirical_density(data, treatment, bins)
    est = estimates(curve, adjusted_outcome_curve(model, data, [0.0, 1.0]), pair, f_t, estimators)
    cols = ["estimate"]
    vals = {(k, "estimate"): v for k, v in est.items()}
    notes = [f"treatment {treatment} on [{lo:.6g}, {hi:.6g}], pair {pair_name}, "
             f"covariates {list(covariates)}, f_T = histogram({bins} bins), n={data.n}, seed={seed}"]
    if scm is not None:
        oracle = potential_outcome_curve(scm, t_grid, n_mc, rng.child("oracle"))
        oracle01 = potential_outcome_curve(scm, [0.0, 1.0], n_mc, rng.child("oracle"))
        true = estimates(oracle, oracle01, pair, f_t, estimators)
        cols.append("true")
        vals.update({(k, "true"): v for k, v in true.items()})
        notes.append(f"true values: do-intervention Monte Carlo, n_mc={n_mc}")
    return EffectTable(list(est), cols, vals, notes)


def estimates(curve: OutcomeCurve, curve01: OutcomeCurve | None, pair: AttributePair, f_t,
               estimators) -> dict[str, float]:
    out = {}
    for name in estimators:
        name = name.upper()
        if name == "ATE":
            out[name] = effects.ate_binary(curve01).value if curve01 is not None else mean_unit_step_ate(curve)
        elif name == "FATE":
            out[name] = effects.fate(curve, pair).value
        elif name == "NFATE":
            out[name] = effects.nfate(curve, pair).value
        elif name == "GFATE":
            out[name] = effects.gfate(curve, pair, f_t).value
        elif name == "NGFATE":
            out[name] = effects.ngfate(curve, pair, f_t).value
        else:
            raise ValueError(f"unknown estimator {name!r}")
    return out


def mean_unit_step_ate(curve: OutcomeCurve) -> float:
    """Average of ``E[Y(t+1) - Y(t)]`` over grid points with ``t + 1`` inside the curve."""
    ts = curve.t[curve.t + 1.0 <= curve.hi + 1e-12]
    if ts.size == 0:
        return float("nan")
    return float(np.mean([effects.ate_pointwise(curve, t) for t in ts]))


@dataclass
class RulesResult:
    base: RuleBase
    predictions: np.ndarray
    observed: np.ndarray
    mae: float
    outcome_range: float
    table: EffectTable


def rules_pipeline(data: Dataset, treatments=("sodium", "age"), outcome: str = "bloodpressure",
                   n_partitions: int = 8, min_support: float = 0.05, min_confidence: float = 0.6,
                   method: str = "centroid", rows: int = 100, n_mc: int = 200, seed: int = 0,
                   bins: int = 50, t_points: int = 101) -> RulesResult:
    """Gaussian partitions, Apriori rules, prediction error and per-treatment effects."""
    names = list(treatments) + [outcome]
    parts = gaussian_partitions(data, names, n_partitions)
    labeled = fuzzify_dataset(data, parts)
    base = extract_rules_apriori(labeled, list(treatments), outcome, min_support, min_confidence)
    pred = predict(base, data, method, rows)
    obs = data[outcome][:rows]
    mae = float(np.mean(np.abs(pred - obs)))
    lo_y, hi_y = _range(data[outcome])
    rng = RandomSource(seed)
    vals = {}
    for tr in treatments:
        conf = [c for c in treatments if c != tr]
        lo, hi = _range(data[tr])
        t_grid = np.linspace(lo, hi, t_points)
        curve = outcome_curves_via_rules(base, tr, data[conf[0]], t_grid, n_mc, rng.child(tr), (method,))[method]
        est = estimates(curve, None, figure1_pair("fig1a", lo, hi), empirical_density(data, tr, bins),
                         ("ATE", *FUZZY_ESTIMATORS))
        vals.update({(k, tr): v for k, v in est.items()})
    notes = [f"{len(base.rules)} rules, {n_partitions} Gaussian attributes per column, support >= {min_support:g}, "
             f"confidence >= {min_confidence:g}, defuzzifier {method}",
             f"prediction MAE on first {rows} rows: {mae:.4f} (outcome range {hi_y - lo_y:.4f})",
             "ATE here is the mean unit-step effect over the observed treatment range"]
    table = EffectTable(["ATE", *FUZZY_ESTIMATORS], list(treatments), vals, notes)
    return RulesResult(base, pred, obs, mae, hi_y - lo_y, table)
