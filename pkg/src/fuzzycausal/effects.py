"""Causal-effect estimators over an :class:`OutcomeCurve`.

Every estimator reduces to the generalized ATE: the difference of the curve's
expectation under two treatment-assignment distributions on a shared
universe.  The fuzzy variants only differ in how those distributions are
built from an :class:`AttributePair`; the normalized variants divide by the
difference of means (or higher moments) of the same two distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundViolated, DegreeUnsupported, GridMissingPoints, SupportViolation, ZeroDenominator
from .fuzzy_core import DEFAULT_GRID, AttributePair, Universe
from .metrics import attribute_l1_distance, kl_divergence, pair_distance
from .prob import (
    UnivariateDistribution,
    check_compatible,
    expectation,
    independent_density,
    moment,
    standard_density,
    uniform_threshold,
)
from .scm import OutcomeCurve

DENOM_TOL = 1e-9
BOUND_TOL = 1e-9

BASE_ASSUMPTIONS = ("SUTVA", "absolute SUTVA")
IDENTIFICATION = "conditional ignorability and consistency"


@dataclass(frozen=True)
class EffectReport:
    estimator: str
    value: float
    denominator: float | None = None
    raw: float | None = None
    inputs: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    assumptions: tuple[str, ...] = BASE_ASSUMPTIONS

    def __post_init__(self):
        raw = self.value if self.raw is None else self.raw
        object.__setattr__(self, "raw", float(raw))
        object.__setattr__(self, "value", float(self.value))
        if self.denominator is not None:
            if not abs(self.denominator) >= DENOM_TOL:
                raise ZeroDenominator(f"{self.estimator}: denominator {self.denominator:.3g} below {DENOM_TOL}")
            if abs(self.value - self.raw / self.denominator) > 1e-12 * max(1.0, abs(self.value)):
                raise ValueError("normalized value is inconsistent with raw / denominator")

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "value": self.value,
            "denominator": self.denominator,
            "raw": self.raw,
            "inputs": dict(self.inputs),
            "diagnostics": dict(self.diagnostics),
            "assumptions": list(self.assumptions),
        }

    CSV_HEADER = ("estimator", "value", "denominator", "raw")

    def csv_row(self) -> list[str]:
        den = "" if self.denominator is None else repr(self.denominator)
        return [self.estimator, repr(self.value), den, repr(self.raw)]


def _assumptions(curve: OutcomeCurve) -> tuple[str, ...]:
    if curve.provenance == "oracle-MC":
        return BASE_ASSUMPTIONS
    return BASE_ASSUMPTIONS + (IDENTIFICATION,)


def _diagnostics(curve: OutcomeCurve, **extra) -> dict:
    d = {"curve_points": len(curve.t), "curve_provenance": curve.provenance,
         "curve_se_max": float(np.max(curve.se)) if len(curve.se) else 0.0}
    d.update({k: v for k, v in curve.meta.items() if isinstance(v, (int, float, str))})
    d.update(extra)
    return d


def _at(curve: OutcomeCurve, t: float) -> float:
    if not curve.covers(t):
        raise GridMissingPoints(f"t={t:g} lies outside the curve grid [{curve.lo:g}, {curve.hi:g}]")
    return float(curve(t))


def _curve_on(curve: OutcomeCurve, dist: UnivariateDistribution) -> np.ndarray:
    t = dist.support
    needed = t[dist.weighted() > 0]
    if needed.size and not curve.covers(needed):
        raise GridMissingPoints(
            f"distribution mass on [{needed.min():g}, {needed.max():g}] exceeds the curve grid "
            f"[{curve.lo:g}, {curve.hi:g}]")
    return curve(t)


def curve_universe(curve: OutcomeCurve, points: int = DEFAULT_GRID) -> Universe:
    """Universe spanned by a curve; two-point and flagged-discrete grids stay discrete."""
    if curve.meta.get("discrete") or len(curve.t) <= 2:
        return Universe.discrete(curve.t)
    return Universe.interval(curve.lo, curve.hi, points)


# --- classical ---------------------------------------------------------------------


def ate_binary(curve: OutcomeCurve) -> EffectReport:
    y1, y0 = _at(curve, 1.0), _at(curve, 0.0)
    return EffectReport("ATE", y1 - y0, inputs={"contrast": "do(T=1) - do(T=0)"},
                        diagnostics=_diagnostics(curve), assumptions=_assumptions(curve))


def ate_pointwise(curve: OutcomeCurve, t: float, mode: str = "unit-step") -> float:
    """``E[Y(t+1) - Y(t)]`` or the central-difference derivative at ``t``."""
    if mode == "unit-step":
        return _at(curve, t + 1.0) - _at(curve, t)
    if mode == "derivative":
        if len(curve.t) < 3:
            raise GridMissingPoints("derivative needs at least three grid points")
        i = int(np.clip(np.searchsorted(curve.t, t), 1, len(curve.t) - 1))
        h = float(curve.t[i] - curve.t[i - 1])
        return (_at(curve, t + h) - _at(curve, t - h)) / (2 * h)
    raise ValueError(f"unknown mode {mode!r}")


def ate_derivative_curve(curve: OutcomeCurve) -> OutcomeCurve:
    """Second-order finite-difference derivative of the curve on its own grid."""
    if len(curve.t) < 3:
        raise GridMissingPoints("derivative needs at least three grid points")
    dy = np.gradient(curve.y, curve.t, edge_order=2)
    return OutcomeCurve(curve.t, dy, None, curve.provenance, {"derived": "derivative"})


def _generalized(curve: OutcomeCurve, p: UnivariateDistribution, q: UnivariateDistribution) -> float:
    check_compatible(p, q)
    y = _curve_on(curve, p)
    return expectation(q, y) - expectation(p, y)


def generalized_ate(curve: OutcomeCurve, p: UnivariateDistribution, q: UnivariateDistribution,
                    estimator: str = "ATE_P^Q") -> EffectReport:
    val = _generalized(curve, p, q)
    return EffectReport(estimator, val, inputs={"P": p.label, "Q": q.label},
                        diagnostics=_diagnostics(curve, grid_points=p.universe.points),
                        assumptions=_assumptions(curve))


def ate_uniform_threshold(curve: OutcomeCurve, t0: float, universe: Universe | None = None) -> EffectReport:
    u = universe or curve_universe(curve)
    p = uniform_threshold(u, t0, "below")
    q = uniform_threshold(u, t0, "above")
    rep = generalized_ate(curve, p, q, "ATE_T0^U")
    rep.inputs["T0"] = t0
    return rep


# --- fuzzy -------------------------------------------------------------------------


def _pair_inputs(pair: AttributePair, **extra) -> dict:
    d = {"A": pair.a.label, "B": pair.b.label, "universe": pair.universe.describe()}
    d.update(extra)
    return d


def _normalized(name: str, curve: OutcomeCurve, p: UnivariateDistribution, q: UnivariateDistribution,
                den: float, inputs: dict) -> EffectReport:
    raw = _generalized(curve, p, q)
    if not abs(den) >= DENOM_TOL:
        raise ZeroDenominator(f"{name}: assignment distributions have equal means ({den:.3g})")
    return EffectReport(name, raw / den, den, raw, inputs,
                        _diagnostics(curve, grid_points=p.universe.points), _assumptions(curve))


def fate(curve: OutcomeCurve, pair: AttributePair) -> EffectReport:
    p, q = standard_density(pair.a), standard_density(pair.b)
    return EffectReport("FATE", _generalized(curve, p, q), inputs=_pair_inputs(pair, model="standard"),
                        diagnostics=_diagnostics(curve, grid_points=p.universe.points),
                        assumptions=_assumptions(curve))


def nfate(curve: OutcomeCurve, pair: AttributePair) -> EffectReport:
    p, q = standard_density(pair.a), standard_density(pair.b)
    return _normalized("NFATE", curve, p, q, q.mean() - p.mean(), _pair_inputs(pair, model="standard"))


def _zetas(pair: AttributePair, f_t: UnivariateDistribution):
    return independent_density(pair.a, f_t), independent_density(pair.b, f_t)


def gfate(curve: OutcomeCurve, pair: AttributePair, f_t: UnivariateDistribution) -> EffectReport:
    p, q = _zetas(pair, f_t)
    return EffectReport("GFATE", _generalized(curve, p, q),
                        inputs=_pair_inputs(pair, model="independent", f_T=f_t.label),
                        diagnostics=_diagnostics(curve, grid_points=p.universe.points),
                        assumptions=_assumptions(curve))


def ngfate(curve: OutcomeCurve, pair: AttributePair, f_t: UnivariateDistribution) -> EffectReport:
    p, q = _zetas(pair, f_t)
    return _normalized("NGFATE", curve, p, q, q.mean() - p.mean(),
                       _pair_inputs(pair, model="independent", f_T=f_t.label))


def nate_degree(curve: OutcomeCurve, p: UnivariateDistribution, q: UnivariateDistribution, d: int) -> EffectReport:
    """Generalized ATE over ``E_Q[T^d] - E_P[T^d]``."""
    if int(d) != d or d < 1:
        raise DegreeUnsupported("moment degree must be a positive integer")
    d = int(d)
    return _normalized(f"NATE({d})", curve, p, q, moment(q, d) - moment(p, d),
                       {"P": p.label, "Q": q.label, "degree": d})


# --- stability ---------------------------------------------------------------------


def _kl_either(new: UnivariateDistribution, old: UnivariateDistribution) -> float:
    """KL in whichever direction is finite; Pinsker holds for both."""
    try:
        return kl_divergence(new, old)
    except SupportViolation:
        try:
            return kl_divergence(old, new)
        except SupportViolation:
            return math.inf


def stability_check(curve: OutcomeCurve, pair: AttributePair, pair2: AttributePair, m: float) -> dict:
    """Compare ``|FATE(pair2) - FATE(pair)|`` with the L1 and Pinsker bounds."""
    sup = curve.sup_abs()
    if m < sup:
        raise BoundViolated(f"M={m:g} is below the curve's observed sup {sup:g}")
    lhs = abs(fate(curve, pair2).value - fate(curve, pair).value)
    dist = pair_distance(pair, pair2)
    rhs = 2.0 * m * dist
    kl_a = _kl_either(standard_density(pair2.a), standard_density(pair.a))
    kl_b = _kl_either(standard_density(pair2.b), standard_density(pair.b))
    kl_rhs = m * (math.sqrt(2 * kl_a) + math.sqrt(2 * kl_b))
    return {
        "lhs": lhs,
        "rhs": rhs,
        "holds": lhs <= rhs + BOUND_TOL,
        "distance": dist,
        "l1_a": attribute_l1_distance(pair.a, pair2.a),
        "l1_b": attribute_l1_distance(pair.b, pair2.b),
        "kl_a": kl_a,
        "kl_b": kl_b,
        "kl_rhs": kl_rhs,
        "kl_holds": lhs <= kl_rhs + BOUND_TOL,
    }
