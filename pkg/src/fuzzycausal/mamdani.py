"""Mamdani inference, probabilistic rule groups and rule mining.

Semantics: AND = min, OR = max, implication clips the consequent at the rule
strength, aggregation is the pointwise max, and the aggregate is collapsed by
one of ``centroid``, ``bisector``, ``mom``, ``som`` or ``lom`` on a uniform
output grid.  A rule fires when its strength is strictly positive.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .apriori import association_rules
from .errors import (
    InvalidRuleBase,
    NoRuleFired,
    NoRulesFound,
    TooManyConfigurations,
    UnknownVariable,
)
from .fuzzy_core import FuzzyAttribute, Universe, make_partition
from .prob import RandomSource, UnivariateDistribution, sample
from .scm import Dataset, OutcomeCurve

METHODS = kernels.METHODS
DEFAULT_OUTPUT_POINTS = 1001
MIN_OUTPUT_POINTS = 101
MAX_CONFIGURATIONS = 4096
PROB_TOL = 1e-9


@dataclass(frozen=True)
class FuzzyVariable:
    name: str
    universe: Universe
    partition: tuple[FuzzyAttribute, ...]
    grid_points: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "partition", tuple(self.partition))
        if not self.partition:
            raise InvalidRuleBase(f"{self.name}: empty partition")
        labels = self.labels
        if len(set(labels)) != len(labels):
            raise InvalidRuleBase(f"{self.name}: duplicate labels")
        for attr in self.partition:
            if attr.universe != self.universe:
                raise InvalidRuleBase(f"{self.name}/{attr.label}: attribute universe differs from the variable's")

    @property
    def labels(self) -> list[str]:
        return [a.label for a in self.partition]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownVariable(f"{self.name} has no label {label!r}") from None

    def degrees(self, x) -> np.ndarray:
        """``(len(x), labels)`` membership matrix; raises ``OutOfUniverse``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.column_stack([a.degrees(x) for a in self.partition])

    def output_grid(self) -> np.ndarray:
        pts = self.grid_points or DEFAULT_OUTPUT_POINTS
        return Universe.interval(self.universe.a, self.universe.b, pts).grid()

    def to_dict(self) -> dict:
        d = {"name": self.name, "universe": self.universe.to_dict(),
             "partition": [a.to_dict() for a in self.partition]}
        if self.grid_points is not None:
            d["grid_points"] = self.grid_points
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FuzzyVariable":
        u = Universe.from_dict(d["universe"])
        part = []
        for a in d["partition"]:
            a = dict(a)
            a.setdefault("universe", d["universe"])
            part.append(FuzzyAttribute.from_dict(a))
        return cls(d["name"], u, tuple(part), d.get("grid_points"))


@dataclass(frozen=True)
class FuzzyRule:
    antecedent: tuple[tuple[str, str], ...]
    consequent: tuple[str, str]
    connective: str = "and"
    probability: float = 1.0
    support: float | None = field(default=None, compare=False)
    confidence: float | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "antecedent", tuple((str(v), str(l)) for v, l in self.antecedent))
        object.__setattr__(self, "consequent", (str(self.consequent[0]), str(self.consequent[1])))
        object.__setattr__(self, "connective", self.connective.lower())
        if not self.antecedent:
            raise InvalidRuleBase("rule needs at least one clause")
        if self.connective not in ("and", "or"):
            raise InvalidRuleBase(f"connective must be 'and' or 'or', got {self.connective!r}")
        if not 0 < self.probability <= 1:
            raise InvalidRuleBase("rule probability must lie in (0, 1]")

    @property
    def group_key(self) -> tuple:
        return (self.antecedent, self.connective)

    def describe(self) -> str:
        j = f" {self.connective.upper()} "
        s = "IF " + j.join(f"{v} is {l}" for v, l in self.antecedent)
        s += f" THEN {self.consequent[0]} is {self.consequent[1]}"
        if self.probability != 1:
            s += f" (p={self.probability:g})"
        return s

    def to_dict(self) -> dict:
        d = {"if": [list(c) for c in self.antecedent], "connective": self.connective,
             "then": list(self.consequent), "prob": self.probability}
        if self.support is not None:
            d["support"] = self.support
        if self.confidence is not None:
            d["confidence"] = self.confidence
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FuzzyRule":
        return cls(tuple(tuple(c) for c in d["if"]), tuple(d["then"]), d.get("connective", "and"),
                   float(d.get("prob", 1.0)), d.get("support"), d.get("confidence"))


@dataclass(frozen=True, eq=False)
class RuleBase:
    inputs: tuple[FuzzyVariable, ...]
    output: FuzzyVariable
    rules: tuple[FuzzyRule, ...]
    no_fire: str = "error"

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "rules", tuple(self.rules))
        if self.no_fire not in ("error", "midpoint"):
            raise InvalidRuleBase("no_fire policy must be 'error' or 'midpoint'")
        if not self.rules:
            raise InvalidRuleBase("rule base has no rules")
        names = [v.name for v in self.inputs]
        if len(set(names)) != len(names) or self.output.name in names:
            raise InvalidRuleBase("variable names must be unique")
        pts = self.output.grid_points or DEFAULT_OUTPUT_POINTS
        if pts < MIN_OUTPUT_POINTS:
            raise InvalidRuleBase(f"output grid needs at least {MIN_OUTPUT_POINTS} points")
        if self.output.universe.is_discrete:
            raise InvalidRuleBase("output universe must be an interval")
        for r in self.rules:
            for v, lab in r.antecedent:
                self.input(v).index(lab)
            if r.consequent[0] != self.output.name:
                raise UnknownVariable(f"consequent variable {r.consequent[0]!r} is not the output")
            self.output.index(r.consequent[1])
        for key, members in self._groups_by_key.items():
            total = sum(self.rules[i].probability for i in members)
            if abs(total - 1.0) > PROB_TOL:
                raise InvalidRuleBase(f"probabilities of group {key[0]} sum to {total:g}, not 1")

    def input(self, name: str) -> FuzzyVariable:
        for v in self.inputs:
            if v.name == name:
                return v
        raise UnknownVariable(f"unknown input variable {name!r}")

    @property
    def input_names(self) -> list[str]:
        return [v.name for v in self.inputs]

    @cached_property
    def _groups_by_key(self) -> dict:
        groups: dict = {}
        for i, r in enumerate(self.rules):
            groups.setdefault(r.group_key, []).append(i)
        return groups

    @property
    def groups(self) -> list[list[int]]:
        return list(self._groups_by_key.values())

    @property
    def is_deterministic(self) -> bool:
        return all(len(g) == 1 for g in self.groups)

    @cached_property
    def grid(self) -> np.ndarray:
        return self.output.output_grid()

    @cached_property
    def consequent_mu(self) -> np.ndarray:
        """``(labels, grid)`` consequent memberships on the output grid."""
        g = self.grid
        return np.array([np.clip(a.mu(g), 0.0, 1.0) for a in self.output.partition])

    @cached_property
    def consequent_index(self) -> np.ndarray:
        return np.array([self.output.index(r.consequent[1]) for r in self.rules], dtype=np.int64)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.output.universe.a + self.output.universe.b)

    def describe(self) -> str:
        lines = []
        for v in (*self.inputs, self.output):
            shapes = ", ".join(f"{a.label}={a.mu.kind}{json.dumps(a.mu.params())}" for a in v.partition)
            lines.append(f"{v.name} {v.universe.describe()}: {shapes}")
        lines += [r.describe() for r in self.rules]
        return "\n".join(lines)

    def to_dict(self) -> dict:
        out = self.output.to_dict()
        out["grid_points"] = self.output.grid_points or DEFAULT_OUTPUT_POINTS
        return {"inputs": [v.to_dict() for v in self.inputs], "output": out,
                "rules": [r.to_dict() for r in self.rules], "no_fire": self.no_fire}

    @classmethod
    def from_dict(cls, d: dict) -> "RuleBase":
        try:
            return cls(tuple(FuzzyVariable.from_dict(v) for v in d["inputs"]),
                       FuzzyVariable.from_dict(d["output"]),
                       tuple(FuzzyRule.from_dict(r) for r in d["rules"]),
                       d.get("no_fire", "error"))
        except (KeyError, TypeError) as e:
            raise InvalidRuleBase(f"malformed rule base document: {e}") from None

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "RuleBase":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


# --- activation ----------------------------------------------------------------------


def _columns(base: RuleBase, inputs: Mapping[str, object]) -> tuple[dict[str, np.ndarray], int]:
    cols = {}
    for v in base.inputs:
        if v.name not in inputs:
            raise UnknownVariable(f"missing input {v.name!r}")
        cols[v.name] = np.atleast_1d(np.asarray(inputs[v.name], dtype=float))
    n = max(len(c) for c in cols.values())
    for k, c in cols.items():
        if len(c) == 1 and n > 1:
            cols[k] = np.full(n, c[0])
        elif len(c) != n:
            raise ValueError("input arrays must share one length")
    return cols, n


def rule_strengths(base: RuleBase, inputs: Mapping[str, object]) -> np.ndarray:
    """``(rows, rules)`` firing strengths for scalar or array inputs."""
    cols, n = _columns(base, inputs)
    deg = {v.name: v.degrees(cols[v.name]) for v in base.inputs}
    out = np.empty((n, len(base.rules)))
    for j, r in enumerate(base.rules):
        parts = [deg[v][:, base.input(v).index(lab)] for v, lab in r.antecedent]
        out[:, j] = np.minimum.reduce(parts) if r.connective == "and" else np.maximum.reduce(parts)
    return out


def rule_strength(rule: FuzzyRule, inputs: Mapping[str, float], base: RuleBase) -> float:
    vals = []
    for v, lab in rule.antecedent:
        if v not in inputs:
            raise UnknownVariable(f"missing input {v!r}")
        var = base.input(v)
        vals.append(float(var.partition[var.index(lab)].degrees(float(inputs[v]))))
    return min(vals) if rule.connective == "and" else max(vals)


def aggregate(base: RuleBase, inputs: Mapping[str, float]) -> np.ndarray:
    """Aggregated output membership on the output grid for one input point."""
    s = rule_strengths(base, inputs)[0]
    return kernels.aggregate(s, base.consequent_index, base.consequent_mu)


def _method_columns(methods: Sequence[str]) -> list[int]:
    cols = []
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown defuzzifier {m!r}; choose from {', '.join(METHODS)}")
        cols.append(METHODS.index(m))
    return cols


def _apply_policy(base: RuleBase, vals: np.ndarray) -> np.ndarray:
    bad = np.isnan(vals).any(axis=1)
    if bad.any():
        if base.no_fire == "error":
            raise NoRuleFired(f"no rule fired for {int(bad.sum())} input row(s)")
        vals[bad] = base.midpoint
    return vals


def _configurations(base: RuleBase) -> tuple[list[list[int]], int]:
    groups = base.groups
    count = math.prod(len(g) for g in groups)
    if count > MAX_CONFIGURATIONS:
        raise TooManyConfigurations(f"{count} rule configurations exceed the limit of {MAX_CONFIGURATIONS}")
    return groups, count


def defuzzify_all(base: RuleBase, inputs: Mapping[str, object], probabilistic: bool = False,
                  use_jit: bool | None = None) -> np.ndarray:
    """``(rows, 5)`` crisp outputs in ``METHODS`` order.

    With ``probabilistic`` the value is the probability-weighted mean over every
    configuration choosing one rule per group (groups independent).
    """
    s = rule_strengths(base, inputs)
    if not probabilistic:
        if not base.is_deterministic:
            raise InvalidRuleBase("rule base has probabilistic groups; use probabilistic inference")
        vals = kernels.aggregate_defuzzify(s, base.consequent_index, base.consequent_mu, base.grid, use_jit)
        return _apply_policy(base, vals)
    groups, _ = _configurations(base)
    total = np.zeros((s.shape[0], len(METHODS)))
    for choice in product(*groups):
        sel = np.array(choice, dtype=np.int64)
        weight = math.prod(base.rules[i].probability for i in choice)
        vals = kernels.aggregate_defuzzify(s[:, sel], base.consequent_index[sel], base.consequent_mu,
                                           base.grid, use_jit)
        total += weight * _apply_policy(base, vals)
    return total


def infer(base: RuleBase, inputs: Mapping[str, float], method: str = "centroid") -> float:
    col = _method_columns([method])[0]
    return float(defuzzify_all(base, inputs)[0, col])


def prob_infer_expectation(base: RuleBase, inputs: Mapping[str, float], method: str = "centroid") -> float:
    col = _method_columns([method])[0]
    return float(defuzzify_all(base, inputs, probabilistic=True)[0, col])


def infer_batch(base: RuleBase, inputs: Mapping[str, object], methods: Sequence[str] = ("centroid",),
                probabilistic: bool = False) -> dict[str, np.ndarray]:
    cols = _method_columns(methods)
    vals = defuzzify_all(base, inputs, probabilistic)
    return {m: vals[:, c] for m, c in zip(methods, cols)}


# --- outcome curves ----------------------------------------------------------------------


def _confounder_draws(confounder, n_mc: int, rng: RandomSource) -> np.ndarray:
    if isinstance(confounder, UnivariateDistribution):
        return sample(confounder, n_mc, rng)
    pool = np.asarray(confounder, dtype=float).ravel()
    if pool.size == 0:
        raise ValueError("empty confounder sample")
    return pool[rng.generator().integers(0, pool.size, n_mc)]


def outcome_curves_via_rules(base: RuleBase, treatment: str, confounder, t_grid, n_mc: int,
                             rng: RandomSource, methods: Sequence[str] = METHODS,
                             probabilistic: bool = False, chunk_rows: int = 200_000) -> dict[str, OutcomeCurve]:
    """``E_C[E[Y | t, c]]`` per defuzzifier, one shared set of confounder draws.

    ``confounder`` is a distribution (sampled by inverse CDF) or an array of
    observed values (resampled with replacement).
    """
    if n_mc < 1:
        raise ValueError("n_mc must be at least 1")
    others = [v for v in base.input_names if v != treatment]
    if treatment not in base.input_names or len(others) != 1:
        raise InvalidRuleBase("outcome curves need the treatment plus exactly one confounder input")
    conf_name = others[0]
    c = _confounder_draws(confounder, n_mc, rng)
    t_grid = np.asarray(t_grid, dtype=float)
    cols = _method_columns(methods)
    means = np.empty((len(t_grid), len(cols)))
    ses = np.empty_like(means)
    per_chunk = max(1, chunk_rows // n_mc)
    for s in range(0, len(t_grid), per_chunk):
        tt = t_grid[s:s + per_chunk]
        vals = defuzzify_all(base, {treatment: np.repeat(tt, n_mc), conf_name: np.tile(c, len(tt))},
                             probabilistic)[:, cols].reshape(len(tt), n_mc, len(cols))
        means[s:s + len(tt)] = vals.mean(axis=1)
        ses[s:s + len(tt)] = vals.std(axis=1, ddof=1) / math.sqrt(n_mc) if n_mc > 1 else 0.0
    meta = {"n_mc": n_mc, "probabilistic": probabilistic, "confounder": conf_name}
    return {m: OutcomeCurve(t_grid, means[:, k], ses[:, k], "fuzzy-system", dict(meta, method=m))
            for k, m in enumerate(methods)}


def outcome_curve_via_rules(base: RuleBase, treatment: str, confounder, t_grid, n_mc: int,
                            rng: RandomSource, method: str = "centroid",
                            probabilistic: bool = False) -> OutcomeCurve:
    return outcome_curves_via_rules(base, treatment, confounder, t_grid, n_mc, rng, (method,),
                                    probabilistic)[method]


# --- data-driven rules ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    columns: dict[str, np.ndarray]
    partitions: dict[str, tuple[FuzzyAttribute, ...]]

    def __post_init__(self):
        for k, v in self.columns.items():
            size = len(self.partitions[k])
            if v.size and (v.min() < 0 or v.max() >= size):
                raise InvalidRuleBase(f"labels of {k!r} fall outside [0, {size})")

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    @property
    def n(self) -> int:
        return len(next(iter(self.columns.values())))

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(self.names) + "\n")
            for row in zip(*self.columns.values()):
                fh.write(",".join(str(int(x)) for x in row) + "\n")


def fuzzify_dataset(data: Dataset, partitions: Mapping[str, Sequence[FuzzyAttribute]],
                    tie_tol: float = kernels.TIE_TOL) -> LabeledDataset:
    """Replace each value with the index of its highest-membership attribute (ties to the lowest)."""
    cols, parts = {}, {}
    for name, part in partitions.items():
        part = tuple(part)
        x = data[name]
        deg = np.column_stack([a.degrees(x) for a in part])
        top = deg >= deg.max(axis=1, keepdims=True) - tie_tol
        cols[name] = np.argmax(top, axis=1).astype(np.int64)
        parts[name] = part
    return LabeledDataset(cols, parts)


def gaussian_partitions(data: Dataset, names: Sequence[str], n: int = 8) -> dict[str, list[FuzzyAttribute]]:
    """``n`` evenly spaced Gaussian attributes over each column's observed range."""
    out = {}
    for name in names:
        x = data[name]
        out[name] = make_partition((float(x.min()), float(x.max())), n, "gaussian",
                                   labels=[f"{name}{k}" for k in range(n)])
    return out


def extract_rules_apriori(labeled: LabeledDataset, antecedents: Sequence[str], consequent: str,
                          min_support: float = 0.05, min_confidence: float = 0.6,
                          output_points: int = DEFAULT_OUTPUT_POINTS, no_fire: str = "error") -> RuleBase:
    """Deterministic AND-rule base mined from labeled data."""
    if not 0 < min_support <= 1 or not 0 < min_confidence <= 1:
        raise ValueError("support and confidence thresholds must lie in (0, 1]")
    found = association_rules(labeled.columns, antecedents, consequent, min_support, min_confidence)
    if not found:
        raise NoRulesFound(f"no rule reaches support {min_support:g} and confidence {min_confidence:g}; "
                           "try lower thresholds")

    def var(name, pts=None):
        part = labeled.partitions[name]
        return FuzzyVariable(name, part[0].universe, part, pts)

    rules = []
    for ante, cons, sup, conf in found:
        parts_a = [(c, labeled.partitions[c][k].label) for c, k in ante]
        rules.append(FuzzyRule(tuple(parts_a), (consequent, labeled.partitions[consequent][cons[1]].label),
                               "and", 1.0, sup, conf))
    return RuleBase(tuple(var(c) for c in antecedents), var(consequent, output_points), tuple(rules), no_fire)


def predict(base: RuleBase, data: Dataset, method: str = "centroid", rows: int | None = None,
            probabilistic: bool = False) -> np.ndarray:
    sub = data if rows is None else data.head(rows)
    inputs = {v: sub[v] for v in base.input_names}
    return infer_batch(base, inputs, (method,), probabilistic)[method]
