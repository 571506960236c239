"""Structural causal models: definition, simulation, interventions and
regression adjustment on observational data."""

from __future__ import annotations

import ast
import csv
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    ColumnMismatch,
    ColumnMissing,
    DegreeUnsupported,
    ExpressionError,
    RankDeficient,
)
from .fuzzy_core import DEFAULT_GRID, Universe
from .prob import RandomSource, UnivariateDistribution

COND_LIMIT = 1e10
DEFAULT_N_MC = 10_000
DEFAULT_T_POINTS = 101


# --- expression language ----------------------------------------------------
# constants, variable names, + - *, integer powers, division by a constant


def _compile(node: ast.AST, names: set[str]) -> Callable[[Mapping[str, np.ndarray]], np.ndarray | float]:
    if isinstance(node, ast.Expression):
        return _compile(node.body, names)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        c = float(node.value)
        return lambda env: c
    if isinstance(node, ast.Name):
        name = node.id
        names.add(name)
        return lambda env: env[name]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        f = _compile(node.operand, names)
        if isinstance(node.op, ast.USub):
            return lambda env: -f(env)
        return f
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            exp = node.right
            if isinstance(exp, ast.Constant) and isinstance(exp.value, int) and exp.value >= 0:
                k = exp.value
                base = _compile(node.left, names)
                return lambda env: base(env) ** k
            raise ExpressionError("exponents must be nonnegative integer literals")
        if isinstance(node.op, ast.Div):
            if not _is_constant(node.right):
                raise ExpressionError("division is only allowed by a constant")
        lhs = _compile(node.left, names)
        rhs = _compile(node.right, names)
        if isinstance(node.op, ast.Add):
            return lambda env: lhs(env) + rhs(env)
        if isinstance(node.op, ast.Sub):
            return lambda env: lhs(env) - rhs(env)
        if isinstance(node.op, ast.Mult):
            return lambda env: lhs(env) * rhs(env)
        if isinstance(node.op, ast.Div):
            return lambda env: lhs(env) / rhs(env)
    raise ExpressionError(f"unsupported syntax: {ast.dump(node)[:60]}")


def _is_constant(node: ast.AST) -> bool:
    if isinstance(node, ast.Constant):
        return isinstance(node.value, (int, float)) and not isinstance(node.value, bool) and node.value != 0
    if isinstance(node, ast.UnaryOp):
        return _is_constant(node.operand)
    return False


def compile_expression(expr: str) -> tuple[Callable, frozenset[str]]:
    try:
        tree = ast.parse(expr.strip() or "0", mode="eval")
    except SyntaxError as e:
        raise ExpressionError(f"cannot parse {expr!r}: {e.msg}") from None
    names: set[str] = set()
    fn = _compile(tree, names)
    return fn, frozenset(names)


# --- definition ---------------------------------------------------------------


@dataclass(frozen=True)
class Noise:
    kind: str = "normal"
    mean: float = 0.0
    std: float = 1.0

    def __post_init__(self):
        if self.kind not in ("normal", "none"):
            raise ExpressionError(f"unknown noise kind {self.kind!r}")
        if self.kind == "normal" and not self.std >= 0:
            raise ExpressionError("noise std must be nonnegative")

    def draw(self, gen: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "none":
            return np.zeros(n)
        return gen.normal(self.mean, self.std, n)

    def to_dict(self) -> dict:
        if self.kind == "none":
            return {"kind": "none"}
        return {"kind": self.kind, "mean": self.mean, "std": self.std}


NO_NOISE = Noise("none")


@dataclass(frozen=True)
class Variable:
    name: str
    expr: str = "0"
    noise: Noise = NO_NOISE


@dataclass(frozen=True)
class ScmSpec:
    variables: tuple[Variable, ...]
    treatment: str
    outcome: str
    _compiled: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        seen: list[str] = []
        compiled = []
        for v in self.variables:
            if not v.name.isidentifier():
                raise ExpressionError(f"bad variable name {v.name!r}")
            if v.name in seen:
                raise ExpressionError(f"duplicate variable {v.name!r}")
            fn, refs = compile_expression(v.expr)
            unknown = refs - set(seen)
            if unknown:
                raise ExpressionError(f"{v.name} refers to undeclared or later variables {sorted(unknown)}")
            compiled.append(fn)
            seen.append(v.name)
        for role, name in (("treatment", self.treatment), ("outcome", self.outcome)):
            if name not in seen:
                raise ExpressionError(f"{role} {name!r} is not declared")
        if seen.index(self.treatment) >= seen.index(self.outcome):
            raise ExpressionError("treatment must precede the outcome")
        object.__setattr__(self, "_compiled", tuple(compiled))

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def upstream_of_treatment(self) -> list[str]:
        return self.names[: self.names.index(self.treatment)]

    def draw_noise(self, n: int, rng: RandomSource) -> dict[str, np.ndarray]:
        gen = rng.generator()
        return {v.name: v.noise.draw(gen, n) for v in self.variables}

    def evaluate(self, noise: Mapping[str, np.ndarray], do: Mapping[str, float] | None = None) -> dict[str, np.ndarray]:
        """Ancestral pass; ``do`` replaces assignments by constants."""
        do = do or {}
        n = len(next(iter(noise.values())))
        env: dict[str, np.ndarray] = {}
        for v, fn in zip(self.variables, self._compiled):
            if v.name in do:
                env[v.name] = np.full(n, float(do[v.name]))
            else:
                env[v.name] = np.broadcast_to(np.asarray(fn(env), dtype=float), (n,)) + noise[v.name]
        return env

    def to_dict(self) -> dict:
        return {
            "variables": [{"name": v.name, "noise": v.noise.to_dict(), "expr": v.expr} for v in self.variables],
            "treatment": self.treatment,
            "outcome": self.outcome,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScmSpec":
        try:
            variables = []
            for item in d["variables"]:
                nz = item.get("noise") or {"kind": "none"}
                noise = Noise(nz.get("kind", "normal"), float(nz.get("mean", 0.0)), float(nz.get("std", 1.0)))
                variables.append(Variable(item["name"], str(item.get("expr", "0")), noise))
            return cls(tuple(variables), d["treatment"], d["outcome"])
        except (KeyError, TypeError) as e:
            raise ExpressionError(f"malformed SCM document: {e}") from None

    @classmethod
    def load(cls, path) -> "ScmSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def sodium_scm(beta1: float = 1.05, alpha1: float = 0.4, alpha2: float = 0.3) -> ScmSpec:
    """Age, sodium intake, blood pressure and proteinuria."""
    return ScmSpec(
        (
            Variable("age", "0", Noise("normal", 65.0, 5.0)),
            Variable("sodium", "age / 18", Noise()),
            Variable("bloodpressure", f"{beta1!r} * sodium + 2 * age", Noise()),
            Variable("proteinuria", f"{alpha1!r} * sodium + {alpha2!r} * bloodpressure", Noise()),
        ),
        treatment="sodium",
        outcome="bloodpressure",
    )


# --- data ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Dataset:
    columns: dict[str, np.ndarray]

    def __post_init__(self):
        cols = {str(k): np.asarray(v, dtype=float) for k, v in self.columns.items()}
        if not cols:
            raise ColumnMismatch("dataset needs at least one column")
        lengths = {len(v) for v in cols.values()}
        if len(lengths) != 1 or 0 in lengths:
            raise ColumnMismatch("columns must share one nonzero length")
        for k, v in cols.items():
            if v.ndim != 1 or not np.all(np.isfinite(v)):
                raise ColumnMismatch(f"column {k!r} has missing or non-finite values")
        object.__setattr__(self, "columns", cols)

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    @property
    def n(self) -> int:
        return len(next(iter(self.columns.values())))

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise ColumnMissing(f"no column {name!r} (have {self.names})") from None

    def head(self, k: int) -> "Dataset":
        return Dataset({c: v[:k] for c, v in self.columns.items()})

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            self.write_csv(fh)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(self.names)
        for row in zip(*self.columns.values()):
            w.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        with open(path, newline="", encoding="utf-8") as fh:
            r = csv.reader(fh)
            header = next(r)
            rows = [[float(x) for x in row] for row in r if row]
        if not rows:
            raise ColumnMismatch(f"{path}: no data rows")
        arr = np.array(rows, dtype=float)
        return cls({h: arr[:, i] for i, h in enumerate(header)})


@dataclass(frozen=True, eq=False)
class OutcomeCurve:
    """Estimated E[Y(t)] on an increasing treatment grid."""

    t: np.ndarray
    y: np.ndarray
    se: np.ndarray | None = None
    provenance: str = "oracle-MC"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if t.ndim != 1 or t.shape != y.shape or len(t) < 1:
            raise ColumnMismatch("curve grid and estimates must be equal-length vectors")
        if np.any(np.diff(t) <= 0):
            raise ColumnMismatch("curve grid must be strictly increasing")
        if not np.all(np.isfinite(y)):
            raise ColumnMismatch("curve estimates must be finite")
        se = np.zeros_like(y) if self.se is None else np.asarray(self.se, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "se", se)

    @property
    def lo(self) -> float:
        return float(self.t[0])

    @property
    def hi(self) -> float:
        return float(self.t[-1])

    def covers(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        tol = 1e-9 * max(1.0, abs(self.lo), abs(self.hi))
        return bool(np.all((x >= self.lo - tol) & (x <= self.hi + tol)))

    def __call__(self, x) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self.t, self.y)

    def sup_abs(self) -> float:
        return float(np.abs(self.y).max())


def generate_dataset(scm: ScmSpec, n: int, rng: RandomSource) -> Dataset:
    if n < 1:
        raise ValueError("n must be at least 1")
    env = scm.evaluate(scm.draw_noise(n, rng))
    return Dataset({k: np.array(v) for k, v in env.items()})


def default_t_grid(lo: float, hi: float, points: int = DEFAULT_T_POINTS) -> np.ndarray:
    return np.linspace(lo, hi, points)


def potential_outcome_curve(scm: ScmSpec, t_grid, n_mc: int, rng: RandomSource) -> OutcomeCurve:
    """Monte Carlo ``E[Y | do(T = t)]``; the same noise draws serve every grid point."""
    if n_mc < 1:
        raise ValueError("n_mc must be at least 1")
    t_grid = np.asarray(t_grid, dtype=float)
    noise = scm.draw_noise(n_mc, rng)
    y = np.empty(len(t_grid))
    se = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        out = scm.evaluate(noise, {scm.treatment: t})[scm.outcome]
        y[i] = out.mean()
        se[i] = out.std(ddof=1) / math.sqrt(n_mc) if n_mc > 1 else 0.0
    return OutcomeCurve(t_grid, y, se, "oracle-MC", {"n_mc": n_mc})


# --- regression adjustment --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearAdjustmentModel:
    outcome: str
    treatment: str
    covariates: tuple[str, ...]
    treatment_degree: int
    interactions: bool
    coef: np.ndarray
    cov: np.ndarray
    residual_variance: float
    n: int

    @property
    def terms(self) -> list[str]:
        names = ["intercept"] + [self.treatment if d == 1 else f"{self.treatment}^{d}"
                                 for d in range(1, self.treatment_degree + 1)]
        names += list(self.covariates)
        if self.interactions:
            names += [f"{self.treatment}*{c}" for c in self.covariates]
        return names

    def design(self, t, covs: np.ndarray) -> np.ndarray:
        covs = np.asarray(covs, dtype=float).reshape(len(np.atleast_1d(t)) if covs.size else len(np.atleast_1d(t)), -1)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        cols = [np.ones_like(t)] + [t ** d for d in range(1, self.treatment_degree + 1)]
        cols += [covs[:, j] for j in range(covs.shape[1])]
        if self.interactions:
            cols += [t * covs[:, j] for j in range(covs.shape[1])]
        return np.column_stack(cols)

    def predict(self, t, covs) -> np.ndarray:
        return self.design(t, covs) @ self.coef

    def coefficient(self, term: str) -> float:
        return float(self.coef[self.terms.index(term)])


def _back_substitute(r: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = r.shape[0]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - r[i, i + 1:] @ x[i + 1:]) / r[i, i]
    return x


def fit_adjustment(data: Dataset, outcome: str, treatment: str, covariates: Sequence[str] = (),
                   treatment_degree: int = 1, interactions: bool = False) -> LinearAdjustmentModel:
    """Least squares for E[Y | t, c] via Householder QR (no normal equations)."""
    if treatment_degree < 1:
        raise DegreeUnsupported("treatment degree must be at least 1")
    covariates = tuple(covariates)
    y = data[outcome]
    t = data[treatment]
    covs = np.column_stack([data[c] for c in covariates]) if covariates else np.empty((data.n, 0))
    proto = LinearAdjustmentModel(outcome, treatment, covariates, treatment_degree, interactions,
                                  np.empty(0), np.empty((0, 0)), 0.0, data.n)
    x = proto.design(t, covs)
    n, p = x.shape
    if n <= p:
        raise RankDeficient(f"{n} rows cannot identify {p} coefficients")
    q, r = np.linalg.qr(x)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-12 * max(diag.max(), 1.0):
        raise RankDeficient("design matrix is singular")
    cond = np.linalg.cond(r)
    if not cond < COND_LIMIT:
        raise RankDeficient(f"design condition number {cond:.3g} exceeds {COND_LIMIT:g}")
    coef = _back_substitute(r, q.T @ y)
    resid = y - x @ coef
    s2 = float(resid @ resid) / (n - p)
    r_inv = _back_substitute_matrix(r)
    cov = s2 * (r_inv @ r_inv.T)
    return LinearAdjustmentModel(outcome, treatment, covariates, treatment_degree, interactions,
                                 coef, cov, s2, n)


def _back_substitute_matrix(r: np.ndarray) -> np.ndarray:
    eye = np.eye(r.shape[0])
    return np.column_stack([_back_substitute(r, eye[:, j]) for j in range(r.shape[0])])


def adjusted_outcome_curve(model: LinearAdjustmentModel, data: Dataset, t_grid) -> OutcomeCurve:
    """``E_C[E[Y | t, c]]`` averaged over the observed covariate rows."""
    missing = [c for c in (*model.covariates,) if c not in data.columns]
    if missing:
        raise ColumnMismatch(f"data lacks model covariates {missing}")
    t_grid = np.asarray(t_grid, dtype=float)
    covs = np.column_stack([data[c] for c in model.covariates]) if model.covariates else np.empty((data.n, 0))
    y = np.empty(len(t_grid))
    se = np.empty(len(t_grid))
    for i, t in enumerate(t_grid):
        row = model.design(np.full(data.n, t), covs).mean(axis=0)
        y[i] = row @ model.coef
        se[i] = math.sqrt(max(float(row @ model.cov @ row), 0.0))
    return OutcomeCurve(t_grid, y, se, "regression-adjusted",
                        {"terms": model.terms, "n": data.n})


def empirical_density(data: Dataset, column: str, bins: int = 50,
                      points: int = DEFAULT_GRID) -> UnivariateDistribution:
    """Histogram density on [min, max] of ``column``, sampled onto the grid as a step function."""
    if bins < 2:
        raise ValueError("bins must be at least 2")
    x = data[column]
    lo, hi = float(x.min()), float(x.max())
    if not hi > lo:
        u = Universe.discrete([lo])
        return UnivariateDistribution(u, np.ones(1), 1.0, f"empirical({column})")
    counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
    dens = counts / (len(x) * (hi - lo) / bins)
    u = Universe.interval(lo, hi, points)
    idx = np.clip(np.searchsorted(edges, u.grid(), side="right") - 1, 0, bins - 1)
    return UnivariateDistribution.from_unnormalized(u, dens[idx], f"empirical({column})")
