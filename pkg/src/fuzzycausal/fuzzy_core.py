"""Universes, membership functions and fuzzy attributes.

A continuous universe ``[a, b]`` is always handled through a uniform grid of
``points`` nodes; every integral in the package is a composite trapezoid rule
on that grid.  Discrete universes are finite sorted sets of reals and use
plain sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import (
    BadCount,
    InvalidAttribute,
    OutOfUniverse,
    UniverseMismatch,
)

DEFAULT_GRID = 2001
ZERO_TOL = 1e-9
SUP_TOL = 1e-12
_MEMBER_TOL = 1e-12


@dataclass(frozen=True)
class Universe:
    """Value set of a variable: an interval ``[a, b]`` or a finite set."""

    a: float
    b: float
    values: tuple[float, ...] | None = None
    points: int = DEFAULT_GRID

    def __post_init__(self):
        if self.values is not None:
            vals = tuple(float(v) for v in self.values)
            if not vals:
                raise InvalidAttribute("discrete universe must be nonempty")
            if any(not math.isfinite(v) for v in vals):
                raise InvalidAttribute("discrete universe values must be finite")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise InvalidAttribute("discrete universe must be strictly increasing")
            object.__setattr__(self, "values", vals)
            object.__setattr__(self, "a", vals[0])
            object.__setattr__(self, "b", vals[-1])
            object.__setattr__(self, "points", len(vals))
        else:
            a, b = float(self.a), float(self.b)
            if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
                raise InvalidAttribute(f"continuous universe needs finite a < b, got [{a}, {b}]")
            if self.points < 2:
                raise InvalidAttribute("grid needs at least 2 points")
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)

    @classmethod
    def interval(cls, a: float, b: float, points: int = DEFAULT_GRID) -> "Universe":
        return cls(a, b, None, points)

    @classmethod
    def discrete(cls, values: Sequence[float]) -> "Universe":
        vals = list(values)
        return cls(0.0, 0.0, tuple(vals))

    @property
    def is_discrete(self) -> bool:
        return self.values is not None

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def spacing(self) -> float:
        if self.is_discrete:
            raise InvalidAttribute("discrete universe has no grid spacing")
        return (self.b - self.a) / (self.points - 1)

    def grid(self) -> np.ndarray:
        if self.is_discrete:
            return np.array(self.values, dtype=float)
        return np.linspace(self.a, self.b, self.points)

    def weights(self) -> np.ndarray:
        """Quadrature weights: trapezoid on the grid, unit weights when discrete."""
        if self.is_discrete:
            return np.ones(self.points)
        w = np.full(self.points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def contains(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.is_discrete:
            vals = np.asarray(self.values)
            return np.any(np.abs(t[..., None] - vals) <= _MEMBER_TOL * max(1.0, np.abs(vals).max()), axis=-1)
        tol = _MEMBER_TOL * max(1.0, abs(self.a), abs(self.b))
        return (t >= self.a - tol) & (t <= self.b + tol)

    def check(self, t) -> None:
        ok = self.contains(t)
        if not np.all(ok):
            bad = np.asarray(t, dtype=float)[~ok] if np.ndim(t) else t
            raise OutOfUniverse(f"value(s) {np.ravel(bad)[:5]} outside {self.describe()}")

    def describe(self) -> str:
        if self.is_discrete:
            return "{" + ", ".join(f"{v:g}" for v in self.values) + "}"
        return f"[{self.a:g}, {self.b:g}]"

    def same_set(self, other: "Universe") -> bool:
        return self == other

    def to_dict(self) -> dict:
        if self.is_discrete:
            return {"values": list(self.values)}
        return {"a": self.a, "b": self.b, "points": self.points}

    @classmethod
    def from_dict(cls, d: dict) -> "Universe":
        if "values" in d:
            return cls.discrete(d["values"])
        return cls.interval(d["a"], d["b"], int(d.get("points", DEFAULT_GRID)))


# --- membership shapes ----------------------------------------------------


def _polyline(x: np.ndarray, xs: list[float], ys: list[float], lo: float, hi: float) -> np.ndarray:
    y = np.zeros_like(x)
    inside = (x >= lo) & (x <= hi)
    if len(xs) == 1:
        y[inside] = ys[0]
    else:
        y[inside] = np.interp(x[inside], xs, ys)
    return y


@dataclass(frozen=True)
class Triangular:
    left: float
    peak: float
    right: float
    height: float = 1.0
    kind = "triangular"

    def __post_init__(self):
        if not self.left <= self.peak <= self.right:
            raise InvalidAttribute("triangular vertices must be nondecreasing")
        if not 0.0 < self.height <= 1.0:
            raise InvalidAttribute("height must lie in (0, 1]")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        xs, ys = [], []
        if self.left < self.peak:
            xs.append(self.left)
            ys.append(0.0)
        xs.append(self.peak)
        ys.append(self.height)
        if self.right > self.peak:
            xs.append(self.right)
            ys.append(0.0)
        return _polyline(x, xs, ys, self.left, self.right)

    def mirrored(self, a: float, b: float) -> "Triangular":
        s = a + b
        return Triangular(s - self.right, s - self.peak, s - self.left, self.height)

    def params(self) -> dict:
        return {"left": self.left, "peak": self.peak, "right": self.right, "height": self.height}


@dataclass(frozen=True)
class Trapezoidal:
    l: float
    pl: float
    pr: float
    r: float
    height: float = 1.0
    kind = "trapezoidal"

    def __post_init__(self):
        if not self.l <= self.pl <= self.pr <= self.r:
            raise InvalidAttribute("trapezoidal vertices must be nondecreasing")
        if not 0.0 < self.height <= 1.0:
            raise InvalidAttribute("height must lie in (0, 1]")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        xs, ys = [], []
        if self.l < self.pl:
            xs.append(self.l)
            ys.append(0.0)
        xs.append(self.pl)
        ys.append(self.height)
        if self.pr > self.pl:
            xs.append(self.pr)
            ys.append(self.height)
        if self.r > self.pr:
            xs.append(self.r)
            ys.append(0.0)
        return _polyline(x, xs, ys, self.l, self.r)

    def mirrored(self, a: float, b: float) -> "Trapezoidal":
        s = a + b
        return Trapezoidal(s - self.r, s - self.pr, s - self.pl, s - self.l, self.height)

    def params(self) -> dict:
        return {"l": self.l, "pl": self.pl, "pr": self.pr, "r": self.r, "height": self.height}


@dataclass(frozen=True)
class Gaussian:
    mean: float
    sigma: float
    height: float = 1.0
    kind = "gaussian"

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidAttribute("gaussian sigma must be positive")
        if not 0.0 < self.height <= 1.0:
            raise InvalidAttribute("height must lie in (0, 1]")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        z = (x - self.mean) / self.sigma
        return self.height * np.exp(-0.5 * z * z)

    def mirrored(self, a: float, b: float) -> "Gaussian":
        return Gaussian(a + b - self.mean, self.sigma, self.height)

    def params(self) -> dict:
        return {"mean": self.mean, "sigma": self.sigma, "height": self.height}


@dataclass(frozen=True)
class PiecewiseLinear:
    """Linear interpolation through ``(x, mu)`` vertices; constant beyond the ends."""

    vertices: tuple[tuple[float, float], ...]
    kind = "piecewise-linear"

    def __post_init__(self):
        verts = tuple((float(x), float(m)) for x, m in self.vertices)
        if not verts:
            raise InvalidAttribute("piecewise-linear needs at least one vertex")
        if any(x1 <= x0 for (x0, _), (x1, _) in zip(verts, verts[1:])):
            raise InvalidAttribute("piecewise-linear x coordinates must be strictly increasing")
        if any(not 0.0 <= m <= 1.0 for _, m in verts):
            raise InvalidAttribute("piecewise-linear degrees must lie in [0, 1]")
        object.__setattr__(self, "vertices", verts)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return np.interp(x, xs, ys)

    def mirrored(self, a: float, b: float) -> "PiecewiseLinear":
        s = a + b
        return PiecewiseLinear(tuple((s - x, m) for x, m in reversed(self.vertices)))

    def params(self) -> dict:
        return {"vertices": [list(v) for v in self.vertices]}


@dataclass(frozen=True)
class CrispIndicator:
    subset: tuple[float, ...]
    kind = "crisp-indicator"

    def __post_init__(self):
        object.__setattr__(self, "subset", tuple(sorted(float(v) for v in self.subset)))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        if not self.subset:
            return np.zeros_like(x)
        s = np.asarray(self.subset)
        hit = np.any(np.abs(x[..., None] - s) <= _MEMBER_TOL * max(1.0, np.abs(s).max()), axis=-1)
        return hit.astype(float)

    def mirrored(self, a: float, b: float) -> "CrispIndicator":
        return CrispIndicator(tuple(a + b - v for v in self.subset))

    def params(self) -> dict:
        return {"subset": list(self.subset)}


MembershipFunction = Triangular | Trapezoidal | Gaussian | PiecewiseLinear | CrispIndicator

_SHAPES = {
    "triangular": Triangular,
    "trapezoidal": Trapezoidal,
    "gaussian": Gaussian,
    "piecewise-linear": PiecewiseLinear,
    "crisp-indicator": CrispIndicator,
}


def shape_to_dict(mf: MembershipFunction) -> dict:
    return {"kind": mf.kind, **mf.params()}


def shape_from_dict(d: dict) -> MembershipFunction:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _SHAPES:
        raise InvalidAttribute(f"unknown membership shape {kind!r}")
    if kind == "piecewise-linear":
        return PiecewiseLinear(tuple(tuple(v) for v in d["vertices"]))
    if kind == "crisp-indicator":
        return CrispIndicator(tuple(d["subset"]))
    return _SHAPES[kind](**d)


# --- attributes -------------------------------------------------------------


@dataclass(frozen=True)
class FuzzyAttribute:
    """A labelled membership function on a universe.

    The fuzzy-attribute condition (membership attains zero somewhere) is checked
    on the grid with tolerance ``ZERO_TOL``.  ``require_zero=False`` relaxes it
    for wide Gaussians, which never get that close to zero on a bounded interval.
    """

    label: str
    universe: Universe
    mu: MembershipFunction
    require_zero: bool = field(default=True, compare=False)

    def __post_init__(self):
        v = self.values
        if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0 + SUP_TOL:
            raise InvalidAttribute(f"{self.label}: membership must lie in [0, 1] on the grid")
        if self.require_zero and v.min() > ZERO_TOL:
            raise InvalidAttribute(
                f"{self.label}: membership never reaches zero on the grid (min {v.min():.3g})"
            )

    @cached_property
    def values(self) -> np.ndarray:
        """Membership degrees on the universe grid."""
        v = self.mu(self.universe.grid())
        v.setflags(write=False)
        return v

    def __call__(self, t):
        return eval_membership(self, t)

    def degrees(self, t) -> np.ndarray:
        """Vectorised evaluation with the universe check; returns an array."""
        t = np.asarray(t, dtype=float)
        self.universe.check(t)
        return np.clip(self.mu(np.atleast_1d(t)), 0.0, 1.0).reshape(t.shape)

    def to_dict(self) -> dict:
        return {"label": self.label, "universe": self.universe.to_dict(), "shape": shape_to_dict(self.mu)}

    @classmethod
    def from_dict(cls, d: dict, require_zero: bool | None = None) -> "FuzzyAttribute":
        mu = shape_from_dict(d["shape"])
        if require_zero is None:
            require_zero = d.get("require_zero", not isinstance(mu, Gaussian))
        return cls(d["label"], Universe.from_dict(d["universe"]), mu, require_zero)


@dataclass(frozen=True)
class AttributePair:
    """Ordered pair ``(a, b)``: effects are reported as "moving from a to b"."""

    a: FuzzyAttribute
    b: FuzzyAttribute

    def __post_init__(self):
        if self.a.universe != self.b.universe:
            raise UniverseMismatch("attribute pair must share one universe")

    @property
    def universe(self) -> Universe:
        return self.a.universe

    def swapped(self) -> "AttributePair":
        return AttributePair(self.b, self.a)

    def to_dict(self) -> dict:
        return {"a": self.a.to_dict(), "b": self.b.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "AttributePair":
        return cls(FuzzyAttribute.from_dict(d["a"]), FuzzyAttribute.from_dict(d["b"]))


def eval_membership(attr: FuzzyAttribute, t: float) -> float:
    """Membership degree of a single value; raises ``OutOfUniverse`` outside it."""
    attr.universe.check(t)
    return float(np.clip(attr.mu(np.array([float(t)]))[0], 0.0, 1.0))


def mirror_attribute(attr: FuzzyAttribute, interval: tuple[float, float] | None = None,
                     label: str | None = None) -> FuzzyAttribute:
    """Reflect ``attr`` across the midpoint of its universe: mu'(t) = mu(a + b - t)."""
    u = attr.universe
    if interval is not None:
        a, b = map(float, interval)
        if not (math.isclose(a, u.a, abs_tol=1e-12) and math.isclose(b, u.b, abs_tol=1e-12)):
            raise UniverseMismatch(f"mirror interval [{a}, {b}] differs from universe {u.describe()}")
    if u.is_discrete:
        vals = np.asarray(u.values)
        if not np.allclose(np.sort(u.a + u.b - vals), vals, rtol=0, atol=1e-12):
            raise UniverseMismatch("discrete universe is not symmetric about its midpoint")
    return FuzzyAttribute(label or f"mirror({attr.label})", u, attr.mu.mirrored(u.a, u.b),
                          attr.require_zero)


def make_partition(interval, n: int, family: str = "triangular", sigma: float | None = None,
                   labels: Sequence[str] | None = None,
                   points: int = DEFAULT_GRID) -> list[FuzzyAttribute]:
    """Evenly spaced partition of ``interval`` into ``n`` attributes.

    Peaks (or means) sit at ``a + k (b - a) / (n - 1)``.  Triangles reach zero at
    the neighbouring peaks; Gaussians default to ``sigma = (b - a) / (2 (n - 1))``.
    """
    if n < 2:
        raise BadCount(f"a partition needs at least 2 attributes, got {n}")
    u = interval if isinstance(interval, Universe) else Universe.interval(*interval, points=points)
    if u.is_discrete:
        raise InvalidAttribute("partitions are built on continuous universes")
    a, b = u.a, u.b
    peaks = [a + k * (b - a) / (n - 1) for k in range(n)]
    peaks[-1] = b
    if labels is None:
        labels = [f"{family[0]}{k}" for k in range(n)]
    if len(labels) != n:
        raise BadCount("one label per attribute required")
    out = []
    if family == "triangular":
        for k, p in enumerate(peaks):
            left = peaks[k - 1] if k > 0 else a
            right = peaks[k + 1] if k < n - 1 else b
            out.append(FuzzyAttribute(labels[k], u, Triangular(left, p, right)))
    elif family == "gaussian":
        s = sigma if sigma is not None else (b - a) / (2 * (n - 1))
        for k, p in enumerate(peaks):
            mf = Gaussian(p, s)
            reaches_zero = float(mf(u.grid()).min()) <= ZERO_TOL
            out.append(FuzzyAttribute(labels[k], u, mf, require_zero=reaches_zero))
    else:
        raise InvalidAttribute(f"unknown partition family {family!r}")
    return out
