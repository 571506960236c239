"""Densities and pmfs induced by fuzzy attributes.

A :class:`UnivariateDistribution` is a vector of density values on a
continuous universe grid (trapezoid quadrature) or a pmf on a discrete
universe (plain sums).  Both kinds expose the same interface; binary
operations refuse to mix them.
"""

from __future__ import annotations

import csv
import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateAttribute,
    EmptySide,
    InvalidDistribution,
    NoOverlap,
    UniverseMismatch,
)
from .fuzzy_core import FuzzyAttribute, Universe

MASS_TOL = 1e-12
DENSITY_NORM_TOL = 1e-9
PMF_NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class UnivariateDistribution:
    universe: Universe
    values: np.ndarray
    raw_mass: float = 1.0
    label: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.universe.points,):
            raise InvalidDistribution(f"expected {self.universe.points} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or v.min() < 0:
            raise InvalidDistribution("distribution values must be finite and nonnegative")
        tol = PMF_NORM_TOL if self.universe.is_discrete else DENSITY_NORM_TOL
        total = float(self.universe.weights() @ v)
        if abs(total - 1.0) > tol:
            raise InvalidDistribution(f"distribution mass {total!r} is not 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_unnormalized(cls, universe: Universe, values, label: str = "",
                          what: type[Exception] = DegenerateAttribute) -> "UnivariateDistribution":
        v = np.asarray(values, dtype=float)
        mass = float(universe.weights() @ v)
        if not mass > MASS_TOL:
            raise what(f"{label or 'distribution'}: mass {mass:.3g} is below {MASS_TOL}")
        return cls(universe, v / mass, mass, label)

    @property
    def kind(self) -> str:
        return "pmf" if self.universe.is_discrete else "density"

    @property
    def support(self) -> np.ndarray:
        return self.universe.grid()

    def weighted(self) -> np.ndarray:
        """Quadrature-weighted probabilities; they sum to one."""
        return self.universe.weights() * self.values

    def expectation(self, g) -> float:
        return expectation(self, g)

    def moment(self, d: int) -> float:
        return moment(self, d)

    def mean(self) -> float:
        return moment(self, 1)

    def cdf(self) -> np.ndarray:
        """CDF at the grid nodes."""
        if self.universe.is_discrete:
            c = np.cumsum(self.values)
        else:
            h = self.universe.spacing
            c = np.concatenate([[0.0], np.cumsum(0.5 * h * (self.values[1:] + self.values[:-1]))])
        return c

    def to_csv(self, path) -> None:
        write_distribution_csv(self, path)


def check_compatible(p: UnivariateDistribution, q: UnivariateDistribution) -> None:
    if p.kind != q.kind:
        raise UniverseMismatch("cannot combine a density with a pmf")
    if p.universe != q.universe:
        raise UniverseMismatch(f"universes differ: {p.universe.describe()} vs {q.universe.describe()}")


def _as_density(x) -> UnivariateDistribution:
    return x if isinstance(x, UnivariateDistribution) else standard_density(x)


def standard_density(attr: FuzzyAttribute) -> UnivariateDistribution:
    """``f = mu / ||mu||`` (integral for intervals, sum for finite sets)."""
    return UnivariateDistribution.from_unnormalized(attr.universe, attr.values, attr.label)


def independent_density(attr, f_t: UnivariateDistribution) -> UnivariateDistribution:
    """``f_zeta ∝ f_T * f_A`` with ``f_A`` the standard density of ``attr``.

    ``attr`` may also be an already-built density, which then plays the role of f_A.
    """
    f_a = _as_density(attr)
    check_compatible(f_a, f_t)
    prod = f_a.values * f_t.values
    label = f"zeta({f_a.label})" if f_a.label else "zeta"
    return UnivariateDistribution.from_unnormalized(f_a.universe, prod, label, what=NoOverlap)


def expectation(dist: UnivariateDistribution, g) -> float:
    """``E[g(T)]``; ``g`` is a callable (vectorised or scalar) or an array on the grid."""
    t = dist.support
    if callable(g):
        vals = np.asarray(g(t), dtype=float)
        if vals.shape != t.shape:
            vals = np.array([float(g(x)) for x in t])
    else:
        vals = np.asarray(g, dtype=float)
        if vals.shape != t.shape:
            raise InvalidDistribution("integrand array does not match the grid")
    w = dist.weighted()
    nz = w > 0
    return float(w[nz] @ vals[nz])


def moment(dist: UnivariateDistribution, d: int) -> float:
    return expectation(dist, lambda t: t ** d)


def mean(dist: UnivariateDistribution) -> float:
    return moment(dist, 1)


# --- random streams ---------------------------------------------------------


def _stream_key(k) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    return int(k)


@dataclass(frozen=True)
class RandomSource:
    """Seeded PCG64 stream; ``child`` derives independent sub-streams by key."""

    seed: int
    stream: tuple[int, ...] = ()
    algorithm: str = field(default="PCG64", init=False)

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "stream", tuple(_stream_key(k) for k in self.stream))

    def child(self, *keys) -> "RandomSource":
        return RandomSource(self.seed, self.stream + tuple(_stream_key(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.PCG64(ss))


def sample(dist: UnivariateDistribution, n: int, rng: RandomSource) -> np.ndarray:
    """Inverse-CDF draws; linear interpolation inside grid cells for densities."""
    if n < 1:
        raise ValueError("sample size must be at least 1")
    u = rng.generator().random(n)
    t = dist.support
    if dist.universe.is_discrete:
        c = np.cumsum(dist.values)
        c[-1] = max(c[-1], 1.0)
        return t[np.searchsorted(c, u, side="right")]
    c = dist.cdf()
    c = c / c[-1]
    i = np.clip(np.searchsorted(c, u, side="right"), 1, len(t) - 1)
    lo, hi = c[i - 1], c[i]
    frac = np.where(hi > lo, (u - lo) / np.where(hi > lo, hi - lo, 1.0), 0.0)
    return t[i - 1] + frac * (t[i] - t[i - 1])


# --- constructors -----------------------------------------------------------


def uniform_threshold(universe: Universe, t0: float, side: str) -> UnivariateDistribution:
    """Uniform assignment over the values on one side of ``t0`` (inclusive).

    On a grid, each node carries the fraction of its dual cell lying on the
    requested side, so the trapezoid mass is exactly one and the density equals
    ``1 / (b - t0)`` (or ``1 / (t0 - a)``) away from the threshold.
    """
    if side not in ("above", "below"):
        raise ValueError("side must be 'above' or 'below'")
    t = universe.grid()
    if universe.is_discrete:
        keep = t >= t0 if side == "above" else t <= t0
        if not keep.any():
            raise EmptySide(f"no values {'>=' if side == 'above' else '<='} {t0}")
        v = keep / keep.sum()
        return UnivariateDistribution(universe, v, 1.0, f"uniform_{side}({t0:g})")
    lo, hi = (max(t0, universe.a), universe.b) if side == "above" else (universe.a, min(t0, universe.b))
    if not hi - lo > 0:
        raise EmptySide(f"zero-length segment {side} {t0} in {universe.describe()}")
    h = universe.spacing
    left = np.maximum(t - 0.5 * h, universe.a)
    right = np.minimum(t + 0.5 * h, universe.b)
    frac = np.clip(np.minimum(right, hi) - np.maximum(left, lo), 0.0, None) / (right - left)
    v = frac / (hi - lo)
    # Rounding in the dual-cell fractions is far below the normalisation tolerance.
    v = v / float(universe.weights() @ v)
    return UnivariateDistribution(universe, v, 1.0, f"uniform_{side}({t0:g})")


def normal_density(universe: Universe, mean: float, std: float, label: str = "") -> UnivariateDistribution:
    """Normal density truncated to the universe and renormalised on its grid."""
    if not std > 0:
        raise ValueError("std must be positive")
    t = universe.grid()
    v = np.exp(-0.5 * ((t - mean) / std) ** 2) / (std * math.sqrt(2 * math.pi))
    return UnivariateDistribution.from_unnormalized(universe, v, label or f"normal({mean:g},{std:g})",
                                                    what=InvalidDistribution)


def uniform_density(universe: Universe) -> UnivariateDistribution:
    return UnivariateDistribution.from_unnormalized(universe, np.ones(universe.points), "uniform")


def point_mass(universe: Universe, t0: float) -> UnivariateDistribution:
    if not universe.is_discrete:
        raise InvalidDistribution("point masses live on discrete universes")
    universe.check(t0)
    v = (np.abs(universe.grid() - t0) <= 1e-12 * max(1.0, abs(t0))).astype(float)
    return UnivariateDistribution(universe, v, 1.0, f"delta({t0:g})")


def write_distribution_csv(dist: UnivariateDistribution, path) -> None:
    col = "prob" if dist.universe.is_discrete else "density"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", col])
        for t, v in zip(dist.support, dist.values):
            w.writerow([repr(float(t)), repr(float(v))])


def read_distribution_csv(path, universe: Universe | None = None) -> UnivariateDistribution:
    with open(path, newline="", encoding="utf-8") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [(float(a), float(b)) for a, b in r]
    t = np.array([a for a, _ in rows])
    v = np.array([b for _, b in rows])
    if universe is None:
        if header[1] == "prob":
            universe = Universe.discrete(t)
        else:
            universe = Universe.interval(t[0], t[-1], len(t))
    return UnivariateDistribution(universe, v)
