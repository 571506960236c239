"""Distances between fuzzy attributes (through their densities) and KL divergence."""

from __future__ import annotations

import math

import numpy as np

from .errors import SupportViolation
from .fuzzy_core import AttributePair
from .prob import UnivariateDistribution, _as_density, check_compatible


def density_l1_distance(p: UnivariateDistribution, q: UnivariateDistribution) -> float:
    check_compatible(p, q)
    return float(p.universe.weights() @ np.abs(p.values - q.values))


def attribute_l1_distance(f, g) -> float:
    """``||f_F - f_G||_1``.

    Attributes are mapped to their standard densities; a distribution passed in
    directly is used as the attached density.
    """
    return density_l1_distance(_as_density(f), _as_density(g))


def pair_distance(p: AttributePair, q: AttributePair) -> float:
    return math.hypot(attribute_l1_distance(p.a, q.a), attribute_l1_distance(p.b, q.b))


def kl_divergence(p: UnivariateDistribution, q: UnivariateDistribution) -> float:
    """``∫ p log(p / q)`` with ``0 log 0 = 0``; requires q > 0 wherever p > 0."""
    check_compatible(p, q)
    pw = p.weighted()
    on = pw > 0
    if np.any(q.values[on] <= 0):
        raise SupportViolation("q vanishes where p has mass")
    val = float(pw[on] @ np.log(p.values[on] / q.values[on]))
    return max(val, 0.0)
