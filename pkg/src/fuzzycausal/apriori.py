"""Level-wise frequent-itemset mining over categorical (column = label) items."""

from __future__ import annotations

from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

Item = tuple[str, int]


def item_matrix(columns: Mapping[str, np.ndarray], names: Sequence[str]) -> tuple[list[Item], np.ndarray]:
    """One boolean column per observed (column, label) pair."""
    items: list[Item] = []
    cols = []
    for name in names:
        x = np.asarray(columns[name])
        for lab in np.unique(x):
            items.append((name, int(lab)))
            cols.append(x == lab)
    return items, np.column_stack(cols) if cols else np.empty((0, 0), dtype=bool)


def frequent_itemsets(columns: Mapping[str, np.ndarray], names: Sequence[str],
                      min_support: float) -> dict[frozenset[Item], float]:
    """All itemsets with support >= ``min_support``; at most one item per column."""
    if not 0 < min_support <= 1:
        raise ValueError("min_support must lie in (0, 1]")
    items, m = item_matrix(columns, names)
    n = m.shape[0]
    need = min_support * n - 1e-9 * n
    counts = m.sum(axis=0)
    level = {(i,): m[:, i] for i in range(len(items)) if counts[i] >= need}
    out: dict[frozenset[Item], float] = {}
    while level:
        for key, mask in level.items():
            out[frozenset(items[i] for i in key)] = float(mask.sum()) / n
        keys = sorted(level)
        frequent = set(keys)
        nxt = {}
        for x, y in combinations(keys, 2):
            if x[:-1] != y[:-1]:
                continue
            cand = x + (y[-1],)
            if len({items[i][0] for i in cand}) < len(cand):
                continue
            if any(sub not in frequent for sub in combinations(cand, len(cand) - 1)):
                continue
            mask = level[x] & m[:, y[-1]]
            if mask.sum() >= need:
                nxt[cand] = mask
        level = nxt
    return out


def association_rules(columns: Mapping[str, np.ndarray], antecedents: Sequence[str], consequent: str,
                      min_support: float, min_confidence: float) -> list[tuple[tuple[Item, ...], Item, float, float]]:
    """Best-confidence consequent per full antecedent: ``(antecedent, consequent, support, confidence)``.

    Rules come from frequent itemsets holding exactly one item per antecedent
    column plus one consequent item.  Confidence ties go to the lower label.
    """
    if not 0 < min_confidence <= 1:
        raise ValueError("min_confidence must lie in (0, 1]")
    names = list(antecedents) + [consequent]
    freq = frequent_itemsets(columns, names, min_support)
    best: dict[tuple[Item, ...], tuple[Item, float, float]] = {}
    width = len(names)
    for itemset, sup in freq.items():
        if len(itemset) != width:
            continue
        by_col = dict(itemset)
        ante = tuple((c, by_col[c]) for c in antecedents)
        cons = (consequent, by_col[consequent])
        conf = sup / freq[frozenset(ante)]
        if conf < min_confidence - 1e-12:
            continue
        cur = best.get(ante)
        if cur is None or conf > cur[2] + 1e-12 or (abs(conf - cur[2]) <= 1e-12 and cons[1] < cur[0][1]):
            best[ante] = (cons, sup, conf)
    return [(ante, cons, sup, conf) for ante, (cons, sup, conf) in sorted(best.items())]
