from itertools import combinations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzzycausal.apriori import association_rules, frequent_itemsets


def _brute_force(cols, min_support):
    names = list(cols)
    n = len(cols[names[0]])
    out = {}
    for k in range(1, len(names) + 1):
        for subset in combinations(names, k):
            for row in set(zip(*(cols[c] for c in subset))):
                items = frozenset(zip(subset, (int(v) for v in row)))
                count = sum(all(cols[c][i] == v for c, v in items) for i in range(n))
                if count / n >= min_support - 1e-9:
                    out[items] = count / n
    return out


_tables = st.integers(1, 15).flatmap(lambda n: st.tuples(*(st.lists(st.integers(0, 2), min_size=n, max_size=n)
                                                           for _ in range(3))))


@given(_tables, st.floats(0.05, 1.0))
def test_frequent_itemsets_match_brute_force(table, sup):
    cols = {"a": np.array(table[0]), "b": np.array(table[1]), "c": np.array(table[2])}
    got = frequent_itemsets(cols, ["a", "b", "c"], sup)
    want = _brute_force(cols, sup)
    assert set(got) == set(want)
    for k, v in want.items():
        assert got[k] == pytest.approx(v)


@given(_tables, st.floats(0.05, 1.0))
def test_anti_monotone(table, sup):
    cols = {"a": np.array(table[0]), "b": np.array(table[1]), "c": np.array(table[2])}
    got = frequent_itemsets(cols, ["a", "b", "c"], sup)
    for itemset, s in got.items():
        for k in range(1, len(itemset)):
            for sub in combinations(itemset, k):
                assert frozenset(sub) in got and got[frozenset(sub)] >= s


def test_confidence_ties_go_to_lower_label():
    cols = {"x": np.array([0, 0, 0, 0]), "y": np.array([2, 1, 2, 1])}
    rules = association_rules(cols, ["x"], "y", 0.1, 0.5)
    assert rules == [((("x", 0),), ("y", 1), 0.5, 0.5)]


def test_threshold_validation():
    with pytest.raises(ValueError):
        frequent_itemsets({"x": np.array([0])}, ["x"], 0)
    with pytest.raises(ValueError):
        association_rules({"x": np.array([0]), "y": np.array([0])}, ["x"], "y", 0.5, 1.5)
