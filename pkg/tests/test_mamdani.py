import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzzycausal import kernels
from fuzzycausal.errors import (
    InvalidRuleBase,
    NoRuleFired,
    OutOfUniverse,
    TooManyConfigurations,
    UnknownVariable,
)
from fuzzycausal.experiments import tipping_rulebase
from fuzzycausal.fuzzy_core import Universe, make_partition
from fuzzycausal.mamdani import (
    METHODS,
    FuzzyRule,
    FuzzyVariable,
    LabeledDataset,
    RuleBase,
    aggregate,
    defuzzify_all,
    extract_rules_apriori,
    fuzzify_dataset,
    gaussian_partitions,
    infer,
    infer_batch,
    outcome_curve_via_rules,
    prob_infer_expectation,
    rule_strength,
    rule_strengths,
)
from fuzzycausal.prob import RandomSource, UnivariateDistribution
from fuzzycausal.scm import Dataset, generate_dataset, sodium_scm


@pytest.fixture(scope="module")
def tipping():
    return tipping_rulebase()


@pytest.fixture(scope="module")
def tipping_prob():
    return tipping_rulebase(probabilistic=True)


def _var(name, n=3, a=0.0, b=10.0, family="triangular", grid_points=None, labels=None):
    part = make_partition((a, b), n, family, labels=labels)
    return FuzzyVariable(name, part[0].universe, part, grid_points)


# --- activation --------------------------------------------------------------------


def test_rule_strength_semantics(tipping):
    r_or = tipping.rules[0]
    assert rule_strength(r_or, {"quality": 0, "service": 10}, tipping) == 1.0
    assert rule_strength(r_or, {"quality": 5, "service": 5}, tipping) == 0.0
    x, y = _var("x"), _var("y")
    base = RuleBase((x, y), _var("z", grid_points=101),
                    (FuzzyRule((("x", "t0"), ("y", "t1")), ("z", "t2"), "and"),))
    # x=3.5 -> t0 degree 0.3 ; y=4 -> t1 degree 0.8
    assert rule_strength(base.rules[0], {"x": 3.5, "y": 4.0}, base) == pytest.approx(0.3, abs=1e-12)
    assert rule_strength(base.rules[0], {"x": 0.0, "y": 5.0}, base) == 1.0


def test_rule_strength_errors(tipping):
    with pytest.raises(UnknownVariable):
        rule_strength(tipping.rules[0], {"quality": 1}, tipping)
    with pytest.raises(OutOfUniverse):
        rule_strength(tipping.rules[0], {"quality": 11, "service": 1}, tipping)
    with pytest.raises(UnknownVariable):
        RuleBase(tipping.inputs, tipping.output, (FuzzyRule((("price", "poor"),), ("tip", "low")),))
    with pytest.raises(UnknownVariable):
        RuleBase(tipping.inputs, tipping.output, (FuzzyRule((("quality", "superb"),), ("tip", "low")),))


def test_rulebase_validation(tipping):
    r = FuzzyRule((("quality", "poor"),), ("tip", "low"), probability=0.6)
    with pytest.raises(InvalidRuleBase):
        RuleBase(tipping.inputs, tipping.output, (r,))
    coarse = FuzzyVariable("tip", tipping.output.universe, tipping.output.partition, 100)
    with pytest.raises(InvalidRuleBase):
        RuleBase(tipping.inputs, coarse, tipping.rules)
    with pytest.raises(InvalidRuleBase):
        FuzzyRule((("quality", "poor"),), ("tip", "low"), "xor")


# --- inference --------------------------------------------------------------------


def test_single_symmetric_consequent_centroid():
    x = _var("x")
    out = _var("y", 3, 0, 25, grid_points=1001)
    base = RuleBase((x,), out, (FuzzyRule((("x", "t0"),), ("y", "t1")),))
    for m in ("centroid", "bisector", "mom", "som", "lom"):
        assert infer(base, {"x": 0.0}, m) == pytest.approx(12.5, abs=0.025)


def test_tipping_all_poor_centroid(tipping):
    s = rule_strengths(tipping, {"quality": 0.0, "service": 0.0})[0]
    np.testing.assert_array_equal(s, [1, 0, 0])
    assert infer(tipping, {"quality": 0.0, "service": 0.0}) == pytest.approx(12.5 / 3, abs=0.05)


@given(st.floats(0, 10), st.floats(0, 10))
def test_defuzzifier_bracketing(q, s):
    base = tipping_rulebase()
    v = defuzzify_all(base, {"quality": q, "service": s})[0]
    centroid, _, mom, som, lom = v
    assert som <= mom <= lom
    agg = aggregate(base, {"quality": q, "service": s})
    support = base.grid[agg > 0]
    assert support.min() <= centroid <= support.max()


def test_centroid_can_exceed_lom():
    # a tall narrow set on the left and a wide low plateau on the right
    grid = np.linspace(0, 10, 1001)
    cons = np.vstack([np.clip(1 - np.abs(grid - 1) / 0.5, 0, 1), ((grid > 3) & (grid < 10)).astype(float)])
    vals = kernels.aggregate_defuzzify(np.array([[1.0, 0.6]]), np.array([0, 1]), cons, grid)[0]
    assert vals[0] > vals[4]


def test_adding_rule_never_lowers_aggregate(tipping):
    partial = RuleBase(tipping.inputs, tipping.output, tipping.rules[:2])
    for q, s in [(2, 3), (7, 9), (5, 5), (0, 10)]:
        assert np.all(aggregate(tipping, {"quality": q, "service": s})
                      >= aggregate(partial, {"quality": q, "service": s}))


def test_aggregate_bounded(tipping):
    agg = aggregate(tipping, {"quality": 6.5, "service": 3.2})
    assert agg.min() >= 0 and agg.max() <= 1 and agg.max() > 0


def test_no_rule_fired_policy():
    x = _var("x", 5)
    out = _var("y", 3, 0, 25, grid_points=101)
    rules = (FuzzyRule((("x", "t0"),), ("y", "t0")),)
    base = RuleBase((x,), out, rules)
    with pytest.raises(NoRuleFired):
        infer(base, {"x": 9.0})
    lenient = RuleBase((x,), out, rules, no_fire="midpoint")
    assert infer(lenient, {"x": 9.0}) == 12.5


@given(st.floats(0, 1), st.floats(0, 1), st.integers(2, 9))
def test_gaussian_partitions_always_fire(x, y, n):
    px = make_partition((0, 1), n, "gaussian", points=201)
    py = make_partition((0, 1), n, "gaussian", points=201)
    out = make_partition((0, 1), n, "gaussian", points=201)
    base = RuleBase((FuzzyVariable("x", px[0].universe, px), FuzzyVariable("y", py[0].universe, py)),
                    FuzzyVariable("z", out[0].universe, out, 201),
                    (FuzzyRule((("x", px[0].label), ("y", py[-1].label)), ("z", out[0].label)),))
    assert math.isfinite(infer(base, {"x": x, "y": y}))


# --- probabilistic ---------------------------------------------------------------------


def test_prob_expectation_reduces_to_infer(tipping):
    for q, s in [(1, 2), (5, 5), (8, 9.5)]:
        for m in METHODS:
            assert prob_infer_expectation(tipping, {"quality": q, "service": s}, m) == \
                infer(tipping, {"quality": q, "service": s}, m)


def _deterministic(base, rules):
    return RuleBase(base.inputs, base.output, tuple(
        FuzzyRule(r.antecedent, r.consequent, r.connective) for r in rules))


def test_two_groups_against_enumeration():
    x, y = _var("x"), _var("y")
    out = _var("z", 3, 0, 25, grid_points=501)
    g1 = ((("x", "t0"),), "and")
    g2 = ((("x", "t2"), ("y", "t1")), "or")
    rules = (FuzzyRule(g1[0], ("z", "t0"), g1[1], 0.7), FuzzyRule(g1[0], ("z", "t1"), g1[1], 0.3),
             FuzzyRule(g2[0], ("z", "t2"), g2[1], 0.7), FuzzyRule(g2[0], ("z", "t0"), g2[1], 0.3))
    base = RuleBase((x, y), out, rules)
    point = {"x": 3.0, "y": 4.0}
    for m in METHODS:
        oracle = 0.0
        for i, j in itertools.product((0, 1), (2, 3)):
            det = _deterministic(base, (rules[i], rules[j]))
            oracle += rules[i].probability * rules[j].probability * infer(det, point, m)
        assert abs(prob_infer_expectation(base, point, m) - oracle) <= 1e-12


def test_tipping_probabilistic_eight_configurations(tipping_prob):
    point = {"quality": 5.0, "service": 5.0}
    groups = [tipping_prob.rules[0:2], tipping_prob.rules[2:4], tipping_prob.rules[4:6]]
    oracle = 0.0
    count = 0
    for choice in itertools.product(*groups):
        count += 1
        w = math.prod(r.probability for r in choice)
        oracle += w * infer(_deterministic(tipping_prob, choice), point, "centroid")
    assert count == 8
    assert abs(prob_infer_expectation(tipping_prob, point, "centroid") - oracle) <= 1e-9


def test_too_many_configurations():
    x = _var("x", 13)
    out = _var("z", 2, 0, 1, grid_points=101)
    rules = []
    for lab in x.labels:
        rules += [FuzzyRule((("x", lab),), ("z", "t0"), probability=0.5),
                  FuzzyRule((("x", lab),), ("z", "t1"), probability=0.5)]
    base = RuleBase((x,), out, tuple(rules))
    with pytest.raises(TooManyConfigurations):
        prob_infer_expectation(base, {"x": 1.0})


def test_deterministic_inference_refuses_groups(tipping_prob):
    with pytest.raises(InvalidRuleBase):
        infer(tipping_prob, {"quality": 1, "service": 1})


# --- curves ---------------------------------------------------------------------------


def test_constant_rulebase_gives_flat_curve():
    q, s = _var("quality"), _var("service")
    out = _var("tip", 3, 0, 25, grid_points=1001)
    rules = tuple(FuzzyRule((("quality", lab), ("service", lab2)), ("tip", "t1"), "or")
                  for lab, lab2 in zip(q.labels, s.labels))
    base = RuleBase((q, s), out, rules)
    dist = UnivariateDistribution.from_unnormalized(s.universe, np.ones(s.universe.points))
    curve = outcome_curve_via_rules(base, "quality", dist, np.linspace(0, 10, 11), 50, RandomSource(0))
    np.testing.assert_allclose(curve.y, curve.y[0], atol=1e-12)
    assert curve.provenance == "fuzzy-system"


def test_point_mass_confounder_matches_infer(tipping):
    c0 = 6.5
    dist = UnivariateDistribution(Universe.discrete([c0]), [1.0])
    grid = np.linspace(0, 10, 21)
    curve = outcome_curve_via_rules(tipping, "quality", dist, grid, 10, RandomSource(0), "bisector")
    expected = [infer(tipping, {"quality": t, "service": c0}, "bisector") for t in grid]
    np.testing.assert_allclose(curve.y, expected, atol=1e-12)


def test_curve_requires_two_inputs():
    x = _var("x")
    out = _var("z", 3, 0, 1, grid_points=101)
    base = RuleBase((x,), out, (FuzzyRule((("x", "t0"),), ("z", "t0")),))
    with pytest.raises(InvalidRuleBase):
        outcome_curve_via_rules(base, "x", np.array([1.0]), [0.0], 1, RandomSource(0))


def test_batch_matches_pointwise(tipping):
    q = np.array([0.0, 2.5, 7.1, 10.0])
    s = np.array([3.3, 10.0, 4.4, 0.0])
    batch = infer_batch(tipping, {"quality": q, "service": s}, METHODS)
    for i in range(4):
        for m in METHODS:
            assert batch[m][i] == infer(tipping, {"quality": q[i], "service": s[i]}, m)


# --- data -------------------------------------------------------------------------------


def test_fuzzify_peaks_and_ties():
    part = make_partition((0, 10), 3)
    data = Dataset({"x": [0.0, 5.0, 10.0, 2.5, 7.5, 2.4]})
    lab = fuzzify_dataset(data, {"x": part})
    assert lab.columns["x"].tolist() == [0, 1, 2, 0, 1, 0]


def test_fuzzify_out_of_universe():
    with pytest.raises(OutOfUniverse):
        fuzzify_dataset(Dataset({"x": [11.0]}), {"x": make_partition((0, 10), 3)})


def test_sodium_labels_in_range():
    data = generate_dataset(sodium_scm(), 2000, RandomSource(0))
    parts = gaussian_partitions(data, data.names, 8)
    lab = fuzzify_dataset(data, parts)
    for v in lab.columns.values():
        assert v.min() >= 0 and v.max() < 8


def _labeled(cols):
    parts = {k: make_partition((0, 10), 4, labels=[f"{k}{i}" for i in range(4)]) for k in cols}
    return LabeledDataset({k: np.asarray(v) for k, v in cols.items()}, parts)


def test_extract_toy_rule():
    lab = _labeled({"T": [0, 0, 0, 1, 1, 1], "X": [0, 0, 0, 1, 0, 1], "Y": [0, 0, 0, 1, 1, 0]})
    base = extract_rules_apriori(lab, ["T", "X"], "Y", 0.3, 0.9)
    assert len(base.rules) == 1
    r = base.rules[0]
    assert r.antecedent == (("T", "T0"), ("X", "X0")) and r.consequent == ("Y", "Y0")
    assert r.support == pytest.approx(0.5) and r.confidence == 1.0


def test_extract_nothing_found():
    from fuzzycausal.errors import NoRulesFound

    lab = _labeled({"T": [0, 1, 2, 3], "X": [0, 1, 0, 1], "Y": [0, 1, 1, 0]})
    with pytest.raises(NoRulesFound):
        extract_rules_apriori(lab, ["T", "X"], "Y", 1.0, 1.0)


def _exhaustive(cols, antecedents, consequent, min_support, min_conf):
    n = len(cols[consequent])
    rows = list(zip(*(cols[c] for c in antecedents), cols[consequent]))
    best = {}
    for combo in set(r[:-1] for r in rows):
        match = [r for r in rows if r[:-1] == combo]
        for y in sorted(set(cols[consequent])):
            hit = sum(1 for r in match if r[-1] == y)
            sup, conf = hit / n, hit / len(match)
            if sup >= min_support - 1e-12 and conf >= min_conf - 1e-12:
                if combo not in best or conf > best[combo][1] + 1e-12:
                    best[combo] = (y, conf)
    return {combo: y for combo, (y, _) in best.items()}


@given(st.integers(1, 12).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 3), min_size=n, max_size=n),
    st.lists(st.integers(0, 3), min_size=n, max_size=n),
    st.lists(st.integers(0, 3), min_size=n, max_size=n))),
    st.floats(0.05, 1.0), st.floats(0.05, 1.0), st.booleans())
def test_extract_matches_exhaustive(cols3, sup, conf, two_antecedents):
    cols = {"A": cols3[0], "B": cols3[1], "Y": cols3[2]}
    ante = ["A", "B"] if two_antecedents else ["A"]
    used = {k: cols[k] for k in ante + ["Y"]}
    oracle = _exhaustive(used, ante, "Y", sup, conf)
    lab = _labeled(used)
    if not oracle:
        from fuzzycausal.errors import NoRulesFound
        with pytest.raises(NoRulesFound):
            extract_rules_apriori(lab, ante, "Y", sup, conf)
        return
    base = extract_rules_apriori(lab, ante, "Y", sup, conf)
    got = {tuple(int(lbl[1:]) for _, lbl in r.antecedent): int(r.consequent[1][1:]) for r in base.rules}
    assert got == oracle


# --- serialization ------------------------------------------------------------------


def test_rulebase_json_roundtrip(tmp_path, tipping_prob):
    path = tmp_path / "rb.json"
    tipping_prob.save(path)
    doc = json.loads(path.read_text())
    assert doc["rules"][0] == {"if": [["quality", "poor"], ["service", "poor"]], "connective": "or",
                               "then": ["tip", "low"], "prob": 0.7}
    assert doc["output"]["grid_points"] == 1001
    back = RuleBase.load(path)
    point = {"quality": 3.0, "service": 8.0}
    assert prob_infer_expectation(back, point) == prob_infer_expectation(tipping_prob, point)


def test_describe_mentions_every_rule(tipping):
    text = tipping.describe()
    assert "IF quality is poor OR service is poor THEN tip is low" in text
    assert "triangular" in text
