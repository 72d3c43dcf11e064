"""Degeneration rules: all limits at their stated orders, the algebraic
rules exactly, fault detection, and the diagram closure."""

import dataclasses
from math import inf

import pytest

from painleve import degeneration
from painleve.algebra import RationalExpr
from painleve.degeneration import (
    GaugeMismatch, MissingArrow, TypeCountMismatch, ValuationShortfall,
)


ALGEBRAIC = {"P3p_to_P3", "D7_to_D7_2", "P4_to_P4_34", "P1_2_to_P2"}


def _reports(cat, rule, check=False):
    reports = degeneration.apply_rule(cat, rule, check=check)
    return reports if isinstance(reports, list) else [reports]


def test_all_rules_pass(cat):
    assert set(cat.list("rule")) >= ALGEBRAIC
    for rid in cat.list("rule"):
        rule = cat.rules[rid]
        for report in _reports(cat, rule, check=True):
            assert report.ok, (rid, report.shortfalls)
            if rule.algebraic:
                assert all(v == inf for v in report.coeff_valuations.values()), rid
                assert report.h_valuation == inf
            else:
                assert all(v >= 1 for v in report.coeff_valuations.values()), rid
                assert report.h_valuation >= rule.hrel_order, rid


def test_hamiltonian_orders_match_the_claims(cat):
    claims = {
        "P6_to_P5": 0, "P5_to_degP5": 1, "P5_to_P4": 0, "P5_to_P3p_D6": 1,
        "degP5_to_P3p_D7_2": 1, "degP5_to_P34": -1, "D6_to_D7": 1,
        "D6_to_D7_2": 1, "D7_to_D8": 1, "D7_2_to_D8": 1, "P3_D6_to_P2": -1,
        "P4_to_P2": 0, "P4_to_P34": 0, "P3_D7_to_P1": 7, "P3_D7_2_to_P1": 7,
        "P34_to_P1": -1, "P2_to_P1": 1,
    }
    for rid, order in claims.items():
        assert cat.rules[rid].hrel_order == order, rid
    for rid in ALGEBRAIC:
        assert cat.rules[rid].hrel_order is None


def test_wrong_epsilon_exponent_is_detected(cat):
    rule = cat.rules["P2_to_P1"]
    eps = RationalExpr.var("eps")
    bad = dataclasses.replace(
        rule, subst=dict(rule.subst, alpha=4 * eps ** -14))
    with pytest.raises(ValuationShortfall) as err:
        degeneration.apply_rule(cat, bad)
    # the diagnostic names the failing coefficient
    assert any(name in str(err.value) for name in ("q", "H"))
    assert not err.value.report.ok


def test_broken_algebraic_rule_is_a_gauge_mismatch(cat):
    rule = cat.rules["P3p_to_P3"]
    gx, gt = rule.postgauge
    bad = dataclasses.replace(rule, postgauge=(gx + 1, gt))
    with pytest.raises(GaugeMismatch):
        degeneration.apply_rule(cat, bad)


def test_composed_paths_land_on_the_same_family(cat):
    # both routes into the thirty-fourth family end on the identical object
    r1 = cat.rules["degP5_to_P34"]
    r2 = cat.rules["P4_to_P34"]
    assert r1.target == r2.target == "P34"
    assert cat.families[r1.target] is cat.families[r2.target]
    # and both routes out of the fifth equation reach it
    assert cat.rules["P5_to_degP5"].target == "degP5"
    assert cat.rules["P5_to_P4"].target == "P4"


def test_scalar_parameter_maps_confirmed_by_elimination(cat):
    # the endpoint families of every rule eliminate onto their scalar
    # equations, which pins the rule-level parameter correspondences
    from painleve import hamilton
    seen = set()
    for rid in cat.list("rule"):
        rule = cat.rules[rid]
        for fid in (rule.source, rule.target):
            if fid in seen:
                continue
            seen.add(fid)
            for identity in hamilton.verify_elimination(cat.families[fid], cat.odes):
                assert identity.ok, (rid, fid)


def test_diagram_closure(cat):
    report = degeneration.diagram_closure(cat)
    assert report.ok
    assert len(report.types) == 10
    assert len(degeneration.DIAGRAM_ARROWS) == 14
    assert set(report.covered_arrows) == degeneration.DIAGRAM_ARROWS
    # self-arrows of algebraic rules stay off the diagram
    assert report.rule_arrows["P3p_to_P3"] == ("(2)^2", "(2)^2")


def test_closure_misses_deleted_rule(cat):
    with pytest.raises(MissingArrow) as err:
        degeneration.diagram_closure(cat, skip_rules={"P34_to_P1"})
    assert "(1)(5/2) -> (7/2)" in str(err.value)


def test_type_count_with_and_without_mj(cat):
    with_mj = degeneration.diagram_closure(cat, include_mj=True)
    without = degeneration.diagram_closure(cat, include_mj=False)
    assert len(with_mj.types) == len(without.types) == 10


def test_dot_emission(cat):
    closure = degeneration.diagram_closure(cat)
    dot = degeneration.dot_graph(closure)
    assert dot.startswith("digraph")
    assert dot.count("[label=") == 10
    assert dot.count("->") == 14
