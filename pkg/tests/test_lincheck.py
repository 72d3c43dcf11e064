"""Compatibility residuals, signatures, apparent-singularity
certification, and the gauge action."""

import random
from fractions import Fraction

import pytest

from painleve import exprlang, lincheck
from painleve.algebra import RationalExpr
from painleve.lincheck import WrongLocalShape

R = RationalExpr
X = R.var("x")
Y = R.var("y")
Z = R.var("z")
T = R.var("t")


def test_flow_derivative_examples(cat):
    H1 = cat.families["P1"].H
    assert lincheck.flow_derivative(Y, H1) == Z
    assert lincheck.flow_derivative(Z, H1) == 6 * Y ** 2 + T
    for fid in ("P1", "P2", "P5"):
        H = cat.families[fid].H
        assert lincheck.flow_derivative(H, H) == H.diff("t")


def test_all_canonical_families_compatible(cat):
    for fid in cat.list("family"):
        reports = lincheck.canonical_compat(cat.families[fid])
        if not isinstance(reports, list):
            reports = [reports]
        for r in reports:
            assert r.ok, (fid, r.sigma)
            assert r.residual1.is_zero() and r.residual2.is_zero()
            assert not r.mod_s_of_t


def test_all_sl_entries_compatible(cat):
    for sid in cat.list("sl"):
        reports = lincheck.sl_compat(cat.sl[sid])
        if not isinstance(reports, list):
            reports = [reports]
        for r in reports:
            assert r.ok, (sid, r.sigma)


def test_sl_specializations_compatible(cat):
    cases = [
        ("P1_2_SL", {"alpha": 0}),           # first-equation potential
        ("P4_34_SL", {"gamma": 0}),          # half-integer-rank reduction
        ("P3p_SL", {"gamma": 0}),
        ("P3p_SL", {"gamma": 0, "delta": 0}),
        ("P5_SL", {"delta": 0}),
    ]
    for sid, assignment in cases:
        fam = cat.sl[sid].specialize(assignment)
        reports = lincheck.sl_compat(fam)
        if not isinstance(reports, list):
            reports = [reports]
        assert all(r.ok for r in reports), (sid, assignment)


def test_negated_b_fails_with_named_residual(cat):
    import dataclasses
    p1 = cat.families["P1"]
    broken = dataclasses.replace(p1, b=-p1.b)
    report = lincheck.canonical_compat(broken)
    assert not report.ok
    # residual1 = p_t - (pa)_x + a_xx + 2 b_x changes by -4 b_x
    assert report.residual1 == -4 * p1.b.diff("x")
    assert not report.residual1.is_zero()


EXPECTED_TYPES = {
    "P6": "(1)^4", "P5": "(1)^2(2)", "P3p_D6": "(2)^2", "P3_D6": "(2)^2",
    "P3p_D7": "(3/2)(2)", "P3_D7": "(3/2)(2)", "P3p_D7_2": "(3/2)(2)",
    "P3_D7_2": "(3/2)(2)", "P3p_D8": "(3/2)^2", "P3_D8": "(3/2)^2",
    "degP5": "(1)^2(3/2)", "P4": "(1)(3)", "P4_34": "(1)(3)",
    "P34": "(1)(5/2)", "P2": "(4)", "P1_2": "(4)", "P1": "(7/2)",
}


def test_signatures_reproduce_the_diagram(cat):
    F = Fraction
    multisets = set()
    for fid in cat.list("family"):
        _, fam = cat.families[fid].sigma_variants()[0]
        rep = lincheck.signature(fam.p, fam.q, apparent_at=Y, H=fam.H)
        assert rep.type_label() == EXPECTED_TYPES[fid], fid
        assert rep.apparent_ok, fid
        assert rep.apparent == ("y",)
        multisets.add(rep.multiset())
    assert multisets == {
        (F(1), F(1), F(1), F(1)), (F(1), F(1), F(2)), (F(2), F(2)),
        (F(3, 2), F(2)), (F(3, 2), F(3, 2)), (F(1), F(1), F(3, 2)),
        (F(1), F(3)), (F(1), F(5, 2)), (F(4),), (F(7, 2),),
    }
    assert len(multisets) == 10


def test_specific_signature_values(cat):
    F = Fraction
    p6 = cat.families["P6"]
    rep = lincheck.signature(p6.p, p6.q, apparent_at=Y, H=p6.H)
    assert dict(rep.singular) == {"0": F(1), "1": F(1), "t": F(1), "inf": F(1)}
    p34 = cat.families["P34"].instantiate(1)
    rep = lincheck.signature(p34.p, p34.q, apparent_at=Y, H=p34.H)
    assert dict(rep.singular) == {"0": F(1), "inf": F(5, 2)}
    p1 = cat.families["P1"]
    rep = lincheck.signature(p1.p, p1.q, apparent_at=Y, H=p1.H)
    assert dict(rep.singular) == {"inf": F(7, 2)}


def test_matrix_signatures(cat):
    rep = lincheck.matrix_signature(cat.matrices["MJ"])
    assert rep.type_label() == "(4)"
    rep = lincheck.matrix_signature(cat.matrices["FN"])
    assert rep.type_label() == "(1)(4)"


def test_certify_apparent(cat):
    p2 = cat.families["P2"]
    assert lincheck.certify_apparent(p2.p, p2.q, Y, p2.H)
    # dropping the z/(x - y) term breaks the no-logarithm obstruction
    broken_q = p2.q - Z / (X - Y)
    assert not lincheck.certify_apparent(p2.p, broken_q, Y, p2.H)
    sl = cat.sl["P6_SL"]
    assert lincheck.certify_apparent(sl.p, None, Y, sl.K, sl=True)
    with pytest.raises(WrongLocalShape):
        lincheck.certify_apparent(2 / (X - Y), R.const(0), Y, None)


def test_gauge_identity_and_group_action():
    p = 1 / X + X
    q = X ** 2 + 1 / (X - Y)
    a = X / (X - Y)
    b = Y / (X - Y)
    zero = R.const(0)
    assert lincheck.gauge(p, q, a, b, zero, zero) == (p, q, a, b)
    g1 = 3 / X
    g2 = X / 2 + 1 / (X - 1)
    t1 = T ** 2
    t2 = 1 / T
    once = lincheck.gauge(*lincheck.gauge(p, q, a, b, g1, t1), g2, t2)
    combined = lincheck.gauge(p, q, a, b, g1 + g2, t1 + t2)
    assert once == combined
    # gauging by f then 1/f is the identity
    back = lincheck.gauge(*lincheck.gauge(p, q, a, b, g1, t1), -g1, -t1)
    assert back == (p, q, a, b)


def test_power_gauge_example():
    m = 3
    c = R.var("c")
    p = c / X
    q = R.const(0)
    gx = R.const(m) / X
    p2, q2, a2, b2 = lincheck.gauge(p, q, R.const(0), R.const(0), gx, R.const(0))
    assert p2 == (c + 2 * m) / X
    assert q2 == (m * m) / X ** 2 - m / X ** 2 + c * m / X ** 2


def test_p5_to_degp5_prefactor_shifts_b(cat):
    # u -> (x-1)^(theta/2) shifts b by a*gx - gt; with gt = theta(y-1)/(2t)
    # the shift matches the stated -theta (y-1)/(2t) up to the pole part
    p5 = cat.families["P5"]
    theta = R.var("theta")
    gx = theta / (2 * (X - 1))
    gt = theta * (Y - 1) / (2 * T)
    _, _, _, b2 = lincheck.gauge(p5.p, p5.q, p5.a, p5.b, gx, gt)
    shift = b2 - p5.b
    want = theta * (Y - 1) * Y / (2 * T * (X - Y))
    assert shift == want


def test_certify_apparent_commutes_with_gauge(cat):
    rng = random.Random(3)
    p2 = cat.families["P2"]
    for _ in range(5):
        # random gauge regular and nonvanishing at the apparent point x = y
        c1 = Fraction(rng.randint(-3, 3))
        c2 = Fraction(rng.randint(1, 4))
        gx = c1 * X + c2 / (X + 1)
        gt = R.const(0)
        gp, gq, ga, gb = lincheck.gauge(p2.p, p2.q, p2.a, p2.b, gx, gt)
        assert lincheck.certify_apparent(gp, gq, Y, p2.H)


def test_unlocatable_pole_raises(cat):
    from painleve.lincheck import NotRationalInX
    p = 1 / (X ** 2 - T)
    with pytest.raises(NotRationalInX):
        lincheck.signature(p, R.const(0), apparent_at=Y)
