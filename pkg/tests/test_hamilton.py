"""Scalar-level identities: eliminations, solution-level equivalences,
scaling covariance, and closed-form solutions."""

import pytest

from painleve import exprlang, hamilton
from painleve.algebra import RationalExpr
from painleve.hamilton import NotAffine, NotCovariant, ResidualNonzero

R = RationalExpr
Y = R.var("y")
YP = R.var("yp")
T = R.var("t")


def test_all_seventeen_eliminations(cat):
    for fid in cat.list("family"):
        for identity in hamilton.verify_elimination(cat.families[fid], cat.odes):
            assert identity.ok, identity.descr
            assert identity.residual.is_zero()


def test_specific_parameter_coefficients(cat):
    # the second equation carries (alpha + 1/2) y inside its Hamiltonian
    p2 = cat.families["P2"]
    flow = hamilton.flow_from_hamiltonian(p2.H)
    derived = hamilton.eliminate(flow)
    al = R.var("alpha")
    assert derived == 2 * Y ** 3 + T * Y + al
    # H_II in (q, p) form: removing p yields the second equation with the
    # shifted constant, removing q yields the square
    a = R.var("a")
    q = R.var("q")
    p = R.var("p")
    H2 = p ** 2 / 2 - (q ** 2 + T / 2) * p - a * q
    flow = hamilton.flow_from_hamiltonian(H2, pos="q", mom="p")
    keep_q = hamilton.eliminate(flow, keep="q")
    assert keep_q == cat.odes["P2"].rhs.subst({"alpha": a - R.fraction(1, 2)})
    keep_p = hamilton.eliminate(flow, keep="p")
    assert keep_p == cat.odes["P34"].rhs.subst({"alpha": a ** 2})


def test_d6_prime_hamiltonian_elimination(cat):
    # the degenerate-fifth Hamiltonian pair in (q, p) with time t
    names = {n: "var" for n in ("q", "p", "t", "alpha_1", "beta_1")}
    a1 = R.var("alpha_1")
    b1 = R.var("beta_1")
    H = exprlang.parse_expr(
        "(q^2*p^2 - (q^2 - (alpha_1 + beta_1)*q - t)*p - alpha_1*q)/t", names)
    flow = hamilton.flow_from_hamiltonian(H, pos="q", mom="p")
    derived = hamilton.eliminate(flow, keep="q")
    want = cat.odes["P3p"].rhs.subst({
        "alpha": 4 * (a1 - b1), "beta": -4 * (a1 + b1 - 1),
        "gamma": R.const(4), "delta": R.const(-4)})
    assert derived == want


def test_not_affine():
    # flow of y does not involve the momentum at all
    H = R.var("y") ** 2
    flow = hamilton.flow_from_hamiltonian(H)
    with pytest.raises(NotAffine):
        hamilton.eliminate(flow)


def test_equivalences(cat):
    for eid in cat.list("equiv"):
        identity = hamilton.check_equivalence(cat.equivs[eid], cat.odes)
        assert identity.ok, eid


def test_equivalence_failure_carries_residual(cat):
    import dataclasses
    tr = cat.equivs["p2_to_p34"]
    bad = dataclasses.replace(tr, expr=tr.expr + 1)
    with pytest.raises(ResidualNonzero) as err:
        hamilton.check_equivalence(bad, cat.odes)
    assert not err.value.residual.is_zero()


def test_double_elimination_consistency(cat):
    # from a second-equation solution y, the combination y^2 + y' + t/2
    # satisfies the thirty-fourth equation; feeding it back through
    # (p' - sa)/(2p) with sa = alpha + 1/2 returns y itself
    al = R.var("alpha")
    p = Y ** 2 + YP + T / 2
    rhs = cat.odes["P2"].rhs
    dp = p.diff("t") + YP * p.diff("y") + rhs * p.diff("yp")
    q = (dp - (al + R.fraction(1, 2))) / (2 * p)
    assert q == Y


def test_scaling_maps(cat):
    c = R.var("c")
    c1 = R.var("c_1")
    c2 = R.var("c_2")
    fac = hamilton.check_scaling(cat.odes["P1_2"], c, c ** 2)
    assert fac == {"alpha": c ** 6, "beta": c ** 5}
    fac = hamilton.check_scaling(cat.odes["P4_34"], c, c)
    assert fac == {"alpha": R.const(1), "beta": c ** 3, "gamma": c ** 4}
    fac = hamilton.check_scaling(cat.odes["P3"], c1, c2)
    assert fac == {"alpha": c1 * c2, "beta": c2 / c1,
                   "gamma": c1 ** 2 * c2 ** 2, "delta": c2 ** 2 / c1 ** 2}
    fac = hamilton.check_scaling(cat.odes["P5"], R.const(1), c)
    assert fac == {"alpha": R.const(1), "beta": R.const(1),
                   "gamma": c, "delta": c ** 2}
    with pytest.raises(NotCovariant):
        hamilton.check_scaling(cat.odes["P6"], R.const(1), c)


def test_quadrature_solution(cat):
    names = {n: "var" for n in ("t", "C_1", "C_2", "alpha")}
    y = exprlang.parse_expr("C_1*t^2 + C_2*t + (C_2^2 - alpha)/(4*C_1)", names)
    ok = hamilton.check_solution(
        cat.odes["P4_34"], y,
        params={"alpha": R.var("alpha"), "beta": 0, "gamma": 0, "sigma": 1})
    assert ok
    assert not hamilton.check_solution(cat.odes["P1"], T)
    assert hamilton.check_solution(cat.odes["P2"], R.const(0), params={"alpha": 0})


def test_p3_prime_map_both_directions(cat):
    fwd = hamilton.p3_prime_map("P3_to_P3p", cat)
    assert fwd.ok
    rev = hamilton.p3_prime_map("P3p_to_P3", cat)
    assert rev.ok
    with pytest.raises(hamilton.HamiltonError):
        hamilton.p3_prime_map("sideways", cat)


def test_p3_prime_map_detects_wrong_substitution(cat):
    # x = t instead of x = t^2 leaves a remainder
    odes = cat.odes
    params = {n: RationalExpr.var(n) for n in ("alpha", "beta", "gamma", "delta")}
    p3 = odes["P3"].rhs.subst(params)
    p3p = odes["P3p"].rhs.subst(params)

    def total(g):
        return g.diff("t") + YP * g.diff("y") + p3 * g.diff("yp")

    w = T * Y
    psi = T.diff("t")
    w1 = total(w) / psi
    w2 = total(w1) / psi
    residual = w2 - p3p.subst({"y": w, "yp": w1, "t": T})
    assert not residual.is_zero()
