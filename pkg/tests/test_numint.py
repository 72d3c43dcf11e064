"""Numerical cross-checks: integrator accuracy, scalar residuals, pole
guard behavior, and degeneration limit probes."""

import math

import pytest

from painleve import numint
from painleve.numint import ConditioningFailure, NumintError


def test_p1_endpoint_reproducible_across_step_halving(cat):
    fam = cat.families["P1"]
    a = numint.integrate(fam, {}, 0.0, 0.0, 0.0, 1.0, fixed_step=0.01)
    b = numint.integrate(fam, {}, 0.0, 0.0, 0.0, 1.0, fixed_step=0.005)
    assert abs(a.samples[-1][1] - b.samples[-1][1]) < 1e-8


def test_scalar_residuals(cat):
    traj = numint.integrate(cat.families["P1"], {}, 0.0, 0.0, 0.0, 1.0, tol=1e-10)
    assert numint.ode_residual(traj, cat.odes["P1"]) < 1e-6
    traj2 = numint.integrate(cat.families["P2"], {"alpha": 0.5},
                             0.1, 0.0, 0.0, 1.0, tol=1e-10)
    assert numint.ode_residual(traj2, cat.odes["P2"], {"alpha": 0.5}) < 1e-6
    # the wrong scalar equation shows a macroscopic residual
    assert numint.ode_residual(traj2, cat.odes["P1"]) > 1e-2


def test_residual_shrinks_with_tolerance(cat):
    fam = cat.families["P2"]
    r = {}
    for tol in (1e-8, 1e-10):
        traj = numint.integrate(fam, {"alpha": 0.5}, 0.1, 0.0, 0.0, 1.0,
                                tol=tol, max_step=0.05 if tol == 1e-8 else 0.01)
        r[tol] = numint.ode_residual(traj, cat.odes["P2"], {"alpha": 0.5})
    assert r[1e-10] < r[1e-8]


def test_self_convergence_band(cat):
    ratio = numint.self_convergence(cat.families["P1"], {}, 0.8, 0.3, 0.0, 0.8)
    assert 16 <= ratio <= 64, ratio
    ratio = numint.self_convergence(cat.families["P2"], {"alpha": 0.5},
                                    0.8, 0.3, 0.0, 0.8)
    assert 16 <= ratio <= 64, ratio


def test_zero_length_interval(cat):
    traj = numint.integrate(cat.families["P1"], {}, 0.3, 0.1, 0.5, 0.5)
    assert traj.samples == [(0.5, 0.3, 0.1)]
    assert not traj.truncated


def test_flow_field_residual_for_fixed_point_style_start(cat):
    fam = cat.families["P2"]
    traj = numint.integrate(fam, {"alpha": 0.0}, 0.0, 0.0, 0.0, 1.0, tol=1e-10)
    f = numint.family_flow(fam, {"alpha": 0.0})
    worst = 0.0
    for i in range(1, 50):
        t = i / 50.0
        y, z = traj.eval(t)
        dy, dz = traj.eval_deriv(t, 1)
        fy, fz = f(t, y, z)
        worst = max(worst, abs(dy - fy), abs(dz - fz))
    assert worst < 1e-8


def test_hamiltonian_drift_matches_partial_t(cat):
    from painleve.algebra import RationalExpr
    fam = cat.families["P2"]
    traj = numint.integrate(fam, {"alpha": 0.5}, 0.1, 0.0, 0.0, 1.0, tol=1e-10)
    H = fam.H.subst({"alpha": RationalExpr.fraction(1, 2)})
    Ht = numint.compile_scalar(H.diff("t"), ("t", "y", "z"))
    Hy = numint.compile_scalar(H.diff("y"), ("t", "y", "z"))
    Hz = numint.compile_scalar(H.diff("z"), ("t", "y", "z"))
    worst = 0.0
    for i in range(1, 40):
        t = i / 40.0
        y, z = traj.eval(t)
        dy, dz = traj.eval_deriv(t, 1)
        drift = Ht(t, y, z) + Hy(t, y, z) * dy + Hz(t, y, z) * dz
        worst = max(worst, abs(drift - Ht(t, y, z)))
    assert worst < 1e-6


def test_pole_guard_truncates_cleanly(cat):
    traj = numint.integrate(cat.families["P1"], {}, 0.0, 0.0, 0.0, 10.0, tol=1e-8)
    assert traj.truncated
    assert "pole guard" in traj.truncation_reason
    assert traj.t_end < 10.0
    # samples stay below the guard until the trip point
    assert all(abs(y) <= numint.POLE_GUARD and abs(z) <= numint.POLE_GUARD
               for _, y, z in traj.samples)


def test_tolerance_band_is_enforced(cat):
    with pytest.raises(NumintError):
        numint.integrate(cat.families["P1"], {}, 0, 0, 0, 1, tol=1e-5)
    with pytest.raises(NumintError):
        numint.integrate(cat.families["P1"], {}, 0, 0, 0, 1, tol=1e-14)


def test_csv_format(cat):
    traj = numint.integrate(cat.families["P1"], {}, 0.0, 0.0, 0.0, 0.1, tol=1e-10)
    lines = traj.csv().strip().split("\n")
    assert lines[0] == "t,y,z"
    assert len(lines) == len(traj.samples) + 1
    for line in lines[1:]:
        assert len(line.split(",")) == 3


def test_limit_probes_meet_claimed_orders(cat):
    for rid in cat.list("rule"):
        probe = numint.limit_probe(cat, cat.rules[rid])
        assert probe["pass"], (rid, probe["slope"], probe["claimed"])


def test_probe_guards(cat):
    rule = cat.rules["P6_to_P5"]
    with pytest.raises(ConditioningFailure):
        numint.limit_probe(cat, rule, eps_values=(1e-2, 1e-4))
    with pytest.raises(ConditioningFailure):
        numint.limit_probe(cat, rule, eps_values=(0.025, 0.05, 0.1))


def test_probe_detects_wrong_exponent(cat):
    import dataclasses
    from painleve.algebra import RationalExpr
    rule = cat.rules["P2_to_P1"]
    bad = dataclasses.replace(rule,
                              hrel_phi=rule.hrel_phi * RationalExpr.var("eps"))
    probe = numint.limit_probe(cat, bad)
    assert not probe["pass"]


def test_step_underflow_at_singular_time(cat):
    params = {"kappa_0": 0.3, "kappa_1": 0.2, "kappa_inf": 0.4, "theta": 0.1}
    with pytest.raises(numint.StepUnderflow):
        numint.integrate(cat.families["P6"], params, 0.3, 0.2, 0.5, 1.0,
                         tol=1e-10)


def test_residual_decay_at_small_eps(cat):
    # numeric witness for the symbolic valuation of the P2 -> P1 relation:
    # the residual decays one order per decade at eps = 1e-2 -> 1e-3
    import math
    from painleve import degeneration
    from painleve.algebra import eps_valuation
    rule = cat.rules["P2_to_P1"]
    rep = degeneration.apply_rule(cat, rule, check=False)
    residual = rep.residuals["H"]
    val = eps_valuation(residual).valuation
    assert val >= rule.hrel_order
    point = {"t": 0.7, "y": 1.3, "z": 0.9}
    v2 = abs(residual.eval_numeric(dict(point, eps=1e-2)))
    v3 = abs(residual.eval_numeric(dict(point, eps=1e-3)))
    slope = math.log(v2 / v3) / math.log(10.0)
    assert slope >= val - 0.1
