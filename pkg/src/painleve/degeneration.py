"""Execution of the degeneration rules: substitute, gauge, compare the
linear data against the target family in the small parameter, and verify
the claimed Hamiltonian relation to its stated order.

Pipeline of apply_rule, in the source frame first:

  1. apply the rule's pregauge (gx, gt) through the gauge action;
  2. change variables: every source symbol is replaced by its image, and
     the independent/time substitutions x = X(x~, t~), t = T(t~) transform
     the coefficient functions as

         p -> (p o S) X_x - X_xx / X_x        q -> (q o S) X_x^2
         a -> (T' (a o S) + X_t) / X_x        b -> T' (b o S)

  3. apply the postgauge in the new frame;
  4. every coefficient difference from the target family must have
     eps-valuation >= 1 (exactly zero for algebraic rules), and the
     Hamiltonian relation lhs o S - phi must meet the claimed order.

Rules carrying the sign parameter are checked for both instantiations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import inf

from .algebra import RationalExpr, eps_valuation
from .lincheck import gauge


class DegenerationError(Exception):
    pass


class ValuationShortfall(DegenerationError):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class GaugeMismatch(DegenerationError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class MissingArrow(DegenerationError):
    pass


class TypeCountMismatch(DegenerationError):
    pass


@dataclass(frozen=True)
class DegenerationReport:
    rule: str
    sigma: int | None
    algebraic: bool
    coeff_valuations: dict      # name -> valuation (inf for exact zero)
    h_valuation: object         # int or inf
    h_required: object          # int, or None for exact
    ok: bool
    shortfalls: tuple
    residuals: dict             # name -> RationalExpr difference

    def to_json(self):
        def val(v):
            return "inf" if v == inf else v
        return {
            "rule": self.rule,
            "sigma": self.sigma,
            "algebraic": self.algebraic,
            "pass": self.ok,
            "coefficient_valuations": {k: val(v) for k, v in
                                       sorted(self.coeff_valuations.items())},
            "hamiltonian_valuation": val(self.h_valuation),
            "hamiltonian_required": ("exact" if self.h_required is None
                                     else self.h_required),
            "shortfalls": list(self.shortfalls),
        }


def _subst_sigma(expr, sigma):
    if sigma is None or "sigma" not in expr.used_vars():
        return expr
    return expr.subst({"sigma": RationalExpr.const(sigma)})


def transform_linear_data(p, q, a, b, subst):
    """Change of variables for the scalar deformation pair.

    ``subst`` maps every substituted source symbol (x, t, y, z and
    parameters) to its image in the new frame.
    """
    X = subst.get("x", RationalExpr.var("x"))
    T = subst.get("t", RationalExpr.var("t"))
    if not (T.used_vars() <= {"t", "eps"} | _param_names(T)):
        raise DegenerationError("time image may not involve x, y, z")
    Xx = X.diff("x")
    if Xx.is_zero():
        raise DegenerationError("independent-variable image is x-free")
    Xt = X.diff("t")
    Tt = T.diff("t")
    ps = p.subst(subst)
    qs = q.subst(subst)
    as_ = a.subst(subst)
    bs = b.subst(subst)
    p2 = ps * Xx - Xx.diff("x") / Xx
    q2 = qs * Xx * Xx
    a2 = (Tt * as_ + Xt) / Xx
    b2 = Tt * bs
    return p2, q2, a2, b2


def _param_names(expr):
    return {v for v in expr.used_vars() if v not in ("x", "t", "y", "z")}


def apply_rule(cat, rule, sigma=None, check=True):
    """Run one degeneration rule; returns a DegenerationReport (or a list
    when the sign parameter is instantiated both ways).

    With check=True a failed valuation raises ValuationShortfall (or
    GaugeMismatch when an algebraic rule is not exact).  Reports are
    memoized on the catalog, keyed by the rule object itself, so repeated
    verification and numeric probing share the symbolic work.
    """
    if rule.has_sigma and sigma is None:
        return [apply_rule(cat, rule, s, check) for s in (1, -1)]
    cache = getattr(cat, "_rule_reports", None)
    if cache is None:
        cache = cat._rule_reports = {}
    key = (id(rule), sigma)
    if key in cache:
        report = cache[key]
        if check and report.shortfalls:
            if rule.algebraic:
                raise GaugeMismatch("algebraic rule %s is not exact: %s"
                                    % (rule.id, "; ".join(report.shortfalls)), report)
            raise ValuationShortfall("rule %s: %s"
                                     % (rule.id, "; ".join(report.shortfalls)), report)
        return report
    src = cat.families[rule.source]
    tgt = cat.families[rule.target]
    if src.has_sigma:
        src = src.instantiate(sigma)
    if tgt.has_sigma:
        tgt = tgt.instantiate(sigma)

    subst = {k: _subst_sigma(v, sigma) for k, v in rule.subst.items()}
    target_sub = {k: _subst_sigma(v, sigma) for k, v in rule.target_sub.items()}

    p, q, a, b = src.p, src.q, src.a, src.b
    if rule.pregauge is not None:
        gx, gt = (_subst_sigma(g, sigma) for g in rule.pregauge)
        p, q, a, b = gauge(p, q, a, b, gx, gt)
    p, q, a, b = transform_linear_data(p, q, a, b, subst)
    if rule.postgauge is not None:
        gx, gt = (_subst_sigma(g, sigma) for g in rule.postgauge)
        p, q, a, b = gauge(p, q, a, b, gx, gt)

    tp, tq, ta, tb = tgt.p, tgt.q, tgt.a, tgt.b
    if target_sub:
        tp, tq, ta, tb = (f.subst(target_sub) for f in (tp, tq, ta, tb))

    residuals = {}
    coeff_val = {}
    shortfalls = []
    for name, got, want in (("p", p, tp), ("q", q, tq),
                            ("a", a, ta), ("b", b, tb)):
        diff = got - want
        residuals[name] = diff
        v = eps_valuation(diff).valuation
        coeff_val[name] = v
        if rule.algebraic:
            if v != inf:
                shortfalls.append("%s differs (valuation %s, exact required)"
                                  % (name, v))
        elif v < 1:
            shortfalls.append("%s has valuation %s < 1" % (name, v))

    hlhs = _subst_sigma(rule.hrel_lhs, sigma).subst(subst)
    hphi = _subst_sigma(rule.hrel_phi, sigma)
    hdiff = hlhs - hphi
    residuals["H"] = hdiff
    hval = eps_valuation(hdiff).valuation
    if rule.hrel_order is None:
        if hval != inf:
            shortfalls.append("H relation differs (valuation %s, exact required)"
                              % hval)
    elif hval < rule.hrel_order:
        shortfalls.append("H relation has valuation %s < %d"
                          % (hval, rule.hrel_order))

    report = DegenerationReport(
        rule=rule.id, sigma=sigma, algebraic=rule.algebraic,
        coeff_valuations=coeff_val, h_valuation=hval,
        h_required=rule.hrel_order, ok=not shortfalls,
        shortfalls=tuple(shortfalls), residuals=residuals)
    cache[key] = report
    if check and shortfalls:
        if rule.algebraic:
            raise GaugeMismatch("algebraic rule %s is not exact: %s"
                                % (rule.id, "; ".join(shortfalls)), report)
        raise ValuationShortfall("rule %s: %s"
                                 % (rule.id, "; ".join(shortfalls)), report)
    return report


# ---------------------------------------------------------------------------
# Diagram closure
# ---------------------------------------------------------------------------

# The ten singularity types of the coalescence diagram, as multisets of
# connection pole orders, with the arrows read off the diagram.
F = Fraction
DIAGRAM_TYPES = {
    (F(1), F(1), F(1), F(1)): "(1)^4",
    (F(1), F(1), F(2)): "(1)^2(2)",
    (F(2), F(2)): "(2)^2",
    (F(3, 2), F(2)): "(3/2)(2)",
    (F(3, 2), F(3, 2)): "(3/2)^2",
    (F(1), F(1), F(3, 2)): "(1)^2(3/2)",
    (F(1), F(3)): "(1)(3)",
    (F(1), F(5, 2)): "(1)(5/2)",
    (F(4),): "(4)",
    (F(7, 2),): "(7/2)",
}

DIAGRAM_ARROWS = {
    ("(1)^4", "(1)^2(2)"),
    ("(1)^2(2)", "(2)^2"),
    ("(1)^2(2)", "(1)^2(3/2)"),
    ("(1)^2(2)", "(1)(3)"),
    ("(1)^2(3/2)", "(3/2)(2)"),
    ("(1)^2(3/2)", "(1)(5/2)"),
    ("(2)^2", "(3/2)(2)"),
    ("(2)^2", "(4)"),
    ("(3/2)(2)", "(3/2)^2"),
    ("(1)(3)", "(4)"),
    ("(1)(3)", "(1)(5/2)"),
    ("(3/2)(2)", "(7/2)"),
    ("(1)(5/2)", "(7/2)"),
    ("(4)", "(7/2)"),
}


@dataclass(frozen=True)
class ClosureReport:
    types: tuple                # sorted type labels actually seen
    family_types: dict          # family id -> type label
    rule_arrows: dict           # rule id -> (source label, target label)
    covered_arrows: tuple
    ok: bool

    def to_json(self):
        return {
            "types": list(self.types),
            "families": dict(sorted(self.family_types.items())),
            "arrows": {k: list(v) for k, v in sorted(self.rule_arrows.items())},
            "pass": self.ok,
        }


def family_type(cat, fid):
    """Singularity-type label of a family, computed from its signature."""
    from . import lincheck
    fam = cat.families[fid]
    _, fam0 = fam.sigma_variants()[0]
    rep = lincheck.signature(fam0.p, fam0.q,
                             apparent_at=RationalExpr.var("y"), H=fam0.H)
    key = rep.multiset()
    if key not in DIAGRAM_TYPES:
        raise TypeCountMismatch("signature %s of %s is not a diagram type"
                                % (rep.type_label(), fid))
    return DIAGRAM_TYPES[key]


def diagram_closure(cat, include_mj=True, skip_rules=()):
    """Check the verified-rule graph against the coalescence diagram:
    every diagram arrow must be covered by some rule, and exactly ten
    singularity types (the MJ system's counts among them) must occur."""
    from . import lincheck
    family_types = {fid: family_type(cat, fid) for fid in cat.list("family")}
    types = set(family_types.values())
    if include_mj:
        mj = lincheck.matrix_signature(cat.matrices["MJ"])
        key = mj.multiset()
        if key not in DIAGRAM_TYPES:
            raise TypeCountMismatch("MJ signature %s is not a diagram type"
                                    % mj.type_label())
        types.add(DIAGRAM_TYPES[key])
    if len(types) != 10:
        raise TypeCountMismatch("expected 10 singularity types, found %d"
                                % len(types))
    rule_arrows = {}
    covered = set()
    for rid in cat.list("rule"):
        if rid in skip_rules:
            continue
        rule = cat.rules[rid]
        arrow = (family_types[rule.source], family_types[rule.target])
        rule_arrows[rid] = arrow
        if arrow in DIAGRAM_ARROWS:
            covered.add(arrow)
    missing = DIAGRAM_ARROWS - covered
    if missing:
        raise MissingArrow("diagram arrows not covered: %s"
                           % ", ".join("%s -> %s" % a for a in sorted(missing)))
    return ClosureReport(
        types=tuple(sorted(types)), family_types=family_types,
        rule_arrows=rule_arrows, covered_arrows=tuple(sorted(covered)),
        ok=True)


def dot_graph(closure):
    """DOT rendering of the verified coalescence diagram (type level)."""
    lines = ["digraph coalescence {", "  rankdir=LR;"]
    ids = {}
    for i, label in enumerate(closure.types):
        ids[label] = "t%d" % i
        lines.append('  %s [label="%s"];' % (ids[label], label))
    for src, dst in sorted(set(closure.rule_arrows.values())):
        if src != dst:
            lines.append("  %s -> %s;" % (ids[src], ids[dst]))
    lines.append("}")
    return "\n".join(lines) + "\n"
