"""Checks on scalar second-order linear equations with deformation.

A deformation pair is

    u_xx + p(x,t) u_x + q(x,t) u = 0,
    u_t = a(x,t) u_x + b(x,t) u,

with the dynamical symbols y, z carried along the Hamiltonian flow
y' = dH/dz, z' = -dH/dy.  Compatibility of the pair is equivalent to the
two residuals computed by :func:`canonical_compat` vanishing identically.

SL-type entries use u_xx = p u with u_t = A u_x - A_x u / 2 and the
Hamiltonian K; their single residual is computed by :func:`sl_compat`.

Also here: connection pole-order signatures, apparent-singularity
certification by the Frobenius no-logarithm obstruction, and the gauge
action u -> f u on (p, q, a, b).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import exprlang
from .algebra import RationalExpr, poly_divexact, Poly


class LincheckError(Exception):
    pass


class MalformedFamily(LincheckError):
    pass


class NotRationalInX(LincheckError):
    pass


class WrongLocalShape(LincheckError):
    pass


def flow_derivative(f, H):
    """Total t-derivative of f(x,t,y,z) along the flow of H:
    df/dt + (dH/dz) df/dy - (dH/dy) df/dz."""
    return f.diff("t") + H.diff("z") * f.diff("y") - H.diff("y") * f.diff("z")


@dataclass(frozen=True)
class CompatReport:
    family: str
    sigma: int | None
    residual1: RationalExpr
    residual2: RationalExpr
    ok: bool
    mod_s_of_t: bool   # residual1 vanished only up to an x-free term

    def to_json(self):
        return {
            "family": self.family,
            "sigma": self.sigma,
            "pass": self.ok,
            "residuals": [exprlang.render(self.residual1),
                          exprlang.render(self.residual2)],
            "b_freedom": "s(t)" if self.mod_s_of_t else "exact",
        }


def _compat_pair(p, q, a, b, H):
    ax = a.diff("x")
    bx = b.diff("x")
    r1 = flow_derivative(p, H) - (p * a).diff("x") + ax.diff("x") + 2 * bx
    r2 = (flow_derivative(q, H) - 2 * q * ax - q.diff("x") * a
          + p * bx + bx.diff("x"))
    return r1, r2


def canonical_compat(family, sigma=None):
    """Compatibility report for one canonical family.

    For entries carrying a sign parameter, ``sigma`` selects the
    instantiation; both signs are reported when it is omitted.
    """
    if family.has_sigma and sigma is None:
        reports = [canonical_compat(family, s) for s in (1, -1)]
        return reports
    fam = family.instantiate(sigma) if family.has_sigma else family
    for name, value in (("p", fam.p), ("q", fam.q), ("a", fam.a), ("b", fam.b)):
        if value is None:
            raise MalformedFamily("family %s lacks %s" % (family.id, name))
    r1, r2 = _compat_pair(fam.p, fam.q, fam.a, fam.b, fam.H)
    mod_s = False
    ok = r1.is_zero() and r2.is_zero()
    if not ok and r2.is_zero() and not r1.is_zero() and "x" not in r1.used_vars():
        # the b-coefficient is only defined up to an additive s(t)
        ok = True
        mod_s = True
    return CompatReport(family.id, sigma, r1, r2, ok, mod_s)


def sl_compat(family, sigma=None):
    """Compatibility report for an SL-type entry: residual of
    p_t = 2 p A_x + A p_x - A_xxx / 2 under the flow of K."""
    if family.has_sigma and sigma is None:
        return [sl_compat(family, s) for s in (1, -1)]
    fam = family.instantiate(sigma) if family.has_sigma else family
    Ax = fam.A.diff("x")
    residual = (flow_derivative(fam.p, fam.K) - 2 * fam.p * Ax
                - fam.A * fam.p.diff("x") + Ax.diff("x").diff("x") * RationalExpr.fraction(1, 2))
    return CompatReport(fam.id, sigma, residual, RationalExpr.const(0),
                        residual.is_zero(), False)


# ---------------------------------------------------------------------------
# Local expansions
# ---------------------------------------------------------------------------

def _x_poles(den, candidates):
    """Multiplicity of each candidate linear factor (x - c) in den.

    Returns (orders, leftover) where leftover is the den part carrying
    any x-dependence not explained by the candidates.
    """
    orders = {}
    for c in candidates:
        factor = (RationalExpr.var("x") - c)
        fpoly = factor.num
        k = 0
        while True:
            try:
                den = poly_divexact(den, fpoly)
                k += 1
            except Exception:
                break
        if k:
            orders[c] = k
    return orders, den


def pole_order(f, point):
    """Order of the pole of f(x, ...) at x = point (0 if regular)."""
    shift = {"x": RationalExpr.var("x") + point}
    g = f.subst(shift)
    num, den = g.num, g.den
    x = Poly.var("x")

    def x_mult(p):
        k = 0
        while not p.is_zero():
            try:
                p = poly_divexact(p, x)
                k += 1
            except Exception:
                break
        return k

    return x_mult(den) - x_mult(num)


def local_series(f, point, low, high):
    """Laurent coefficients of f around x = point for orders low..high.

    Returns a dict order -> x-free RationalExpr.
    """
    g = f.subst({"x": RationalExpr.var("x") + point})
    num, den = g.num, g.den
    x = Poly.var("x")
    m = 0
    while True:
        try:
            den = poly_divexact(den, x)
            m += 1
        except Exception:
            break
    # f = num / (x^m * den0) with den0(0) != 0; series of num/den0 then shift
    need = high + m + 1
    num_c = _x_coeffs(num, need)
    den_c = _x_coeffs(den, need)
    inv0 = RationalExpr.const(1) / den_c[0]
    series = []
    for k in range(need):
        acc = num_c[k] if k < len(num_c) else RationalExpr.const(0)
        for j in range(1, k + 1):
            dj = den_c[j] if j < len(den_c) else None
            if dj is not None and not dj.is_zero():
                acc = acc - dj * series[k - j]
        series.append(acc * inv0)
    out = {}
    for order in range(low, high + 1):
        k = order + m
        out[order] = series[k] if 0 <= k < len(series) else RationalExpr.const(0)
    return out


def _x_coeffs(poly, count):
    """Coefficients of x^0..x^(count-1) of a Poly, as RationalExprs."""
    expr = RationalExpr(poly)
    out = []
    fact = 1
    for k in range(count):
        coef = expr.subst({"x": 0})
        out.append(coef * Fraction(1, fact))
        expr = expr.diff("x")
        fact *= k + 1
        if expr.is_zero():
            break
    while len(out) < count:
        out.append(RationalExpr.const(0))
    return out


# ---------------------------------------------------------------------------
# Signatures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignatureReport:
    singular: tuple          # ((location text, Fraction order), ...)
    apparent: tuple          # locations that passed apparentness
    apparent_ok: bool

    def multiset(self):
        return tuple(sorted(order for _, order in self.singular))

    def type_label(self):
        from collections import Counter
        counts = Counter(order for _, order in self.singular)
        parts = []
        for order in sorted(counts):
            txt = "(%s)" % order
            if counts[order] > 1:
                txt += "^%d" % counts[order]
            parts.append(txt)
        return "".join(parts)

    def to_json(self):
        return {
            "signature": [[loc, str(order)] for loc, order in self.singular],
            "apparent": list(self.apparent),
            "apparent_pass": self.apparent_ok,
        }


_DEFAULT_CANDIDATES = (0, 1, "t", "y")


def signature(p, q, apparent_at=None, H=None, sl=False):
    """Connection pole orders of u'' + p u' + q u = 0 (or u'' = p u when
    ``sl``), apparent singularities excluded.

    Finite candidate pole locations are 0, 1, t and the apparent point;
    any unexplained x-dependence left in a denominator raises
    NotRationalInX.  At a finite pole with orders k of p and l of q the
    local Poincare rank is max(k-1, l/2-1, 0); at infinity with growth
    degrees k, l it is max(k+1, (l+2)/2, 0).  The reported connection
    order is rank + 1, kept only where the point is genuinely singular.
    """
    if sl:
        p, q = RationalExpr.const(0), -p
    xvar = RationalExpr.var("x")
    tvar = RationalExpr.var("t")
    yvar = RationalExpr.var("y")
    cands = [RationalExpr.const(0), RationalExpr.const(1), tvar, yvar]
    if apparent_at is not None and all(apparent_at != c for c in cands):
        cands.append(apparent_at)
    found = {}
    for f in (p, q):
        orders, leftover = _x_poles(f.den, cands)
        if "x" in leftover.used_vars():
            raise NotRationalInX("unlocated x-dependence in a denominator")
        for c, k in orders.items():
            key = exprlang.render(c)
            found.setdefault(key, c)
    singular = []
    apparent = []
    apparent_ok = True
    for key, c in sorted(found.items()):
        kp = max(pole_order(p, c), 0)
        lq = max(pole_order(q, c), 0)
        if apparent_at is not None and c == apparent_at:
            ok = certify_apparent(p, q, c, H, sl=sl, _pre_swapped=True)
            apparent_ok = apparent_ok and ok
            if ok:
                apparent.append(key)
                continue
        rank = max(Fraction(kp - 1), Fraction(lq, 2) - 1, Fraction(0))
        if rank == 0 and kp == 0 and lq == 0:
            continue   # not singular after all
        singular.append((key, rank + 1))
    # point at infinity
    kp = p.num.degree("x") - p.den.degree("x")
    lq = q.num.degree("x") - q.den.degree("x")
    rank = max(Fraction(kp + 1), Fraction(lq + 2, 2), Fraction(0))
    if rank > 0:
        singular.append(("inf", rank + 1))
    else:
        # infinity is regular singular for generic entries of this shape
        singular.append(("inf", Fraction(1)))
    return SignatureReport(tuple(singular), tuple(apparent), apparent_ok)


def matrix_signature(system):
    """Connection pole orders of a 2x2 first-order system dY/dx = A Y:
    order of the pole of A at finite points, degree + 2 at infinity."""
    var = system.var
    singular = []
    xv = RationalExpr.var(var)
    dens = [e.den for e in system.a.entries]
    cands = [RationalExpr.const(0), RationalExpr.const(1), RationalExpr.var("t")]
    found = {}
    for den in dens:
        orders, leftover = _x_poles_var(den, cands, var)
        if var in leftover.used_vars():
            raise NotRationalInX("unlocated %s-dependence" % var)
        for c, k in orders.items():
            key = exprlang.render(c)
            prev = found.get(key, (c, 0))
            found[key] = (c, max(prev[1], k))
    for key, (c, k) in sorted(found.items()):
        order = 0
        for e in system.a.entries:
            shifted = e.subst({var: xv + c}) if not c.is_zero() else e
            order = max(order, _var_pole_order(shifted, var))
        if order > 0:
            singular.append((key, Fraction(order)))
    deg = max(e.num.degree(var) - e.den.degree(var) for e in system.a.entries)
    singular.append(("inf", Fraction(deg + 2)))
    return SignatureReport(tuple(singular), (), True)


def _x_poles_var(den, candidates, var):
    orders = {}
    for c in candidates:
        fpoly = (RationalExpr.var(var) - c).num
        k = 0
        while True:
            try:
                den = poly_divexact(den, fpoly)
                k += 1
            except Exception:
                break
        if k:
            orders[c] = k
    return orders, den


def _var_pole_order(f, var):
    vp = Poly.var(var)
    k = 0
    den = f.den
    while True:
        try:
            den = poly_divexact(den, vp)
            k += 1
        except Exception:
            break
    num = f.num
    while k > 0:
        try:
            num = poly_divexact(num, vp)
            k -= 1
        except Exception:
            break
    return k


# ---------------------------------------------------------------------------
# Apparent singularities
# ---------------------------------------------------------------------------

def certify_apparent(p, q, point, H=None, sl=False, _pre_swapped=False):
    """True iff x = point is apparent: indicial roots differ by a positive
    integer and the single no-logarithm obstruction vanishes identically.

    Canonical shape: simple pole of p with residue -1 (roots 0, 2);
    obstruction q0 + (p0 + q_1) q_1 = 0 in terms of the local Laurent
    coefficients p = -1/s + p0 + ..., q = q_1/s + q0 + ... at s = x-point.

    SL shape (u'' = p u): p has the 3/(4 s^2) double pole (roots -1/2,
    3/2); obstruction q0 + q_1^2 = 0 for q = -p.
    """
    if sl and not _pre_swapped:
        p, q = RationalExpr.const(0), -p
    ps = local_series(p, point, -2, 1)
    qs = local_series(q, point, -2, 0)
    if not ps[-2].is_zero():
        # SL shape: q = -p must open with -3/4 s^-2
        if not (p.is_zero() and qs[-2] == RationalExpr.fraction(-3, 4)):
            raise WrongLocalShape("unsupported double-pole shape at the apparent point")
        obstruction = qs[0] + qs[-1] * qs[-1]
        return obstruction.is_zero()
    if p.is_zero() and qs[-2] == RationalExpr.fraction(-3, 4):
        obstruction = qs[0] + qs[-1] * qs[-1]
        return obstruction.is_zero()
    if ps[-1] != RationalExpr.const(-1):
        raise WrongLocalShape("apparent point must be a simple pole of p with residue -1")
    if pole_order(q, point) > 1:
        raise WrongLocalShape("q has a pole of order > 1 at the apparent point")
    obstruction = qs[0] + (ps[0] + qs[-1]) * qs[-1]
    return obstruction.is_zero()


# ---------------------------------------------------------------------------
# Gauge action
# ---------------------------------------------------------------------------

def gauge(p, q, a, b, gx, gt, var="x"):
    """Transform (p, q, a, b) under u -> f u with gx = f_x/f, gt = f_t/f.

    p -> p + 2 gx
    q -> q + gx^2 + (gx)_x + p gx
    a unchanged
    b -> b + a gx - gt
    """
    p2 = p + 2 * gx
    q2 = q + gx * gx + gx.diff(var) + p * gx
    b2 = b + a * gx - gt
    return p2, q2, a, b2
