"""2x2 first-order systems: zero-curvature residuals, the double-cover
gauge onto the rank-three symmetric form, scalar reduction of the
half-integer-rank system, and exact residues.

Conventions.  A system is dZ/dv = A(v,t) Z, dZ/dt = B(v,t) Z in the
system variable v; its zero-curvature residual is

    D_t A - d_v B + A B - B A

with D_t the flow-augmented t-derivative of the dynamical symbols.
"""

from __future__ import annotations

from .algebra import RationalExpr, Poly, poly_divexact
from .catalog import Mat2


class MatrixlabError(Exception):
    pass


class VariableMismatch(MatrixlabError):
    pass


class SingularGauge(MatrixlabError):
    pass


class ZeroOffDiagonal(MatrixlabError):
    pass


def zero_curvature(a, b, flow, var=None):
    """Zero-curvature residual D_t(A) - d_var(B) + [A, B].

    ``flow`` maps each dynamical symbol to its total t-derivative.
    """
    if var is None:
        var = a.var
    if a.var != b.var:
        raise VariableMismatch("x-side in %r but t-side in %r" % (a.var, b.var))

    def dt(m):
        out = m.diff("t")
        for sym, rhs in flow.items():
            out = out + Mat2(m.var, tuple(e.diff(sym) * rhs for e in m.entries))
        return out

    return dt(a) - b.diff(var) + a * b - b * a


def zero_curvature_system(system):
    if not system.flow:
        raise MatrixlabError("system %s carries no flow" % system.id)
    return zero_curvature(system.a, system.b, system.flow, system.var)


def double_cover_gauge(a, b, R):
    """Pull a system in w through w = rho^4 (rho the square root of the
    double-cover variable) and the gauge Z = R Y.

    Returns (rho-side, t-side): the rho-side is
    R^-1 (A(rho^4) * dw/drho) R - R^-1 dR/drho, to be compared against
    2 rho * target(x -> rho^2); the t-side is R^-1 B R - R^-1 dR/dt.
    """
    rho = RationalExpr.var("rho")
    w_of_rho = rho ** 4
    dw = w_of_rho.diff("rho")
    Rinv = R.inverse()
    sub = {a.var: w_of_rho}
    a_sub = Mat2("rho", tuple(e.subst(sub) for e in a.entries))
    b_sub = Mat2("rho", tuple(e.subst(sub) for e in b.entries))
    x_side = Rinv * a_sub.scale(dw) * R - Rinv * R.diff("rho")
    t_side = Rinv * b_sub * R - Rinv * R.diff("t")
    return x_side, t_side


def scalar_reduce(a, b, weight_gx):
    """Reduce dZ/dw = A Z, dZ/dt = B Z to a single second-order scalar
    pair for u = f * u1 where u1 is the first component and f has the
    rational log-derivative ``weight_gx`` in w.

    Returns (p1, p2, a_cf, b_cf) with
        u'' + p1 u' + p2 u = 0,   u_t = a_cf u' + b_cf u.
    """
    var = a.var
    m11, m12, m21, m22 = a.entries
    if m12.is_zero():
        raise ZeroOffDiagonal("(1,2) entry of the %s-side is zero" % var)
    # u2 = (u1' - m11 u1)/m12
    p1 = -(m11 + m22 + m12.diff(var) / m12)
    p2 = (m11 * m22 - m12 * m21 - m11.diff(var)
          + m11 * m12.diff(var) / m12)
    b11, b12, _, _ = b.entries
    a_cf = b12 / m12
    b_cf = b11 - b12 * m11 / m12
    # gauge u1 -> u with u1 = f^-1 u ... u = f u1: substitute u1 = u/f,
    # i.e. apply the standard gauge with log-derivative -weight_gx
    from .lincheck import gauge
    gx = -weight_gx
    p1, p2, a_cf, b_cf = gauge(p1, p2, a_cf, b_cf, gx, RationalExpr.const(0),
                               var=var)
    return p1, p2, a_cf, b_cf


def residue_at(f, var, point):
    """Exact residue of f at var = point (0 when there is no pole).

    Poles up to second order are handled through the local series shift.
    """
    point = point if isinstance(point, RationalExpr) else RationalExpr.const(point)
    g = f.subst({var: RationalExpr.var(var) + point})
    num, den = g.num, g.den
    v = Poly.var(var)
    m = 0
    while True:
        try:
            den = poly_divexact(den, v)
            m += 1
        except Exception:
            break
    if m == 0:
        return RationalExpr.const(0)
    # f = num / (v^m den0): residue is the coefficient of v^(m-1) in the
    # series of num/den0
    num_r = RationalExpr._make(num, ())
    den_r = RationalExpr._make(den, ())
    h = num_r / den_r
    coef = h.subst({var: 0})
    fact = 1
    for k in range(1, m):
        h = h.diff(var)
        fact *= k
        coef = h.subst({var: 0}) / fact
    return coef
