"""Scalar-level machinery: Hamiltonian flows, elimination of the momentum
to a second-order scalar equation, solution-level equivalence transforms,
scaling covariance, and closed-form solution checks.

Elimination works whenever the kept variable's flow equation is affine in
the other variable (every bundled Hamiltonian is quadratic in the
momentum, so this always holds).  Equivalence transforms are verified by
substitution: the transformed function's claimed equation is expanded via
the chain rule and reduced modulo the base equation; the certificate is
the residual, which must be identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import RationalExpr
from . import exprlang


class HamiltonError(Exception):
    pass


class NotAffine(HamiltonError):
    pass


class ResidualNonzero(HamiltonError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class NotCovariant(HamiltonError):
    pass


@dataclass(frozen=True)
class FlowSystem:
    """y' and z' as rational functions of (t, y, z, params)."""
    pos: str
    mom: str
    dpos: RationalExpr
    dmom: RationalExpr

    def total_derivative(self, f):
        return (f.diff("t") + self.dpos * f.diff(self.pos)
                + self.dmom * f.diff(self.mom))


def flow_from_hamiltonian(H, pos="y", mom="z"):
    """Canonical flow pos' = dH/dmom, mom' = -dH/dpos."""
    return FlowSystem(pos, mom, H.diff(mom), -H.diff(pos))


@dataclass(frozen=True)
class OdeIdentity:
    """A verified scalar identity: ``steps`` describe the reduction and
    ``residual`` is its replayed value, identically zero on success."""
    descr: str
    steps: tuple
    residual: RationalExpr

    @property
    def ok(self):
        return self.residual.is_zero()


def eliminate(flow, keep=None):
    """Eliminate the other variable from the flow; returns the rhs F of
    kept'' = F(kept', kept, t) with the symbol yp standing for kept'.

    Requires the kept variable's flow equation to be affine in the other
    variable with a nonzero leading coefficient.
    """
    keep = keep or flow.pos
    if keep == flow.pos:
        other = flow.mom
        dkeep = flow.dpos
    elif keep == flow.mom:
        other = flow.pos
        dkeep = flow.dmom
    else:
        raise HamiltonError("keep must be %r or %r" % (flow.pos, flow.mom))
    lead = dkeep.diff(other)
    if not lead.diff(other).is_zero():
        raise NotAffine("flow of %s is not affine in %s" % (keep, other))
    if lead.is_zero():
        raise NotAffine("flow of %s does not involve %s" % (keep, other))
    yp = RationalExpr.var("yp")
    const = dkeep.subst({other: 0})
    solved = (yp - const) / lead          # the eliminated variable
    second = flow.total_derivative(dkeep)  # kept'' before elimination
    second = second.subst({other: solved})
    if keep != "y":
        second = second.subst({keep: RationalExpr.var("y")})
    return second


def verify_elimination(family, odes, keep="y"):
    """Check that a family's flow reproduces its target scalar equation
    under the family's parameter map; returns per-sigma OdeIdentity list."""
    out = []
    for sigma, fam in family.sigma_variants():
        flow = flow_from_hamiltonian(fam.H)
        derived = eliminate(flow, keep)
        target_id = family.target
        if family.id == "P34" and sigma is not None:
            target_id = "P34p" if sigma == 1 else "P34"
        ode = odes[target_id]
        values = {}
        for name in ode.params:
            if name == "sigma":
                values[name] = RationalExpr.const(sigma)
            else:
                if name not in family.param_map:
                    raise HamiltonError("family %s has no map for %s"
                                        % (family.id, name))
                img = family.param_map[name]
                if sigma is not None:
                    img = img.subst({"sigma": RationalExpr.const(sigma)})
                values[name] = img
        residual = derived - ode.rhs.subst(values)
        out.append(OdeIdentity(
            descr="%s eliminates to %s%s" % (family.id, target_id,
                                             "" if sigma is None else " (sigma=%d)" % sigma),
            steps=("eliminate %s" % ("z" if keep == "y" else "y"),
                   "apply parameter map"),
            residual=residual))
    return out


# ---------------------------------------------------------------------------
# Equivalences between scalar equations
# ---------------------------------------------------------------------------

def _ode_rhs(ode, params):
    values = dict(params)
    missing = [p for p in ode.params if p not in values]
    if missing:
        raise HamiltonError("missing parameters %s for %s" % (missing, ode.id))
    return ode.rhs.subst(values) if values else ode.rhs


def check_equivalence(transform, odes, strict=True):
    """Verify an EquivalenceTransform: if y solves the base equation then
    expr(y, y', t) solves the claimed equation in the time tau(t).

    Derivatives of the expressed function bring in y'' and y''', which
    are eliminated through the base equation.  Raises ResidualNonzero
    (with the remainder attached) unless the reduction lands on zero.
    """
    base = _ode_rhs(odes[transform.base], transform.base_params)
    claim = _ode_rhs(odes[transform.claim], transform.claim_params)
    yp = RationalExpr.var("yp")

    def total(g):
        # d/dt with y' = yp and yp' = base rhs
        return g.diff("t") + yp * g.diff("y") + base * g.diff("yp")

    psi = transform.tau.diff("t")
    if psi.is_zero():
        raise HamiltonError("time change %s is constant" % transform.id)
    w = transform.expr
    w1 = total(w) / psi
    w2 = total(w1) / psi
    residual = w2 - claim.subst({"y": w, "yp": w1, "t": transform.tau})
    identity = OdeIdentity(
        descr="%s: %s -> %s" % (transform.id, transform.base, transform.claim),
        steps=("chain rule through tau", "eliminate y'', y''' via base",
               "subtract claimed equation"),
        residual=residual)
    if strict and not identity.ok:
        raise ResidualNonzero("equivalence %s left a nonzero remainder"
                              % transform.id, residual)
    return identity


def check_solution(ode, candidate, params=None):
    """True iff the candidate expression in t (free constants allowed)
    satisfies the scalar equation exactly."""
    rhs = _ode_rhs(ode, params or {})
    y = candidate
    y1 = y.diff("t")
    y2 = y1.diff("t")
    residual = y2 - rhs.subst({"y": y, "yp": y1})
    return residual.is_zero()


def check_scaling(ode, y_factor, t_factor, params=None):
    """Induced parameter map of a scaling y -> c_y y, t -> c_t t.

    The rhs must be linear in its parameters; the parameter-free part has
    to be covariant and each parameter's coefficient must rescale by a
    constant factor, which is returned as {param: factor}.  Raises
    NotCovariant otherwise.
    """
    y_factor = _const_expr(y_factor)
    t_factor = _const_expr(t_factor)
    names = [p for p in ode.params if p != "sigma"]
    zero = {p: RationalExpr.const(0) for p in names}
    scale = {
        "y": y_factor * RationalExpr.var("y"),
        "t": t_factor * RationalExpr.var("t"),
        "yp": (y_factor / t_factor) * RationalExpr.var("yp"),
    }
    prefactor = t_factor ** 2 / y_factor

    def transform(g):
        return prefactor * g.subst(scale)

    base = ode.rhs.subst(zero) if names else ode.rhs
    if not (transform(base) - base).is_zero():
        raise NotCovariant("parameter-free part of %s is not scaling covariant"
                           % ode.id)
    factors = {}
    for p in names:
        one = dict(zero)
        one[p] = RationalExpr.const(1)
        coef = ode.rhs.subst(one) - base
        image = transform(coef)
        ratio = image / coef
        if ratio.diff("y").is_zero() and ratio.diff("t").is_zero() \
                and ratio.diff("yp").is_zero():
            factors[p] = ratio
        else:
            raise NotCovariant("coefficient of %s in %s does not rescale"
                               % (p, ode.id))
    return factors


def _const_expr(x):
    if isinstance(x, RationalExpr):
        return x
    if isinstance(x, str):
        return RationalExpr.var(x)
    return RationalExpr.const(x)


# ---------------------------------------------------------------------------
# The P3 <-> P3' map
# ---------------------------------------------------------------------------

def p3_prime_map(direction, catalog):
    """Verify the algebraic equivalence between the two third-equation
    normal forms, plus the Hamiltonian-level relation
    H'_J = H_J / (2t) + y z / (2 t^2) for all four J variants.

    direction is "P3_to_P3p" or "P3p_to_P3"; both reduce to the same
    rational identity parametrized by t.
    """
    odes = catalog.odes
    params = {n: RationalExpr.var(n) for n in ("alpha", "beta", "gamma", "delta")}
    p3 = _ode_rhs(odes["P3"], params)
    p3p = _ode_rhs(odes["P3p"], params)
    yp = RationalExpr.var("yp")
    t = RationalExpr.var("t")
    y = RationalExpr.var("y")
    steps = []
    if direction == "P3_to_P3p":
        # q(x) = t y(t) with x = t^2; reduce mod P3 for y
        def total(g):
            return g.diff("t") + yp * g.diff("y") + p3 * g.diff("yp")
        w = t * y
        psi = (t * t).diff("t")
        w1 = total(w) / psi
        w2 = total(w1) / psi
        residual = w2 - p3p.subst({"y": w, "yp": w1, "t": t * t})
        steps.append("q = t*y, x = t^2, reduce mod P3")
    elif direction == "P3p_to_P3":
        # y(t) = q(t^2)/t; derivatives of q taken at x = t^2, reduce mod P3'
        qp = RationalExpr.var("yp")   # dq/dx at x = t^2

        def total(g):
            # d/dt of g(t, q, qp) with q' = 2 t qp, qp' = 2 t p3p(x=t^2)
            return (g.diff("t") + 2 * t * qp * g.diff("y")
                    + 2 * t * p3p.subst({"t": t * t}) * g.diff("yp"))
        w = y / t   # q/t with q written as y
        w = RationalExpr.var("y") / t
        w1 = total(w)
        w2 = total(w1)
        residual = w2 - p3.subst({"y": w, "yp": w1})
        steps.append("y = q/t at x = t^2, reduce mod P3'")
    else:
        raise HamiltonError("unknown direction %r" % direction)
    if not residual.is_zero():
        raise ResidualNonzero("the P3/P3' map left a remainder in direction %s"
                              % direction, residual)
    # Hamiltonian-level relation on the catalog families
    hrel_steps = []
    pairs = (("P3p_D6", "P3_D6"), ("P3p_D7", "P3_D7"),
             ("P3p_D7_2", "P3_D7_2"), ("P3p_D8", "P3_D8"))
    sub = {"t": t * t, "y": t * y, "z": RationalExpr.var("z") / t,
           "x": t * RationalExpr.var("x")}
    for primed, plain in pairs:
        Hp = catalog.families[primed].H
        H = catalog.families[plain].H
        z = RationalExpr.var("z")
        rel = Hp.subst(sub) - (H / (2 * t) + y * z / (2 * t ** 2))
        if not rel.is_zero():
            raise ResidualNonzero("Hamiltonian relation failed for %s" % primed, rel)
        hrel_steps.append("H relation %s" % primed)
    return OdeIdentity(descr="P3/P3' map (%s)" % direction,
                       steps=tuple(steps + hrel_steps),
                       residual=residual)
