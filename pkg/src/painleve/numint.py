"""Floating-point cross-checks: adaptive embedded Runge-Kutta integration
of the Hamiltonian flows, scalar-equation residual measurement through the
dense output, and numerical probes of the degeneration limits.

The integrator is the classic 7-stage embedded 5(4) pair with the
quartic dense-output interpolant.  Trajectories stop cleanly at the pole
guard (Painleve transcendents have movable poles; truncation is expected
behavior, not an error).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .algebra import TOWER, RationalExpr
from . import exprlang


class NumintError(Exception):
    pass


class StepUnderflow(NumintError):
    pass


class ConditioningFailure(NumintError):
    pass


POLE_GUARD = 1e8
TOL_MIN, TOL_MAX = 1e-13, 1e-6


# Butcher data of the embedded 5(4) pair (the ode45 tableau).
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_ERR = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)
# dense-output weights (quartic interpolant)
_D = (-12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
      -10690763975 / 1880347072, 701980252875 / 199316789632,
      -1453857185 / 822651844, 69997945 / 29380423)


def compile_scalar(expr, names):
    """Compile a RationalExpr to a float-valued python function of the
    given symbol names (tower constants embedded numerically)."""
    def fn(*args):
        point = dict(zip(names, args))
        v = expr.eval_numeric(point)
        if isinstance(v, complex):
            if abs(v.imag) > 1e-9 * (1 + abs(v.real)):
                raise NumintError("expression is not real at %r" % (point,))
            return v.real
        return v
    return fn


def family_flow(family, params):
    """Float RHS (t, y, z) -> (y', z') for a family's Hamiltonian flow."""
    values = {}
    for name in family.params:
        if name not in params:
            raise NumintError("missing value for parameter %r" % name)
        values[name] = RationalExpr.const(_to_fraction(params[name]))
    H = family.H.subst(values)
    dy = compile_scalar(H.diff("z"), ("t", "y", "z"))
    dz = compile_scalar(-H.diff("y"), ("t", "y", "z"))
    return lambda t, y, z: (dy(t, y, z), dz(t, y, z))


def _to_fraction(x):
    from fractions import Fraction
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10 ** 12)
    return Fraction(x)


@dataclass
class DenseSegment:
    t0: float
    h: float
    y0: tuple
    cont: tuple   # per component: (r1..r5) of the quartic interpolant

    def eval(self, t):
        th = (t - self.t0) / self.h
        out = []
        for r1, r2, r3, r4, r5 in self.cont:
            out.append(r1 + th * (r2 + (1 - th) * (r3 + th * (r4 + (1 - th) * r5))))
        return tuple(out)

    def eval_deriv(self, t, order=1):
        th = (t - self.t0) / self.h
        out = []
        for r1, r2, r3, r4, r5 in self.cont:
            # u(th) expanded as a quartic polynomial in th
            c0 = r1
            c1 = r2 + r3
            c2 = -r3 + r4 + r5
            c3 = -r4 - 2 * r5
            c4 = r5
            if order == 1:
                val = c1 + th * (2 * c2 + th * (3 * c3 + th * 4 * c4))
                out.append(val / self.h)
            elif order == 2:
                val = 2 * c2 + th * (6 * c3 + th * 12 * c4)
                out.append(val / self.h ** 2)
            else:
                raise NumintError("unsupported derivative order")
        return tuple(out)


@dataclass
class Trajectory:
    family: str
    params: dict
    samples: list                 # (t, y, z) at accepted steps
    segments: list = field(default_factory=list)
    truncated: bool = False
    truncation_reason: str = ""
    n_steps: int = 0
    n_rejected: int = 0

    def csv(self):
        lines = ["t,y,z"]
        for t, y, z in self.samples:
            lines.append("%.17g,%.17g,%.17g" % (t, y, z))
        return "\n".join(lines) + "\n"

    def eval(self, t):
        seg = self._segment(t)
        return seg.eval(t)

    def eval_deriv(self, t, order=1):
        return self._segment(t).eval_deriv(t, order)

    def _segment(self, t):
        lo, hi = 0, len(self.segments) - 1
        direction = 1 if self.segments[-1].h > 0 else -1
        while lo < hi:
            mid = (lo + hi) // 2
            seg = self.segments[mid]
            end = seg.t0 + seg.h
            if (t - end) * direction > 0:
                lo = mid + 1
            else:
                hi = mid
        return self.segments[lo]

    @property
    def t_end(self):
        return self.samples[-1][0]


def integrate(family, params, y0, z0, t0, t1, tol=1e-10, max_step=0.01,
              fixed_step=None):
    """Integrate a family's Hamiltonian flow from (y0, z0) over [t0, t1].

    Local error per step is controlled to ``tol`` (clamped inside the
    supported band) unless ``fixed_step`` pins the step size.  The pole
    guard truncates the trajectory cleanly with a flag.
    """
    if not (TOL_MIN <= tol <= TOL_MAX):
        raise NumintError("tol must lie in [%g, %g]" % (TOL_MIN, TOL_MAX))
    f = family_flow(family, params) if not callable(family) else family
    fid = family.id if hasattr(family, "id") else "custom"
    traj = Trajectory(family=fid, params=dict(params), samples=[(t0, y0, z0)])
    if t1 == t0:
        return traj
    span = t1 - t0
    direction = 1.0 if span > 0 else -1.0
    h = fixed_step if fixed_step else direction * min(abs(span) / 10, max_step)
    t, y, z = t0, y0, z0
    k1 = None
    while (t1 - t) * direction > 1e-14 * abs(span):
        if abs(h) < 1e-14 * max(abs(span), 1.0):
            raise StepUnderflow("step size underflow at t=%g" % t)
        if (t + h - t1) * direction > 0:
            h = t1 - t
        if k1 is None:
            try:
                k1 = f(t, y, z)
            except (ZeroDivisionError, OverflowError, NumintError):
                traj.truncated = True
                traj.truncation_reason = "vector field singular at t=%g" % t
                return traj
        ks = [k1]
        bad = False
        try:
            for i in range(1, 7):
                yy = y + h * sum(a * ks[j][0] for j, a in enumerate(_A[i]))
                zz = z + h * sum(a * ks[j][1] for j, a in enumerate(_A[i]))
                ks.append(f(t + _C[i] * h, yy, zz))
        except (ZeroDivisionError, OverflowError, NumintError):
            bad = True
        if not bad:
            y5 = y + h * sum(b * ks[i][0] for i, b in enumerate(_B5))
            z5 = z + h * sum(b * ks[i][1] for i, b in enumerate(_B5))
            err_y = h * sum(e * ks[i][0] for i, e in enumerate(_ERR))
            err_z = h * sum(e * ks[i][1] for i, e in enumerate(_ERR))
            sc_y = 1.0 + max(abs(y), abs(y5))
            sc_z = 1.0 + max(abs(z), abs(z5))
            err = math.hypot(err_y / sc_y, err_z / sc_z) / math.sqrt(2)
            bad = not math.isfinite(err) or not math.isfinite(y5) or not math.isfinite(z5)
        if fixed_step:
            accept = not bad
            if bad:
                traj.truncated = True
                traj.truncation_reason = "vector field singular near t=%g" % t
                return traj
            h_next = h
        elif bad or err > tol:
            traj.n_rejected += 1
            h *= 0.5 if bad else max(0.2, 0.9 * (tol / err) ** 0.2)
            continue
        else:
            accept = True
            factor = 5.0 if err == 0 else min(5.0, 0.9 * (tol / err) ** 0.2)
            h_next = direction * min(abs(h) * factor, max_step)
        if abs(y5) > POLE_GUARD or abs(z5) > POLE_GUARD:
            # drop the offending step: every stored sample stays below the
            # guard and the flag records where integration stopped
            traj.truncated = True
            traj.truncation_reason = "pole guard tripped beyond t=%g" % t
            return traj
        # dense output
        cont = []
        for comp in (0, 1):
            y_old = (y, z)[comp]
            y_new = (y5, z5)[comp]
            ydiff = y_new - y_old
            bspl = h * ks[0][comp] - ydiff
            r5 = h * sum(d * ks[i][comp] for i, d in enumerate(_D))
            cont.append((y_old, ydiff, bspl, ydiff - h * ks[6][comp] - bspl, r5))
        traj.segments.append(DenseSegment(t, h, (y, z), tuple(cont)))
        t, y, z = t + h, y5, z5
        traj.samples.append((t, y, z))
        traj.n_steps += 1
        k1 = ks[6]   # first-same-as-last
        h = h_next
    return traj


def ode_residual(traj, ode, params=None, n_points=100):
    """Max |y'' - F(y', y, t)| over interior points via dense-output
    differentiation."""
    values = {}
    for name in ode.params:
        values[name] = RationalExpr.const(_to_fraction((params or {})[name]))
    rhs = ode.rhs.subst(values) if values else ode.rhs
    F = compile_scalar(rhs, ("t", "y", "yp"))
    t0 = traj.samples[0][0]
    t1 = traj.samples[-1][0]
    worst = 0.0
    for i in range(1, n_points + 1):
        t = t0 + (t1 - t0) * i / (n_points + 1)
        y, _ = traj.eval(t)
        yp, _ = traj.eval_deriv(t, 1)
        ypp, _ = traj.eval_deriv(t, 2)
        worst = max(worst, abs(ypp - F(t, y, yp)))
    return worst


def self_convergence(family, params, y0, z0, t0, t1, h=0.01):
    """Richardson self-convergence ratio |u_h - u_h/2| / |u_h/2 - u_h/4|
    of the endpoint; a fifth-order scheme gives a factor near 32."""
    ends = []
    for hh in (h, h / 2, h / 4):
        traj = integrate(family, params, y0, z0, t0, t1, fixed_step=hh)
        ends.append(traj.samples[-1])
    e1 = abs(ends[0][1] - ends[1][1]) + abs(ends[0][2] - ends[1][2])
    e2 = abs(ends[1][1] - ends[2][1]) + abs(ends[1][2] - ends[2][2])
    if e2 == 0:
        return math.inf
    return e1 / e2


# ---------------------------------------------------------------------------
# Degeneration limit probes
# ---------------------------------------------------------------------------

def limit_probe(cat, rule, eps_values=(0.1, 0.05, 0.025), seed=7, sigma=1):
    """Slope of log|residual| vs log(eps) for a rule's Hamiltonian
    relation, evaluated at a random base point.

    The symbolic residual comes from degeneration.apply_rule before its
    valuation check; an identically zero residual reports an infinite
    slope.  The reported slope is the median over a handful of
    well-conditioned base points (individual points can sit in a curved
    region of the log-log plot at these finite eps); it must reach
    (claimed order - 0.1) to corroborate the symbolic valuation.
    """
    from . import degeneration
    if any(e < 1e-3 for e in eps_values):
        raise ConditioningFailure("eps below the conditioning guard 1e-3")
    if list(eps_values) != sorted(eps_values, reverse=True):
        raise ConditioningFailure("eps values must decrease")
    report = degeneration.apply_rule(cat, rule, sigma=sigma if rule.has_sigma else None,
                                     check=False)
    residual = report.residuals["H"]
    claimed = rule.hrel_order
    if residual.is_zero():
        return {"rule": rule.id, "slope": math.inf, "claimed": claimed,
                "values": [], "pass": True}
    rng = random.Random(seed)
    syms = sorted(residual.used_vars() - {"eps"})
    slopes = []
    values = []
    for attempt in range(60):
        if len(slopes) >= 5:
            break
        point = {s: rng.uniform(0.4, 1.6) for s in syms}
        try:
            vals = []
            for e in eps_values:
                point["eps"] = e
                v = residual.eval_numeric(point)
                vals.append(abs(v))
            if any(v == 0 or not math.isfinite(v) for v in vals):
                continue
            xs = [math.log(e) for e in eps_values]
            ys = [math.log(v) for v in vals]
            pair = [(ys[i] - ys[i + 1]) / (xs[i] - xs[i + 1])
                    for i in range(len(xs) - 1)]
            if max(pair) - min(pair) > 0.35:
                continue   # not a clean power law at this base point
            n = len(xs)
            xbar = sum(xs) / n
            ybar = sum(ys) / n
            slopes.append(sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
                          / sum((x - xbar) ** 2 for x in xs))
            values.append(list(zip(list(eps_values), vals)))
        except (ZeroDivisionError, OverflowError, Exception) as exc:
            if not isinstance(exc, (ZeroDivisionError, OverflowError)):
                if "denominator" not in str(exc):
                    raise
            continue
    if not slopes:
        raise ConditioningFailure("no well-conditioned base point found for %s"
                                  % rule.id)
    slopes.sort()
    slope = slopes[len(slopes) // 2]   # median against curved outliers
    ok = claimed is None or slope >= claimed - 0.1
    return {"rule": rule.id, "slope": slope, "claimed": claimed,
            "values": values[0], "pass": ok}
