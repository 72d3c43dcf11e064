"""Exact symbolic kernel: multivariate rational functions over Q with
adjoined algebraic constants.

Values are built from three layers:

  coefficient -- a ``fractions.Fraction``, or a ``TowerElem`` when the
                 value involves adjoined constants (sqrt2, sqrtm2, cbrt2).
  Poly        -- sparse multivariate polynomial: a map from exponent
                 vectors to nonzero coefficients.  Exponent vectors are
                 aligned with a per-polynomial tuple of variable names,
                 kept sorted in the canonical variable order
                 x, w, rho, t, y, z, eps, then everything else
                 alphabetically.
  RationalExpr -- reduced fraction of two Polys.  Invariants:
                 gcd(num, den) = 1, den != 0, and the leading coefficient
                 of den (graded-lex over the canonical order) is 1.
                 Zero is 0/1.

Everything is immutable after construction and safe to share between
threads.  Equality of canonical forms is structural equality.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd as _igcd
from math import inf


class AlgebraError(Exception):
    pass


class DivisionByZero(AlgebraError):
    pass


class UnknownVariable(AlgebraError):
    pass


# ---------------------------------------------------------------------------
# Constant tower
# ---------------------------------------------------------------------------

class _Tower:
    """Registry of adjoined constants.

    Each entry is (name, degree, reduction) where reduction gives
    name**degree as a TowerElem over the *earlier* entries only.  Every
    stored power of a tower symbol is < its degree.
    """

    def __init__(self):
        self.names = []
        self.degrees = []
        self.reductions = []   # dict exps-over-earlier -> Fraction
        self.numeric = []      # complex embedding, for float evaluation

    def declare(self, name, degree, reduction, numeric):
        if name in self.names:
            raise AlgebraError("tower constant %r already declared" % name)
        if degree < 2:
            raise AlgebraError("tower degree must be >= 2")
        for exps in reduction:
            if len(exps) > len(self.names):
                raise AlgebraError("reduction of %r references later entries" % name)
        self.names.append(name)
        self.degrees.append(degree)
        self.reductions.append(dict(reduction))
        self.numeric.append(numeric)

    def index(self, name):
        return self.names.index(name)


TOWER = _Tower()
# sqrt2**2 = 2, sqrtm2**2 = -2, cbrt2**3 = 2.  These cover every radical
# appearing in the bundled catalog; more can be declared by callers.
TOWER.declare("sqrt2", 2, {(): Fraction(2)}, 2 ** 0.5)
TOWER.declare("sqrtm2", 2, {(): Fraction(-2)}, complex(0, 2 ** 0.5))
TOWER.declare("cbrt2", 3, {(): Fraction(2)}, 2 ** (1.0 / 3.0))


def declare_constant(name, degree, reduction, numeric):
    """Adjoin a new constant with name**degree = reduction.

    ``reduction`` maps exponent tuples over the previously declared
    constants to Fractions; ``numeric`` is its complex embedding.
    """
    TOWER.declare(name, degree, reduction, numeric)


def _pad(exps, n):
    return exps + (0,) * (n - len(exps))


class TowerElem:
    """Element of Q[tower constants] with all powers reduced.

    terms: dict mapping exponent tuples (aligned with TOWER.names, padded
    with zeros) to nonzero Fractions.
    """

    __slots__ = ("terms",)

    def __init__(self, terms):
        self.terms = terms

    def __eq__(self, other):
        if isinstance(other, TowerElem):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == ({(0,) * len(TOWER.names): Fraction(other)} if other else {})
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        return "TowerElem(%r)" % (self.terms,)

    def is_zero(self):
        return not self.terms

    def as_fraction(self):
        """Return self as a Fraction if tower-free, else None."""
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1:
            exps, c = next(iter(self.terms.items()))
            if not any(exps):
                return c
        return None


_ZERO_EXPS_CACHE = {}


def _zero_exps():
    n = len(TOWER.names)
    t = _ZERO_EXPS_CACHE.get(n)
    if t is None:
        t = _ZERO_EXPS_CACHE[n] = (0,) * n
    return t


def tower_atom(name):
    """The constant ``name`` as a TowerElem."""
    i = TOWER.index(name)
    exps = list(_zero_exps())
    exps[i] = 1
    return TowerElem({tuple(exps): Fraction(1)})


def _reduce_monomial(exps, coef, out):
    """Accumulate coef * prod(const_i ** exps_i) into ``out``, reducing
    any exponent that reaches its degree via the tower relations."""
    for i in range(len(exps) - 1, -1, -1):
        d = TOWER.degrees[i]
        if exps[i] >= d:
            q, r = divmod(exps[i], d)
            base = list(exps)
            base[i] = r
            # multiply by reduction**q
            acc = {tuple(base): coef}
            red = TOWER.reductions[i]
            for _ in range(q):
                nxt = {}
                for e1, c1 in acc.items():
                    for e2, c2 in red.items():
                        e2 = _pad(e2, len(e1))
                        e = tuple(a + b for a, b in zip(e1, e2))
                        c = c1 * c2
                        if e in nxt:
                            c = nxt[e] + c
                            if c:
                                nxt[e] = c
                            else:
                                del nxt[e]
                        elif c:
                            nxt[e] = c
                acc = nxt
            for e, c in acc.items():
                _reduce_monomial(e, c, out)
            return
    prev = out.get(exps)
    if prev is None:
        if coef:
            out[exps] = coef
    else:
        c = prev + coef
        if c:
            out[exps] = c
        else:
            del out[exps]


# Coefficient helpers.  A coefficient is a Fraction or a TowerElem; the
# Fraction fast path dominates in practice.

def _c_add(a, b):
    ta, tb = type(a), type(b)
    if ta is not TowerElem and tb is not TowerElem:
        return a + b
    a = _c_tower(a)
    b = _c_tower(b)
    terms = dict(a.terms)
    for e, c in b.terms.items():
        prev = terms.get(e)
        if prev is None:
            terms[e] = c
        else:
            c = prev + c
            if c:
                terms[e] = c
            else:
                del terms[e]
    return _c_simplify(TowerElem(terms))


def _c_neg(a):
    if type(a) is not TowerElem:
        return -a
    return TowerElem({e: -c for e, c in a.terms.items()})


def _c_mul(a, b):
    ta, tb = type(a), type(b)
    if ta is not TowerElem and tb is not TowerElem:
        return a * b
    if ta is not TowerElem:
        if not a:
            return 0
        return TowerElem({e: c * a for e, c in b.terms.items()})
    if tb is not TowerElem:
        if not b:
            return 0
        return TowerElem({e: c * b for e, c in a.terms.items()})
    if len(a.terms) == 1 and len(b.terms) == 1:
        (e1, c1), = a.terms.items()
        (e2, c2), = b.terms.items()
        n = len(TOWER.names)
        e = tuple(x + y for x, y in zip(_pad(e1, n), _pad(e2, n)))
        if all(k < d for k, d in zip(e, TOWER.degrees)):
            return TowerElem({e: c1 * c2})
    out = {}
    for e1, c1 in a.terms.items():
        for e2, c2 in b.terms.items():
            e = tuple(x + y for x, y in zip(_pad(e1, len(TOWER.names)), _pad(e2, len(TOWER.names))))
            _reduce_monomial(e, c1 * c2, out)
    return _c_simplify(TowerElem(out))


def _c_tower(a):
    if type(a) is TowerElem:
        return a
    if not a:
        return TowerElem({})
    return TowerElem({_zero_exps(): Fraction(a)})


def _c_simplify(a):
    f = a.as_fraction()
    return a if f is None else f


def _c_is_zero(a):
    if type(a) is TowerElem:
        return not a.terms
    return not a


def _c_inv(a):
    """Inverse of a nonzero coefficient in the tower field."""
    if type(a) is not TowerElem:
        if not a:
            raise DivisionByZero("coefficient inverse of zero")
        return Fraction(1) / a
    # Solve a * x = 1 by Gaussian elimination over the monomial basis of
    # the full tower (dimension = product of degrees, small).
    basis = [()]
    for d in TOWER.degrees:
        basis = [e + (k,) for e in basis for k in range(d)]
    idx = {e: i for i, e in enumerate(basis)}
    n = len(basis)
    cols = []
    for e in basis:
        prod = {}
        for ea, ca in a.terms.items():
            ee = tuple(x + y for x, y in zip(_pad(ea, len(e)), e))
            _reduce_monomial(ee, ca, prod)
        col = [Fraction(0)] * n
        for ee, cc in prod.items():
            col[idx[ee]] = cc
        cols.append(col)
    # Solve M x = e0 where M[i][j] = cols[j][i]
    m = [[cols[j][i] for j in range(n)] + [Fraction(1) if i == idx[_zero_exps()] else Fraction(0)]
         for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col]), None)
        if piv is None:
            raise DivisionByZero("coefficient is a zero divisor")
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [v / pv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col]:
                f = m[r][col]
                m[r] = [v - f * w for v, w in zip(m[r], m[col])]
    terms = {}
    for i, e in enumerate(basis):
        if m[i][n]:
            terms[_pad(e, len(TOWER.names))] = m[i][n]
    return _c_simplify(TowerElem(terms))


def _c_fractions(a):
    if type(a) is not TowerElem:
        return (a,)
    return tuple(a.terms.values())


def _c_numeric(a):
    if type(a) is not TowerElem:
        return float(a)
    val = 0j
    for e, c in a.terms.items():
        v = complex(c)
        for i, k in enumerate(e):
            if k:
                v *= TOWER.numeric[i] ** k
        val += v
    return val


# ---------------------------------------------------------------------------
# Canonical variable order
# ---------------------------------------------------------------------------

_HEAD_ORDER = {"x": 0, "w": 1, "rho": 2, "t": 3, "y": 4, "z": 5, "eps": 6}


def var_key(name):
    r = _HEAD_ORDER.get(name)
    return (r, "") if r is not None else (7, name)


def sort_vars(names):
    return tuple(sorted(set(names), key=var_key))


# ---------------------------------------------------------------------------
# Poly
# ---------------------------------------------------------------------------

class Poly:
    """Sparse multivariate polynomial with tower-field coefficients."""

    __slots__ = ("vars", "terms")

    def __init__(self, vars, terms):
        self.vars = vars
        self.terms = terms

    # -- constructors -------------------------------------------------

    @staticmethod
    def const(c):
        if isinstance(c, Fraction) and c.denominator == 1:
            c = c.numerator
        if _c_is_zero(c):
            return _P_ZERO
        return Poly((), {(): c})

    @staticmethod
    def var(name):
        if name in TOWER.names:
            return Poly.const(tower_atom(name))
        return Poly((name,), {(1,): 1})

    # -- predicates ----------------------------------------------------

    def is_zero(self):
        return not self.terms

    def is_const(self):
        return not self.terms or (len(self.terms) == 1 and not any(next(iter(self.terms))))

    def const_value(self):
        if not self.terms:
            return 0
        return next(iter(self.terms.values()))

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        a, b = unify(self, other)
        return a.terms == b.terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    def __repr__(self):
        from . import exprlang
        return "<Poly %s>" % exprlang.render_poly(self)

    # -- structure -----------------------------------------------------

    def used_vars(self):
        used = set()
        for e in self.terms:
            for v, k in zip(self.vars, e):
                if k:
                    used.add(v)
        return used

    def compress(self):
        """Drop variables with zero exponent everywhere."""
        if not self.terms:
            return _P_ZERO
        keep = [i for i, v in enumerate(self.vars)
                if any(e[i] for e in self.terms)]
        if len(keep) == len(self.vars):
            return self
        vars = tuple(self.vars[i] for i in keep)
        terms = {tuple(e[i] for i in keep): c for e, c in self.terms.items()}
        return Poly(vars, terms)

    def degree(self, name):
        if name not in self.vars:
            return 0
        i = self.vars.index(name)
        return max((e[i] for e in self.terms), default=0)

    def total_degree(self):
        return max((sum(e) for e in self.terms), default=0)

    # -- arithmetic ------------------------------------------------------

    def __add__(self, other):
        a, b = unify(self, _as_poly(other))
        terms = dict(a.terms)
        for e, c in b.terms.items():
            prev = terms.get(e)
            if prev is None:
                terms[e] = c
            else:
                c = _c_add(prev, c)
                if _c_is_zero(c):
                    del terms[e]
                else:
                    terms[e] = c
        return Poly(a.vars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Poly(self.vars, {e: _c_neg(c) for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) + (-self)

    def __mul__(self, other):
        a, b = unify(self, _as_poly(other))
        if not a.terms or not b.terms:
            return _P_ZERO
        if len(a.terms) > len(b.terms):
            a, b = b, a
        terms = {}
        bitems = list(b.terms.items())
        for e1, c1 in a.terms.items():
            for e2, c2 in bitems:
                e = tuple(x + y for x, y in zip(e1, e2))
                c = _c_mul(c1, c2)
                prev = terms.get(e)
                if prev is None:
                    if not _c_is_zero(c):
                        terms[e] = c
                else:
                    c = _c_add(prev, c)
                    if _c_is_zero(c):
                        del terms[e]
                    else:
                        terms[e] = c
        return Poly(a.vars, terms)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            raise AlgebraError("negative power on Poly")
        result = Poly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def mul_coef(self, c):
        if _c_is_zero(c):
            return _P_ZERO
        return Poly(self.vars, {e: _c_mul(cc, c) for e, cc in self.terms.items()})

    # -- calculus ----------------------------------------------------------

    def diff(self, name):
        if name not in self.vars:
            return _P_ZERO
        i = self.vars.index(name)
        terms = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                e2 = e[:i] + (k - 1,) + e[i + 1:]
                c2 = _c_mul(c, k)
                prev = terms.get(e2)
                terms[e2] = _c_add(prev, c2) if prev is not None else c2
        return Poly(self.vars, {e: c for e, c in terms.items() if not _c_is_zero(c)}).compress()

    # -- leading data, ordering -------------------------------------------

    def lead_key(self):
        """Graded-lex key of the leading monomial (requires nonzero)."""
        return max(_grlex_key(self.vars, e) for e in self.terms)

    def lead_coef(self):
        best = None
        bc = None
        for e, c in self.terms.items():
            k = _grlex_key(self.vars, e)
            if best is None or k > best:
                best, bc = k, c
        return bc

    def sorted_terms(self):
        """Terms in descending graded-lex order (for canonical printing)."""
        return sorted(self.terms.items(),
                      key=lambda item: _grlex_key(self.vars, item[0]),
                      reverse=True)

    # -- evaluation --------------------------------------------------------

    def eval_exact(self, point):
        """Evaluate at a map var -> Fraction; returns Fraction or TowerElem."""
        total = 0
        for e, c in self.terms.items():
            v = c
            for name, k in zip(self.vars, e):
                if k:
                    v = _c_mul(v, Fraction(point[name]) ** k)
            total = _c_add(total, v)
        return total

    def eval_numeric(self, point):
        total = 0j
        for e, c in self.terms.items():
            v = _c_numeric(c)
            for name, k in zip(self.vars, e):
                if k:
                    v *= point[name] ** k
            total += v
        return total


_P_ZERO = Poly((), {})
_P_ONE = Poly((), {(): 1})


def _as_poly(x):
    if isinstance(x, Poly):
        return x
    if isinstance(x, (int, Fraction, TowerElem)):
        return Poly.const(x)
    raise TypeError("cannot coerce %r to Poly" % (x,))


def _grlex_key(vars, exps):
    # Graded, then lexicographic in the canonical variable order.  The
    # exponent tuple is already aligned to vars sorted canonically.
    return (sum(exps), exps)


_UNIFY_CACHE = {}


def unify(a, b):
    """Rewrite two polynomials over a common sorted variable tuple."""
    if a.vars == b.vars:
        return a, b
    key = (a.vars, b.vars)
    plan = _UNIFY_CACHE.get(key)
    if plan is None:
        vars = sort_vars(a.vars + b.vars)
        ia = [vars.index(v) for v in a.vars]
        ib = [vars.index(v) for v in b.vars]
        plan = (vars, tuple(ia), tuple(ib))
        _UNIFY_CACHE[key] = plan
    vars, ia, ib = plan
    n = len(vars)

    def remap(p, imap):
        if p.vars == vars:
            return p
        terms = {}
        for e, c in p.terms.items():
            e2 = [0] * n
            for pos, k in zip(imap, e):
                e2[pos] = k
            terms[tuple(e2)] = c
        return Poly(vars, terms)

    return remap(a, ia), remap(b, ib)


# ---------------------------------------------------------------------------
# GCD machinery
# ---------------------------------------------------------------------------

def _rat_content(p):
    """Positive rational c with p/c having coprime integer components."""
    num_g = 0
    den_l = 1
    for c in p.terms.values():
        for f in _c_fractions(c):
            num_g = _igcd(num_g, abs(f.numerator))
            den_l = den_l * f.denominator // _igcd(den_l, f.denominator)
    if num_g == 0:
        return Fraction(1)
    return Fraction(num_g, den_l)


def _monomial_gcd(p):
    """Exponent vector dividing every term of p."""
    it = iter(p.terms)
    first = next(it)
    mins = list(first)
    for e in it:
        for i, k in enumerate(e):
            if k < mins[i]:
                mins[i] = k
    return tuple(mins)


def _shift_down(p, mono):
    if not any(mono):
        return p
    return Poly(p.vars, {tuple(a - b for a, b in zip(e, mono)): c
                         for e, c in p.terms.items()})


def poly_divexact(f, g):
    """Exact polynomial division; raises AlgebraError if not exact."""
    f, g = unify(f, g)
    if g.is_zero():
        raise DivisionByZero("exact division by zero polynomial")
    if g.is_const():
        inv = _c_inv(g.const_value())
        return f.mul_coef(inv)
    if f.is_zero():
        return _P_ZERO
    vars = f.vars
    # long division by leading term, graded-lex
    g_items = sorted(g.terms.items(), key=lambda kv: _grlex_key(vars, kv[0]), reverse=True)
    glt_e, glt_c = g_items[0]
    glt_c_inv = _c_inv(glt_c)
    rem = dict(f.terms)
    quo = {}
    while rem:
        rlt_e = max(rem, key=lambda e: _grlex_key(vars, e))
        rlt_c = rem[rlt_e]
        qe = tuple(a - b for a, b in zip(rlt_e, glt_e))
        if any(k < 0 for k in qe):
            raise AlgebraError("inexact polynomial division")
        qc = _c_mul(rlt_c, glt_c_inv)
        quo[qe] = qc
        for ge, gc in g_items:
            e = tuple(a + b for a, b in zip(qe, ge))
            c = _c_mul(qc, gc)
            prev = rem.get(e)
            if prev is None:
                if not _c_is_zero(c):
                    rem[e] = _c_neg(c)
            else:
                c = _c_add(prev, _c_neg(c))
                if _c_is_zero(c):
                    del rem[e]
                else:
                    rem[e] = c
    return Poly(vars, quo).compress()


def _to_recursive(p, name):
    """Represent p as dense coefficient list in ``name`` (low to high)."""
    i = p.vars.index(name)
    rest = p.vars[:i] + p.vars[i + 1:]
    deg = max(e[i] for e in p.terms)
    coeffs = [dict() for _ in range(deg + 1)]
    for e, c in p.terms.items():
        coeffs[e[i]][e[:i] + e[i + 1:]] = c
    return [Poly(rest, t).compress() for t in coeffs]


def _from_recursive(coeffs, name):
    out = _P_ZERO
    xv = Poly.var(name)
    xp = Poly.const(1)
    for k, c in enumerate(coeffs):
        if not c.is_zero():
            out = out + c * xp
        if k + 1 < len(coeffs):
            xp = xp * xv
    return out


def _list_norm(coeffs):
    while coeffs and coeffs[-1].is_zero():
        coeffs.pop()
    return coeffs


def _list_content(coeffs):
    g = _P_ZERO
    for c in coeffs:
        if not c.is_zero():
            g = poly_gcd(g, c)
            if g.is_const():
                return _P_ONE
    return g if not g.is_zero() else _P_ONE


def _pseudo_rem(f, g):
    """Pseudo-remainder of dense lists f, g (coefficients are Polys)."""
    f = list(f)
    lg = g[-1]
    dg = len(g) - 1
    while len(f) - 1 >= dg and _list_norm(f):
        df = len(f) - 1
        if df < dg:
            break
        lead = f[-1]
        f = [c * lg for c in f]
        shift = df - dg
        for k in range(dg + 1):
            f[shift + k] = f[shift + k] - lead * g[k]
        f = _list_norm(f)
        if not f:
            break
    return f


import random as _random

_PROBE_RNG = _random.Random(0x5EED)


def _has_tower_coeffs(p):
    return any(type(c) is not Fraction for c in p.terms.values())


def _spec_univariate(p, main, point):
    """Specialize all variables except ``main`` at integer ``point``;
    returns dense Fraction coefficient list in ``main``."""
    i = p.vars.index(main) if main in p.vars else None
    deg = p.degree(main)
    out = [Fraction(0)] * (deg + 1)
    for e, c in p.terms.items():
        v = c
        k = 0
        for j, (name, ex) in enumerate(zip(p.vars, e)):
            if j == i:
                k = ex
            elif ex:
                v = v * point[name] ** ex
        out[k] += v
    while out and not out[-1]:
        out.pop()
    return out


def _univ_gcd_degree(a, b):
    """Degree of gcd of two dense Fraction coefficient lists."""
    while b:
        if len(a) < len(b):
            a, b = b, a
        # monic euclid
        lb = b[-1]
        b = [c / lb for c in b]
        while len(a) >= len(b):
            shift = len(a) - len(b)
            lead = a[-1]
            a = [c - lead * b[i - shift] if i >= shift else c
                 for i, c in enumerate(a[:-1])]
            while a and not a[-1]:
                a.pop()
            if not a:
                break
        a, b = b, a
    return len(a) - 1


def _certified_coprime(f, g, shared):
    """True only if gcd(f, g) is certainly constant.

    For each shared variable v, specialize the rest at random integers;
    if both leading-in-v coefficients survive and the univariate gcd is
    constant, the resultant in v is nonzero, so v cannot occur in the
    gcd.  False means "unknown" and callers fall back to the PRS.
    """
    if _has_tower_coeffs(f) or _has_tower_coeffs(g):
        return False
    for v in shared:
        ok = False
        for _ in range(8):
            point = {name: _PROBE_RNG.randint(2, 1 << 14)
                     for name in set(f.vars) | set(g.vars) if name != v}
            fa = _spec_univariate(f, v, point)
            ga = _spec_univariate(g, v, point)
            if len(fa) - 1 != f.degree(v) or len(ga) - 1 != g.degree(v):
                continue   # leading coefficient vanished; retry
            if _univ_gcd_degree(fa, ga) == 0:
                ok = True
                break
            return False   # likely a true common factor in v
        if not ok:
            return False
    return True


def poly_gcd(f, g):
    """Monic gcd of two polynomials (subresultant PRS, content split)."""
    f = f.compress()
    g = g.compress()
    if f.is_zero():
        return _monic(g)
    if g.is_zero():
        return _monic(f)
    if f.is_const() or g.is_const():
        return _P_ONE
    # common monomial factor
    fm = _monomial_gcd(f)
    gm = _monomial_gcd(g)
    fv, gv = f.vars, g.vars
    common = {}
    for v, k in list(zip(fv, fm)):
        if k:
            common[v] = k
    mono_part = _P_ONE
    for v, k in common.items():
        if v in gv:
            k2 = min(k, gm[gv.index(v)])
            if k2:
                mono_part = mono_part * Poly.var(v) ** k2
    f = _shift_down(f, fm).compress()
    g = _shift_down(g, gm).compress()
    if f.is_const() or g.is_const():
        return _monic(mono_part)
    # cheap exact-division shortcuts
    for a, b in ((f, g), (g, f)):
        if len(a.terms) <= len(b.terms):
            try:
                poly_divexact(b, a)
                return _monic(mono_part * a)
            except AlgebraError:
                pass
            break
    fu, gu = unify(f, g)
    shared = sorted(fu.used_vars() & gu.used_vars(), key=var_key)
    if not shared:
        return _monic(mono_part)
    if _certified_coprime(fu, gu, shared):
        return _monic(mono_part)
    # choose the shared variable of least combined degree as main variable
    main = min(shared, key=lambda v: fu.degree(v) + gu.degree(v))
    F = _to_recursive(fu, main)
    G = _to_recursive(gu, main)
    contF = _list_content(F)
    contG = _list_content(G)
    F = [poly_divexact(c, contF) for c in F]
    G = [poly_divexact(c, contG) for c in G]
    if len(F) < len(G):
        F, G = G, F
    # subresultant PRS
    gg = _P_ONE
    hh = _P_ONE
    while True:
        delta = len(F) - len(G)
        R = _pseudo_rem(F, G)
        if not R:
            break
        if len(R) == 1:
            G = [_P_ONE]
            break
        beta = gg * hh ** delta
        R = [poly_divexact(c, beta) for c in R]
        F, G = G, R
        gg = F[-1]
        if delta == 0:
            # hh unchanged by convention h^(1-0) g^0
            pass
        elif delta == 1:
            hh = gg
        else:
            hh = poly_divexact(gg ** delta, hh ** (delta - 1))
    if len(G) == 1:
        result = mono_part * poly_gcd(contF, contG)
        return _monic(result)
    Gp = [poly_divexact(c, _list_content(G)) for c in G]
    h = _from_recursive(Gp, main)
    result = mono_part * poly_gcd(contF, contG) * h
    return _monic(result)


def _monic(p):
    if p.is_zero():
        return p
    lc = p.lead_coef()
    if lc == 1:
        return p
    return p.mul_coef(_c_inv(lc))


# ---------------------------------------------------------------------------
# RationalExpr
# ---------------------------------------------------------------------------

def _c_pow(c, m):
    if type(c) is not TowerElem:
        return c ** m
    out = 1
    for _ in range(m):
        out = _c_mul(out, c)
    return out


def _c_sort_key(c):
    if type(c) is not TowerElem:
        return (0, Fraction(c))
    return (1, sorted(c.terms.items()))


def _factor_key(fm):
    f, m = fm
    terms = sorted(f.terms.items(), key=lambda kv: kv[0])
    return (f.total_degree(), f.vars,
            tuple((e, _c_sort_key(c)) for e, c in terms), m)


def _normalize_factored(num, factors):
    """Cancel num against the denominator factors and make them monic.

    ``factors`` is an iterable of (Poly, multiplicity).  Returns the
    reduced (num, factor tuple); factor splitting happens as a byproduct
    of the gcds so the stored pieces stay small.
    """
    num = _as_poly(num).compress()
    if num.is_zero():
        return _P_ZERO, ()
    unit = 1
    out = []
    stack = [(_as_poly(f).compress(), m) for f, m in factors]
    while stack:
        f, m = stack.pop()
        if m == 0:
            continue
        if f.is_zero():
            raise DivisionByZero("rational expression with zero denominator")
        if f.is_const():
            unit = _c_mul(unit, _c_pow(f.const_value(), m))
            continue
        g = poly_gcd(num, f)
        if g.is_const():
            out.append((f, m))
            continue
        h = poly_divexact(f, g)
        if h.is_const():
            unit = _c_mul(unit, _c_pow(h.const_value(), m))
        else:
            stack.append((h, m))
        k = 0
        while k < m:
            try:
                num = poly_divexact(num, g)
                k += 1
            except AlgebraError:
                break
        if k == 0:
            raise AlgebraError("gcd reported a non-divisor")
        if k < m:
            stack.append((g, m - k))
    norm = {}
    for f, m in out:
        lc = f.lead_coef()
        if lc != 1:
            unit = _c_mul(unit, _c_pow(lc, m))
            f = f.mul_coef(_c_inv(lc))
        norm[f] = norm.get(f, 0) + m
    if unit != 1:
        num = num.mul_coef(_c_inv(unit))
    return num.compress(), tuple(sorted(norm.items(), key=_factor_key))


def _refine_union(fac_a, fac_b):
    """Split two factor lists over a common pairwise-coprime basis.

    Returns (basis_mults_a, basis_mults_b): dicts Poly -> multiplicity
    whose keys, taken together, are pairwise coprime.
    """
    basis = []
    mults = ({}, {})

    def insert(f, m, side):
        stack = [(f, m)]
        while stack:
            f, m = stack.pop()
            if f.is_const():
                continue
            progressed = False
            for i, g in enumerate(list(basis)):
                d = poly_gcd(f, g)
                if d.is_const():
                    continue
                if d == g:
                    mults[side][g] = mults[side].get(g, 0) + m
                    rest = poly_divexact(f, g)
                    lc = rest.lead_coef()
                    if lc != 1:
                        rest = rest.mul_coef(_c_inv(lc))
                    stack.append((rest, m))
                else:
                    g2 = poly_divexact(g, d)
                    lc = g2.lead_coef()
                    if lc != 1:
                        g2 = g2.mul_coef(_c_inv(lc))
                    basis[i] = d
                    if not g2.is_const():
                        basis.append(g2)
                    for mm in mults:
                        if g in mm:
                            k = mm.pop(g)
                            mm[d] = mm.get(d, 0) + k
                            if not g2.is_const():
                                mm[g2] = mm.get(g2, 0) + k
                    stack.append((f, m))
                progressed = True
                break
            if not progressed:
                basis.append(f)
                mults[side][f] = mults[side].get(f, 0) + m

    for f, m in fac_a:
        insert(f, m, 0)
    for f, m in fac_b:
        insert(f, m, 1)
    return mults


def _factor_pow(factors):
    out = _P_ONE
    for f, m in factors:
        out = out * f ** m
    return out


class RationalExpr:
    """Reduced ratio of two Polys.  See the module docstring for invariants.

    The denominator is stored internally as a list of monic factors with
    multiplicities, which keeps every gcd small; ``den`` exposes the
    expanded product required by the public contract.
    """

    __slots__ = ("num", "_factors", "_den")

    def __init__(self, num, den=None, _reduced=False):
        num = _as_poly(num)
        if den is None or (isinstance(den, Poly) and den is _P_ONE):
            self.num = num
            self._factors = ()
            self._den = _P_ONE
            return
        den = _as_poly(den)
        if den.is_zero():
            raise DivisionByZero("rational expression with zero denominator")
        self.num, self._factors = _normalize_factored(num, ((den, 1),))
        self._den = None

    @classmethod
    def _make(cls, num, factors):
        self = object.__new__(cls)
        self.num = num
        self._factors = factors
        self._den = None
        return self

    # -- constructors ---------------------------------------------------

    @staticmethod
    def const(c):
        return RationalExpr._make(Poly.const(c), ())

    @staticmethod
    def var(name):
        return RationalExpr._make(Poly.var(name), ())

    @staticmethod
    def fraction(a, b):
        return RationalExpr._make(Poly.const(Fraction(a, b)), ())

    # -- the expanded denominator ----------------------------------------

    @property
    def den(self):
        d = self._den
        if d is None:
            d = self._den = _factor_pow(self._factors)
        return d

    # -- predicates -------------------------------------------------------

    def is_zero(self):
        return self.num.is_zero()

    def is_const(self):
        return self.num.is_const() and not self._factors

    def const_value(self):
        if not self.is_const():
            raise AlgebraError("not a constant")
        if self.num.is_zero():
            return Fraction(0)
        return self.num.const_value()

    def used_vars(self):
        used = set(self.num.used_vars())
        for f, _ in self._factors:
            used |= f.used_vars()
        return used

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = RationalExpr.const(other)
        if not isinstance(other, RationalExpr):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        from . import exprlang
        return "<RationalExpr %s>" % exprlang.render(self)

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = _as_rat(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self._factors == other._factors:
            num = self.num + other.num
            return RationalExpr._make(*_normalize_factored(num, self._factors))
        ma, mb = _refine_union(self._factors, other._factors)
        lcm = {}
        for f in set(ma) | set(mb):
            lcm[f] = max(ma.get(f, 0), mb.get(f, 0))
        comp_a = _P_ONE
        comp_b = _P_ONE
        for f, m in lcm.items():
            ka = m - ma.get(f, 0)
            kb = m - mb.get(f, 0)
            if ka:
                comp_a = comp_a * f ** ka
            if kb:
                comp_b = comp_b * f ** kb
        num = self.num * comp_a + other.num * comp_b
        return RationalExpr._make(*_normalize_factored(num, lcm.items()))

    __radd__ = __add__

    def __neg__(self):
        return RationalExpr._make(-self.num, self._factors)

    def __sub__(self, other):
        return self + (-_as_rat(other))

    def __rsub__(self, other):
        return _as_rat(other) + (-self)

    def __mul__(self, other):
        other = _as_rat(other)
        if self.is_zero() or other.is_zero():
            return _R_ZERO
        a, afac = _normalize_factored(self.num, other._factors)
        b, bfac = _normalize_factored(other.num, self._factors)
        # a is coprime to afac and to bfac' (its own reduced factors);
        # likewise b, so the product needs no further cancellation
        merged = {}
        for f, m in afac:
            merged[f] = merged.get(f, 0) + m
        for f, m in bfac:
            merged[f] = merged.get(f, 0) + m
        return RationalExpr._make((a * b).compress(),
                                  tuple(sorted(merged.items(), key=_factor_key)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_rat(other)
        if other.is_zero():
            raise DivisionByZero("division by zero expression")
        return self * other._inverse()

    def _inverse(self):
        if self.is_zero():
            raise DivisionByZero("inverse of zero")
        num = _factor_pow(self._factors)
        return RationalExpr._make(*_normalize_factored(num, ((self.num, 1),)))

    def __rtruediv__(self, other):
        return _as_rat(other) / self

    def __pow__(self, n):
        if not isinstance(n, int):
            raise AlgebraError("exponent must be an integer")
        if n == 0:
            return _R_ONE
        if n < 0:
            return self._inverse() ** (-n)
        return RationalExpr._make(self.num ** n,
                                  tuple((f, m * n) for f, m in self._factors))

    # -- calculus -------------------------------------------------------------

    def diff(self, name):
        if name in TOWER.names or not _is_identifier(name):
            raise UnknownVariable("cannot differentiate with respect to %r" % name)
        active = [(f, m) for f, m in self._factors if name in f.vars and not f.diff(name).is_zero()]
        passive = [(f, m) for f, m in self._factors if (f, m) not in active]
        dn = self.num.diff(name)
        if not active:
            if dn.is_zero():
                return _R_ZERO
            return RationalExpr._make(*_normalize_factored(dn, passive))
        radical = _P_ONE
        for f, _ in active:
            radical = radical * f
        log_der = _P_ZERO
        for f, m in active:
            cof = _P_ONE
            for g, _ in active:
                if g is not f:
                    cof = cof * g
            log_der = log_der + Fraction(m) * f.diff(name) * cof
        num = dn * radical - self.num * log_der
        if num.is_zero():
            return _R_ZERO
        factors = passive + [(f, m + 1) for f, m in active]
        return RationalExpr._make(*_normalize_factored(num, factors))

    def subst(self, mapping):
        """Simultaneous substitution var -> RationalExpr/int/Fraction."""
        images = {}
        for k, v in mapping.items():
            if k in TOWER.names or not _is_identifier(k):
                raise UnknownVariable("cannot substitute for %r" % k)
            images[k] = _as_rat(v)
        out = _poly_subst(self.num, images)
        for f, m in self._factors:
            img = _poly_subst(f, images)
            if img.is_zero():
                raise DivisionByZero("substitution produced a zero denominator")
            out = out / img ** m
        return out

    # -- epsilon valuation -------------------------------------------------

    def eps_valuation(self):
        return eps_valuation(self)

    # -- evaluation ----------------------------------------------------------

    def eval_exact(self, point):
        den = Fraction(1)
        for f, m in self._factors:
            v = f.eval_exact(point)
            if _c_is_zero(v):
                raise DivisionByZero("evaluation hit a denominator zero")
            den = _c_mul(den, _c_pow(v, m))
        return _c_mul(self.num.eval_exact(point), _c_inv(den))

    def eval_numeric(self, point):
        den = 1.0
        for f, m in self._factors:
            v = f.eval_numeric(point)
            if v == 0:
                raise DivisionByZero("evaluation hit a denominator zero")
            den *= v ** m
        return self.num.eval_numeric(point) / den


_R_ZERO = RationalExpr._make(_P_ZERO, ())
_R_ONE = RationalExpr._make(_P_ONE, ())


def _as_rat(x):
    if isinstance(x, RationalExpr):
        return x
    if isinstance(x, (int, Fraction, TowerElem)):
        return RationalExpr.const(x)
    if isinstance(x, Poly):
        return RationalExpr._make(x, ())
    raise TypeError("cannot coerce %r to RationalExpr" % (x,))


def _poly_subst(p, images):
    touched = [v for v in p.vars if v in images]
    if not touched:
        return _as_rat(p)
    # common-denominator evaluation with cached powers
    pow_cache = {}

    def power(name, k):
        key = (name, k)
        r = pow_cache.get(key)
        if r is None:
            if name in images:
                base = images[name]
            else:
                base = RationalExpr.var(name)
            r = base ** k
            pow_cache[key] = r
        return r

    total = _R_ZERO
    for e, c in p.terms.items():
        term = RationalExpr.const(c)
        for name, k in zip(p.vars, e):
            if k:
                term = term * power(name, k)
        total = total + term
    return total


def _is_identifier(name):
    if not name or name[0].isdigit():
        return False
    return all(ch.isalnum() or ch == "_" for ch in name) and name.isascii()


# ---------------------------------------------------------------------------
# Operations of the public contract
# ---------------------------------------------------------------------------

def arith(op, lhs, rhs):
    """Canonical arithmetic: op in {add, sub, mul, div, pow}."""
    lhs = _as_rat(lhs)
    if op == "add":
        return lhs + _as_rat(rhs)
    if op == "sub":
        return lhs - _as_rat(rhs)
    if op == "mul":
        return lhs * _as_rat(rhs)
    if op == "div":
        return lhs / _as_rat(rhs)
    if op == "pow":
        return lhs ** rhs
    raise AlgebraError("unknown operation %r" % op)


def differentiate(f, name):
    return _as_rat(f).diff(name)


def substitute(f, mapping):
    return _as_rat(f).subst(mapping)


class EpsOrder:
    """Valuation of an expression in eps, with its leading coefficient.

    valuation is an int, or math.inf for the zero expression; leading is
    the eps-free coefficient of eps**valuation.
    """

    __slots__ = ("valuation", "leading")

    def __init__(self, valuation, leading):
        self.valuation = valuation
        self.leading = leading

    def __repr__(self):
        return "EpsOrder(%s)" % self.valuation

    def __eq__(self, other):
        if isinstance(other, EpsOrder):
            return self.valuation == other.valuation and self.leading == other.leading
        if isinstance(other, (int, float)):
            return self.valuation == other
        return NotImplemented


def _poly_eps_split(p):
    """(min eps-exponent, Poly of the coefficient of eps**min)."""
    if p.is_zero():
        return inf, _P_ZERO
    if "eps" not in p.vars:
        return 0, p
    i = p.vars.index("eps")
    m = min(e[i] for e in p.terms)
    terms = {}
    for e, c in p.terms.items():
        if e[i] == m:
            terms[e[:i] + (0,) + e[i + 1:]] = c
    return m, Poly(p.vars, terms).compress()


def eps_valuation(f):
    f = _as_rat(f)
    if f.is_zero():
        return EpsOrder(inf, _R_ZERO)
    vn, ln = _poly_eps_split(f.num)
    vd, ld = _poly_eps_split(f.den)
    return EpsOrder(vn - vd, RationalExpr(ln, ld))
