"""Catalog data model and loader.

All formulas live in a line-oriented text file (see data/catalog.txt)
rather than in code, so transcription stays diffable.  Sections are
introduced by ``[kind id]`` headers with ``key = expression`` lines in
the expression grammar of :mod:`painleve.exprlang`; ``params = a, b``
declares symbols and ``#`` starts a comment.

Section kinds: ``family`` (scalar-pair deformations with coefficient
functions p, q, a, b and Hamiltonian H), ``sl`` (potential form with p,
A, K), ``ode`` (scalar second-order equations), ``matrix`` (2x2 systems),
``rule`` (degeneration substitutions), ``equiv`` (solution-level
transformations between scalar equations).

Within a section, ``def.<name>`` introduces a local abbreviation, and the
symbols ``H`` (families), ``K`` (sl entries) expand to the entry's
Hamiltonian inside the other expressions.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction

from . import exprlang
from .algebra import RationalExpr
from .exprlang import ExprSyntaxError, UndeclaredIdentifier


class CatalogError(Exception):
    pass


class DanglingReference(CatalogError):
    pass


class CountMismatch(CatalogError):
    pass


class UnknownId(KeyError):
    pass


EXPECTED_COUNTS = {"family": 17, "sl": 7, "ode": 11, "rule": 21, "matrix": 4}

_FAMILY_VARS = ("x", "t", "y", "z")
_ODE_VARS = ("y", "yp", "t")


@dataclass(frozen=True)
class CanonicalFamily:
    """One scalar-pair deformation: u_xx + p u_x + q u = 0 with
    u_t = a u_x + b u, driven by the Hamiltonian flow of H(t, y, z)."""
    id: str
    params: tuple
    p: RationalExpr
    q: RationalExpr
    a: RationalExpr
    b: RationalExpr
    H: RationalExpr
    target: str
    param_map: dict
    has_sigma: bool

    def instantiate(self, sigma):
        if not self.has_sigma:
            return self
        s = {"sigma": RationalExpr.const(sigma)}
        return CanonicalFamily(
            id=self.id, params=tuple(p for p in self.params if p != "sigma"),
            p=self.p.subst(s), q=self.q.subst(s), a=self.a.subst(s),
            b=self.b.subst(s), H=self.H.subst(s), target=self.target,
            param_map={k: v.subst(s) for k, v in self.param_map.items()},
            has_sigma=False)

    def sigma_variants(self):
        if not self.has_sigma:
            return ((None, self),)
        return ((1, self.instantiate(1)), (-1, self.instantiate(-1)))


@dataclass(frozen=True)
class SLFamily:
    """Potential-form deformation u_xx = p u, u_t = A u_x - A_x u / 2."""
    id: str
    params: tuple
    p: RationalExpr
    A: RationalExpr
    K: RationalExpr
    has_sigma: bool

    def instantiate(self, sigma):
        if not self.has_sigma:
            return self
        s = {"sigma": RationalExpr.const(sigma)}
        return SLFamily(
            id=self.id, params=tuple(p for p in self.params if p != "sigma"),
            p=self.p.subst(s), A=self.A.subst(s), K=self.K.subst(s),
            has_sigma=False)

    def sigma_variants(self):
        if not self.has_sigma:
            return ((None, self),)
        return ((1, self.instantiate(1)), (-1, self.instantiate(-1)))

    def specialize(self, assignment):
        s = {k: RationalExpr.const(v) if isinstance(v, (int, Fraction)) else v
             for k, v in assignment.items()}
        return SLFamily(
            id=self.id,
            params=tuple(p for p in self.params if p not in assignment),
            p=self.p.subst(s), A=self.A.subst(s), K=self.K.subst(s),
            has_sigma=self.has_sigma and "sigma" not in assignment)


@dataclass(frozen=True)
class ScalarODE:
    """y'' = rhs(y', y, t); rhs uses the symbol yp for y'."""
    id: str
    params: tuple
    rhs: RationalExpr

    def instantiated(self, values):
        return self.rhs.subst({k: v for k, v in values.items()})


@dataclass(frozen=True)
class Mat2:
    """2x2 matrix of rational expressions sharing one system variable."""
    var: str
    entries: tuple  # (e11, e12, e21, e22)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[2 * i + j]

    def diff(self, name):
        return Mat2(self.var, tuple(e.diff(name) for e in self.entries))

    def subst(self, mapping):
        return Mat2(self.var, tuple(e.subst(mapping) for e in self.entries))

    def __mul__(self, other):
        a, b = self.entries, other.entries
        return Mat2(self.var, (
            a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]))

    def __sub__(self, other):
        return Mat2(self.var, tuple(x - y for x, y in zip(self.entries, other.entries)))

    def __add__(self, other):
        return Mat2(self.var, tuple(x + y for x, y in zip(self.entries, other.entries)))

    def scale(self, c):
        return Mat2(self.var, tuple(e * c for e in self.entries))

    def det(self):
        a = self.entries
        return a[0] * a[3] - a[1] * a[2]

    def inverse(self):
        from .matrixlab import SingularGauge
        d = self.det()
        if d.is_zero():
            raise SingularGauge("matrix with identically zero determinant")
        a = self.entries
        return Mat2(self.var, (a[3] / d, -a[1] / d, -a[2] / d, a[0] / d))

    def is_zero(self):
        return all(e.is_zero() for e in self.entries)


@dataclass(frozen=True)
class MatrixSystem:
    id: str
    var: str
    params: tuple
    symbols: tuple
    a: Mat2
    b: Mat2
    flow: dict  # dynamical symbol -> derivative expression; empty if none


@dataclass(frozen=True)
class DegenerationRule:
    id: str
    source: str
    target: str
    params: tuple           # extra free symbols beyond family parameters
    subst: dict             # source symbol -> expression in target frame
    target_sub: dict        # target parameter instantiations
    pregauge: tuple | None  # (gx, gt) applied in the source frame
    postgauge: tuple | None  # (gx, gt) applied after the change of variables
    hrel_lhs: RationalExpr  # source-frame expression (H inlined)
    hrel_phi: RationalExpr  # target-frame expression (target H inlined)
    hrel_order: int | None  # required valuation; None means exact identity
    algebraic: bool
    alt: dict = field(default_factory=dict)
    has_sigma: bool = False


@dataclass(frozen=True)
class EquivalenceTransform:
    id: str
    params: tuple
    base: str
    base_params: dict
    expr: RationalExpr      # new function of (y, yp, t)
    tau: RationalExpr       # new time as a function of t
    claim: str
    claim_params: dict
    has_sigma: bool = False


class Catalog:
    def __init__(self):
        self.families = {}
        self.sl = {}
        self.odes = {}
        self.rules = {}
        self.matrices = {}
        self.equivs = {}
        self.order = {"family": [], "sl": [], "ode": [], "rule": [],
                      "matrix": [], "equiv": []}

    def get(self, id):
        for table in (self.families, self.sl, self.odes, self.rules,
                      self.matrices, self.equivs):
            if id in table:
                return table[id]
        raise UnknownId(id)

    def list(self, kind):
        if kind not in self.order:
            raise UnknownId(kind)
        return tuple(self.order[kind])


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _read_sections(path):
    sections = []
    current = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("["):
                if not line.endswith("]"):
                    raise CatalogError("%s:%d: malformed section header" % (path, lineno))
                head = line[1:-1].split()
                if len(head) != 2:
                    raise CatalogError("%s:%d: section header needs kind and id" % (path, lineno))
                current = {"kind": head[0], "id": head[1], "items": [], "line": lineno}
                sections.append(current)
                continue
            if current is None:
                raise CatalogError("%s:%d: data before first section" % (path, lineno))
            if "=" not in line:
                raise CatalogError("%s:%d: expected key = expression" % (path, lineno))
            key, value = line.split("=", 1)
            current["items"].append((key.strip(), value.strip(), lineno))
    return sections


def _params_list(text):
    text = text.strip()
    if not text:
        return ()
    return tuple(p.strip() for p in text.split(","))


class _Section:
    def __init__(self, raw, path):
        self.kind = raw["kind"]
        self.id = raw["id"]
        self.path = path
        self.line = raw["line"]
        self.items = raw["items"]
        self.map = {}
        for key, value, lineno in raw["items"]:
            if key in self.map:
                raise CatalogError("%s:%d: duplicate key %r in [%s %s]"
                                   % (path, lineno, key, self.kind, self.id))
            self.map[key] = (value, lineno)

    def text(self, key, default=None):
        if key in self.map:
            return self.map[key][0]
        if default is not None:
            return default
        raise CatalogError("%s: [%s %s] is missing key %r"
                           % (self.path, self.kind, self.id, key))

    def has(self, key):
        return key in self.map

    def expr(self, key, declared, default=None):
        if key not in self.map:
            if default is not None:
                return exprlang.parse_expr(default, declared)
            raise CatalogError("%s: [%s %s] is missing key %r"
                               % (self.path, self.kind, self.id, key))
        value, lineno = self.map[key]
        try:
            return exprlang.parse_expr(value, declared)
        except (ExprSyntaxError, UndeclaredIdentifier) as exc:
            raise CatalogError("%s:%d: in %r of [%s %s]: %s"
                               % (self.path, lineno, key, self.kind, self.id, exc)) from exc

    def prefixed(self, prefix):
        out = {}
        for key, (value, lineno) in self.map.items():
            if key.startswith(prefix):
                out[key[len(prefix):]] = (value, lineno)
        return out


def _declared(*groups):
    env = {}
    for g in groups:
        for name in g:
            env[name] = "var"
    return env


def _resolve_defs(sec, base_env):
    """def.* entries, resolved in order of appearance."""
    env = dict(base_env)
    for key, value, lineno in sec.items:
        if key.startswith("def."):
            name = key[len("def."):]
            try:
                env[name] = exprlang.parse_expr(value, env)
            except (ExprSyntaxError, UndeclaredIdentifier) as exc:
                raise CatalogError("%s:%d: in %r: %s" % (sec.path, lineno, key, exc)) from exc
    return env


def _build_ode(sec):
    params = _params_list(sec.text("params", ""))
    env = _resolve_defs(sec, _declared(_ODE_VARS, params))
    return ScalarODE(id=sec.id, params=params, rhs=sec.expr("rhs", env))


def _build_family(sec):
    params = _params_list(sec.text("params", ""))
    env = _resolve_defs(sec, _declared(_FAMILY_VARS, params))
    H = sec.expr("H", env)
    env_h = dict(env)
    env_h["H"] = H
    param_map = {}
    for name, (value, lineno) in sec.prefixed("map.").items():
        try:
            param_map[name] = exprlang.parse_expr(value, env)
        except (ExprSyntaxError, UndeclaredIdentifier) as exc:
            raise CatalogError("%s:%d: %s" % (sec.path, lineno, exc)) from exc
    return CanonicalFamily(
        id=sec.id, params=params,
        p=sec.expr("p", env_h), q=sec.expr("q", env_h),
        a=sec.expr("a", env_h), b=sec.expr("b", env_h),
        H=H, target=sec.text("target"), param_map=param_map,
        has_sigma="sigma" in params)


def _build_sl(sec):
    params = _params_list(sec.text("params", ""))
    env = _resolve_defs(sec, _declared(_FAMILY_VARS, params))
    K = sec.expr("K", env)
    env_k = dict(env)
    env_k["K"] = K
    return SLFamily(id=sec.id, params=params, p=sec.expr("p", env_k),
                    A=sec.expr("A", env_k), K=K, has_sigma="sigma" in params)


def _build_matrix(sec):
    params = _params_list(sec.text("params", ""))
    symbols = _params_list(sec.text("symbols", ""))
    var = sec.text("var")
    env = _resolve_defs(sec, _declared((var, "t"), params, symbols))
    a = Mat2(var, tuple(sec.expr(k, env) for k in ("a11", "a12", "a21", "a22")))
    b = Mat2(var, tuple(sec.expr(k, env) for k in ("b11", "b12", "b21", "b22")))
    flow = {}
    for name, (value, lineno) in sec.prefixed("flow.").items():
        try:
            flow[name] = exprlang.parse_expr(value, env)
        except (ExprSyntaxError, UndeclaredIdentifier) as exc:
            raise CatalogError("%s:%d: %s" % (sec.path, lineno, exc)) from exc
    return MatrixSystem(id=sec.id, var=var, params=params, symbols=symbols,
                        a=a, b=b, flow=flow)


def _build_rule(sec, families):
    source = sec.text("source")
    target = sec.text("target")
    if source not in families:
        raise DanglingReference("rule %s references unknown family %r" % (sec.id, source))
    if target not in families:
        raise DanglingReference("rule %s references unknown family %r" % (sec.id, target))
    src = families[source]
    tgt = families[target]
    extra = _params_list(sec.text("params", ""))
    has_sigma = (src.has_sigma or tgt.has_sigma or "sigma" in extra
                 or any("sigma" in v for v, _ in sec.map.values()))
    sigma = ("sigma",) if has_sigma else ()
    # images live in the target frame
    img_env = _declared(_FAMILY_VARS, ("eps",), tgt.params, extra, sigma)
    subst = {}
    for name, (value, lineno) in sec.prefixed("subst.").items():
        if name not in src.params and name not in _FAMILY_VARS:
            raise CatalogError("%s:%d: rule %s substitutes unknown source symbol %r"
                               % (sec.path, lineno, sec.id, name))
        subst[name] = exprlang.parse_expr(value, img_env)
    target_sub = {}
    for name, (value, lineno) in sec.prefixed("target_sub.").items():
        if name not in tgt.params:
            raise CatalogError("%s:%d: rule %s instantiates unknown target parameter %r"
                               % (sec.path, lineno, sec.id, name))
        target_sub[name] = exprlang.parse_expr(value, img_env)
    src_env = _declared(_FAMILY_VARS, src.params, extra, sigma)
    pregauge = None
    if sec.has("pregauge.gx") or sec.has("pregauge.gt"):
        pregauge = (sec.expr("pregauge.gx", src_env, default="0"),
                    sec.expr("pregauge.gt", src_env, default="0"))
    postgauge = None
    if sec.has("postgauge.gx") or sec.has("postgauge.gt"):
        postgauge = (sec.expr("postgauge.gx", img_env, default="0"),
                     sec.expr("postgauge.gt", img_env, default="0"))
    lhs_env = dict(src_env)
    lhs_env["H"] = src.H
    phi_env = dict(img_env)
    phi_env["H"] = tgt.H.subst(target_sub) if target_sub else tgt.H
    hrel_lhs = sec.expr("hrel.lhs", lhs_env, default="H")
    hrel_phi = sec.expr("hrel.phi", phi_env)
    algebraic = sec.text("algebraic", "no").lower() in ("yes", "true", "1")
    order_text = sec.text("hrel.order", "exact" if algebraic else None)
    hrel_order = None if order_text == "exact" else int(order_text)
    alt = {k: v for k, (v, _) in sec.prefixed("alt.").items()}
    return DegenerationRule(
        id=sec.id, source=source, target=target, params=extra,
        subst=subst, target_sub=target_sub,
        pregauge=pregauge, postgauge=postgauge,
        hrel_lhs=hrel_lhs, hrel_phi=hrel_phi, hrel_order=hrel_order,
        algebraic=algebraic, alt=alt, has_sigma=has_sigma)


def _build_equiv(sec, odes):
    base = sec.text("base")
    claim = sec.text("claim")
    if base not in odes:
        raise DanglingReference("equiv %s references unknown ode %r" % (sec.id, base))
    if claim not in odes:
        raise DanglingReference("equiv %s references unknown ode %r" % (sec.id, claim))
    params = _params_list(sec.text("params", ""))
    has_sigma = "sigma" in params
    env = _declared(_ODE_VARS, params)
    base_params = {}
    for name, (value, lineno) in sec.prefixed("base.").items():
        base_params[name] = exprlang.parse_expr(value, env)
    claim_params = {}
    for name, (value, lineno) in sec.prefixed("claim.").items():
        claim_params[name] = exprlang.parse_expr(value, env)
    return EquivalenceTransform(
        id=sec.id, params=params, base=base, base_params=base_params,
        expr=sec.expr("expr", env), tau=sec.expr("tau", env, default="t"),
        claim=claim, claim_params=claim_params, has_sigma=has_sigma)


def load(path):
    """Load and validate a catalog file."""
    cat = Catalog()
    sections = [_Section(raw, path) for raw in _read_sections(path)]
    builders = {"ode": [], "family": [], "sl": [], "matrix": [], "rule": [],
                "equiv": []}
    for sec in sections:
        if sec.kind not in builders:
            raise CatalogError("%s:%d: unknown section kind %r"
                               % (path, sec.line, sec.kind))
        builders[sec.kind].append(sec)

    for sec in builders["ode"]:
        cat.odes[sec.id] = _build_ode(sec)
        cat.order["ode"].append(sec.id)
    for sec in builders["family"]:
        fam = _build_family(sec)
        if fam.target not in cat.odes:
            raise DanglingReference("family %s targets unknown ode %r"
                                    % (fam.id, fam.target))
        cat.families[sec.id] = fam
        cat.order["family"].append(sec.id)
    for sec in builders["sl"]:
        cat.sl[sec.id] = _build_sl(sec)
        cat.order["sl"].append(sec.id)
    for sec in builders["matrix"]:
        cat.matrices[sec.id] = _build_matrix(sec)
        cat.order["matrix"].append(sec.id)
    for sec in builders["rule"]:
        cat.rules[sec.id] = _build_rule(sec, cat.families)
        cat.order["rule"].append(sec.id)
    for sec in builders["equiv"]:
        cat.equivs[sec.id] = _build_equiv(sec, cat.odes)
        cat.order["equiv"].append(sec.id)

    for kind, expected in EXPECTED_COUNTS.items():
        got = len(cat.order[kind])
        if got != expected:
            raise CountMismatch("expected %d %s sections, found %d"
                                % (expected, kind, got))
    return cat


DEFAULT_PATH = os.path.join(os.path.dirname(__file__), "data", "catalog.txt")

_DEFAULT_CACHE = {}


def default_path():
    return os.environ.get("PAINLEVE_CATALOG", DEFAULT_PATH)


def load_default():
    """Load the bundled catalog (or $PAINLEVE_CATALOG), cached."""
    path = default_path()
    key = (path, os.stat(path).st_mtime_ns)
    if key not in _DEFAULT_CACHE:
        _DEFAULT_CACHE.clear()
        _DEFAULT_CACHE[key] = load(path)
    return _DEFAULT_CACHE[key]
