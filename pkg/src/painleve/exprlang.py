"""Plain-text expression language used by the catalog files.

Grammar (whitespace-insensitive, ASCII identifiers):

    expr    := term (('+'|'-') term)*
    term    := unary (('*'|'/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' exponent)*
    primary := INT | IDENT | '(' expr ')'
    exponent:= INT | '(' '-'? INT ')'

'^' binds tighter than unary minus, so -x^2 is -(x^2); its exponent must
be an integer literal, parenthesized when negative.  Implicit
multiplication is not supported.  Every failure is an ExprSyntaxError
carrying the byte offset and the set of expected tokens.
"""

from __future__ import annotations

from fractions import Fraction

from .algebra import TOWER, Poly, RationalExpr


class ExprSyntaxError(ValueError):
    def __init__(self, message, offset, expected=()):
        super().__init__("%s at offset %d" % (message, offset))
        self.offset = offset
        self.expected = frozenset(expected)


# Contract name for the parser failure.
SyntaxError = ExprSyntaxError


class UndeclaredIdentifier(KeyError):
    def __init__(self, name):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return "undeclared identifier %r" % self.name


# AST nodes are plain tuples:
#   ('num', int)  ('ident', str)  ('neg', node)
#   ('bin', op, left, right) for op in '+-*/'
#   ('pow', node, int)

_OPS = "+-*/^()"


def _tokenize(text):
    if not isinstance(text, str):
        raise ExprSyntaxError("input is not text", 0, {"expression"})
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _OPS:
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch.isdigit() and ch.isascii():
            j = i
            while j < n and text[j].isdigit() and text[j].isascii():
                j += 1
            tokens.append(("num", int(text[i:j]), i))
            i = j
            continue
        if (ch.isalpha() and ch.isascii()) or ch == "_":
            j = i
            while j < n and ((text[j].isalnum() and text[j].isascii()) or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
            continue
        raise ExprSyntaxError("unexpected character %r" % ch, i,
                              {"number", "identifier", "operator"})
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind, expected):
        tok = self.next()
        if tok[0] != kind:
            raise ExprSyntaxError("expected %s" % "/".join(sorted(expected)),
                                  tok[2], expected)
        return tok

    def parse_expr(self):
        node = self.parse_term()
        while self.peek()[0] in "+-":
            op = self.next()[0]
            rhs = self.parse_term()
            node = ("bin", op, node, rhs)
        return node

    def parse_term(self):
        node = self.parse_unary()
        while self.peek()[0] in "*/":
            op = self.next()[0]
            rhs = self.parse_unary()
            node = ("bin", op, node, rhs)
        return node

    def parse_unary(self):
        if self.peek()[0] == "-":
            self.next()
            return ("neg", self.parse_unary())
        return self.parse_power()

    def parse_power(self):
        node = self.parse_primary()
        while self.peek()[0] == "^":
            self.next()
            node = ("pow", node, self.parse_exponent())
        return node

    def parse_exponent(self):
        tok = self.peek()
        if tok[0] == "num":
            self.next()
            return tok[1]
        if tok[0] == "(":
            self.next()
            sign = 1
            if self.peek()[0] == "-":
                self.next()
                sign = -1
            num = self.expect("num", {"integer"})
            self.expect(")", {")"})
            return sign * num[1]
        raise ExprSyntaxError("exponent must be an integer literal", tok[2],
                              {"integer", "("})

    def parse_primary(self):
        tok = self.next()
        if tok[0] == "num":
            return ("num", tok[1])
        if tok[0] == "ident":
            return ("ident", tok[1])
        if tok[0] == "(":
            node = self.parse_expr()
            self.expect(")", {")"})
            return node
        raise ExprSyntaxError("expected a value", tok[2],
                              {"number", "identifier", "(", "-"})


def parse(text):
    """Parse ``text`` into an AST; raises ExprSyntaxError on bad input."""
    parser = _Parser(_tokenize(text))
    node = parser.parse_expr()
    tok = parser.peek()
    if tok[0] != "end":
        raise ExprSyntaxError("trailing input", tok[2], {"end of input"})
    return node


def lower(ast, declared):
    """Lower an AST to a RationalExpr.

    ``declared`` maps identifier names to either the string "var", a
    RationalExpr to splice in, or anything coercible.  Tower constants
    are always available.  Unknown identifiers raise
    UndeclaredIdentifier.
    """
    kind = ast[0]
    if kind == "num":
        return RationalExpr.const(ast[1])
    if kind == "ident":
        name = ast[1]
        if name in TOWER.names:
            return RationalExpr(Poly.var(name))
        if name not in declared:
            raise UndeclaredIdentifier(name)
        value = declared[name]
        if value == "var" or value is None:
            return RationalExpr.var(name)
        if isinstance(value, RationalExpr):
            return value
        return RationalExpr.const(value)
    if kind == "neg":
        return -lower(ast[1], declared)
    if kind == "pow":
        return lower(ast[1], declared) ** ast[2]
    if kind == "bin":
        op = ast[1]
        a = lower(ast[2], declared)
        b = lower(ast[3], declared)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        return a / b
    raise ExprSyntaxError("malformed AST node %r" % (kind,), 0)


def parse_expr(text, declared):
    """parse + lower in one step."""
    return lower(parse(text), declared)


# ---------------------------------------------------------------------------
# Canonical rendering
# ---------------------------------------------------------------------------

def _render_coef_mono(coef, names, exps):
    """One term as (is_negative, text) with the sign pulled out."""
    factors = []
    if isinstance(coef, (int, Fraction)):
        neg = coef < 0
        mag = -coef if neg else coef
        coef_txt = None if mag == 1 else _frac_text(mag)
    else:
        # tower element: single-monomial elements print inline as factors,
        # sums are parenthesized
        if len(coef.terms) == 1:
            (texps, f) = next(iter(coef.terms.items()))
            neg = f < 0
            mag = -f if neg else f
            coef_txt = None if mag == 1 else _frac_text(mag)
            for cname, k in zip(TOWER.names, texps):
                if k == 1:
                    factors.append(cname)
                elif k:
                    factors.append("%s^%d" % (cname, k))
        else:
            neg = False
            coef_txt = "(" + _render_tower_sum(coef) + ")"
    for name, k in zip(names, exps):
        if k == 1:
            factors.append(name)
        elif k:
            factors.append("%s^%d" % (name, k))
    if coef_txt is None and not factors:
        coef_txt = "1"
    pieces = ([coef_txt] if coef_txt else []) + factors
    return neg, "*".join(pieces)


def _frac_text(f):
    if f.denominator == 1:
        return str(f.numerator)
    return "%d/%d" % (f.numerator, f.denominator)


def _render_tower_sum(elem):
    parts = []
    for exps, f in sorted(elem.terms.items()):
        factors = []
        neg = f < 0
        mag = -f if neg else f
        head = None if mag == 1 else _frac_text(mag)
        for cname, k in zip(TOWER.names, exps):
            if k == 1:
                factors.append(cname)
            elif k:
                factors.append("%s^%d" % (cname, k))
        if head is None and not factors:
            head = "1"
        txt = "*".join(([head] if head else []) + factors)
        if not parts:
            parts.append(("-" if neg else "") + txt)
        else:
            parts.append(("- " if neg else "+ ") + txt)
    return " ".join(parts)


def render_poly(p):
    """Canonical text of a Poly: graded-lex descending terms."""
    if p.is_zero():
        return "0"
    parts = []
    for exps, coef in p.sorted_terms():
        neg, txt = _render_coef_mono(coef, p.vars, exps)
        if not parts:
            parts.append(("-" if neg else "") + txt)
        else:
            parts.append(("- " if neg else "+ ") + txt)
    return " ".join(parts)


def render(f):
    """Canonical text of a RationalExpr; fixed point of parse/lower/render."""
    if isinstance(f, Poly):
        return render_poly(f)
    num = render_poly(f.num)
    if f.den == Poly.const(1):
        return num
    return "(%s)/(%s)" % (num, render_poly(f.den))
