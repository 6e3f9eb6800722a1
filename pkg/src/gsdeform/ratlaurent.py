"""Sparse Laurent polynomials with exact rational coefficients.

A monomial is a tuple of ``(variable, exponent)`` pairs sorted by variable
name, with no zero exponents.  The empty tuple is the unit monomial.
Coefficients are ``int`` or ``fractions.Fraction``; integral fractions are
always stored as ``int`` so that equality and hashing stay cheap.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

Monomial = tuple  # tuple[tuple[str, int], ...]
Scalar = (int, Fraction)

NONNEG = "nonneg"
ANY = "any"
# variables with this prefix are bookkeeping tags used by grid evaluation
TAG_PREFIX = "_"


class PolySyntaxError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class UnknownVariableError(ValueError):
    def __init__(self, name: str, offset: int | None = None):
        where = "" if offset is None else f" at byte {offset}"
        super().__init__(f"unknown variable {name!r}{where}")
        self.name = name
        self.offset = offset


class ConeError(ValueError):
    """A monomial falls outside the exponent cone of an algebra."""

    def __init__(self, algebra: str, monomial: Monomial, reason: str = ""):
        text = mono_str(monomial)
        msg = f"monomial {text} not in algebra {algebra}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)
        self.algebra = algebra
        self.monomial = monomial


class NotInImageError(ValueError):
    pass


class PayloadMismatch(TypeError):
    pass


def norm(c) -> int | Fraction:
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else c
    if isinstance(c, int):
        return c
    raise TypeError(f"not an exact rational: {c!r}")


def as_rational(c) -> Fraction:
    if isinstance(c, str):
        return Fraction(c)
    return Fraction(c)


def rational_str(c) -> str:
    c = norm(c)
    if isinstance(c, int):
        return str(c)
    return f"{c.numerator}/{c.denominator}"


# monomials

@lru_cache(maxsize=1 << 18)
def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for v, e in b:
        n = d.get(v, 0) + e
        if n:
            d[v] = n
        else:
            del d[v]
    return tuple(sorted(d.items()))


def mono_pow(a: Monomial, n: int) -> Monomial:
    if n == 0:
        return ()
    return tuple((v, e * n) for v, e in a)


def mono_from_dict(d: Mapping[str, int]) -> Monomial:
    return tuple(sorted((v, int(e)) for v, e in d.items() if e))


def mono_exp(a: Monomial, var: str) -> int:
    for v, e in a:
        if v == var:
            return e
    return 0


def mono_str(a: Monomial) -> str:
    if not a:
        return "1"
    return "*".join(v if e == 1 else f"{v}^{e}" for v, e in a)


# polynomials

class LaurentPoly:
    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        clean = {}
        if terms:
            for m, c in terms.items():
                c = norm(c)
                if c:
                    key = mono_from_dict(dict(m)) if not _is_canonical(m) else m
                    clean[key] = norm(clean.get(key, 0) + c)
                    if not clean[key]:
                        del clean[key]
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "LaurentPoly":
        p = object.__new__(cls)
        p._terms = terms
        p._hash = None
        return p

    @classmethod
    def const(cls, c) -> "LaurentPoly":
        c = norm(c)
        return cls._raw({(): c} if c else {})

    @classmethod
    def var(cls, name: str, exp: int = 1) -> "LaurentPoly":
        return cls._raw({((name, exp),) if exp else (): 1})

    @classmethod
    def monomial(cls, mono: Monomial | Mapping[str, int], coeff=1) -> "LaurentPoly":
        if isinstance(mono, Mapping):
            mono = mono_from_dict(mono)
        coeff = norm(coeff)
        return cls._raw({mono: coeff} if coeff else {})

    @classmethod
    def coerce(cls, x) -> "LaurentPoly":
        if isinstance(x, LaurentPoly):
            return x
        if isinstance(x, str):
            return parse_poly(x)
        return cls.const(x)

    # access

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def monomials(self) -> list:
        return sorted(self._terms)

    def coefficient(self, mono: Monomial | Mapping[str, int]) -> int | Fraction:
        if isinstance(mono, Mapping):
            mono = mono_from_dict(mono)
        return self._terms.get(mono, 0)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_monomial(self) -> bool:
        return len(self._terms) == 1

    def as_monomial(self) -> tuple[Monomial, int | Fraction]:
        if len(self._terms) != 1:
            raise ValueError(f"{self} is not a single term")
        (m, c), = self._terms.items()
        return m, c

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and () in self._terms)

    def constant_value(self) -> int | Fraction:
        return self._terms.get((), 0)

    def variables(self) -> set[str]:
        return {v for m in self._terms for v, _ in m}

    def degree_in(self, var: str) -> tuple[int, int]:
        """(min, max) exponent of ``var``; (0, 0) for the zero polynomial."""
        exps = [mono_exp(m, var) for m in self._terms]
        if not exps:
            return 0, 0
        return min(exps), max(exps)

    # arithmetic

    def __add__(self, other):
        if not isinstance(other, LaurentPoly):
            if isinstance(other, Scalar):
                other = LaurentPoly.const(other)
            else:
                return NotImplemented
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            n = out.get(m, 0) + c
            if n:
                out[m] = norm(n)
            else:
                del out[m]
        return LaurentPoly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, (LaurentPoly, int, Fraction)):
            return NotImplemented
        return self + (-LaurentPoly.coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "LaurentPoly":
        c = norm(c)
        if not c:
            return ZERO
        if c == 1:
            return self
        return LaurentPoly._raw({m: norm(v * c) for m, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, Scalar):
            return self.scale(other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        a, b = self._terms, other._terms
        if not a or not b:
            return ZERO
        if len(a) < len(b):
            a, b = b, a
        if len(b) == 1:
            (mb, cb), = b.items()
            if mb == ():
                return self.scale(cb) if a is self._terms else other.scale(cb)
            return LaurentPoly._raw({mono_mul(m, mb): norm(c * cb) for m, c in a.items()})
        out: dict = {}
        for m1, c1 in a.items():
            for m2, c2 in b.items():
                m = mono_mul(m1, m2)
                n = out.get(m, 0) + c1 * c2
                if n:
                    out[m] = n
                else:
                    del out[m]
        return LaurentPoly._raw({m: norm(c) for m, c in out.items()})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Scalar):
            return self.scale(Fraction(1) / other)
        if isinstance(other, LaurentPoly):
            return self * other.inverse()
        return NotImplemented

    def inverse(self) -> "LaurentPoly":
        if len(self._terms) != 1:
            raise ZeroDivisionError(f"{self} is not a unit")
        (m, c), = self._terms.items()
        return LaurentPoly._raw({mono_pow(m, -1): norm(Fraction(1) / c)})

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        if len(self._terms) == 1:
            (m, c), = self._terms.items()
            return LaurentPoly._raw({mono_pow(m, n): norm(c ** n)})
        result, base = ONE, self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, LaurentPoly):
            return self._terms == other._terms
        if isinstance(other, Scalar):
            return self._terms == ({(): norm(other)} if other else {})
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # calculus and substitution

    def diff(self, var: str, order: int = 1) -> "LaurentPoly":
        if order == 0:
            return self
        out = {}
        for m, c in self._terms.items():
            e = mono_exp(m, var)
            if e == 0:
                continue
            f = 1
            for j in range(order):
                f *= e - j
            if f == 0:
                continue
            nm = mono_mul(m, ((var, -order),))
            out[nm] = norm(c * f)
        return LaurentPoly._raw(out)

    def subs(self, images: Mapping[str, "LaurentPoly"],
             power: Callable[[str, int], "LaurentPoly"] | None = None) -> "LaurentPoly":
        """Substitute polynomials for variables; unlisted variables are kept."""
        if power is None:
            def power(v, e):
                return LaurentPoly.coerce(images[v]) ** e
        acc = ZERO
        for m, c in self._terms.items():
            t = LaurentPoly.const(c)
            keep = []
            for v, e in m:
                if v in images:
                    t = t * power(v, e)
                else:
                    keep.append((v, e))
            if keep:
                t = t * LaurentPoly._raw({tuple(keep): 1})
            acc = acc + t
        return acc

    def __call__(self, **values) -> "LaurentPoly":
        return self.subs({k: LaurentPoly.coerce(v) for k, v in values.items()})

    # printing

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for i, m in enumerate(sorted(self._terms)):
            c = self._terms[m]
            neg = c < 0
            a = -c if neg else c
            body = mono_str(m) if m else ""
            if a != 1 or not m:
                cs = rational_str(a)
                body = f"{cs}*{body}" if body else cs
            if i == 0:
                parts.append(f"-{body}" if neg else body)
            else:
                parts.append(f" - {body}" if neg else f" + {body}")
        return "".join(parts)

    def __repr__(self) -> str:
        return f"LaurentPoly({str(self)!r})"


def _is_canonical(m) -> bool:
    if not isinstance(m, tuple):
        return False
    prev = None
    for pair in m:
        if not isinstance(pair, tuple) or len(pair) != 2 or not pair[1]:
            return False
        if prev is not None and pair[0] <= prev:
            return False
        prev = pair[0]
    return True


ZERO = LaurentPoly._raw({})
ONE = LaurentPoly._raw({(): 1})


def poly_arith(op: str, a, b=None) -> LaurentPoly:
    a = LaurentPoly.coerce(a)
    if op == "neg":
        return -a
    b = LaurentPoly.coerce(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


# parsing

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^]))")


class _Parser:
    def __init__(self, text: str, universe: set[str] | None):
        self.text = text
        self.universe = universe
        self.toks = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                break
            mt = _TOKEN.match(text, pos)
            if not mt:
                raise PolySyntaxError(f"unexpected character {text[pos]!r}", self._byte(pos))
            kind = mt.lastgroup
            start = mt.start(kind)
            self.toks.append((kind, mt.group(kind), start))
            pos = mt.end()
        self.i = 0

    def _byte(self, pos: int) -> int:
        return len(self.text[:pos].encode("utf-8"))

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def offset(self) -> int:
        t = self.peek()
        return self._byte(t[2] if t else len(self.text))

    def expect(self, kind, value=None):
        t = self.peek()
        if t is None or t[0] != kind or (value is not None and t[1] != value):
            want = value or kind
            got = "end of input" if t is None else repr(t[1])
            raise PolySyntaxError(f"expected {want}, got {got}", self.offset())
        self.i += 1
        return t

    def uint(self) -> int:
        return int(self.expect("num")[1])

    def factor(self) -> LaurentPoly:
        _, name, pos = self.expect("id")
        if self.universe is not None and name not in self.universe:
            raise UnknownVariableError(name, self._byte(pos))
        exp = 1
        t = self.peek()
        if t and t[0] == "op" and t[1] == "^":
            self.i += 1
            sign = 1
            t = self.peek()
            if t and t[0] == "op" and t[1] == "-":
                self.i += 1
                sign = -1
            exp = sign * self.uint()
        return LaurentPoly.var(name, exp)

    def term(self) -> LaurentPoly:
        t = self.peek()
        if t and t[0] == "num":
            num = self.uint()
            den = 1
            t = self.peek()
            if t and t[0] == "op" and t[1] == "/":
                self.i += 1
                off = self.offset()
                den = self.uint()
                if den == 0:
                    raise PolySyntaxError("zero denominator", off)
            acc = LaurentPoly.const(Fraction(num, den))
        else:
            acc = self.factor()
        while True:
            t = self.peek()
            if t and t[0] == "op" and t[1] == "*":
                self.i += 1
                acc = acc * self.factor()
            else:
                return acc

    def poly(self) -> LaurentPoly:
        sign = 1
        t = self.peek()
        if t and t[0] == "op" and t[1] == "-":
            self.i += 1
            sign = -1
        acc = self.term().scale(sign)
        while True:
            t = self.peek()
            if t is None:
                return acc
            if t[0] == "op" and t[1] in "+-":
                self.i += 1
                nxt = self.term()
                acc = acc + nxt if t[1] == "+" else acc - nxt
            else:
                raise PolySyntaxError(f"unexpected token {t[1]!r}", self.offset())


def parse_poly(text: str, universe: Iterable[str] | None = None) -> LaurentPoly:
    """Parse ``text`` with the grammar used in configuration files.

    Raises ``PolySyntaxError`` (carrying a byte offset) on malformed input and
    ``UnknownVariableError`` for identifiers outside ``universe`` when given.
    """
    uni = set(universe) if universe is not None else None
    return _Parser(text, uni).poly()


# algebras and morphisms

@dataclass(frozen=True)
class AlgebraSpec:
    """A commutative algebra of Laurent polynomials.

    ``cone`` maps each variable to ``"nonneg"`` or ``"any"``.  Parameters are
    extra commuting variables with nonnegative exponents that every morphism
    fixes.
    """

    id: str
    variables: tuple
    cone: Mapping[str, str] = field(default_factory=dict)
    parameters: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "parameters", tuple(self.parameters))
        cone = {v: self.cone.get(v, NONNEG) for v in self.variables}
        for v, c in cone.items():
            if c not in (NONNEG, ANY):
                raise ValueError(f"bad cone {c!r} for {v}")
        object.__setattr__(self, "cone", cone)

    def universe(self) -> set[str]:
        return set(self.variables) | set(self.parameters)

    def is_laurent(self, var: str) -> bool:
        return self.cone.get(var) == ANY

    def check_monomial(self, m: Monomial) -> str | None:
        for v, e in m:
            if v.startswith(TAG_PREFIX):
                continue
            if v in self.cone:
                if e < 0 and self.cone[v] == NONNEG:
                    return f"negative exponent of {v}"
            elif v in self.parameters:
                if e < 0:
                    return f"negative exponent of parameter {v}"
            else:
                return f"unknown variable {v}"
        return None

    def membership(self, p: LaurentPoly) -> tuple[bool, Monomial | None]:
        for m in p.monomials():
            if self.check_monomial(m) is not None:
                return False, m
        return True, None

    def require(self, p: LaurentPoly) -> LaurentPoly:
        for m in p.monomials():
            why = self.check_monomial(m)
            if why is not None:
                raise ConeError(self.id, m, why)
        return p

    def parse(self, text: str) -> LaurentPoly:
        return self.require(parse_poly(text, self.universe()))


def membership(alg: AlgebraSpec, p: LaurentPoly) -> tuple[bool, Monomial | None]:
    return alg.membership(p)


class MorphismSpec:
    """An algebra map given by the images of the source variables.

    Parameters of the source algebra are fixed.  A negative power of a source
    variable is only defined when its image is a single term.
    """

    def __init__(self, id: str, source: AlgebraSpec, target: AlgebraSpec,
                 images: Mapping[str, object]):
        self.id = id
        self.source = source
        self.target = target
        self.images = {}
        for v in source.variables:
            if v not in images:
                raise ValueError(f"morphism {id}: no image for {v}")
            img = images[v]
            if isinstance(img, str):
                img = parse_poly(img, target.universe())
            img = LaurentPoly.coerce(img)
            target.require(img)
            if source.is_laurent(v) and not img.is_monomial():
                raise ValueError(f"morphism {id}: image of Laurent variable {v} is not a unit")
            self.images[v] = img
        extra = set(images) - set(source.variables)
        if extra:
            raise ValueError(f"morphism {id}: images for unknown variables {sorted(extra)}")
        self._powers: dict = {}
        self._cache: dict = {}
        self._inverse = None

    def __repr__(self) -> str:
        body = ", ".join(f"{v} -> {self.images[v]}" for v in self.source.variables)
        return f"MorphismSpec({self.id}: {body})"

    def _power(self, v: str, e: int) -> LaurentPoly:
        key = (v, e)
        p = self._powers.get(key)
        if p is None:
            p = self.images[v] ** e
            self._powers[key] = p
        return p

    def apply(self, p: LaurentPoly, check: bool = False) -> LaurentPoly:
        """Image of ``p``.  With ``check`` the input and output are tested
        against the cones of source and target."""
        if check:
            self.source.require(p)
        out = self._cache.get(p)
        if out is None:
            out = p.subs(self.images, self._power)
            if len(self._cache) > 50000:
                self._cache.clear()
            self._cache[p] = out
        if check:
            self.target.require(out)
        return out

    __call__ = apply

    def is_monomial(self) -> bool:
        return all(img.is_monomial() for img in self.images.values())

    def preimage(self, p: LaurentPoly) -> LaurentPoly:
        """Inverse image of ``p`` under a bijective monomial map."""
        inv = self._inverse_data()
        out = {}
        for m, c in p.items():
            params = [(v, e) for v, e in m if v not in inv["tvars"]]
            vec = [mono_exp(m, v) for v in inv["tvars"]]
            exps = []
            for row in inv["matrix"]:
                x = sum(Fraction(a) * b for a, b in zip(row, vec))
                if x.denominator != 1:
                    raise NotInImageError(f"{mono_str(m)} has no preimage under {self.id}")
                exps.append(int(x))
            src = dict(zip(self.source.variables, exps))
            scale = Fraction(1)
            for v, e in src.items():
                scale *= Fraction(inv["coeffs"][v]) ** e
            pm = mono_mul(mono_from_dict(src), tuple(sorted(params)))
            out[pm] = norm(c / scale)
        res = LaurentPoly._raw(out)
        self.source.require(res)
        return res

    def _inverse_data(self) -> dict:
        if self._inverse is not None:
            return self._inverse
        import sympy

        if not self.is_monomial():
            raise NotInImageError(f"{self.id} is not a monomial map")
        svars = list(self.source.variables)
        tvars = list(self.target.variables)
        if len(svars) != len(tvars):
            raise NotInImageError(f"{self.id} is not invertible")
        coeffs = {}
        cols = []
        for v in svars:
            m, c = self.images[v].as_monomial()
            if any(w not in tvars for w, _ in m):
                raise NotInImageError(f"{self.id}: image of {v} involves parameters")
            coeffs[v] = c
            cols.append([mono_exp(m, w) for w in tvars])
        mat = sympy.Matrix(cols).T
        if mat.det() == 0:
            raise NotInImageError(f"{self.id} is not invertible")
        inv = mat.inv()
        rows = [[Fraction(int(x.p), int(x.q)) for x in inv.row(i)] for i in range(inv.rows)]
        self._inverse = {"tvars": tvars, "matrix": rows, "coeffs": coeffs}
        return self._inverse


def identity_morphism(alg: AlgebraSpec, target: AlgebraSpec | None = None,
                      id: str | None = None) -> MorphismSpec:
    target = target or alg
    return MorphismSpec(id or f"id_{alg.id}", alg, target,
                        {v: LaurentPoly.var(v) for v in alg.variables})


def morphism_apply(m: MorphismSpec, p) -> LaurentPoly:
    return m.apply(LaurentPoly.coerce(p), check=True)


# truncated epsilon series

class EpsFamily:
    """A truncated power series in a formal parameter ε.

    Coefficients are arbitrary payloads supporting ``+``, negation and
    rational scaling.  Products need payloads with a ``*`` operation.
    Missing coefficients are zero.
    """

    def __init__(self, coefficients: Mapping[int, object] | Sequence, order: int | None = None):
        if not isinstance(coefficients, Mapping):
            coefficients = dict(enumerate(coefficients))
        self.order = order if order is not None else max(coefficients, default=0)
        self.coefficients = {n: c for n, c in coefficients.items()
                             if c is not None and n <= self.order}
        kinds = {_kind(c) for c in self.coefficients.values()}
        if len(kinds) > 1:
            raise PayloadMismatch(f"mixed payloads {sorted(kinds)}")
        self.kind = kinds.pop() if kinds else None

    def __getitem__(self, n: int):
        return self.coefficients.get(n)

    def __repr__(self) -> str:
        body = ", ".join(f"{n}: {c}" for n, c in sorted(self.coefficients.items()))
        return f"EpsFamily({{{body}}}, order={self.order})"

    def _check(self, other: "EpsFamily"):
        if self.kind and other.kind and self.kind != other.kind:
            raise PayloadMismatch(f"{self.kind} vs {other.kind}")

    def __add__(self, other: "EpsFamily") -> "EpsFamily":
        self._check(other)
        order = min(self.order, other.order)
        out = {}
        for n in range(order + 1):
            a, b = self[n], other[n]
            out[n] = a if b is None else b if a is None else a + b
        return EpsFamily(out, order)

    def __neg__(self) -> "EpsFamily":
        return EpsFamily({n: -c for n, c in self.coefficients.items()}, self.order)

    def __sub__(self, other: "EpsFamily") -> "EpsFamily":
        return self + (-other)

    def scale(self, c) -> "EpsFamily":
        return EpsFamily({n: v * c for n, v in self.coefficients.items()}, self.order)

    def truncate(self, order: int) -> "EpsFamily":
        return EpsFamily(self.coefficients, min(order, self.order))

    def __mul__(self, other: "EpsFamily") -> "EpsFamily":
        return eps_mul(self, other)


def _kind(c) -> str:
    if isinstance(c, (LaurentPoly, int, Fraction)):
        return "poly"
    return getattr(c, "payload_kind", type(c).__name__)


def eps_mul(f: EpsFamily, g: EpsFamily, mul: Callable | None = None) -> EpsFamily:
    f._check(g)
    mul = mul or (lambda a, b: a * b)
    order = min(f.order, g.order)
    out: dict = {}
    for i, a in f.coefficients.items():
        for j, b in g.coefficients.items():
            if i + j > order:
                continue
            t = mul(a, b)
            out[i + j] = t if i + j not in out else out[i + j] + t
    return EpsFamily(out, order)
