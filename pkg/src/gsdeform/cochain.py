"""Typed multilinear cochains and the Gerstenhaber bracket.

A cochain has a tuple of source algebra ids and a target algebra id and is
evaluated on ``LaurentPoly`` inputs.  Cochains form expression trees; the
leaves are polydifferential operators (``PolyDiff``) or opaque functions.

Sums of cochains with different signatures live in a ``GElement``, which is
what ``circle`` and ``g_bracket`` return.  A splice whose types do not match
contributes nothing to those sums, while ``circle_i`` raises on it.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from gsdeform.ratlaurent import (
    ZERO,
    AlgebraSpec,
    TAG_PREFIX,
    LaurentPoly,
    MorphismSpec,
    mono_from_dict,
    norm,
    parse_poly,
)

_MEMO_LIMIT = 20000


class SpliceError(TypeError):
    pass


class Cochain:
    payload_kind = "cochain"
    sources: tuple = ()
    target: str = ""

    def __init__(self):
        self._memo: dict = {}

    @property
    def arity(self) -> int:
        return len(self.sources)

    @property
    def degree(self) -> int:
        return len(self.sources) - 1

    @property
    def signature(self) -> tuple:
        return (self.sources, self.target)

    def evaluate(self, *inputs: LaurentPoly) -> LaurentPoly:
        if len(inputs) == 1 and isinstance(inputs[0], (tuple, list)):
            inputs = tuple(inputs[0])
        if len(inputs) != len(self.sources):
            raise ValueError(f"expected {len(self.sources)} inputs, got {len(inputs)}")
        memo = self._memo
        out = memo.get(inputs)
        if out is None:
            out = self._eval(inputs)
            if len(memo) > _MEMO_LIMIT:
                memo.clear()
            memo[inputs] = out
        return out

    __call__ = evaluate

    def _eval(self, inputs: tuple) -> LaurentPoly:
        raise NotImplementedError

    def clear_memo(self):
        self._memo.clear()
        for child in self.children():
            child.clear_memo()

    def children(self) -> Iterable["Cochain"]:
        return ()

    def __add__(self, other: "Cochain") -> "Cochain":
        return lincomb([(1, self), (1, other)])

    def __sub__(self, other: "Cochain") -> "Cochain":
        return lincomb([(1, self), (-1, other)])

    def __neg__(self) -> "Cochain":
        return lincomb([(-1, self)], self.signature)

    def __mul__(self, c) -> "Cochain":
        return lincomb([(c, self)], self.signature)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {','.join(self.sources)} -> {self.target}>"


# leaves

@dataclass(frozen=True)
class Slot:
    """One input slot of a polydifferential term.

    The input is first pulled back along ``pullback`` (``None`` is the
    identity) and then differentiated in target coordinates.
    """

    pullback: MorphismSpec | None = None
    derivs: tuple = ()

    def apply(self, x: LaurentPoly) -> LaurentPoly:
        if self.pullback is not None:
            x = self.pullback.apply(x)
        for v, n in self.derivs:
            x = x.diff(v, n)
            if not x:
                break
        return x


def slot(pullback: MorphismSpec | None = None, **derivs: int) -> Slot:
    return Slot(pullback, tuple(sorted((v, n) for v, n in derivs.items() if n)))


class PolyDiff(Cochain):
    """Sum over terms of ``coeff * prod_k slot_k(input_k)``."""

    def __init__(self, sources: Sequence[str], target: str,
                 terms: Iterable[tuple[object, Sequence[Slot]]]):
        super().__init__()
        self.sources = tuple(sources)
        self.target = target
        merged: dict = {}
        for coeff, slots in terms:
            slots = tuple(slots)
            if len(slots) != len(self.sources):
                raise ValueError("slot count does not match arity")
            for s, src in zip(slots, self.sources):
                if s.pullback is not None:
                    if s.pullback.source.id != src or s.pullback.target.id != target:
                        raise SpliceError(f"pullback {s.pullback.id} does not map {src} to {target}")
                elif src != target:
                    raise SpliceError(f"slot from {src} into {target} needs a pullback")
            c = LaurentPoly.coerce(coeff)
            merged[slots] = merged.get(slots, ZERO) + c
        self.terms = [(c, s) for s, c in merged.items() if c]

    def _eval(self, inputs):
        cache: dict = {}
        acc = ZERO
        for coeff, slots in self.terms:
            t = coeff
            for k, s in enumerate(slots):
                key = (k, s)
                v = cache.get(key)
                if v is None:
                    v = s.apply(inputs[k])
                    cache[key] = v
                if not v:
                    t = ZERO
                    break
                t = t * v
            acc = acc + t
        return acc

    def to_json(self) -> dict:
        out = []
        for c, slots in self.terms:
            out.append({
                "coeff": str(c),
                "slots": [{"pullback": s.pullback.id if s.pullback else "identity",
                           "derivs": {v: n for v, n in s.derivs}} for s in slots],
            })
        return {"sources": list(self.sources), "target": self.target, "terms": out}


class FunctionCochain(Cochain):
    def __init__(self, sources: Sequence[str], target: str,
                 fn: Callable[..., LaurentPoly], name: str = "f"):
        super().__init__()
        self.sources = tuple(sources)
        self.target = target
        self.fn = fn
        self.name = name

    def _eval(self, inputs):
        return LaurentPoly.coerce(self.fn(*inputs))

    def __repr__(self) -> str:
        return f"<{self.name}: {','.join(self.sources)} -> {self.target}>"


# composite nodes

class Insert(Cochain):
    """``outer`` with ``inner`` spliced into input slot ``i``."""

    def __init__(self, outer: Cochain, inner: Cochain, i: int):
        super().__init__()
        if not 0 <= i < outer.arity:
            raise SpliceError(f"slot {i} out of range for arity {outer.arity}")
        if inner.target != outer.sources[i]:
            raise SpliceError(f"cannot insert into slot {i}: {inner.target} != {outer.sources[i]}")
        self.outer, self.inner, self.i = outer, inner, i
        self.sources = outer.sources[:i] + inner.sources + outer.sources[i + 1:]
        self.target = outer.target

    def children(self):
        return (self.outer, self.inner)

    def _eval(self, inputs):
        i, n = self.i, self.inner.arity
        y = self.inner.evaluate(inputs[i:i + n])
        return self.outer.evaluate(inputs[:i] + (y,) + inputs[i + n:])


class Compose(Cochain):
    """``outer(g_1(..), ..., g_m(..))`` with the inputs split consecutively."""

    def __init__(self, outer: Cochain, inners: Sequence[Cochain]):
        super().__init__()
        if len(inners) != outer.arity:
            raise SpliceError("wrong number of inner cochains")
        for k, (g, s) in enumerate(zip(inners, outer.sources)):
            if g.target != s:
                raise SpliceError(f"slot {k}: {g.target} != {s}")
        self.outer = outer
        self.inners = tuple(inners)
        self.sources = tuple(s for g in inners for s in g.sources)
        self.target = outer.target

    def children(self):
        return (self.outer,) + self.inners

    def _eval(self, inputs):
        vals, pos = [], 0
        for g in self.inners:
            vals.append(g.evaluate(inputs[pos:pos + g.arity]))
            pos += g.arity
        return self.outer.evaluate(tuple(vals))


class LinComb(Cochain):
    def __init__(self, terms: Sequence[tuple[object, Cochain]], signature: tuple):
        super().__init__()
        self.sources, self.target = signature
        self.terms = tuple(terms)
        for _, f in self.terms:
            if f.signature != signature:
                raise SpliceError(f"cannot add {f.signature} to {signature}")

    def children(self):
        return tuple(f for _, f in self.terms)

    def _eval(self, inputs):
        acc = ZERO
        for c, f in self.terms:
            acc = acc + f.evaluate(inputs).scale(c)
        return acc


class ZeroCochain(Cochain):
    def __init__(self, sources: Sequence[str], target: str):
        super().__init__()
        self.sources = tuple(sources)
        self.target = target

    def _eval(self, inputs):
        return ZERO


def lincomb(terms: Iterable[tuple[object, Cochain]], signature: tuple | None = None) -> Cochain:
    flat: dict = {}
    order = []
    for c, f in terms:
        c = norm(Fraction(c)) if not isinstance(c, int) else c
        if not c:
            continue
        if signature is None:
            signature = f.signature
        if isinstance(f, ZeroCochain):
            continue
        inner = f.terms if isinstance(f, LinComb) else ((1, f),)
        for c2, g in inner:
            key = id(g)
            if key not in flat:
                order.append(key)
                flat[key] = [0, g]
            flat[key][0] = norm(Fraction(flat[key][0]) + Fraction(c) * c2)
    if signature is None:
        raise ValueError("empty combination without a signature")
    kept = [(flat[k][0], flat[k][1]) for k in order if flat[k][0]]
    if not kept:
        return ZeroCochain(*signature)
    if len(kept) == 1 and kept[0][0] == 1:
        return kept[0][1]
    return LinComb(kept, signature)


# factories

def multiplication(alg: str | AlgebraSpec, coeff=1) -> PolyDiff:
    a = alg if isinstance(alg, str) else alg.id
    return PolyDiff((a, a), a, [(coeff, (Slot(), Slot()))])


def identity(alg: str | AlgebraSpec) -> PolyDiff:
    a = alg if isinstance(alg, str) else alg.id
    return PolyDiff((a,), a, [(1, (Slot(),))])


def morphism_cochain(m: MorphismSpec) -> PolyDiff:
    return PolyDiff((m.source.id,), m.target.id, [(1, (Slot(m),))])


def derivation(alg: str | AlgebraSpec, coeffs: Mapping[str, object]) -> PolyDiff:
    a = alg if isinstance(alg, str) else alg.id
    return PolyDiff((a,), a, [(c, (slot(**{v: 1}),)) for v, c in coeffs.items()])


def preimage_cochain(m: MorphismSpec) -> FunctionCochain:
    """The inverse of a bijective monomial morphism, as a cochain target -> source."""
    return FunctionCochain((m.target.id,), m.source.id, m.preimage, f"{m.id}^-1")


def cochain_from_json(obj: Mapping, algebras: Mapping[str, AlgebraSpec],
                      morphisms: Mapping[str, MorphismSpec]) -> PolyDiff:
    target = obj["target"]
    sources = list(obj["sources"])
    uni = algebras[target].universe() if target in algebras else None
    terms = []
    for t in obj["terms"]:
        slots = []
        for s in t["slots"]:
            pb = s.get("pullback", "identity")
            m = None if pb in (None, "identity") else morphisms[pb]
            slots.append(slot(m, **{v: int(n) for v, n in s.get("derivs", {}).items()}))
        terms.append((parse_poly(str(t["coeff"]), uni), slots))
    return PolyDiff(sources, target, terms)


# splicing and the bracket

_INSERTS: dict = {}


def insert(f: Cochain, g: Cochain, i: int) -> Insert:
    """Hash-consed ``f o_i g``.

    Unary insertions are put in a canonical order (increasing slot, and
    composition inside a slot) so that equal splicings of unary cochains give
    the same node and cancel or merge inside ``lincomb``.
    """
    if g.arity == 1 and isinstance(f, Insert) and f.inner.arity == 1:
        j = f.i
        if i < j:
            return insert(insert(f.outer, g, i), f.inner, j)
        if i == j:
            return insert(f.outer, insert(f.inner, g, 0), j)
    key = (id(f), id(g), i)
    node = _INSERTS.get(key)
    if node is None:
        node = Insert(f, g, i)
        _INSERTS[key] = node
    return node


def circle_i(f: Cochain, g: Cochain, i: int) -> Cochain:
    return insert(f, g, i)


def _circle_terms(f: Cochain, g: Cochain) -> list[tuple[int, Cochain]]:
    n = g.degree
    out = []
    for i, s in enumerate(f.sources):
        if s == g.target:
            out.append((-1 if (n * i) % 2 else 1, insert(f, g, i)))
    return out


class GElement:
    """A finite sum of cochains, grouped by signature."""

    payload_kind = "gelement"

    def __init__(self, components: Mapping[tuple, Cochain] | None = None):
        self.components = {}
        for sig, c in (components or {}).items():
            if not isinstance(c, ZeroCochain):
                self.components[sig] = c

    @classmethod
    def of(cls, *cochains: Cochain) -> "GElement":
        return cls.from_terms((1, c) for c in cochains)

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[object, Cochain]]) -> "GElement":
        groups: dict = {}
        for c, f in terms:
            groups.setdefault(f.signature, []).append((c, f))
        return cls({sig: lincomb(ts, sig) for sig, ts in groups.items()})

    def terms(self) -> Iterator[tuple[int, Cochain]]:
        for c in self.components.values():
            yield 1, c

    def __iter__(self):
        return iter(self.components.values())

    def __len__(self):
        return len(self.components)

    def __bool__(self):
        return bool(self.components)

    def __getitem__(self, sig: tuple) -> Cochain:
        return self.components[sig]

    def get(self, sources: Sequence[str], target: str) -> Cochain | None:
        return self.components.get((tuple(sources), target))

    def only(self) -> Cochain:
        if len(self.components) != 1:
            raise ValueError(f"expected one component, have {len(self.components)}")
        return next(iter(self.components.values()))

    def degrees(self) -> set[int]:
        return {len(s) - 1 for s, _ in self.components}

    def filter(self, keep: Callable[[tuple], bool]) -> "GElement":
        return GElement({s: c for s, c in self.components.items() if keep(s)})

    def __add__(self, other: "GElement") -> "GElement":
        if not isinstance(other, GElement):
            return NotImplemented
        return GElement.from_terms(itertools.chain(self.terms(), other.terms()))

    def __neg__(self) -> "GElement":
        return self.scale(-1)

    def __sub__(self, other: "GElement") -> "GElement":
        return self + other.scale(-1)

    def scale(self, c) -> "GElement":
        if not c:
            return GElement()
        return GElement({s: lincomb([(c, f)], s) for s, f in self.components.items()})

    def __mul__(self, c) -> "GElement":
        return self.scale(c)

    __rmul__ = __mul__

    def circle(self, other: "GElement") -> "GElement":
        terms = []
        for f in self:
            for g in other:
                terms.extend(_circle_terms(f, g))
        return GElement.from_terms(terms)

    def bracket(self, other: "GElement") -> "GElement":
        terms = []
        for f in self:
            for g in other:
                terms.extend(_bracket_terms(f, g))
        return GElement.from_terms(terms)

    def evaluate(self, sig: tuple, inputs: Sequence[LaurentPoly]) -> LaurentPoly:
        c = self.components.get(sig)
        return ZERO if c is None else c.evaluate(tuple(inputs))

    def __repr__(self) -> str:
        body = ", ".join(f"{','.join(s)}->{t}" for s, t in self.components)
        return f"GElement({body})"


def _bracket_terms(f: Cochain, g: Cochain) -> list:
    out = list(_circle_terms(f, g))
    sign = -1 if (f.degree * g.degree) % 2 == 0 else 1
    out.extend((sign * c, h) for c, h in _circle_terms(g, f))
    return out


def _as_g(x) -> GElement:
    return x if isinstance(x, GElement) else GElement.of(x)


def circle(f, g) -> GElement:
    """``f o g = sum_i (-1)^(|g| i) f o_i g`` over the type-compatible slots."""
    return _as_g(f).circle(_as_g(g))


def g_bracket(f, g) -> GElement:
    """``[f, g] = f o g - (-1)^(|f||g|) g o f``."""
    return _as_g(f).bracket(_as_g(g))


def assoc_defect(mu: Cochain) -> GElement:
    """Half of ``[mu, mu]``; zero exactly when ``mu`` is associative."""
    return g_bracket(mu, mu).scale(Fraction(1, 2))


# Hochschild differential

@dataclass
class BimoduleStructure:
    """``module`` as a bimodule over ``algebra`` through ``action``.

    ``action`` is an algebra map ``algebra -> module`` (``None`` when they
    coincide).  Products default to the commutative polynomial product.
    """

    algebra: str
    module: str
    action: MorphismSpec | None = None
    mult: Cochain | None = None
    module_mult: Cochain | None = None

    def __post_init__(self):
        if self.action is None and self.algebra != self.module:
            raise ValueError("a bimodule over a different algebra needs an action")
        if self.mult is None:
            self.mult = multiplication(self.algebra)
        if self.module_mult is None:
            self.module_mult = multiplication(self.module)

    def act(self, s: LaurentPoly) -> LaurentPoly:
        return s if self.action is None else self.action.apply(s)


class HochschildD(Cochain):
    def __init__(self, x: Cochain, bm: BimoduleStructure):
        super().__init__()
        if any(s != bm.algebra for s in x.sources) or x.target != bm.module:
            raise SpliceError(f"cochain {x.signature} is not a cochain of {bm.algebra} in {bm.module}")
        self.x, self.bm = x, bm
        self.sources = (bm.algebra,) * (x.arity + 1)
        self.target = bm.module

    def children(self):
        return (self.x,)

    def _eval(self, s):
        x, bm = self.x, self.bm
        q = x.arity
        acc = bm.module_mult.evaluate((bm.act(s[0]), x.evaluate(s[1:])))
        for i in range(1, q + 1):
            merged = bm.mult.evaluate((s[i - 1], s[i]))
            term = x.evaluate(s[:i - 1] + (merged,) + s[i + 1:])
            acc = acc - term if i % 2 else acc + term
        last = bm.module_mult.evaluate((x.evaluate(s[:q]), bm.act(s[q])))
        return acc - last if (q + 1) % 2 else acc + last


def hochschild_d(x: Cochain, bm: BimoduleStructure) -> Cochain:
    return HochschildD(x, bm)


# grids

class MonomialGrid:
    """A finite set of input tuples: the product of per-slot monomial lists."""

    def __init__(self, slots: Sequence[Sequence[LaurentPoly]]):
        self.slots = [list(s) for s in slots]

    @classmethod
    def box(cls, algebras: Mapping[str, AlgebraSpec], sources: Sequence[str],
            bound: int = 4, laurent_bound: int | None = None) -> "MonomialGrid":
        lb = bound if laurent_bound is None else laurent_bound
        return cls([monomial_box(algebras[s], bound, lb) for s in sources])

    def __len__(self) -> int:
        n = 1
        for s in self.slots:
            n *= len(s)
        return n

    def __iter__(self) -> Iterator[tuple]:
        return itertools.product(*self.slots)

    def sample(self, count: int, rng: random.Random) -> list[tuple]:
        if count >= len(self):
            return list(self)
        return [tuple(rng.choice(s) for s in self.slots) for _ in range(count)]

    def random_combinations(self, count: int, rng: random.Random) -> list[tuple]:
        """Random rational combinations of all monomials of each slot.

        By multilinearity a cochain vanishing on one such tuple vanishes on
        the whole grid outside a measure-zero set of coefficient choices.
        """
        out = []
        for _ in range(count):
            tup = []
            for s in self.slots:
                acc = ZERO
                for m in s:
                    acc = acc + m.scale(Fraction(rng.randint(-9, 9), rng.randint(1, 5)))
                tup.append(acc)
            out.append(tuple(tup))
        return out


def monomial_box(alg: AlgebraSpec, bound: int = 4, laurent_bound: int | None = None) -> list:
    lb = bound if laurent_bound is None else laurent_bound
    ranges = [range(-lb, lb + 1) if alg.is_laurent(v) else range(0, bound + 1)
              for v in alg.variables]
    return [LaurentPoly.monomial(mono_from_dict(dict(zip(alg.variables, e))))
            for e in itertools.product(*ranges)]


def equal_on_grid(f: Cochain, g: Cochain, grid: MonomialGrid | Iterable[tuple]):
    """Compare two cochains on every grid tuple.

    Returns ``(True, None)`` or ``(False, (inputs, f_value, g_value))`` for the
    first counterexample.
    """
    if f.signature != g.signature:
        raise SpliceError(f"signatures differ: {f.signature} vs {g.signature}")
    for inputs in grid:
        a, b = f.evaluate(inputs), g.evaluate(inputs)
        if a != b:
            return False, (inputs, a, b)
    return True, None


def vanishes_on_grid(f: Cochain, grid: MonomialGrid | Iterable[tuple]):
    for inputs in grid:
        a = f.evaluate(inputs)
        if a:
            return False, (inputs, a)
    return True, None


def _tag(k: int, j: int) -> str:
    return f"{TAG_PREFIX}s{k}_{j}"


def tagged_inputs(grid: MonomialGrid) -> tuple:
    """One input per slot: the sum of its grid monomials, each times its own tag.

    Cochains are multilinear and never touch tag variables, so the value on
    these inputs is the sum over all grid tuples of (product of tags) times the
    value at that tuple.  It vanishes exactly when every grid value does.
    """
    out = []
    for k, s in enumerate(grid.slots):
        acc = ZERO
        for j, m in enumerate(s):
            acc = acc + m * LaurentPoly.var(_tag(k, j))
        out.append(acc)
    return tuple(out)


def _untag(grid: MonomialGrid, value: LaurentPoly) -> tuple:
    m = value.monomials()[0]
    idx = []
    for k in range(len(grid.slots)):
        prefix = f"{TAG_PREFIX}s{k}_"
        hit = [v for v, _ in m if v.startswith(prefix)]
        idx.append(int(hit[0][len(prefix):]))
    return tuple(grid.slots[k][j] for k, j in enumerate(idx))


def check_zero(f: Cochain, grid: MonomialGrid, mode: str = "auto",
               samples: int | None = None, rng: random.Random | None = None):
    """Whether ``f`` vanishes on ``grid``.

    ``mode`` is ``"points"`` (one evaluation per tuple), ``"tagged"`` (a single
    exact evaluation covering the whole grid, see ``tagged_inputs``),
    ``"sample"`` (``samples`` random tuples) or ``"auto"``.  Returns
    ``(True, None)`` or ``(False, (inputs, value))``.
    """
    if mode == "auto":
        mode = "sample" if samples is not None else ("points" if len(grid) <= 400 else "tagged")
    if mode == "points":
        return vanishes_on_grid(f, grid)
    if mode == "sample":
        return vanishes_on_grid(f, grid.sample(samples or 100, rng or random.Random(0)))
    if mode == "tagged":
        if not f.sources:
            v = f.evaluate(())
            return (True, None) if not v else (False, ((), v))
        v = f.evaluate(tagged_inputs(grid))
        if not v:
            return True, None
        inputs = _untag(grid, v)
        return False, (inputs, f.evaluate(inputs))
    raise ValueError(f"unknown mode {mode!r}")
