"""The L-infinity[1] algebra controlling deformations of a span diagram.

Voronov data: ``g`` is the graded Lie algebra of all typed cochains under the
Gerstenhaber bracket, ``a`` is spanned by cochains ``A_U^n -> A_W`` and
``A_V^n -> A_W``, ``P`` projects onto ``a`` and ``M`` is the sum of the three
multiplications.  The GS structure uses the twisted projection
``P_Phi = P o exp[-, Phi]`` with ``Phi = phi + psi``.

Elements of ``gtilde[1] + a`` are ``LInfElement(g, a)``.  Degrees are the
shifted ones: ``|x[1]| = arity(x) - 2`` and ``|a| = arity(a) - 1``.
"""

from __future__ import annotations

import itertools
import math
import random
from fractions import Fraction
from typing import Iterable, Sequence

from gsdeform.cochain import (
    Cochain,
    Compose,
    GElement,
    check_zero,
    hochschild_d,
    insert,
    morphism_cochain,
)
from gsdeform.gs import SpanDiagram
from gsdeform.ratlaurent import EpsFamily


class DegreeError(ValueError):
    pass


class SignConvention:
    """Sign of the binary bracket on the diagonal part.

    ``CONSISTENT`` uses ``<x[1], y[1]> = (-1)^|x| [x, y][1]``, the sign for
    which the higher Jacobi identities hold and Maurer-Cartan elements are
    deformations.  ``LITERAL`` uses ``(-1)^(|x|+1)``; it is kept so the failure
    can be demonstrated.
    """

    CONSISTENT = "consistent"
    LITERAL = "literal"


class VoronovData:
    def __init__(self, diagram: SpanDiagram, twisted: bool = True,
                 sign: str = SignConvention.CONSISTENT):
        self.d = diagram
        self.twisted = twisted
        self.sign = sign
        self.M = diagram.M
        self.Phi = diagram.Phi
        self._w = diagram.w
        self._uv = (diagram.u, diagram.v)

    def P(self, y: GElement) -> GElement:
        return y.filter(self.d.is_arrow)

    def _reachable(self, sig: tuple) -> bool:
        srcs, tgt = sig
        letters = {s for s in srcs if s != self._w}
        if tgt != self._w:
            if tgt not in self._uv:
                return False
            letters.add(tgt)
        return len(letters) <= 1 and all(s in self._uv or s == self._w for s in srcs)

    def P_Phi(self, y: GElement) -> GElement:
        """``sum_k P([..[y, Phi]..Phi]) / k!``; the sum is finite."""
        if not self.twisted:
            return self.P(y)
        out = self.P(y)
        term = y.filter(self._reachable)
        k = 0
        while term:
            k += 1
            term = term.bracket(self.Phi).filter(self._reachable)
            hit = self.P(term)
            if hit:
                out = out + hit.scale(Fraction(1, math.factorial(k)))
        return out

    @property
    def projection(self):
        return self.P_Phi


def derived_bracket(vd: VoronovData, args: Sequence[GElement]) -> GElement:
    """``<a_1..a_n> = proj[..[M, a_1]..a_n]``; for ``n = 0`` this is ``proj(M)``."""
    t = vd.M
    for a in args:
        t = t.bracket(a)
    return vd.projection(t)


# elements

class LInfElement:
    payload_kind = "linf"

    def __init__(self, g: GElement | None = None, a: GElement | None = None):
        self.g = g if g is not None else GElement()
        self.a = a if a is not None else GElement()

    def __add__(self, other: "LInfElement") -> "LInfElement":
        return LInfElement(self.g + other.g, self.a + other.a)

    def __neg__(self) -> "LInfElement":
        return self.scale(-1)

    def __sub__(self, other: "LInfElement") -> "LInfElement":
        return self + other.scale(-1)

    def scale(self, c) -> "LInfElement":
        return LInfElement(self.g.scale(c), self.a.scale(c))

    def __mul__(self, c):
        return self.scale(c)

    __rmul__ = __mul__

    def __bool__(self):
        return bool(self.g) or bool(self.a)

    def pieces(self) -> list[tuple[str, int, GElement]]:
        """Homogeneous pieces ``(kind, shifted degree, element)``."""
        out = []
        for kind, elem, shift in (("g", self.g, 2), ("a", self.a, 1)):
            by_deg: dict = {}
            for sig, c in elem.components.items():
                by_deg.setdefault(len(sig[0]) - shift, {})[sig] = c
            for deg in sorted(by_deg):
                out.append((kind, deg, GElement(by_deg[deg])))
        return out

    def degrees(self) -> set[int]:
        return {deg for _, deg, _ in self.pieces()}

    def degree(self) -> int:
        ds = self.degrees()
        if len(ds) != 1:
            raise DegreeError(f"element is not homogeneous: degrees {sorted(ds)}")
        return ds.pop()

    def __repr__(self) -> str:
        return f"LInfElement(g={self.g!r}, a={self.a!r})"


def gx(*cochains: Cochain) -> LInfElement:
    return LInfElement(g=GElement.of(*cochains))


def ax(*cochains: Cochain) -> LInfElement:
    return LInfElement(a=GElement.of(*cochains))


def validate_gtilde(vd: VoronovData, x: LInfElement) -> None:
    for sig in x.g.components:
        if not vd.d.is_diagonal(sig):
            raise DegreeError(f"{sig} is not in gtilde")
    for sig in x.a.components:
        if not vd.d.is_arrow(sig):
            raise DegreeError(f"{sig} is not in a")


# brackets

def _homogeneous_bracket(vd: VoronovData, pieces: list) -> LInfElement:
    n = len(pieces)
    gpos = [k for k, p in enumerate(pieces) if p[0] == "g"]
    if not gpos:
        elems = [p[2] for p in pieces]
        return LInfElement(a=derived_bracket(vd, elems))
    if len(gpos) == 1:
        p = gpos[0]
        deg_g = pieces[p][1]
        before = sum(pieces[k][1] for k in range(p))
        sign = -1 if (deg_g * before) % 2 else 1
        x = pieces[p][2]
        rest = [pieces[k][2] for k in range(n) if k != p]
        if n == 1:
            g_out = vd.M.bracket(x).filter(vd.d.is_diagonal).scale(-1)
            return LInfElement(g_out, vd.P_Phi(x))
        t = x
        for a in rest:
            t = t.bracket(a)
        return LInfElement(a=vd.P_Phi(t).scale(sign))
    if len(gpos) == 2 and n == 2:
        x, y = pieces[0][2], pieces[1][2]
        hdeg = pieces[0][1] + 1
        s = -1 if hdeg % 2 else 1
        if vd.sign == SignConvention.LITERAL:
            s = -s
        return LInfElement(g=x.bracket(y).filter(vd.d.is_diagonal).scale(s))
    return LInfElement()


def linf_bracket(vd: VoronovData, elements: Sequence[LInfElement],
                 route: str = "derived") -> LInfElement:
    """The n-ary bracket, extended multilinearly to inhomogeneous arguments.

    ``route="derived"`` builds it from nested Gerstenhaber brackets and
    ``P_Phi``; ``route="explicit"`` uses closed formulas (Hochschild and
    simplicial differentials, slot distributions with ``Phi`` filling the
    remaining inputs).
    """
    if route == "derived":
        one = _homogeneous_bracket
    elif route == "explicit":
        one = _explicit_bracket
    else:
        raise ValueError(f"unknown route {route!r}")
    if not elements:
        if route == "explicit":
            return LInfElement(a=_explicit_curvature(vd))
        return LInfElement(a=vd.P_Phi(vd.M))
    out = LInfElement()
    for combo in itertools.product(*(e.pieces() for e in elements)):
        out = out + one(vd, list(combo))
    return out


# explicit formulas

def _explicit_curvature(vd: VoronovData) -> GElement:
    d = vd.d
    terms = []
    for f in (d.phi, d.psi):
        m = morphism_cochain(f)
        src_mult = d.mu if f is d.phi else d.nu
        terms.append((1, Compose(d.xi, [m, m])))
        terms.append((-1, Compose(m, [src_mult])))
    return GElement.from_terms(terms)


def _chart_morphisms(d: SpanDiagram) -> dict:
    return {d.u: morphism_cochain(d.phi), d.v: morphism_cochain(d.psi)}


def slot_distribution(d: SpanDiagram, x: Cochain, args: Sequence[Cochain]) -> list:
    """Terms of ``x(Phi, .., a_1, .., a_n, .., Phi)`` over all placements.

    ``x`` has only ``A_W`` inputs; the ``a_j`` go into distinct slots in every
    possible way, ``Phi`` fills the rest.  The sign of a placement is
    ``prod_j (-1)^(|a_j| p_j)``, ``p_j`` being the slot of ``a_j`` after the
    earlier insertions have widened the cochain.
    """
    charts = {a.sources[0] for a in args}
    if len(charts) != 1 or len(args) > x.arity:
        return []
    fill = _chart_morphisms(d)[charts.pop()]
    out = []
    for slots in itertools.permutations(range(x.arity), len(args)):
        sign = 1
        for j, s in enumerate(slots):
            p = s + sum(args[l].arity - 1 for l in range(j) if slots[l] < s)
            if (args[j].degree * p) % 2:
                sign = -sign
        inners = [fill] * x.arity
        for j, s in enumerate(slots):
            inners[s] = args[j]
        out.append((sign, Compose(x, inners)))
    return out


def _arrow_lists(elems: Sequence[GElement]):
    for combo in itertools.product(*(list(e) for e in elems)):
        yield list(combo)


def _explicit_bracket(vd: VoronovData, pieces: list) -> LInfElement:
    d = vd.d
    n = len(pieces)
    gpos = [k for k, p in enumerate(pieces) if p[0] == "g"]
    if not gpos:
        if n == 1:
            terms = []
            for a in pieces[0][2]:
                sa = -1 if a.degree % 2 else 1
                terms.append((sa, hochschild_d(a, d.bimodule(a.sources[0]))))
            return LInfElement(a=GElement.from_terms(terms))
        if n == 2:
            terms = []
            for args in _arrow_lists([p[2] for p in pieces]):
                terms.extend(slot_distribution(d, d.xi, args))
            return LInfElement(a=GElement.from_terms(terms))
        return LInfElement()
    if len(gpos) == 1:
        p = gpos[0]
        x = pieces[p][2]
        if n == 1:
            g_terms, a_terms = [], []
            charts = _chart_morphisms(d)
            for c in x:
                hdeg = c.degree
                g_terms.append((1 if hdeg % 2 else -1, hochschild_d(c, d.own_bimodule(c.target))))
                if c.target == d.w:
                    for f in charts.values():
                        a_terms.append((1, Compose(c, [f] * c.arity)))
                else:
                    a_terms.append((-1, Compose(charts[c.target], [c])))
            return LInfElement(GElement.from_terms(g_terms), GElement.from_terms(a_terms))
        deg_g = pieces[p][1]
        before = sum(pieces[k][1] for k in range(p))
        sign = -1 if (deg_g * before) % 2 else 1
        rest = [pieces[k][2] for k in range(n) if k != p]
        terms = []
        for c in x:
            for args in _arrow_lists(rest):
                if c.target == d.w:
                    terms.extend((sign * s, t) for s, t in slot_distribution(d, c, args))
                elif n == 2:
                    a = args[0]
                    if a.sources[0] != c.target:
                        continue
                    # - (-1)^(|x||a|) a o x
                    s0 = sign * (1 if (c.degree * a.degree) % 2 else -1)
                    for i in range(a.arity):
                        si = -1 if (c.degree * i) % 2 else 1
                        terms.append((s0 * si, insert(a, c, i)))
        return LInfElement(a=GElement.from_terms(terms))
    if len(gpos) == 2 and n == 2:
        return _homogeneous_bracket(vd, pieces)
    return LInfElement()


def koszul_sign(perm: Sequence[int], degrees: Sequence[int]) -> int:
    """Sign of moving ``x_0..x_{n-1}`` into the order ``perm``."""
    s = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j] and degrees[perm[i]] % 2 and degrees[perm[j]] % 2:
                s = -s
    return s


def unshuffles(n: int, i: int) -> Iterable[tuple[int, ...]]:
    for first in itertools.combinations(range(n), i):
        rest = tuple(k for k in range(n) if k not in first)
        yield first + rest


def jacobi_defect(vd: VoronovData, elements: Sequence[LInfElement]) -> LInfElement:
    """``sum_{i+j=n+1} sum_unshuffles eps <<x_s1..x_si>, x_s(i+1)..x_sn>``."""
    n = len(elements)
    degrees = [e.degree() for e in elements]
    out = LInfElement()
    for i in range(1, n + 1):
        for perm in unshuffles(n, i):
            sign = koszul_sign(perm, degrees)
            inner = linf_bracket(vd, [elements[k] for k in perm[:i]])
            if not inner:
                continue
            outer = linf_bracket(vd, [inner] + [elements[k] for k in perm[i:]])
            out = out + outer.scale(sign)
    return out


# evaluation on grids

def _components(e: LInfElement):
    for kind, elem in (("g", e.g), ("a", e.a)):
        for sig, c in elem.components.items():
            yield kind, sig, c


def vanishes(vd: VoronovData, e: LInfElement, bound: int = 2, mode: str = "auto",
             samples: int | None = None, rng: random.Random | None = None,
             laurent_bound: int | None = None):
    """Check every component of ``e`` on monomial grids of the given bound.

    Returns ``(True, None)`` or ``(False, witness)``; see ``check_zero`` for
    the evaluation modes.
    """
    for kind, sig, c in _components(e):
        ok, cx = check_zero(c, vd.d.grid(sig[0], bound, laurent_bound), mode, samples, rng)
        if not ok:
            return False, {"part": kind, "signature": sig,
                           "inputs": [str(x) for x in cx[0]], "value": str(cx[1])}
    return True, None


# Maurer-Cartan

def _series_payload(fam: EpsFamily | None, n: int):
    if fam is None:
        return None
    return fam[n]


def mc_element(vd: VoronovData, Mt: EpsFamily, Pt: EpsFamily, n: int) -> LInfElement:
    g = _series_payload(Mt, n)
    a = _series_payload(Pt, n)
    e = LInfElement(g, a)
    validate_gtilde(vd, e)
    if e and e.degree() != 0:
        raise DegreeError(f"Maurer-Cartan candidate at order {n} has degree {e.degree()}")
    return e


def _compositions(total: int, parts: int) -> Iterable[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def mc_exp(vd: VoronovData, Mt: EpsFamily, Pt: EpsFamily, n: int) -> LInfElement:
    """Order-``n`` coefficient of ``sum_k <X..X>/k!`` for ``X = sum eps^j X_j``."""
    X = {j: mc_element(vd, Mt, Pt, j) for j in range(1, n + 1)}
    out = LInfElement()
    for k in range(1, n + 1):
        for js in _compositions(n, k):
            args = [X[j] for j in js]
            if not all(args):
                continue
            out = out + linf_bracket(vd, args).scale(Fraction(1, math.factorial(k)))
    return out


def mc_collected(vd: VoronovData, Mt: EpsFamily, Pt: EpsFamily, n: int) -> LInfElement:
    """The same residual written out directly.

    Diagonal part: ``-sum_{i+j=n} [M_i, M_j] / 2`` with ``M_0 = M``.
    Arrow part: ``sum xi_i o (f_j, f_k) - sum f_i o mu_j`` over ``i+j+k = n``
    (resp. ``i+j = n``) with ``f_0`` the structure morphism.
    """
    d = vd.d
    Ms = {0: vd.M}
    Ps = {0: vd.Phi}
    for j in range(1, n + 1):
        mc_element(vd, Mt, Pt, j)
        if Mt is not None and Mt[j] is not None:
            Ms[j] = Mt[j]
        if Pt is not None and Pt[j] is not None:
            Ps[j] = Pt[j]
    g = GElement()
    for i in range(n + 1):
        j = n - i
        if i in Ms and j in Ms:
            g = g + Ms[i].bracket(Ms[j]).filter(d.is_diagonal).scale(Fraction(-1, 2))
    terms = []
    for alg in (d.u, d.v):
        own = (alg, alg)
        for i, Mi in Ms.items():
            xi_i = Mi.get((d.w, d.w), d.w)
            if xi_i is None:
                continue
            for j, Pj in Ps.items():
                fj = Pj.get((alg,), d.w)
                if fj is None:
                    continue
                k = n - i - j
                if k < 0 or k not in Ps:
                    continue
                fk = Ps[k].get((alg,), d.w)
                if fk is None:
                    continue
                terms.append((1, Compose(xi_i, [fj, fk])))
        for i, Pi in Ps.items():
            fi = Pi.get((alg,), d.w)
            j = n - i
            if fi is None or j not in Ms:
                continue
            mj = Ms[j].get(own, alg)
            if mj is None:
                continue
            terms.append((-1, Compose(fi, [mj])))
    return LInfElement(g, GElement.from_terms(terms))


def mc_residual(vd: VoronovData | SpanDiagram, Mt: EpsFamily | None, Pt: EpsFamily | None, n: int,
                route: str = "exp") -> tuple[GElement, GElement]:
    """``(gtilde residual, a residual)`` at order ``n``.

    ``vd`` may also be a bare ``SpanDiagram``.  The a-part is oriented as
    ``sum xi_i o (f_j, f_k) - sum f_i o mu_j``.
    """
    if isinstance(vd, SpanDiagram):
        vd = VoronovData(vd)
    for fam in (Mt, Pt):
        if fam is not None and n > fam.order:
            raise ValueError(f"order {n} exceeds the truncation {fam.order}")
    if route == "exp":
        e = mc_exp(vd, Mt, Pt, n)
    elif route == "collected":
        e = mc_collected(vd, Mt, Pt, n)
    else:
        raise ValueError(f"unknown route {route!r}")
    return e.g, e.a


def arrow_series(d: SpanDiagram, u_terms: dict | None = None, v_terms: dict | None = None,
                 order: int | None = None) -> EpsFamily:
    """Package ``{n: cochain}`` maps for the two arrows as an ε-series."""
    u_terms, v_terms = u_terms or {}, v_terms or {}
    keys = set(u_terms) | set(v_terms)
    out = {n: GElement.of(*[c for c in (u_terms.get(n), v_terms.get(n)) if c is not None])
           for n in keys}
    return EpsFamily(out, order if order is not None else max(keys, default=0))


def diagonal_series(d: SpanDiagram, u_terms: dict | None = None, v_terms: dict | None = None,
                    w_terms: dict | None = None, order: int | None = None) -> EpsFamily:
    u_terms, v_terms, w_terms = u_terms or {}, v_terms or {}, w_terms or {}
    keys = set(u_terms) | set(v_terms) | set(w_terms)
    out = {n: GElement.of(*[c for c in (u_terms.get(n), v_terms.get(n), w_terms.get(n))
                            if c is not None]) for n in keys}
    return EpsFamily(out, order if order is not None else max(keys, default=0))


def arrow_components(d: SpanDiagram) -> tuple[Cochain, Cochain]:
    return morphism_cochain(d.phi), morphism_cochain(d.psi)
