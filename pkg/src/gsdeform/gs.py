"""Span diagrams of algebras and their Gerstenhaber-Schack complex.

A span diagram is ``A_U --phi--> A_W <--psi-- A_V`` together with a
multiplication on each vertex.  A GS cochain has a diagonal part
``(x_U, x_V, x_W)`` of arity ``n + 1`` and an arrow part ``(a_U, a_V)`` of
arity ``n``, with ``a_U: A_U^n -> A_W`` and ``a_V: A_V^n -> A_W``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from gsdeform.cochain import (
    BimoduleStructure,
    Cochain,
    Compose,
    GElement,
    MonomialGrid,
    SpliceError,
    cochain_from_json,
    hochschild_d,
    lincomb,
    morphism_cochain,
    multiplication,
)
from gsdeform.ratlaurent import AlgebraSpec, ConeError, MorphismSpec

U, V, W = "U", "V", "W"


class TruncationError(ValueError):
    """A component outside the reduced truncated complex."""


@dataclass
class SpanDiagram:
    A_U: AlgebraSpec
    A_V: AlgebraSpec
    A_W: AlgebraSpec
    phi: MorphismSpec
    psi: MorphismSpec
    mu: Cochain | None = None
    nu: Cochain | None = None
    xi: Cochain | None = None
    name: str = "diagram"

    def __post_init__(self):
        if self.phi.source.id != self.A_U.id or self.phi.target.id != self.A_W.id:
            raise ValueError("phi must map A_U to A_W")
        if self.psi.source.id != self.A_V.id or self.psi.target.id != self.A_W.id:
            raise ValueError("psi must map A_V to A_W")
        if len({self.A_U.id, self.A_V.id, self.A_W.id}) != 3:
            raise ValueError("the three vertices need distinct algebra ids")
        self.mu = self.mu or multiplication(self.A_U)
        self.nu = self.nu or multiplication(self.A_V)
        self.xi = self.xi or multiplication(self.A_W)
        for c, a in ((self.mu, self.A_U), (self.nu, self.A_V), (self.xi, self.A_W)):
            if c.signature != ((a.id, a.id), a.id):
                raise SpliceError(f"multiplication of {a.id} has signature {c.signature}")

    @property
    def u(self) -> str:
        return self.A_U.id

    @property
    def v(self) -> str:
        return self.A_V.id

    @property
    def w(self) -> str:
        return self.A_W.id

    @property
    def algebras(self) -> dict[str, AlgebraSpec]:
        return {a.id: a for a in (self.A_U, self.A_V, self.A_W)}

    @property
    def morphisms(self) -> dict[str, MorphismSpec]:
        return {self.phi.id: self.phi, self.psi.id: self.psi}

    def with_products(self, mu=None, nu=None, xi=None) -> "SpanDiagram":
        return SpanDiagram(self.A_U, self.A_V, self.A_W, self.phi, self.psi,
                           mu or self.mu, nu or self.nu, xi or self.xi, self.name)

    @property
    def M(self) -> GElement:
        return GElement.of(self.mu, self.nu, self.xi)

    @property
    def Phi(self) -> GElement:
        return GElement.of(morphism_cochain(self.phi), morphism_cochain(self.psi))

    def diagonal(self, x_u=None, x_v=None, x_w=None) -> GElement:
        return GElement.of(*[c for c in (x_u, x_v, x_w) if c is not None])

    def arrows(self, a_u=None, a_v=None) -> GElement:
        return GElement.of(*[c for c in (a_u, a_v) if c is not None])

    def is_diagonal(self, sig: tuple) -> bool:
        srcs, tgt = sig
        return len(srcs) > 0 and all(s == tgt for s in srcs) and tgt in (self.u, self.v, self.w)

    def is_arrow(self, sig: tuple) -> bool:
        srcs, tgt = sig
        return (tgt == self.w and len(srcs) > 0
                and (all(s == self.u for s in srcs) or all(s == self.v for s in srcs)))

    def grid(self, sources: Sequence[str], bound: int = 4, laurent_bound: int | None = None):
        return MonomialGrid.box(self.algebras, sources, bound, laurent_bound)

    def bimodule(self, src: str) -> BimoduleStructure:
        mult = {self.u: self.mu, self.v: self.nu, self.w: self.xi}
        action = {self.u: self.phi, self.v: self.psi, self.w: None}[src]
        return BimoduleStructure(src, self.w, action, mult[src], self.xi)

    def own_bimodule(self, alg: str) -> BimoduleStructure:
        mult = {self.u: self.mu, self.v: self.nu, self.w: self.xi}[alg]
        return BimoduleStructure(alg, alg, None, mult, mult)


@dataclass
class GSCochain:
    """``x = (x_U, x_V, x_W)`` and ``a = (a_U, a_V)``; missing parts are zero."""

    x: tuple | None = None
    a: tuple | None = None
    degree: int | None = field(default=None)

    def __post_init__(self):
        arities = set()
        if self.x is not None:
            arities |= {c.arity - 1 for c in self.x if c is not None}
        if self.a is not None:
            arities |= {c.arity for c in self.a if c is not None}
        if len(arities) > 1:
            raise ValueError(f"inhomogeneous GS cochain, degrees {sorted(arities)}")
        if self.degree is None:
            self.degree = arities.pop() if arities else 0

    def parts(self, d: SpanDiagram) -> tuple[GElement, GElement]:
        x = d.diagonal(*(self.x or ()))
        a = d.arrows(*(self.a or ()))
        return x, a


def reduced_truncated_guard(d: SpanDiagram, c: GSCochain | GElement) -> None:
    """Reject components outside the reduced truncated complex."""
    if isinstance(c, GSCochain):
        x, a = c.parts(d)
        elems = [(x, "diagonal"), (a, "arrow")]
    else:
        elems = [(c, None)]
    for g, kind in elems:
        for (srcs, tgt), _ in g.components.items():
            sig = (srcs, tgt)
            if not srcs:
                raise TruncationError(f"arity-0 component {tgt} is excluded")
            if kind == "diagonal" and not d.is_diagonal(sig):
                raise TruncationError(f"{sig} is not a diagonal component")
            if kind == "arrow" and not d.is_arrow(sig):
                raise TruncationError(f"{sig} is not an arrow component")
            if kind is None and not (d.is_diagonal(sig) or d.is_arrow(sig)):
                raise TruncationError(f"{sig} is neither diagonal nor an arrow component")


def simplicial_d(d: SpanDiagram, x_u: Cochain, x_v: Cochain, x_w: Cochain) -> tuple[Cochain, Cochain]:
    """``(phi o x_U - x_W o phi^q, psi o x_V - x_W o psi^q)``."""
    out = []
    for f, xs in ((d.phi, x_u), (d.psi, x_v)):
        q = xs.arity
        m = morphism_cochain(f)
        left = Compose(m, [xs])
        right = Compose(x_w, [m] * q)
        out.append(lincomb([(1, left), (-1, right)]))
    return out[0], out[1]


def gs_d(d: SpanDiagram, c: GSCochain) -> GSCochain:
    """The GS differential assembled from Hochschild and simplicial pieces.

    On ``x + a`` with ``|x| = arity(x) - 1`` and ``|a| = arity(a) - 1``:
    diagonal part ``(-1)^(|x|+1) d_H x``; arrow part
    ``-(phi o x_U - x_W o phi^q) + (-1)^|a| d_H a`` and likewise for ``psi``.
    """
    reduced_truncated_guard(d, c)
    n = c.degree
    xs = c.x
    a_s = c.a
    new_x = None
    new_a = [None, None]
    if xs is not None:
        full = _fill_diagonal(d, xs, n + 1)
        sx = -1 if n % 2 == 0 else 1
        new_x = tuple(lincomb([(sx, hochschild_d(x, d.own_bimodule(x.target)))])
                      for x in full)
        du, dv = simplicial_d(d, *full)
        new_a = [lincomb([(-1, du)]), lincomb([(-1, dv)])]
    if a_s is not None:
        sa = -1 if (n - 1) % 2 else 1
        for k, (alg, a) in enumerate(zip((d.u, d.v), a_s)):
            if a is None:
                continue
            da = lincomb([(sa, hochschild_d(a, d.bimodule(alg)))])
            new_a[k] = da if new_a[k] is None else lincomb([(1, new_a[k]), (1, da)])
    a_out = None if new_a == [None, None] else tuple(new_a)
    return GSCochain(new_x, a_out, n + 1)


def _fill_diagonal(d: SpanDiagram, xs: tuple, arity: int) -> tuple:
    from gsdeform.cochain import ZeroCochain

    out = []
    for alg, x in zip((d.u, d.v, d.w), xs):
        out.append(x if x is not None else ZeroCochain((alg,) * arity, alg))
    return tuple(out)


# checks on the diagram itself

@dataclass
class DiagramReport:
    morphisms_ok: bool
    associative_ok: bool
    projection_ok: bool
    counterexample: str | None = None

    @property
    def agree(self) -> bool:
        return (self.morphisms_ok and self.associative_ok) == (self.projection_ok and self.associative_ok)

    @property
    def ok(self) -> bool:
        return self.morphisms_ok and self.associative_ok and self.projection_ok

    def to_json(self) -> dict:
        return {"morphisms_ok": self.morphisms_ok, "associative_ok": self.associative_ok,
                "projection_ok": self.projection_ok, "agree": self.agree,
                "counterexample": self.counterexample}


def verify_diagram(d: SpanDiagram, grid_bound: int = 3) -> DiagramReport:
    """Check the diagram twice: directly, and as the vanishing of ``P_Phi(M)``."""
    from gsdeform.cochain import assoc_defect, vanishes_on_grid
    from gsdeform.linf import VoronovData

    witness = None
    morph_ok = True
    for f, mult_src in ((d.phi, d.mu), (d.psi, d.nu)):
        for x, y in d.grid((f.source.id, f.source.id), grid_bound):
            try:
                lhs = f.apply(mult_src.evaluate((x, y)), check=True)
            except ConeError as e:
                morph_ok, witness = False, str(e)
                break
            rhs = d.xi.evaluate((f.apply(x), f.apply(y)))
            if lhs != rhs:
                morph_ok = False
                witness = f"{f.id}({x}*{y}) = {lhs} but {f.id}({x})*{f.id}({y}) = {rhs}"
                break
        if not morph_ok:
            break

    assoc_ok = True
    for mult in (d.mu, d.nu, d.xi):
        ok, cx = vanishes_on_grid(assoc_defect(mult).only(), d.grid(mult.sources[:1] * 3, min(grid_bound, 2)))
        if not ok:
            assoc_ok = False
            witness = witness or f"multiplication on {mult.target} not associative at {tuple(map(str, cx[0]))}"

    vd = VoronovData(d)
    proj_ok = True
    for sig, comp in vd.P_Phi(d.M).components.items():
        ok, cx = vanishes_on_grid(comp, d.grid(sig[0], grid_bound))
        if not ok:
            proj_ok = False
            witness = witness or f"P_Phi(M) component {sig} nonzero at {tuple(map(str, cx[0]))}: {cx[1]}"
            break
    return DiagramReport(morph_ok, assoc_ok, proj_ok, witness)


# configuration files

def load_diagram(source: str | Path | Mapping) -> SpanDiagram:
    """Build a diagram from a JSON config (path, JSON text or parsed dict).

    Layout: ``{"algebras": {id: {"variables": [...], "cone": {...},
    "parameters": [...], "role": "U"|"V"|"W"}}, "morphisms": {id: {"source",
    "target", "images": {var: poly}}}, "multiplications": {alg id: cochain}}``.
    """
    if isinstance(source, Mapping):
        cfg = source
    else:
        text = str(source)
        p = Path(text)
        if not text.lstrip().startswith("{") and p.exists():
            text = p.read_text()
        cfg = json.loads(text)
    algebras = {}
    roles = {}
    for aid, spec in cfg["algebras"].items():
        algebras[aid] = AlgebraSpec(aid, tuple(spec["variables"]), spec.get("cone", {}),
                                    tuple(spec.get("parameters", ())))
        if "role" in spec:
            roles[spec["role"]] = aid
    morphisms = {}
    for mid, spec in cfg["morphisms"].items():
        morphisms[mid] = MorphismSpec(mid, algebras[spec["source"]], algebras[spec["target"]],
                                      spec["images"])
    if len(morphisms) != 2:
        raise ValueError("a span diagram has exactly two morphisms")
    targets = {m.target.id for m in morphisms.values()}
    if len(targets) != 1:
        raise ValueError("both morphisms must share a target")
    w = targets.pop()
    ms = sorted(morphisms.values(), key=lambda m: (m.source.id != roles.get("U"), m.id))
    phi, psi = ms
    mults = {}
    for aid, lit in cfg.get("multiplications", {}).items():
        if lit in (None, "commutative"):
            continue
        mults[aid] = cochain_from_json(lit, algebras, morphisms)
    return SpanDiagram(algebras[phi.source.id], algebras[psi.source.id], algebras[w], phi, psi,
                       mults.get(phi.source.id), mults.get(psi.source.id), mults.get(w),
                       cfg.get("name", "diagram"))

