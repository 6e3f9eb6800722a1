"""Poisson bivectors and the Kontsevich star product through second order."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from gsdeform.cochain import (
    Cochain,
    Compose,
    MonomialGrid,
    PolyDiff,
    check_zero,
    insert,
    lincomb,
    morphism_cochain,
    multiplication,
    preimage_cochain,
    slot,
)
from gsdeform.ratlaurent import ZERO, AlgebraSpec, EpsFamily, LaurentPoly, MorphismSpec, parse_poly

# weights of the four second-order graph terms, in the order used by kontsevich_b2
KONTSEVICH_WEIGHTS = (Fraction(1, 2), Fraction(1, 3), Fraction(1, 3), Fraction(-1, 6))


@dataclass(frozen=True)
class Bivector:
    """``sum_{i<j} eta^{ij} d_i ^ d_j`` over the named coordinates."""

    variables: tuple
    coeffs: Mapping[tuple, LaurentPoly] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        clean = {}
        for (i, j), c in self.coeffs.items():
            c = LaurentPoly.coerce(c)
            if i == j:
                if c:
                    raise ValueError("diagonal bivector entries must vanish")
                continue
            if i > j:
                i, j, c = j, i, -c
            if not (0 <= i < j < len(self.variables)):
                raise ValueError(f"index pair {(i, j)} out of range")
            if c:
                clean[(i, j)] = clean.get((i, j), ZERO) + c
        object.__setattr__(self, "coeffs", clean)

    @property
    def dim(self) -> int:
        return len(self.variables)

    def entry(self, i: int, j: int) -> LaurentPoly:
        if i == j:
            return ZERO
        if i < j:
            return self.coeffs.get((i, j), ZERO)
        return -self.coeffs.get((j, i), ZERO)

    @classmethod
    def planar(cls, x: str, y: str, f) -> "Bivector":
        """``f d_x ^ d_y``."""
        return cls((x, y), {(0, 1): LaurentPoly.coerce(f)})

    @classmethod
    def from_json(cls, cfg: Mapping, variables: Sequence[str]) -> "Bivector":
        d = int(cfg["dim"])
        if d != len(variables):
            raise ValueError(f"bivector of dimension {d} on {len(variables)} coordinates")
        coeffs = {}
        for key, text in cfg.get("coeffs", {}).items():
            i, j = (int(s) - 1 for s in key.split(","))
            coeffs[(i, j)] = parse_poly(str(text), variables)
        return cls(tuple(variables), coeffs)

    def to_json(self) -> dict:
        return {"dim": self.dim,
                "coeffs": {f"{i + 1},{j + 1}": str(c) for (i, j), c in sorted(self.coeffs.items())}}


def poisson_bracket(eta: Bivector, f, g) -> LaurentPoly:
    f, g = LaurentPoly.coerce(f), LaurentPoly.coerce(g)
    acc = ZERO
    for (i, j), c in eta.coeffs.items():
        xi, xj = eta.variables[i], eta.variables[j]
        acc = acc + c * (f.diff(xi) * g.diff(xj) - f.diff(xj) * g.diff(xi))
    return acc


def schouten_self(eta: Bivector) -> dict:
    """Nonzero components ``[eta, eta]^{ijk}`` for ``i < j < k``."""
    x = eta.variables
    E = eta.entry
    out = {}
    for i, j, k in itertools.combinations(range(eta.dim), 3):
        acc = ZERO
        for l in range(eta.dim):
            acc = (acc + E(l, i) * E(j, k).diff(x[l]) + E(l, j) * E(k, i).diff(x[l])
                   + E(l, k) * E(i, j).diff(x[l]))
        acc = acc.scale(2)
        if acc:
            out[(i, j, k)] = acc
    return out


# bidifferential operators

def _derivs(x: Sequence[str], *idx: int) -> dict:
    out: dict = {}
    for i in idx:
        out[x[i]] = out.get(x[i], 0) + 1
    return out


def poisson_cochain(eta: Bivector, alg: str | AlgebraSpec) -> PolyDiff:
    a = alg if isinstance(alg, str) else alg.id
    x = eta.variables
    terms = []
    for i in range(eta.dim):
        for j in range(eta.dim):
            c = eta.entry(i, j)
            if c:
                terms.append((c, (slot(**_derivs(x, i)), slot(**_derivs(x, j)))))
    return PolyDiff((a, a), a, terms)


def kontsevich_b2(eta: Bivector, alg: str | AlgebraSpec,
                  weights: Sequence | None = None) -> PolyDiff:
    """The four second-order graph terms, index sums over all ordered tuples."""
    a = alg if isinstance(alg, str) else alg.id
    x = eta.variables
    E = eta.entry
    w0, w1, w2, w3 = (Fraction(w) for w in (KONTSEVICH_WEIGHTS if weights is None else weights))
    terms = []
    R = range(eta.dim)
    for i, j, k, l in itertools.product(R, R, R, R):
        # w0 eta^ij eta^kl d_i d_k f d_j d_l g
        c = E(i, j) * E(k, l)
        if c:
            terms.append((c.scale(w0), (slot(**_derivs(x, i, k)), slot(**_derivs(x, j, l)))))
        # w1 eta^ij d_i(eta^kl) d_j d_l f d_k g
        c = E(i, j) * E(k, l).diff(x[i])
        if c:
            terms.append((c.scale(w1), (slot(**_derivs(x, j, l)), slot(**_derivs(x, k)))))
        # w2 eta^kl d_k(eta^ij) d_i f d_j d_l g
        c = E(k, l) * E(i, j).diff(x[k])
        if c:
            terms.append((c.scale(w2), (slot(**_derivs(x, i)), slot(**_derivs(x, j, l)))))
        # w3 d_l(eta^ij) d_j(eta^kl) d_i f d_k g
        c = E(i, j).diff(x[l]) * E(k, l).diff(x[j])
        if c:
            terms.append((c.scale(w3), (slot(**_derivs(x, i)), slot(**_derivs(x, k)))))
    return PolyDiff((a, a), a, terms)


def planar_b2(pi, x: str, y: str, f, g) -> LaurentPoly:
    """Second-order term for ``pi d_x ^ d_y`` written out in two variables.

    Kept independent of ``kontsevich_b2`` (own weights, no index loops) so the
    two can be compared.
    """
    pi, f, g = (LaurentPoly.coerce(p) for p in (pi, f, g))
    px, py = pi.diff(x), pi.diff(y)
    fx, fy, gx, gy = f.diff(x), f.diff(y), g.diff(x), g.diff(y)
    fxx, fxy, fyy = f.diff(x, 2), fx.diff(y), f.diff(y, 2)
    gxx, gxy, gyy = g.diff(x, 2), gx.diff(y), g.diff(y, 2)
    t0 = pi * pi * (fxx * gyy - (fxy * gxy).scale(2) + fyy * gxx)
    t1 = pi * (gx * (px * fyy - py * fxy) - gy * (px * fxy - py * fxx))
    t2 = pi * (fx * (px * gyy - py * gxy) - fy * (px * gxy - py * gxx))
    t3 = (py * fx - px * fy) * (py * gx - px * gy)
    return (t0.scale(Fraction(1, 2)) + t1.scale(Fraction(1, 3)) + t2.scale(Fraction(1, 3))
            - t3.scale(Fraction(1, 6)))


@dataclass
class StarProduct:
    """``f * g = B_0(f, g) + eps B_1(f, g) + eps^2 B_2(f, g)`` on one algebra."""

    algebra: str
    terms: EpsFamily

    @property
    def order(self) -> int:
        return self.terms.order

    def B(self, n: int) -> Cochain | None:
        return self.terms[n]

    def multiply(self, f, g, order: int | None = None) -> list[LaurentPoly]:
        order = self.order if order is None else order
        f, g = LaurentPoly.coerce(f), LaurentPoly.coerce(g)
        out = []
        for n in range(order + 1):
            b = self.B(n)
            out.append(ZERO if b is None else b.evaluate((f, g)))
        return out


def kontsevich_star2(eta: Bivector, alg: str | AlgebraSpec,
                     weights: Sequence | None = None) -> StarProduct:
    a = alg if isinstance(alg, str) else alg.id
    terms = EpsFamily({0: multiplication(a), 1: poisson_cochain(eta, a),
                       2: kontsevich_b2(eta, a, weights)}, 2)
    return StarProduct(a, terms)


def transported_star(star: StarProduct, m: MorphismSpec, order: int | None = None) -> StarProduct:
    """``m^-1 o B_n o (m x m)`` on the source of a bijective monomial map ``m``.

    Evaluation raises ``NotInImageError`` if a value leaves the image of ``m``.
    """
    order = star.order if order is None else order
    mc = morphism_cochain(m)
    inv = preimage_cochain(m)
    terms = {0: multiplication(m.source)}
    for n in range(1, order + 1):
        b = star.B(n)
        if b is not None:
            terms[n] = Compose(inv, [Compose(b, [mc, mc])])
    return StarProduct(m.source.id, EpsFamily(terms, order))


def assoc_defect_cochain(s: StarProduct, n: int) -> Cochain:
    """``sum_{a+b=n} B_a(B_b(f,g),h) - B_a(f,B_b(g,h))``."""
    a_id = s.algebra
    terms = []
    for a in range(n + 1):
        Ba, Bb = s.B(a), s.B(n - a)
        if Ba is None or Bb is None:
            continue
        terms.append((1, insert(Ba, Bb, 0)))
        terms.append((-1, insert(Ba, Bb, 1)))
    return lincomb(terms, ((a_id,) * 3, a_id))


def star_assoc_defect(s: StarProduct, grid: MonomialGrid, order: int = 2) -> dict:
    """Associativity of ``s`` mod ``eps^(order+1)`` on all grid triples."""
    if order > s.order:
        raise ValueError(f"order {order} exceeds the stored order {s.order}")
    for n in range(order + 1):
        ok, cx = check_zero(assoc_defect_cochain(s, n), grid)
        if not ok:
            return {"ok": False, "order": n, "triple": [str(p) for p in cx[0]],
                    "value": str(cx[1])}
    return {"ok": True, "order": None, "triple": None, "value": None}


def hochschild_cocycle_grid(b: Cochain, grid: MonomialGrid) -> bool:
    """``d_H b = 0`` for the commutative product, on ``grid``."""
    from gsdeform.cochain import BimoduleStructure, hochschild_d

    a = b.target
    ok, _ = check_zero(hochschild_d(b, BimoduleStructure(a, a)), grid)
    return ok


__all__ = [
    "KONTSEVICH_WEIGHTS",
    "Bivector",
    "StarProduct",
    "assoc_defect_cochain",
    "kontsevich_b2",
    "kontsevich_star2",
    "planar_b2",
    "poisson_bracket",
    "poisson_cochain",
    "schouten_self",
    "star_assoc_defect",
    "transported_star",
]
