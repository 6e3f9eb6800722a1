"""The surfaces Z_k, total spaces of O(-k) over the projective line.

Charts: ``A_U = Q[z, u]``, ``A_V = Q[zeta, v]`` and ``A_W = Q[z, z^-1, u]``,
glued by ``zeta -> z^-1``, ``v -> z^k u``.  Bivector coefficients glue by
``f_V(z^-1, z^k u) = -z^(k-2) f_U(z, u)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from gsdeform.cochain import (
    Cochain,
    Compose,
    FunctionCochain,
    PolyDiff,
    check_zero,
    derivation,
    lincomb,
    morphism_cochain,
    slot,
)
from gsdeform.gs import SpanDiagram, verify_diagram
from gsdeform.quantize import (
    Bivector,
    StarProduct,
    kontsevich_star2,
    poisson_cochain,
    transported_star,
)
from gsdeform.ratlaurent import (
    ANY,
    ZERO,
    AlgebraSpec,
    EpsFamily,
    LaurentPoly,
    MorphismSpec,
    mono_exp,
    parse_poly,
)

Z, U_, ZETA, V_ = "z", "u", "zeta", "v"

# sign of the anticanonical transition -z^(k-2)
TRANSITION_SIGN = -1


def t_name(i: int) -> str:
    return f"t{i}"


@dataclass
class ZkGeometry:
    k: int
    span: SpanDiagram

    @property
    def phi0(self) -> MorphismSpec:
        return self.span.phi

    @property
    def psi0(self) -> MorphismSpec:
        return self.span.psi

    @property
    def parameters(self) -> tuple:
        return self.span.A_W.parameters

    def transition(self) -> LaurentPoly:
        """``-z^(k-2)``: ``f_V`` rewritten on the overlap equals this times ``f_U``."""
        return LaurentPoly.var(Z, self.k - 2).scale(TRANSITION_SIGN)

    def frame_factor(self) -> LaurentPoly:
        """``d_zeta ^ d_v = -z^(2-k) d_z ^ d_u``."""
        return LaurentPoly.var(Z, 2 - self.k).scale(TRANSITION_SIGN)

    def glue(self, f_v) -> LaurentPoly:
        """``f_V`` rewritten in ``(z, u)``."""
        return self.psi0.apply(LaurentPoly.coerce(f_v))

    def gluing_ok(self, f_u, f_v) -> bool:
        return self.glue(f_v) == self.transition() * LaurentPoly.coerce(f_u)


def build_zk(k: int) -> ZkGeometry:
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    params = tuple(t_name(i) for i in range(1, k))
    A_U = AlgebraSpec("U", (Z, U_), {}, params)
    A_V = AlgebraSpec("V", (ZETA, V_), {}, params)
    A_W = AlgebraSpec("W", (Z, U_), {Z: ANY}, params)
    phi0 = MorphismSpec("phi0", A_U, A_W, {Z: "z", U_: "u"})
    psi0 = MorphismSpec("psi0", A_V, A_W, {ZETA: "z^-1", V_: f"z^{k}*u"})
    return ZkGeometry(k, SpanDiagram(A_U, A_V, A_W, phi0, psi0, name=f"Z_{k}"))


def verify_zk(g: ZkGeometry, grid_bound: int = 3):
    return verify_diagram(g.span, grid_bound)


def poisson_generators(k: int) -> list[tuple[LaurentPoly, LaurentPoly]]:
    """Chart coefficients ``(f_U, f_V)`` spanning the global bivectors."""
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    table = {1: [("1", "-zeta"), ("z", "-1")], 2: [("1", "-1")]}
    pairs = table.get(k, [("u", "-zeta^2*v"), ("z*u", "-zeta*v"), ("z^2*u", "-v")])
    return [(parse_poly(a), parse_poly(b)) for a, b in pairs]


def generator_bivectors(k: int) -> list[tuple[Bivector, Bivector]]:
    return [(Bivector.planar(Z, U_, fu), Bivector.planar(ZETA, V_, fv))
            for fu, fv in poisson_generators(k)]


CANONICAL_ETA = (parse_poly("z*u"), parse_poly("-zeta*v"))


# classical deformations

@dataclass
class ClassicalDeformation:
    """``(zeta, v) = (z^-1, z^k u + eps sum_i t_i z^i)`` to order ``order``.

    ``coeffs`` maps the index ``i`` to the value of ``t_i`` (by default the
    parameter ``t_i`` itself).
    """

    geometry: ZkGeometry
    coeffs: Mapping[int, LaurentPoly]
    order: int = 2
    psi_series: EpsFamily = field(init=False)

    def __post_init__(self):
        k = self.geometry.k
        clean = {}
        for i, c in self.coeffs.items():
            if not 1 <= i <= k - 1:
                raise ValueError(f"index {i} outside 1..{k - 1}")
            clean[i] = LaurentPoly.coerce(c)
        self.coeffs = clean
        self.psi_series = EpsFamily({n: self.psi_cochain(n) for n in range(1, self.order + 1)},
                                    self.order)

    @classmethod
    def single(cls, g: ZkGeometry, i: int, t=None, order: int = 2) -> "ClassicalDeformation":
        t = LaurentPoly.var(t_name(i)) if t is None else LaurentPoly.coerce(t)
        return cls(g, {i: t}, order)

    @property
    def shift(self) -> LaurentPoly:
        """``sum_i t_i z^i``."""
        acc = ZERO
        for i, c in self.coeffs.items():
            acc = acc + c * LaurentPoly.var(Z, i)
        return acc

    def theta(self) -> PolyDiff:
        """The derivation ``sum_i t_i z^(i-k) d_u`` of ``A_W``."""
        return derivation("W", {U_: self.shift * LaurentPoly.var(Z, -self.geometry.k)})

    def psi_cochain(self, n: int) -> PolyDiff:
        """``psi_n = (theta^n / n!) o psi0``; ``theta``'s coefficient has no ``u``."""
        psi0 = self.geometry.psi0
        if n == 0:
            return morphism_cochain(psi0)
        c = (self.shift * LaurentPoly.var(Z, -self.geometry.k)) ** n
        return PolyDiff(("V",), "W", [(c.scale(Fraction(1, math.factorial(n))),
                                       (slot(psi0, u=n),))])

    def psi(self, n: int) -> Cochain:
        return self.psi_cochain(n) if n == 0 else self.psi_series[n]


def psi_n(cd: ClassicalDeformation, n: int, m: int, q: int) -> LaurentPoly:
    """``eps^n`` coefficient of ``z^-m (z^k u + eps T)^q`` by the binomial formula."""
    if n > cd.order:
        raise ValueError(f"order {n} exceeds the truncation {cd.order}")
    if n > q:
        return ZERO
    k = cd.geometry.k
    return (LaurentPoly.var(Z, -m) * LaurentPoly.monomial({Z: k * (q - n), U_: q - n})
            * cd.shift ** n).scale(math.comb(q, n))


def psi_displayed(k: int, coeffs: Mapping[int, object], order: int, m: int, q: int) -> LaurentPoly:
    """``psi_0, psi_1, psi_2`` on ``zeta^m v^q`` written term by term."""
    ts = {i: LaurentPoly.coerce(c) for i, c in coeffs.items()}
    if order == 0:
        return LaurentPoly.monomial({Z: q * k - m, U_: q})
    if order == 1:
        if q < 1:
            return ZERO
        acc = ZERO
        for i, t in ts.items():
            acc = acc + (t * LaurentPoly.monomial({Z: (q - 1) * k - m + i, U_: q - 1})).scale(q)
        return acc
    if order == 2:
        if q < 2:
            return ZERO
        acc = ZERO
        for i, ti in ts.items():
            for j, tj in ts.items():
                mono = LaurentPoly.monomial({Z: (q - 2) * k - m + i + j, U_: q - 2})
                acc = acc + (ti * tj * mono).scale(Fraction(q * (q - 1), 2))
        return acc
    raise ValueError("only orders 0, 1, 2 are written out")


def morphism_law_defect(cd: ClassicalDeformation, n: int) -> Cochain:
    """``psi_n(f g) - sum_{a+b=n} psi_a(f) psi_b(g)`` as a bilinear cochain."""
    d = cd.geometry.span
    terms = [(1, Compose(cd.psi(n), [d.nu]))]
    for a in range(n + 1):
        terms.append((-1, Compose(d.xi, [cd.psi(a), cd.psi(n - a)])))
    return lincomb(terms, (("V", "V"), "W"))


# quantization

@dataclass
class Quantization:
    """Star products ``(mu, nu, xi)`` on the three charts through order 2.

    ``U`` and ``W`` use the Kontsevich formula for ``eta_U`` (``phi0`` is the
    identity on coordinates).  On ``V`` the first-order term is the Poisson
    bracket of ``eta_V`` and the second-order term is transported from ``W``
    through ``psi0``.
    """

    geometry: ZkGeometry
    eta_u: Bivector
    eta_v: Bivector
    weights: tuple | None = None
    mu: StarProduct = field(init=False)
    nu: StarProduct = field(init=False)
    xi: StarProduct = field(init=False)

    def __post_init__(self):
        self.mu = kontsevich_star2(self.eta_u, "U", self.weights)
        self.xi = kontsevich_star2(self.eta_u, "W", self.weights)
        nu_t = transported_star(self.xi, self.geometry.psi0)
        self.nu = StarProduct("V", EpsFamily({0: nu_t.B(0), 1: poisson_cochain(self.eta_v, "V"),
                                              2: nu_t.B(2)}, 2))

    def series(self) -> EpsFamily:
        from gsdeform.linf import diagonal_series

        return diagonal_series(self.geometry.span, {n: self.mu.B(n) for n in (1, 2)},
                               {n: self.nu.B(n) for n in (1, 2)},
                               {n: self.xi.B(n) for n in (1, 2)}, order=2)

    def restriction_defect(self, n: int) -> tuple[Cochain, Cochain]:
        """``f0 o B_n - B_n^W o (f0 x f0)`` for ``f0 = phi0, psi0``."""
        out = []
        for f, s in ((self.geometry.phi0, self.mu), (self.geometry.psi0, self.nu)):
            fc = morphism_cochain(f)
            out.append(lincomb([(1, Compose(fc, [s.B(n)])),
                                (-1, Compose(self.xi.B(n), [fc, fc]))],
                               ((f.source.id,) * 2, "W")))
        return out[0], out[1]


def quantize_zk(g: ZkGeometry, eta=CANONICAL_ETA, weights=None) -> Quantization:
    f_u, f_v = (LaurentPoly.coerce(p) for p in eta)
    if not g.gluing_ok(f_u, f_v):
        raise ValueError(f"({f_u}, {f_v}) does not glue to a bivector on Z_{g.k}")
    return Quantization(g, Bivector.planar(Z, U_, f_u), Bivector.planar(ZETA, V_, f_v), weights)


# the second-order obstruction

def obstruction_second_order(g: ZkGeometry, i: int | ClassicalDeformation,
                             q: Quantization | None = None) -> Cochain:
    """``O(f, g) = xi1(psi0 f, psi1 g) + xi1(psi1 f, psi0 g) - psi1(nu1(f, g))``."""
    cd = i if isinstance(i, ClassicalDeformation) else ClassicalDeformation.single(g, i)
    q = q or quantize_zk(g)
    p0, p1 = cd.psi(0), cd.psi(1)
    xi1, nu1 = q.xi.B(1), q.nu.B(1)
    return lincomb([(1, Compose(xi1, [p0, p1])), (1, Compose(xi1, [p1, p0])),
                    (-1, Compose(p1, [nu1]))], (("V", "V"), "W"))


def obstruction_closed_form(k: int, i: int, a: int, b: int, c: int, d: int, t=None) -> LaurentPoly:
    """``(ad - bc) t_i z^((b+d-1)k - (a+c) + i) u^(b+d-1)`` on ``(zeta^a v^b, zeta^c v^d)``."""
    t = LaurentPoly.var(t_name(i)) if t is None else LaurentPoly.coerce(t)
    det = a * d - b * c
    if det == 0:
        return ZERO
    return (t * LaurentPoly.monomial({Z: (b + d - 1) * k - (a + c) + i, U_: b + d - 1})).scale(det)


def v_monomial(a: int, b: int) -> LaurentPoly:
    return LaurentPoly.monomial({ZETA: a, V_: b})


class HKRError(ValueError):
    """The cochain is not a biderivation."""


def hkr_bivector(g: ZkGeometry, O: Cochain, bound: int = 2) -> LaurentPoly:
    """Bivector coefficient of a bilinear biderivation ``A_V x A_V -> A_W``,
    in the ``d_z ^ d_u`` frame."""
    if O.signature != (("V", "V"), "W"):
        raise HKRError(f"expected a bilinear cochain V x V -> W, got {O.signature}")
    d = g.span
    p0, nu, xi = g.psi0.apply, d.nu.evaluate, d.xi.evaluate

    def first(f, h, k):
        return O(nu(f, h), k) - xi(p0(f), O(h, k)) - xi(p0(h), O(f, k))

    def second(f, h, k):
        return O(f, nu(h, k)) - xi(p0(h), O(f, k)) - xi(p0(k), O(f, h))

    grid = d.grid(("V",) * 3, bound)
    for name, fn in (("first", first), ("second", second)):
        ok, cx = check_zero(FunctionCochain(("V",) * 3, "W", fn), grid, mode="points")
        if not ok:
            raise HKRError(f"not a derivation in the {name} slot at "
                           f"{tuple(map(str, cx[0]))}: {cx[1]}")
    zeta, v = LaurentPoly.var(ZETA), LaurentPoly.var(V_)
    c_v = (O.evaluate(zeta, v) - O.evaluate(v, zeta)).scale(Fraction(1, 2))
    return c_v * g.frame_factor()


# Cech cohomology of bivectors

@dataclass
class CechClass:
    k: int
    coefficient: LaurentPoly
    trivial: bool
    decomposition: tuple | None = None
    basis_coords: dict | None = None

    def to_json(self) -> dict:
        out = {"trivial": self.trivial}
        if self.trivial:
            out["decomposition"] = {"U": str(self.decomposition[0]), "V": str(self.decomposition[1])}
        else:
            out["basis_coords"] = {str(LaurentPoly.var(Z, e)): str(c)
                                   for e, c in sorted(self.basis_coords.items(), reverse=True)}
        return out


def _coboundary_columns(k: int, n: int, lo: int, hi: int) -> list:
    """Images of ``p_U`` and ``p_V`` monomials of u-degree ``n`` in z-exponents ``[lo, hi]``."""
    cols = []
    for a in range(max(lo, 0), hi + 1):
        cols.append(("U", a, {a: 1}))
    # zeta^m v^n -> -z^(kn - m + 2 - k) u^n
    for m in range(0, k * n + 2 - k - lo + 1):
        e = k * n - m + 2 - k
        if lo <= e <= hi:
            cols.append(("V", m, {e: -1}))
    return cols


def _cech_solve(k: int, n: int, target: dict, lo: int, hi: int):
    """Solve ``target = sum cols * x + sum e_b * y`` over the exponent window.

    Returns ``(x dict, basis coords)`` where the basis is chosen among unit
    vectors ``z^e`` so that it complements the coboundaries.
    """
    import sympy

    cols = _coboundary_columns(k, n, lo, hi)
    rows = list(range(lo, hi + 1))
    B = sympy.Matrix(len(rows), len(cols), lambda r, c: cols[c][2].get(rows[r], 0))
    # complement: unit vectors that raise the rank
    basis = []
    cur = B
    rank = B.rank() if cols else 0
    for e in sorted(rows, reverse=True):
        unit = sympy.Matrix(len(rows), 1, lambda r, _c: 1 if rows[r] == e else 0)
        trial = cur.row_join(unit) if cur.cols else unit
        r = trial.rank()
        if r > rank:
            basis.append(e)
            cur, rank = trial, r
    full = cur
    rhs = sympy.Matrix(len(rows), 1, lambda r, _c: sympy.Rational(target.get(rows[r], 0)))
    sol, params = full.gauss_jordan_solve(rhs)
    sol = sol.subs({p: 0 for p in params})
    x = {cols[j][:2]: Fraction(int(sol[j].p), int(sol[j].q)) for j in range(len(cols)) if sol[j] != 0}
    coords = {}
    for j, e in enumerate(basis):
        val = sol[len(cols) + j]
        if val != 0:
            coords[e] = Fraction(int(val.p), int(val.q))
    return x, coords, basis


def _split_parameters(c: LaurentPoly) -> dict:
    """Group ``c`` by parameter monomial: ``{param mono: {(z exp, u exp): coeff}}``."""
    out: dict = {}
    for m, coeff in c.items():
        pm = tuple((v, e) for v, e in m if v not in (Z, U_))
        extra = [v for v, _ in m if v not in (Z, U_) and not v.startswith("t")]
        if extra:
            raise ValueError(f"unexpected variable in a Cech coefficient: {extra}")
        out.setdefault(pm, {})[(mono_exp(m, Z), mono_exp(m, U_))] = coeff
    return out


def cech_window(k: int, exps) -> tuple[int, int]:
    exps = list(exps)
    if not exps:
        return (0, 0)
    return (min(exps) - (k + 2), max(exps) + (k + 2))


def cech_h1_decide(k: int, c, widen: int = 0) -> CechClass:
    """Decide whether ``c d_z ^ d_u`` on the overlap is a Cech coboundary.

    Coboundaries are ``p_U(z, u) + p_V(z^-1, z^k u) * (-z^(2-k))``.  The solve
    runs separately in each u-degree over a finite window of z-exponents.
    """
    c = LaurentPoly.coerce(c)
    groups = _split_parameters(c)
    pu, pv = ZERO, ZERO
    coords: dict = {}
    for pm, table in groups.items():
        pmono = LaurentPoly.monomial(pm)
        by_u: dict = {}
        for (ez, eu), coeff in table.items():
            by_u.setdefault(eu, {})[ez] = coeff
        for n, target in sorted(by_u.items()):
            if n < 0:
                raise ValueError("negative u-degree")
            lo, hi = cech_window(k, target)
            lo, hi = lo - widen, hi + widen
            x, cs, _ = _cech_solve(k, n, target, lo, hi)
            for (chart, e), val in x.items():
                if chart == "U":
                    pu = pu + (pmono * LaurentPoly.monomial({Z: e, U_: n})).scale(val)
                else:
                    pv = pv + (pmono * LaurentPoly.monomial({ZETA: e, V_: n})).scale(val)
            for e, val in cs.items():
                if n != 0:
                    key = (e, n)
                else:
                    key = e
                coords[key] = coords.get(key, ZERO) + pmono.scale(val)
    if coords:
        return CechClass(k, c, False, None, coords)
    return CechClass(k, c, True, (pu, pv), None)


def cech_reconstruct(g: ZkGeometry, pu, pv) -> LaurentPoly:
    """``p_U + (-z^(2-k)) p_V(z^-1, z^k u)``."""
    return LaurentPoly.coerce(pu) + g.frame_factor() * g.psi0.apply(LaurentPoly.coerce(pv))


def h1_dimension(k: int, max_u_degree: int = 2, widen: int = 0) -> int:
    """Rank of the quotient of all window monomials by the coboundaries."""
    import sympy

    total = 0
    for n in range(max_u_degree + 1):
        lo, hi = cech_window(k, [0]) if n == 0 else cech_window(k, [k * n])
        lo, hi = lo - widen, hi + widen
        cols = _coboundary_columns(k, n, lo, hi)
        rows = list(range(lo, hi + 1))
        if not cols:
            total += len(rows)
            continue
        B = sympy.Matrix(len(rows), len(cols), lambda r, c: cols[c][2].get(rows[r], 0))
        total += len(rows) - B.rank()
    return total


# the verdict

def obstruction_table(g: ZkGeometry, O: Cochain, bound: int = 2) -> list[dict]:
    rows = []
    for a in range(bound + 1):
        for b in range(bound + 1):
            for c in range(bound + 1):
                for dd in range(bound + 1):
                    val = O.evaluate(v_monomial(a, b), v_monomial(c, dd))
                    if val:
                        rows.append({"f": str(v_monomial(a, b)), "g": str(v_monomial(c, dd)),
                                     "value": str(val)})
    return rows


def simultaneous_verdict(k: int, i: int, table_bound: int = 1) -> dict:
    if not 1 <= i <= k - 1:
        raise ValueError(f"need 1 <= i <= k - 1, got k={k}, i={i}")
    g = build_zk(k)
    O = obstruction_second_order(g, i)
    biv = hkr_bivector(g, O)
    cls = cech_h1_decide(k, biv)
    return {"k": k, "i": i,
            "residual_monomial_table": obstruction_table(g, O, table_bound),
            "bivector_frameU": str(biv),
            "cech": cls.to_json(),
            "verdict": "unobstructed" if cls.trivial else "obstructed"}


def expected_obstructed(k: int, i: int) -> bool:
    return k >= 4 and 1 < i < k - 1


__all__ = [
    "CANONICAL_ETA",
    "CechClass",
    "ClassicalDeformation",
    "HKRError",
    "Quantization",
    "ZkGeometry",
    "build_zk",
    "generator_bivectors",
    "t_name",
    "verify_zk",
    "cech_h1_decide",
    "cech_reconstruct",
    "expected_obstructed",
    "h1_dimension",
    "hkr_bivector",
    "morphism_law_defect",
    "obstruction_closed_form",
    "obstruction_second_order",
    "poisson_generators",
    "psi_displayed",
    "psi_n",
    "quantize_zk",
    "simultaneous_verdict",
    "v_monomial",
]
