import random
from fractions import Fraction
from math import comb

import pytest

from gsdeform.cochain import Compose, GElement, check_zero, hochschild_d, lincomb
from gsdeform.linf import (
    DegreeError,
    LInfElement,
    SignConvention,
    VoronovData,
    arrow_series,
    ax,
    derived_bracket,
    diagonal_series,
    gx,
    jacobi_defect,
    koszul_sign,
    linf_bracket,
    mc_element,
    mc_residual,
    unshuffles,
    vanishes,
)
from gsdeform.ratlaurent import EpsFamily
from gsdeform.suite import random_element
from gsdeform.zk import ClassicalDeformation, build_zk, quantize_zk


@pytest.fixture(scope="module")
def z3():
    return build_zk(3)


@pytest.fixture(scope="module")
def vd3(z3):
    return VoronovData(z3.span)


def zero(vd, e, bound=2):
    return vanishes(vd, e, bound)[0]


def same(vd, e, f, bound=2):
    return zero(vd, e - f, bound)


def test_koszul_signs():
    assert koszul_sign((1, 0), (1, 1)) == -1
    assert koszul_sign((1, 0), (1, 0)) == 1
    assert koszul_sign((0, 1, 2), (1, 1, 1)) == 1
    assert koszul_sign((2, 0, 1), (1, 1, 0)) == 1
    assert koszul_sign((2, 1, 0), (1, 1, 1)) == -1
    p, q = (1, 2, 0), (2, 0, 1)
    degs = (1, 0, 1)
    pq = tuple(p[i] for i in q)
    moved = tuple(degs[i] for i in p)
    assert koszul_sign(pq, degs) == koszul_sign(p, degs) * koszul_sign(q, moved)


def test_unshuffles():
    for n in range(1, 5):
        for i in range(n + 1):
            us = list(unshuffles(n, i))
            assert len(us) == comb(n, i) == len(set(us))
            for s in us:
                assert list(s[:i]) == sorted(s[:i]) and list(s[i:]) == sorted(s[i:])


def test_projection_is_idempotent_and_abelian(z3, vd3):
    rng = random.Random(1)
    d = z3.span
    x = random_element(rng, d, "g", 2).g
    a = random_element(rng, d, "a", 1).a
    b = random_element(rng, d, "a", 2).a
    mixed = x + a
    assert set(vd3.P(vd3.P(mixed)).components) == set(vd3.P(mixed).components) == set(a.components)
    assert not a.bracket(b)
    y = random_element(rng, d, "g", 1).g
    assert all(d.is_diagonal(s) for s in x.bracket(y).components)


def test_curvature_vanishes_on_flat_data(vd3):
    assert zero(vd3, LInfElement(a=derived_bracket(vd3, [])), 3)
    assert zero(vd3, linf_bracket(vd3, [], route="explicit"), 3)
    untwisted = VoronovData(vd3.d, twisted=False)
    assert not untwisted.P(untwisted.M)


def test_binary_arrow_bracket(z3, vd3):
    rng = random.Random(2)
    d = z3.span
    for _ in range(2):
        a1 = random_element(rng, d, "a", 1)
        a2 = random_element(rng, d, "a", 1)
        want = []
        for f, g in zip(a1.a, a2.a):
            want += [(1, Compose(d.xi, [f, g])), (1, Compose(d.xi, [g, f]))]
        want = LInfElement(a=GElement.from_terms(want))
        for route in ("derived", "explicit"):
            got = linf_bracket(vd3, [a1, a2], route=route)
            assert same(vd3, got, want)
        assert same(vd3, linf_bracket(vd3, [a1, a2]), linf_bracket(vd3, [a2, a1]))


def test_unary_arrow_bracket_is_hochschild(z3, vd3):
    rng = random.Random(3)
    d = z3.span
    for arity in (1, 2):
        a = random_element(rng, d, "a", arity)
        sign = -1 if (arity - 1) % 2 else 1
        want = LInfElement(a=GElement.from_terms(
            (sign, hochschild_d(c, d.bimodule(c.sources[0]))) for c in a.a))
        assert same(vd3, linf_bracket(vd3, [a]), want)


def test_half_square_of_classical_term():
    g = build_zk(4)
    d = g.span
    vd = VoronovData(d)
    p1 = ClassicalDeformation.single(g, 2).psi(1)
    half = linf_bracket(vd, [ax(p1), ax(p1)]).scale(Fraction(1, 2))
    assert same(vd, half, ax(Compose(d.xi, [p1, p1])), 3)


def test_binary_diagonal_sign(z3, vd3):
    q = quantize_zk(z3)
    m1 = GElement.of(q.mu.B(1), q.nu.B(1), q.xi.B(1))
    square = LInfElement(g=m1.bracket(m1))
    assert same(vd3, linf_bracket(vd3, [LInfElement(g=m1)] * 2), square.scale(-1), 1)
    literal = VoronovData(z3.span, sign=SignConvention.LITERAL)
    assert same(vd3, linf_bracket(literal, [LInfElement(g=m1)] * 2), square, 1)


def test_literal_sign_breaks_jacobi(z3):
    rng = random.Random(0)
    d = z3.span
    x = random_element(rng, d, "g", 1)
    y = random_element(rng, d, "g", 2)
    good = VoronovData(d)
    bad = VoronovData(d, sign=SignConvention.LITERAL)
    assert zero(good, jacobi_defect(good, [x, y]))
    assert not zero(bad, jacobi_defect(bad, [x, y]))


@pytest.mark.parametrize("kinds", [("g1",), ("a2",), ("g1", "a1"), ("g2", "a1"), ("a1", "a2"),
                                   ("a1", "g1", "a1"), ("a1", "a1", "a1")])
def test_jacobi_identities(z3, vd3, kinds):
    rng = random.Random(len(kinds) * 7 + sum(map(ord, "".join(kinds))))
    els = [random_element(rng, z3.span, k[0], int(k[1])) for k in kinds]
    assert zero(vd3, jacobi_defect(vd3, els))


def test_jacobi_for_classical_data():
    g = build_zk(3)
    vd = VoronovData(g.span)
    q = quantize_zk(g)
    m1 = LInfElement(g=GElement.of(q.mu.B(1), q.nu.B(1), q.xi.B(1)))
    p1 = ax(ClassicalDeformation.single(g, 1).psi(1))
    assert zero(vd, jacobi_defect(vd, [m1, p1]))


def test_bracket_cutoffs(z3, vd3):
    rng = random.Random(4)
    d = z3.span
    arrows = [random_element(rng, d, "a", 1) for _ in range(3)]
    for route in ("derived", "explicit"):
        assert zero(vd3, linf_bracket(vd3, arrows, route=route))
        x = random_element(rng, d, "g", 1)
        assert zero(vd3, linf_bracket(vd3, [x] + arrows[:2], route=route))
        y = random_element(rng, d, "g", 2)
        assert zero(vd3, linf_bracket(vd3, [y] + arrows, route=route), 1)
    y = random_element(rng, d, "g", 2)
    assert not zero(vd3, linf_bracket(vd3, [y] + arrows[:2]))


def test_routes_agree(z3, vd3):
    rng = random.Random(5)
    d = z3.span
    for kinds in (("g1",), ("g2",), ("a1",), ("g2", "a1"), ("a1", "g1"), ("g1", "a2"),
                  ("g2", "a1", "a1"), ("g1", "g2")):
        els = [random_element(rng, d, k[0], int(k[1])) for k in kinds]
        assert same(vd3, linf_bracket(vd3, els), linf_bracket(vd3, els, route="explicit"))
    with pytest.raises(ValueError):
        linf_bracket(vd3, [], route="other")


def test_three_argument_bracket(z3, vd3):
    rng = random.Random(6)
    d = z3.span
    x = random_element(rng, d, "g", 2)
    a1, a2 = random_element(rng, d, "a", 1), random_element(rng, d, "a", 1)
    xw = x.g.get(("W", "W"), "W")
    want = []
    for f, g in zip(a1.a, a2.a):
        want += [(1, Compose(xw, [f, g])), (1, Compose(xw, [g, f]))]
    got = linf_bracket(vd3, [x, a1, a2])
    assert same(vd3, got, LInfElement(a=GElement.from_terms(want)))


def classical(k, i, order=2):
    g = build_zk(k)
    cd = ClassicalDeformation.single(g, i, order=max(order, 2))
    Pt = arrow_series(g.span, None, {n: cd.psi(n) for n in range(1, order + 1)}, order=order)
    return g, Pt


def test_pure_classical_residual_vanishes():
    g, Pt = classical(4, 2)
    vd = VoronovData(g.span)
    for n in (1, 2):
        gg, aa = mc_residual(vd, None, Pt, n)
        assert not gg
        assert zero(vd, LInfElement(gg, aa), 3)


def test_pure_quantization_residual_vanishes():
    g = build_zk(4)
    q = quantize_zk(g)
    for n in (1, 2):
        gg, aa = mc_residual(g.span, q.series(), None, n)
        assert zero(VoronovData(g.span), LInfElement(gg, aa))


def test_residual_routes_agree_on_mixed_data():
    g, Pt = classical(4, 2)
    vd = VoronovData(g.span)
    Mt = quantize_zk(g).series()
    for n in (1, 2):
        e = LInfElement(*mc_residual(vd, Mt, Pt, n))
        c = LInfElement(*mc_residual(vd, Mt, Pt, n, route="collected"))
        assert same(vd, e, c)
    gg, aa = mc_residual(vd, Mt, Pt, 2)
    assert not zero(vd, LInfElement(a=aa))
    assert zero(vd, LInfElement(g=gg))


def test_residual_truncation_stability():
    g, P2 = classical(4, 2, order=3)
    _, P1 = classical(4, 2, order=1)
    vd = VoronovData(g.span)
    assert same(vd, LInfElement(*mc_residual(vd, None, P1, 1)),
                LInfElement(*mc_residual(vd, None, P2, 1)))


def test_residual_order_beyond_truncation():
    g, Pt = classical(3, 1)
    with pytest.raises(ValueError):
        mc_residual(g.span, None, Pt, 3)
    with pytest.raises(ValueError):
        mc_residual(g.span, None, Pt, 1, route="other")


def test_maurer_cartan_candidates_have_degree_zero(z3, vd3):
    rng = random.Random(7)
    bad = EpsFamily({1: random_element(rng, z3.span, "a", 2).a}, order=1)
    with pytest.raises(DegreeError):
        mc_element(vd3, None, bad, 1)
    wrong_slot = EpsFamily({1: GElement.of(z3.span.xi)}, order=1)
    with pytest.raises(DegreeError):
        mc_element(vd3, None, wrong_slot, 1)
    good = diagonal_series(z3.span, {1: z3.span.mu}, order=1)
    assert mc_element(vd3, good, None, 1).degree() == 0


def test_element_degrees(z3):
    rng = random.Random(8)
    d = z3.span
    assert random_element(rng, d, "g", 1).degree() == -1
    assert random_element(rng, d, "g", 2).degree() == 0
    assert random_element(rng, d, "a", 1).degree() == 0
    assert gx(d.mu).degree() == 0 and ax(lincomb([(1, d.xi)])).degree() == 1
    assert check_zero(d.mu, d.grid(("U", "U"), 1))[0] is False
