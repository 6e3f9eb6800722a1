import random

import pytest

from gsdeform.cochain import (
    BimoduleStructure,
    FunctionCochain,
    MonomialGrid,
    PolyDiff,
    SpliceError,
    assoc_defect,
    check_zero,
    circle_i,
    derivation,
    equal_on_grid,
    g_bracket,
    hochschild_d,
    identity,
    morphism_cochain,
    multiplication,
    slot,
    vanishes_on_grid,
)
from gsdeform.ratlaurent import ANY, AlgebraSpec, LaurentPoly, MorphismSpec, parse_poly
from gsdeform.suite import random_cochain

P = parse_poly

U = AlgebraSpec("U", ("z", "u"))
V = AlgebraSpec("V", ("zeta", "v"))
W = AlgebraSpec("W", ("z", "u"), {"z": ANY})
C = AlgebraSpec("C", ("z",))
ALGS = {"U": U, "V": V, "W": W, "C": C}


def mu1(alg="U"):
    zu = P("z*u")
    return PolyDiff((alg, alg), alg, [(zu, (slot(z=1), slot(u=1))),
                                      (-zu, (slot(u=1), slot(z=1)))])


def mono(a, b):
    return LaurentPoly.monomial({"z": a, "u": b})


def grid(sources, bound=3):
    return MonomialGrid.box(ALGS, sources, bound)


def test_multiplication_evaluates():
    assert multiplication("U").evaluate(P("z"), P("u")) == P("z*u")


def test_mu1_evaluates():
    assert mu1().evaluate(P("z^2*u"), P("z*u^3")) == P("5*z^3*u^4")


def test_mu1_closed_form_on_grid():
    m = mu1()
    for a in range(4):
        for b in range(4):
            for c in range(4):
                for d in range(4):
                    want = mono(a + c, b + d).scale(a * d - b * c)
                    assert m.evaluate(mono(a, b), mono(c, d)) == want


def test_insert_identity():
    m = mu1()
    ok, _ = equal_on_grid(circle_i(m, identity("U"), 0), m, grid(("U", "U")))
    assert ok


def test_left_association():
    mu = multiplication("U")
    left = circle_i(mu, mu, 0)
    a, b, c = P("z + u"), P("2*z"), P("u^2 - 1")
    assert left.evaluate(a, b, c) == (a * b) * c
    assert left.arity == 3


def test_insert_morphism_into_product():
    for k in (1, 3, 4):
        psi0 = MorphismSpec("psi0", V, W, {"zeta": "z^-1", "v": f"z^{k}*u"})
        f = PolyDiff(("W", "V"), "W", [(1, (slot(), slot(psi0)))])
        assert f.evaluate(P("z*u"), P("v")) == P(f"z^{k + 1}*u^2")
        g = circle_i(multiplication("W"), morphism_cochain(psi0), 1)
        assert g.sources == ("W", "V")
        assert g.evaluate(P("z*u"), P("v")) == P(f"z^{k + 1}*u^2")


def test_splice_type_mismatch():
    psi0 = MorphismSpec("psi0", V, W, {"zeta": "z^-1", "v": "z^3*u"})
    with pytest.raises(SpliceError):
        PolyDiff(("V",), "U", [(1, (slot(psi0),))])
    with pytest.raises(SpliceError):
        PolyDiff(("V",), "W", [(1, (slot(),))])


def test_product_is_associative():
    br = g_bracket(multiplication("U"), multiplication("U"))
    ok, _ = check_zero(br.only(), grid(("U",) * 3))
    assert ok


def test_commuting_derivations():
    d = derivation("U", {"z": P("z")})
    e = derivation("U", {"u": P("u")})
    br = g_bracket(d, e)
    assert all(check_zero(c, grid(("U",)))[0] for c in br)
    ok, _ = equal_on_grid(circle_i(d, e, 0), circle_i(e, d, 0), grid(("U",)))
    assert ok


def test_noncommuting_derivations():
    d = derivation("U", {"z": P("1")})
    e = derivation("U", {"u": P("z")})
    br = g_bracket(d, e).only()
    assert br.evaluate(P("u")) == P("1")


def test_mu1_is_a_cocycle():
    bm = BimoduleStructure("U", "U")
    ok, _ = check_zero(hochschild_d(mu1(), bm), grid(("U",) * 3, 4))
    assert ok
    br = g_bracket(multiplication("U"), mu1())
    assert all(check_zero(c, grid(("U",) * 3, 4))[0] for c in br)


def test_hochschild_d_squares_to_zero():
    bm = BimoduleStructure("U", "U")
    x = derivation("U", {"u": P("z^2")})
    dx = hochschild_d(x, bm)
    assert dx.evaluate(P("u"), P("u")) == 0
    assert check_zero(hochschild_d(dx, bm), grid(("U",) * 3))[0]
    y = PolyDiff(("U",), "U", [(P("z"), (slot(z=2),))])
    assert not check_zero(hochschild_d(y, bm), grid(("U",) * 2))[0]
    assert check_zero(hochschild_d(hochschild_d(y, bm), bm), grid(("U",) * 3))[0]


def test_hochschild_d_is_bracket_with_product():
    rng = random.Random(5)
    bm = BimoduleStructure("U", "U")
    for arity in (1, 2, 3):
        for _ in range(3):
            f = random_cochain(rng, ALGS, ("U",) * arity, "U")
            br = g_bracket(multiplication("U"), f)
            sign = -1 if (arity - 1) % 2 else 1
            diff = hochschild_d(f, bm) - br.only() * sign if br else hochschild_d(f, bm)
            assert check_zero(diff, grid(("U",) * (arity + 1), 2))[0]


def test_bimodule_through_morphism():
    phi = MorphismSpec("phi0", U, W, {"z": "z", "u": "u"})
    bm = BimoduleStructure("U", "W", phi)
    twisted = PolyDiff(("U",), "W", [(P("z^-1*u"), (slot(phi, z=1),))])
    assert check_zero(hochschild_d(twisted, bm), grid(("U", "U")))[0]
    assert hochschild_d(morphism_cochain(phi), bm).evaluate(P("z"), P("u")) == P("z*u")


def test_commutative_product_has_no_defect():
    d = assoc_defect(multiplication("U"))
    assert all(check_zero(c, grid(("U",) * 3))[0] for c in d)


def test_nonassociative_defect():
    f = PolyDiff(("C", "C"), "C", [(1, (slot(), slot(z=1)))])
    d = assoc_defect(f)
    z, z2 = P("z"), P("z^2")
    assert d.only().evaluate(z, z, z) == 0
    direct = f.evaluate(f.evaluate(z, z), z2) - f.evaluate(z, f.evaluate(z, z2))
    assert direct == P("-2*z^2")
    assert d.only().evaluate(z, z, z2) == direct
    ok, cx = check_zero(d.only(), grid(("C",) * 3))
    assert not ok


def test_first_order_associativity_is_cocycle_condition():
    mu, m1 = multiplication("U"), mu1()
    sq = g_bracket(mu, m1)
    bm = BimoduleStructure("U", "U")
    g = grid(("U",) * 3, 2)
    assert check_zero(sq.only() + hochschild_d(m1, bm), g)[0]


def test_graded_antisymmetry_and_jacobi():
    rng = random.Random(11)
    for _ in range(10):
        f, g, h = (random_cochain(rng, ALGS, ("U",) * rng.randint(1, 2), "U") for _ in range(3))
        s = -1 if (f.degree * g.degree) % 2 else 1
        anti = g_bracket(f, g) + g_bracket(g, f).scale(s)
        for c in anti:
            assert check_zero(c, grid(c.sources, 2))[0]
        sg = -1 if (f.degree * h.degree) % 2 else 1
        sh = -1 if (g.degree * f.degree) % 2 else 1
        si = -1 if (h.degree * g.degree) % 2 else 1
        jac = (g_bracket(f, g_bracket(g, h)).scale(sg) + g_bracket(g, g_bracket(h, f)).scale(sh)
               + g_bracket(h, g_bracket(f, g)).scale(si))
        for c in jac:
            assert check_zero(c, grid(c.sources, 1), mode="tagged")[0]


def test_equal_on_grid_reflexive_and_mismatch():
    g = grid(("U", "U"), 4)
    assert equal_on_grid(mu1(), mu1(), g) == (True, None)
    with pytest.raises(SpliceError):
        equal_on_grid(multiplication("U"), multiplication("V"), g)


def test_mu1_equals_biderivation_form():
    def bracket(f, g):
        return P("z*u") * (f.diff("z") * g.diff("u") - f.diff("u") * g.diff("z"))

    fn = FunctionCochain(("U", "U"), "U", bracket, "pb")
    assert equal_on_grid(mu1(), fn, grid(("U", "U"), 4)) == (True, None)


def test_equal_on_grid_reports_first_counterexample():
    ok, (inputs, a, b) = equal_on_grid(mu1(), multiplication("U"), grid(("U", "U"), 1))
    assert not ok
    assert inputs == (P("1"), P("1")) and a == 0 and b == 1


def test_check_zero_modes_agree():
    bm = BimoduleStructure("U", "U")
    y = PolyDiff(("U",), "U", [(P("z"), (slot(z=2),))])
    for f in (hochschild_d(y, bm), hochschild_d(mu1(), bm)):
        g = grid(f.sources, 2)
        points = check_zero(f, g, mode="points")
        tagged = check_zero(f, g, mode="tagged")
        assert points[0] == tagged[0]
        if not tagged[0]:
            inputs, value = tagged[1]
            assert f.evaluate(inputs) == value != 0
    assert vanishes_on_grid(mu1(), [(P("z"), P("z"))]) == (True, None)
