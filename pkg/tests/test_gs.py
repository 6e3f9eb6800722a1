import json
import random
from pathlib import Path

import pytest

from gsdeform.cochain import (
    GElement,
    ZeroCochain,
    check_zero,
    derivation,
    identity,
    lincomb,
    morphism_cochain,
)
from gsdeform.gs import (
    GSCochain,
    SpanDiagram,
    TruncationError,
    gs_d,
    load_diagram,
    reduced_truncated_guard,
    simplicial_d,
    verify_diagram,
)
from gsdeform.linf import VoronovData
from gsdeform.quantize import Bivector, kontsevich_star2
from gsdeform.ratlaurent import ANY, AlgebraSpec, MorphismSpec, parse_poly
from gsdeform.suite import random_cochain, random_gs_cochain
from gsdeform.zk import ClassicalDeformation, build_zk, quantize_zk

P = parse_poly
CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="module")
def z3():
    return build_zk(3).span


def zero_on(c, d, bound=2):
    return check_zero(c, d.grid(c.sources, bound))[0]


def cochain_is_zero(c: GSCochain, d, bound=2):
    parts = [p for p in (c.x or ()) + (c.a or ()) if p is not None]
    return all(zero_on(p, d, bound) for p in parts)


def test_canonical_z3_passes(z3):
    rep = verify_diagram(z3)
    assert rep.ok and rep.agree
    assert rep.counterexample is None


def test_identity_span_passes():
    a, b, c = (AlgebraSpec(n, ("x", "y")) for n in "ABC")
    d = SpanDiagram(a, b, c,
                    MorphismSpec("f", a, c, {"x": "x", "y": "y"}),
                    MorphismSpec("g", b, c, {"x": "x", "y": "y"}))
    assert verify_diagram(d).ok


def test_substitutions_are_ring_maps():
    g = build_zk(3)
    psi = MorphismSpec("psi", g.span.A_V, g.span.A_W, {"zeta": "z^-1", "v": "z^3*u + z"})
    d = SpanDiagram(g.span.A_U, g.span.A_V, g.span.A_W, g.span.phi, psi)
    assert verify_diagram(d).ok


def test_corrupted_fixture_fails_on_both_routes():
    rep = verify_diagram(load_diagram(CONFIGS / "bad_psi.json"))
    assert not rep.ok
    assert not rep.morphisms_ok and not rep.projection_ok
    assert rep.agree
    assert "psi0" in rep.counterexample


def test_nonassociative_vertex_is_reported(z3):
    from gsdeform.cochain import PolyDiff, slot

    bad = PolyDiff(("U", "U"), "U", [(1, (slot(), slot(z=1)))])
    rep = verify_diagram(z3.with_products(mu=bad), 2)
    assert not rep.associative_ok and not rep.ok


def test_simplicial_d_of_identities(z3):
    du, dv = simplicial_d(z3, identity("U"), identity("V"), identity("W"))
    assert zero_on(du, z3, 3) and zero_on(dv, z3, 3)


def test_simplicial_d_of_quantization():
    g = build_zk(3)
    q = quantize_zk(g)
    du, dv = simplicial_d(g.span, q.mu.B(1), q.nu.B(1), q.xi.B(1))
    assert zero_on(du, g.span, 3) and zero_on(dv, g.span, 3)


def test_simplicial_d_of_w_only_part():
    g = build_zk(3)
    d = g.span
    xi1 = kontsevich_star2(Bivector.planar("z", "u", "z*u"), d.A_W).B(1)
    zu = ZeroCochain(("U", "U"), "U")
    zv = ZeroCochain(("V", "V"), "V")
    du, dv = simplicial_d(d, zu, zv, xi1)
    assert not zero_on(du, d) and not zero_on(dv, d)
    m = morphism_cochain(d.phi)
    from gsdeform.cochain import Compose

    want = lincomb([(-1, Compose(xi1, [m, m]))])
    assert check_zero(lincomb([(1, du), (-1, want)]), d.grid(("U", "U"), 3))[0]


def test_simplicial_d_matches_projection(z3):
    rng = random.Random(3)
    vd = VoronovData(z3)
    for q in (1, 2):
        for _ in range(2):
            xs = tuple(random_cochain(rng, z3.algebras, (a,) * q, a) for a in ("U", "V", "W"))
            du, dv = simplicial_d(z3, *xs)
            proj = vd.P_Phi(z3.diagonal(*xs))
            for c, src in ((du, "U"), (dv, "V")):
                sig = ((src,) * q, "W")
                assert zero_on(lincomb([(1, c), (1, proj[sig])]), z3)


@pytest.mark.parametrize("degree", [1, 2])
def test_gs_d_squares_to_zero(z3, degree):
    rng = random.Random(10 + degree)
    for _ in range(3):
        c = random_gs_cochain(rng, z3, degree)
        dd = gs_d(z3, gs_d(z3, c))
        assert dd.degree == degree + 2
        assert cochain_is_zero(dd, z3, 1)


def test_compatible_derivations_are_cocycles(z3):
    c = GSCochain((derivation("U", {"u": P("u")}), derivation("V", {"v": P("v")}),
                   derivation("W", {"u": P("u")})), None, 0)
    assert cochain_is_zero(gs_d(z3, c), z3, 3)
    euler = GSCochain((derivation("U", {"z": P("z")}),
                       derivation("V", {"zeta": P("-zeta"), "v": P("3*v")}),
                       derivation("W", {"z": P("z")})), None, 0)
    assert cochain_is_zero(gs_d(z3, euler), z3, 3)


def test_incompatible_derivations_have_arrow_part(z3):
    c = GSCochain((derivation("U", {"z": P("z")}), None, derivation("W", {"z": P("z")})), None, 0)
    dc = gs_d(z3, c)
    assert all(zero_on(x, z3) for x in dc.x)
    assert zero_on(dc.a[0], z3) and not zero_on(dc.a[1], z3)
    assert dc.a[1].evaluate(P("v")) == P("3*z^3*u")


def test_first_order_classical_term_is_closed():
    g = build_zk(4)
    cd = ClassicalDeformation.single(g, 2)
    dc = gs_d(g.span, GSCochain(None, (None, cd.psi(1)), 1))
    assert dc.a[0] is None
    assert zero_on(dc.a[1], g.span, 3)


def test_guard_accepts_built_cochains(z3):
    rng = random.Random(0)
    c = random_gs_cochain(rng, z3, 2)
    reduced_truncated_guard(z3, c)
    assert [x.arity for x in c.x] == [3, 3, 3] and [a.arity for a in c.a] == [2, 2]


def test_guard_rejects_identity_arrow(z3):
    with pytest.raises(TruncationError):
        reduced_truncated_guard(z3, GSCochain(None, (identity("W"), None), 0))
    reduced_truncated_guard(z3, GElement.of(morphism_cochain(z3.psi), identity("U")))
    back = MorphismSpec("back", z3.A_V, z3.A_U, {"zeta": "z", "v": "u"})
    with pytest.raises(TruncationError):
        reduced_truncated_guard(z3, GElement.of(morphism_cochain(back)))


def test_inhomogeneous_cochain_rejected():
    with pytest.raises(ValueError):
        GSCochain((identity("U"), None, None), (identity("U"),))


def test_load_diagram_variants():
    d = load_diagram(CONFIGS / "z3.json")
    assert (d.u, d.v, d.w) == ("U", "V", "W")
    assert d.psi.apply(P("v")) == P("z^3*u")
    text = (CONFIGS / "z3.json").read_text()
    assert load_diagram(text).psi.apply(P("zeta")) == P("z^-1")
    cfg = json.loads(text)
    del cfg["morphisms"]["phi0"]
    with pytest.raises(ValueError):
        load_diagram(cfg)


def test_span_validates_morphisms():
    u = AlgebraSpec("U", ("z",))
    w = AlgebraSpec("W", ("z",), {"z": ANY})
    v = AlgebraSpec("V", ("z",))
    with pytest.raises(ValueError):
        SpanDiagram(u, v, w, MorphismSpec("f", u, u, {"z": "z"}), MorphismSpec("g", v, w, {"z": "z"}))
