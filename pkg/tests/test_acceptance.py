"""Acceptance battery: one printed PASS/FAIL line per criterion."""

import time
from fractions import Fraction

import pytest

from gsdeform import quantize, suite, zk
from gsdeform.cochain import PolyDiff
from gsdeform.ratlaurent import LaurentPoly


@pytest.fixture
def report(capsys):
    def emit(number, name, ok, info):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {number} {name}: {info}")
    return emit


def run_suite(fn, **kw):
    t = time.perf_counter()
    r = fn(**kw)
    return r, time.perf_counter() - t


def describe(r, secs):
    if r.ok:
        return f"{r.cases} cases in {secs:.1f}s"
    return f"{r.detail} witness={r.witness}"


def test_gerstenhaber_core(report):
    r, secs = run_suite(suite.suite_gerstenhaber, seed=0)
    ok = r.ok and r.cases >= 200 and secs < 30
    report(1, "gerstenhaber", ok, describe(r, secs))
    assert ok


def test_linf_structure(report):
    r, secs = run_suite(suite.suite_linf, seed=0)
    report(2, "linf", r.ok, describe(r, secs))
    assert r.ok


def test_unary_bracket_is_gs_differential(report):
    r, secs = run_suite(suite.suite_unary, seed=0)
    ok = r.ok and r.cases >= 50
    report(3, "unary", ok, describe(r, secs))
    assert ok


def test_quantization(report):
    r, secs = run_suite(suite.suite_quantization)
    report(4, "quantization", r.ok, describe(r, secs))
    assert r.ok


def test_classical_deformations(report):
    r, secs = run_suite(suite.suite_classical)
    report(5, "classical", r.ok, describe(r, secs))
    assert r.ok


def test_second_order_obstruction(report):
    r, secs = run_suite(suite.suite_obstruction)
    report(6, "obstruction", r.ok, describe(r, secs))
    assert r.ok


def test_cohomological_verdict(report):
    r, secs = run_suite(suite.suite_cohomology)
    ok = r.ok and secs < 60
    report(7, "cohomology", ok, describe(r, secs))
    assert ok


def test_cross_validation(report):
    r, secs = run_suite(suite.suite_cross)
    report(8, "cross", r.ok, describe(r, secs))
    assert r.ok


# mutants

def _weight_mutant(index, value):
    def apply(mp):
        w = list(quantize.KONTSEVICH_WEIGHTS)
        w[index] = value
        mp.setattr(quantize, "KONTSEVICH_WEIGHTS", tuple(w))
    return apply


def _psi1_mutant(extra):
    original = zk.ClassicalDeformation.psi_cochain

    def psi_cochain(self, n):
        c = original(self, n)
        if n != 1:
            return c
        bump = LaurentPoly.monomial(extra)
        return PolyDiff(c.sources, c.target, [(coef * bump, slots) for coef, slots in c.terms])

    def apply(mp):
        mp.setattr(zk.ClassicalDeformation, "psi_cochain", psi_cochain)
    return apply


def _sign_mutant(mp):
    mp.setattr(zk, "TRANSITION_SIGN", -zk.TRANSITION_SIGN)


MUTANTS = {
    "weight w0 -> 1/3": _weight_mutant(0, Fraction(1, 3)),
    "weight w1 -> 1/2": _weight_mutant(1, Fraction(1, 2)),
    "weight w2 -> 1/4": _weight_mutant(2, Fraction(1, 4)),
    "weight w3 -> -1/5": _weight_mutant(3, Fraction(-1, 5)),
    "psi1 z-exponent +1": _psi1_mutant({"z": 1}),
    "psi1 z-exponent -1": _psi1_mutant({"z": -1}),
    "psi1 u-exponent +1": _psi1_mutant({"u": 1}),
    "transition sign": _sign_mutant,
}

# cheap suites first; stop at the first one that notices
ORDER = ["classical", "cohomology", "cross", "quantization", "obstruction", "gerstenhaber", "linf", "unary"]


def _first_failure():
    suite.mixed_residual.cache_clear()
    try:
        for name in ORDER:
            r = suite.SUITES[name](0)
            if not r.ok:
                return f"{name}: {r.detail}"
        return None
    finally:
        suite.mixed_residual.cache_clear()


def test_mutation_sensitivity(report):
    survivors, caught = [], {}
    for label, apply in MUTANTS.items():
        with pytest.MonkeyPatch.context() as mp:
            apply(mp)
            hit = _first_failure()
        if hit is None:
            survivors.append(label)
        else:
            caught[label] = hit
    ok = not survivors
    info = f"{len(caught)}/{len(MUTANTS)} mutants caught"
    if survivors:
        info += f"; survivors: {survivors}"
    report(9, "mutation", ok, info)
    assert ok, caught
