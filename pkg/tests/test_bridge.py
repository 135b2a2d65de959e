"""Symbol dictionaries: Weyl/Wick conversion and the two normal-form routes."""

import math
import random

import pytest

from orbitbnf.bridge import (
    compare_normal_forms,
    diagonal_values_check,
    relate_normal_forms,
    weyl_from_wick,
    weyl_of_functional_calculus,
    weyl_symbol_of_word,
    wick_from_weyl,
)
from orbitbnf.classical import birkhoff_semiclassical
from orbitbnf.normalform import NormalForm
from orbitbnf.quantum import birkhoff_quantum, h0_word
from orbitbnf.series import FTSeries, moyal_product, nonresonance_margin
from orbitbnf.words import normal_order_product, WordPoly

SQRT2M1 = math.sqrt(2.0) - 1.0


def test_functional_calculus_pins():
    """p maps to p; p^2 picks up the -hbar^2/4 correction."""
    out = weyl_of_functional_calculus(NormalForm(1, {((1,), 0, 0): 1.0}), 4)
    assert out.to_records() == [{"r": [1], "s": 0, "k": 0, "c": 1.0}]
    out2 = weyl_of_functional_calculus(NormalForm(1, {((2,), 0, 0): 1.0}), 4)
    got = {(tuple(r["r"]), r["s"], r["k"]): r["c"] for r in out2.to_records()}
    assert got == {((2,), 0, 0): 1.0, ((0,), 0, 2): -0.25}


def test_functional_calculus_matches_star_powers():
    """The image of p^r tau^s equals the iterated star product of the factors.

    The oracle multiplies the action variables one Moyal factor at a time, so
    it never touches the functional-calculus code path."""
    rng = random.Random(3173)
    for dim in (1, 2):
        p_series = [
            FTSeries.monomial(dim, tuple(1 if q == i else 0 for q in range(dim)),
                              tuple(1 if q == i else 0 for q in range(dim)),
                              coeff=0.5)
            for i in range(dim)
        ]
        for _ in range(8):
            entries = {}
            for _ in range(3):
                r = tuple(rng.randint(0, 3 - dim) for _ in range(dim))
                s = rng.randint(0, 1)
                entries[(r, s, 0)] = rng.uniform(-1.0, 1.0)
            nf = NormalForm(dim, entries)
            image = weyl_of_functional_calculus(nf, 4)
            zeros = (0,) * dim
            oracle = FTSeries.zero(dim)
            for (r, s, _k), c in entries.items():
                acc = FTSeries.monomial(dim, zeros, zeros, j=s, coeff=c)
                for i in range(dim):
                    for _ in range(r[i]):
                        acc = moyal_product(acc, p_series[i], 4)
                oracle = oracle + acc
            assert (image.as_series() - oracle).max_abs_coeff() < 1e-12


def test_functional_calculus_images_have_even_hbar_powers():
    rng = random.Random(911)
    for _ in range(5):
        r = (rng.randint(0, 4),)
        nf = NormalForm(1, {(r, rng.randint(0, 2), 0): 1.0})
        image = weyl_of_functional_calculus(nf, 6)
        for rec in image.to_records():
            assert rec["k"] % 2 == 0


def test_wick_weyl_golden_shifts():
    """Wick symbol of op(p) is p + hbar/2; Weyl symbol of a+ a is p - hbar/2."""
    p = FTSeries.monomial(1, (1,), (1,), coeff=0.5)
    wick = wick_from_weyl(p, 4)
    assert abs(wick.coeff(((1,), (1,), 0, 0, 0)) - 0.5) < 1e-15
    assert abs(wick.coeff(((0,), (0,), 0, 0, 1)) - 0.5) < 1e-15
    aa = WordPoly.word(1, mu=(1,), nu=(1,), coeff=1.0)
    sym = weyl_symbol_of_word(aa, 4)
    assert abs(sym.coeff(((1,), (1,), 0, 0, 0)) - 0.5) < 1e-15
    assert abs(sym.coeff(((0,), (0,), 0, 0, 1)) + 0.5) < 1e-15


def test_wick_weyl_round_trips_are_exact():
    rng = random.Random(26021)
    for dim in (1, 2):
        for _ in range(6):
            g = FTSeries.zero(dim)
            for _ in range(4):
                mu = tuple(rng.randint(0, 2) for _ in range(dim))
                nu = tuple(rng.randint(0, 2) for _ in range(dim))
                g = g + FTSeries.monomial(
                    dim, mu, nu, m=rng.randint(-1, 1), j=rng.randint(0, 1),
                    coeff=rng.choice((-1.5, -1.0, 0.5, 1.0)),
                )
            there = weyl_from_wick(wick_from_weyl(g, 6), 6)
            back = wick_from_weyl(weyl_from_wick(g, 6), 6)
            assert (there - g).max_abs_coeff() < 1e-13
            assert (back - g).max_abs_coeff() < 1e-13


def test_weyl_symbol_of_cubic_word_golden():
    """(a + a+)^3 has Weyl symbol 2^{-3/2} (z + zbar)^3 with no hbar terms."""
    s = WordPoly.annihilation(1, 0) + WordPoly.creation(1, 0)
    c3 = normal_order_product(normal_order_product(s, s, 8), s, 8)
    sym = weyl_symbol_of_word(c3, 2, 8)
    c = 2.0 ** (-1.5)
    expected = {
        ((3,), (0,)): c, ((0,), (3,)): c,
        ((2,), (1,)): 3.0 * c, ((1,), (2,)): 3.0 * c,
    }
    got = {}
    for key, val in sym.items():
        mu, nu, m, j, k = key
        assert (m, j, k) == (0, 0, 0)
        assert abs(val.imag) < 1e-15
        got[(mu, nu)] = val.real
    assert set(got) == set(expected)
    for key in expected:
        assert abs(got[key] - expected[key]) < 1e-14


def test_route_equivalence_on_cubic_benchmark():
    """Operator sweep + symbol dictionary = semiclassical sweep of the symbol."""
    rot = nonresonance_margin((SQRT2M1,), 8)
    s = WordPoly.annihilation(1, 0) + WordPoly.creation(1, 0)
    H = h0_word(rot, 1.0, 8) + normal_order_product(
        normal_order_product(s, s, 8), s, 8) * 1e-2
    h_quantum, _, _ = birkhoff_quantum(H, rot, 4, 8)
    Hs = weyl_symbol_of_word(H, 2, 8)
    h_semi, _, _ = birkhoff_semiclassical(Hs, rot, 4, 2, 8)
    related = relate_normal_forms(h_quantum, 2)
    keys = set()
    for nf in (related, h_semi):
        for rec in nf.to_records():
            keys.add((tuple(rec["r"]), rec["s"], rec["k"]))
    for r, s_, k in keys:
        if 2 * (sum(r) + s_ + k) > 4 or k > 2:
            continue
        assert abs(related.coeff(r, s_, k) - h_semi.coeff(r, s_, k)) < 1e-12


def test_diagonal_values_check_evaluates_the_ladder():
    nf = NormalForm(1, {((0,), 0, 0): 1.0, ((1,), 0, 0): 0.41,
                        ((2,), 0, 0): -0.07, ((0,), 0, 2): 0.004})
    hbar = 0.1
    vals = diagonal_values_check(nf, hbar, 3)
    assert len(vals) == 4
    for mu, got in enumerate(vals):
        p = (mu + 0.5) * hbar
        expected = 1.0 + 0.41 * p - 0.07 * p * p + 0.004 * hbar * hbar
        assert abs(got - expected) < 1e-12


def test_compare_normal_forms_reports_differences():
    a = NormalForm(1, {((1,), 0, 0): 0.5})
    b = NormalForm(1, {((1,), 0, 0): 0.5, ((0,), 0, 2): 0.25})
    text = compare_normal_forms("first", a, "second", b)
    assert "first" in text
    assert "second" in text
    assert "hbar" in text
    assert "2.500e-01" in text or "0.25" in text
