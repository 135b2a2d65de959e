"""Truncated-basis matrix oracle: assembly, safe spectra, numeric traces."""

import math

import numpy as np
import pytest

from orbitbnf.bridge import weyl_symbol_of_word, wick_from_weyl
from orbitbnf.errors import CoverageError, UnsafeWindowError
from orbitbnf.normalform import NormalForm
from orbitbnf.oracle import (
    assemble_matrix,
    BasisWindow,
    coherent_state_checks,
    MATRIX_BUDGET,
    model_trace,
    numeric_trace,
    quasi_eigenvalues,
    render_check_report,
    smooth_plateau,
    wick_symbol_numeric,
)
from orbitbnf.quantum import exp_conjugate, h0_word
from orbitbnf.series import nonresonance_margin
from orbitbnf.traces import GaussianBump
from orbitbnf.words import adjoint, normal_order_product, WordPoly

SQRT2M1 = math.sqrt(2.0) - 1.0


def cubic_word(cap, eps):
    s = WordPoly.annihilation(1, 0) + WordPoly.creation(1, 0)
    return normal_order_product(normal_order_product(s, s, cap), s, cap) * eps


def test_basis_window_dimension_and_state_order():
    w = BasisWindow(2, 1, 0.1)
    assert w.dimension(1) == 9
    assert w.dimension(2) == 27
    states = w.states(1)
    assert [(s.mu, s.nu) for s in states[:4]] == [
        ((0,), -1), ((1,), -1), ((2,), -1), ((0,), 0),
    ]
    assert w.hermite_doubled() == BasisWindow(4, 1, 0.1)
    assert w.doubled(True) == BasisWindow(4, 2, 0.1)
    assert w.doubled(False) == BasisWindow(4, 1, 0.1)


def test_assemble_h0_is_the_exact_ladder():
    rot = nonresonance_margin((SQRT2M1,), 8)
    hbar = 0.1
    w = BasisWindow(5, 2, hbar)
    mat = assemble_matrix(h0_word(rot, 0.7, 8), w)
    assert np.max(np.abs(mat - np.diag(np.diag(mat)))) == 0.0
    for i, s in enumerate(w.states(1)):
        pred = 0.7 + SQRT2M1 * hbar * (s.mu[0] + 0.5) + s.nu * hbar
        assert abs(mat[i, i] - pred) < 1e-14


def test_assemble_ladder_amplitudes():
    hbar = 0.1
    am = assemble_matrix(WordPoly.annihilation(1, 0), BasisWindow(5, 0, hbar))
    for m in range(5):
        assert abs(am[m, m + 1] - math.sqrt((m + 1) * hbar)) < 1e-15
    assert np.count_nonzero(am) == 5


def test_assemble_rejects_oversized_windows():
    w = BasisWindow(80, 30, 0.1)
    assert w.dimension(1) > MATRIX_BUDGET
    with pytest.raises(ValueError):
        assemble_matrix(WordPoly.annihilation(1, 0), w)


def test_spectrum_invariant_under_conjugation():
    """A truncated unitary conjugation must not move safe eigenvalues."""
    rot = nonresonance_margin((SQRT2M1,), 8)
    hbar = 0.05
    H = h0_word(rot, 0.7, 10) + cubic_word(10, 0.01)
    F = WordPoly.word(1, mu=(3,), nu=(0,), coeff=0.002)
    F = F + adjoint(F)
    HC = exp_conjugate(H, F, 10)
    w = BasisWindow(64, 0, hbar)
    win = (0.7 + SQRT2M1 * hbar * 2.2, 0.7 + SQRT2M1 * hbar * 8.8)
    e1 = quasi_eigenvalues(H, w, win)
    e2 = quasi_eigenvalues(HC, w, win)
    assert len(e1) == len(e2) == 7
    assert np.max(np.abs(np.array(e1) - np.array(e2))) < 1e-10


def test_quasi_eigenvalues_rejects_shallow_window():
    rot = nonresonance_margin((SQRT2M1,), 8)
    hbar = 0.1
    w = BasisWindow(16, 0, hbar)
    win = (0.7 + SQRT2M1 * hbar * 12.0, 0.7 + SQRT2M1 * hbar * 13.0)
    with pytest.raises(UnsafeWindowError):
        quasi_eigenvalues(h0_word(rot, 0.7, 8), w, win)


def test_numeric_trace_single_state_is_phi_at_zero():
    bump = GaussianBump(1, 0.7)
    got = numeric_trace([0.7], 0.7, 0.1, bump, weights=[2.0])
    expected = 2.0 * bump.phi(0.0)
    assert abs(got - expected) < 1e-12


def test_numeric_trace_coverage_guard():
    bump = GaussianBump(1, 0.7)
    with pytest.raises(CoverageError):
        numeric_trace([0.7], 0.7, 0.1, bump, floor=1e-12)


def test_model_trace_matches_hand_double_sum():
    """Independent reimplementation with the closed-form phi, not quadrature."""
    rot_theta = SQRT2M1
    nf = NormalForm(1, {((0,), 0, 0): 0.7, ((1,), 0, 0): rot_theta,
                        ((0,), 1, 0): 1.0})
    bump = GaussianBump(1, 0.7)
    hbar = 0.1
    p1, p2 = 0.3, 0.8
    got = model_trace(nf, 0.7, hbar, bump, (p1, p2), floor=1e-12)
    hand = 0.0 + 0.0j
    for mu in range(int(math.ceil(p2 / hbar)) + 4):
        p = (mu + 0.5) * hbar
        rho = smooth_plateau(p, p1, p2)
        if rho == 0.0:
            continue
        for nu in range(-80, 81):
            lam = 0.7 + rot_theta * p + nu * hbar
            hand += rho * bump.phi((lam - 0.7) / hbar)
    assert abs(got - hand) < 1e-12


def test_coherent_state_checks_pass_at_contract_point():
    w = BasisWindow(120, 0, 0.1)
    rep = coherent_state_checks(w, 0.7, 0.3, 0.1)
    assert rep["passed"] is True
    for key in ("rotation_residual", "overlap_residual",
                "self_overlap_residual", "wick_residual", "tail_mass"):
        assert rep[key] < 1e-10
    text = render_check_report(rep)
    assert "PASS" in text
    assert "max residual" in text


def test_wick_symbol_numeric_matches_series_route():
    """Matrix-side Wick values agree with the symbol dictionary at z = x + i xi."""
    hbar = 0.05
    x, xi = 0.3, 0.1
    s = WordPoly.annihilation(1, 0) + WordPoly.creation(1, 0)
    A = (normal_order_product(s, s, 8) * 0.5
         + WordPoly.word(1, mu=(2,), nu=(1,), coeff=0.25)
         + WordPoly.word(1, k=1, coeff=-0.3))
    num = wick_symbol_numeric(A, BasisWindow(140, 0, hbar), x, xi)
    series = wick_from_weyl(weyl_symbol_of_word(A, 6), 6)
    val = series.evaluate((x + 1j * xi,), 0.0, 0.0, hbar)
    assert abs(num - val) < 1e-10


def test_smooth_plateau_shape():
    assert smooth_plateau(0.1, 0.3, 0.8) == 1.0
    assert smooth_plateau(0.3, 0.3, 0.8) == 1.0
    assert smooth_plateau(0.8, 0.3, 0.8) == 0.0
    assert smooth_plateau(1.2, 0.3, 0.8) == 0.0
    samples = [smooth_plateau(0.3 + 0.05 * i, 0.3, 0.8) for i in range(11)]
    assert all(0.0 <= v <= 1.0 for v in samples)
    assert all(a >= b - 1e-15 for a, b in zip(samples, samples[1:]))
    assert 0.0 < smooth_plateau(0.55, 0.3, 0.8) < 1.0
