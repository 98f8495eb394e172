"""Canonical metric, curvature tensor, bounds, trace inequality."""

import numpy as np
import pytest

from pklab import kns
from pklab import symplin as sl
from pklab import wpcurv as wp


def workspace(n):
    sp = sl.standard_symplectic(n)
    j0 = sl.standard_complex_structure(n)
    return sp, j0, sl.unitary_frame(sp, j0)


def test_metric_at_origin():
    sp, j0, frame = workspace(1)
    rep = wp.df_metric(sp, j0, frame, kns.BsdPoint(phi=np.zeros((1, 1))))
    assert rep.gram[0, 0] == pytest.approx(1.0)
    assert not rep.degenerate


def test_metric_closed_form_disc():
    # Hand derivation: G(t) = (1 - |t|^2)^{-2} on the scalar chart.
    sp, j0, frame = workspace(1)
    _, gram_at = wp.metric_field(sp, j0, frame)
    for t in (0.5, 0.3 - 0.4j, 0.1j):
        g = gram_at(np.array([t], dtype=complex))[0, 0].real
        assert g == pytest.approx((1.0 - abs(t) ** 2) ** -2, rel=1e-12)


def test_degenerate_degrees():
    sp, j0, frame = workspace(1)
    rep0 = wp.df_metric(sp, j0, frame, kns.BsdPoint(phi=np.zeros((1, 1))),
                        normalization=0)
    assert rep0.degenerate and rep0.sample is None
    rep2 = wp.df_metric(sp, j0, frame, kns.BsdPoint(phi=np.zeros((1, 1))),
                        normalization=2)
    assert rep2.degenerate  # top degree at n = 1 also carries no field


def test_degree_ratio_constant_n2():
    sp, j0, frame = workspace(2)
    rng = np.random.default_rng(3)
    ratios = []
    for _ in range(3):
        bp = kns.random_bsd_point(2, rng, 0.5)
        rep = wp.df_metric(sp, j0, frame, bp, normalization=2)
        assert not rep.degenerate
        assert rep.ratio_spread < 1e-8
        ratios.append(rep.ratio_to_degree1)
    assert np.ptp(ratios) < 1e-8  # same constant at every basepoint


def test_curvature_frozen_disc_value():
    # Poincare-type metric: R_1111 = -2 G^2, holomorphic sectional -2.
    sp, j0, frame = workspace(1)
    tensor = wp.curvature_fd(sp, j0, frame, kns.BsdPoint(phi=np.zeros((1, 1))))
    assert tensor.entries[0, 0, 0, 0].real == pytest.approx(-2.0, abs=1e-6)
    off = wp.curvature_fd(sp, j0, frame, kns.BsdPoint(phi=np.array([[0.4 - 0.2j]])))
    _, gram_at = wp.metric_field(sp, j0, frame)
    g = gram_at(np.array([0.4 - 0.2j]))[0, 0].real
    assert off.entries[0, 0, 0, 0].real / g**2 == pytest.approx(-2.0, abs=1e-6)


def test_structural_sectional_values_at_origin():
    # Oracle: -2 tr((S^H S)^2) / tr(S^H S)^2 for the direction matrix S.
    sp, j0, frame = workspace(2)
    tensor = wp.curvature_fd(sp, j0, frame, kns.BsdPoint(phi=np.zeros((2, 2))))
    _, gram_at = wp.metric_field(sp, j0, frame)
    g = gram_at(np.zeros(3, dtype=complex))
    basis = kns.sym_basis(2)
    rng = np.random.default_rng(2)
    for _ in range(6):
        raw = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        xi = raw / np.sqrt(np.real(wp.df_inner(g, raw, raw)))
        s = sum(c * b for c, b in zip(xi, basis))
        ss = s.conj().T @ s
        expected = -2.0 * np.trace(ss @ ss).real / np.trace(ss).real ** 2
        assert tensor.pair(xi, xi).real == pytest.approx(expected, abs=1e-6)


def test_kahler_symmetries_and_closedness():
    sp, j0, frame = workspace(2)
    rng = np.random.default_rng(21)
    bp = kns.random_bsd_point(2, rng, 0.5)
    tensor = wp.curvature_fd(sp, j0, frame, bp)
    assert tensor.kahler_symmetry_defect() < 1e-6
    assert wp.kahler_closedness_residual(sp, j0, frame, bp) < 1e-6


@pytest.mark.parametrize("n", [1, 2])
def test_formula_cross_validation(n):
    sp, j0, frame = workspace(n)
    rng = np.random.default_rng(4)
    for bp in [kns.BsdPoint(phi=np.zeros((n, n))), kns.random_bsd_point(n, rng, 0.5)]:
        assert wp.curvature_formula_check(sp, j0, frame, bp) < 1e-4


def test_first_two_terms_dominate():
    # The projected-variation term only makes curvature more negative.
    sp, j0, frame = workspace(1)
    bp = kns.BsdPoint(phi=np.array([[0.35 + 0.1j]]))
    full = wp.curvature_formula_terms(sp, j0, frame, bp)[0, 0, 0, 0].real
    fd = wp.curvature_fd(sp, j0, frame, bp).entries[0, 0, 0, 0].real
    assert full <= 0
    assert fd <= 1e-6


@pytest.mark.parametrize("n", [1, 2, 3])
def test_burns_bounds(n):
    sp, j0, frame = workspace(n)
    rep = wp.burns_bounds(sp, j0, frame, samples=30, seed=11)
    bound = -2.0 / n
    assert rep.max_hsc <= bound + 1e-3
    assert rep.max_bisectional <= 1e-6
    assert rep.max_paired_bisectional_excess <= 1e-3
    assert rep.max_ricci <= bound + 1e-3
    assert rep.satisfied()


def test_orthogonal_directions_degenerate_pairing():
    # With G-orthogonal directions the paired bound's right side vanishes.
    sp, j0, frame = workspace(2)
    tensor = wp.curvature_fd(sp, j0, frame, kns.BsdPoint(phi=np.zeros((2, 2))))
    _, gram_at = wp.metric_field(sp, j0, frame)
    g = gram_at(np.zeros(3, dtype=complex))
    xi = np.array([1.0, 0, 0], dtype=complex)
    eta = np.array([0, 0, 1.0], dtype=complex)
    assert abs(wp.df_inner(g, eta, xi)) < 1e-12
    assert tensor.pair(xi, eta).real <= 1e-6


def test_trace_inequality_frozen_cases():
    assert wp.trace_inequality(np.eye(3)) == (pytest.approx(3.0), pytest.approx(3.0))
    e11 = np.zeros((2, 2))
    e11[0, 0] = 1.0
    lhs, rhs = wp.trace_inequality(e11)
    assert lhs == pytest.approx(1.0)
    assert rhs == pytest.approx(0.5)


def test_trace_inequality_random_and_equality():
    rng = np.random.default_rng(5)
    for n in range(1, 7):
        for _ in range(50):
            kappa = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            lhs, rhs = wp.trace_inequality(kappa)
            assert lhs >= rhs - 1e-9 * max(1.0, lhs)
            # Eigenvalue oracle (power-mean inequality).
            lam = np.linalg.eigvalsh(kappa.conj().T @ kappa)
            assert lhs == pytest.approx(float(np.sum(lam**2)), rel=1e-10)
        q = np.linalg.qr(rng.standard_normal((n, n))
                         + 1j * rng.standard_normal((n, n)))[0]
        lhs, rhs = wp.trace_inequality(1.7 * q)
        assert lhs == pytest.approx(rhs, rel=1e-12)
