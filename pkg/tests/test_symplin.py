"""Symplectic linear algebra substrate tests."""

import numpy as np
import pytest

from pklab import symplin as sl


def test_standard_symplectic_blocks():
    sp = sl.standard_symplectic(1)
    assert sp.form.tolist() == [[0.0, 1.0], [-1.0, 0.0]]
    sp2 = sl.standard_symplectic(2)
    assert np.array_equal(sp2.form[:2, 2:], np.eye(2))
    assert np.max(np.abs(sp2.form + sp2.form.T)) == 0.0


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_standard_symplectic_determinant(n):
    # Permutation-with-signs matrix: determinant exactly one.
    assert np.linalg.det(sl.standard_symplectic(n).form) == pytest.approx(1.0)


def test_standard_symplectic_rejects_zero():
    with pytest.raises(ValueError):
        sl.standard_symplectic(0)


def test_compatibility_standard_pair():
    sp = sl.standard_symplectic(1)
    j0 = sl.standard_complex_structure(1)
    rep = sl.compatibility_report(sp, j0)
    assert rep.compatible
    assert np.allclose(rep.metric, np.eye(2))


def test_compatibility_sign_flip():
    sp = sl.standard_symplectic(1)
    j0 = sl.standard_complex_structure(1)
    rep = sl.compatibility_report(sp, sl.ComplexStructure(J=-j0.J))
    assert not rep.compatible
    assert np.allclose(rep.metric, -np.eye(2))


def test_compatibility_dimension_mismatch():
    sp = sl.standard_symplectic(2)
    with pytest.raises(sl.DimensionMismatchError):
        sl.compatibility_report(sp, sl.standard_complex_structure(1))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_random_conjugates_stay_compatible(n):
    # Eigenvalue oracle on the metric, for symplectic conjugates of J0.
    sp = sl.standard_symplectic(n)
    rng = np.random.default_rng(11)
    for _ in range(25):
        j = sl.random_compatible_structure(sp, rng)
        rep = sl.compatibility_report(sp, j)
        assert rep.compatible
        assert rep.min_eigenvalue > 0
        p = sl.random_symplectic_matrix(sp, rng)
        assert np.max(np.abs(p.T @ sp.form @ p - sp.form)) < 1e-10


def test_type_projectors_standard():
    # dz = e1 + i e2 is an eigenvector: pi10 dz = dz, pi10 conj(dz) = 0.
    j0 = sl.standard_complex_structure(1)
    p10, p01 = sl.type_projectors(j0)
    dz = np.array([1.0, 1j])
    assert np.allclose(p10 @ dz, dz)
    assert np.allclose(p10 @ dz.conj(), 0.0)
    assert np.allclose(p10 + p01, np.eye(2))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_type_projectors_idempotent_and_rank(n):
    sp = sl.standard_symplectic(n)
    rng = np.random.default_rng(5)
    j = sl.random_compatible_structure(sp, rng)
    p10, p01 = sl.type_projectors(j)
    assert np.max(np.abs(p10 @ p10 - p10)) < 1e-12
    assert np.max(np.abs(p01 @ p01 - p01)) < 1e-12
    # Singular-value oracle for the rank.
    s = np.linalg.svd(p10, compute_uv=False)
    assert np.sum(s > 0.5) == n


@pytest.mark.parametrize("n", [1, 2, 4])
def test_unitary_frame_reproduces_form(n):
    sp = sl.standard_symplectic(n)
    rng = np.random.default_rng(3)
    for structure in [sl.standard_complex_structure(n),
                      sl.random_compatible_structure(sp, rng)]:
        frame = sl.unitary_frame(sp, structure)
        assert sl.frame_form_residual(sp, frame) < 1e-12
        k = structure.covector_action()
        assert np.max(np.abs(frame.columns @ k.T - 1j * frame.columns)) < 1e-12


def test_hermitian_pairing_positive_on_10():
    # The dual pairing is positive definite on (1,0) covectors and the (1,0)
    # space of one structure meets the (0,1) space of another only in zero.
    n = 2
    sp = sl.standard_symplectic(n)
    rng = np.random.default_rng(8)
    ja = sl.random_compatible_structure(sp, rng)
    jb = sl.random_compatible_structure(sp, rng)
    fa = sl.unitary_frame(sp, ja)
    gram = sl.dual_metric_gram(sp, ja, fa.columns)
    assert np.linalg.eigvalsh(0.5 * (gram + gram.conj().T)).min() > 0.9
    fb = sl.unitary_frame(sp, jb)
    stacked = np.vstack([fa.columns, fb.columns.conj()])  # (1,0) of a, (0,1) of b
    s = np.linalg.svd(stacked, compute_uv=False)
    assert s.min() > 1e-8  # trivial intersection


def test_bad_form_rejected():
    with pytest.raises(ValueError):
        sl.SymplecticSpace(n=1, form=np.array([[0.0, 1.0], [-1.0, 1e-15]]))
    with pytest.raises(sl.DegenerateFormError):
        sl.SymplecticSpace(n=1, form=np.zeros((2, 2)))


def test_bad_structure_rejected():
    with pytest.raises(ValueError):
        sl.ComplexStructure(J=np.eye(2))
