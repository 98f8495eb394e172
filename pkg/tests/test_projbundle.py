"""Projectivized bundle forms: flat models, falsifiers, fiber restriction."""

import numpy as np
import pytest

from pklab import projbundle as pb


def rand_pd(rng, r):
    g = rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r))
    return g @ g.conj().T + 0.5 * np.eye(r)


def test_flat_trivial_fubini_study():
    model = pb.constant_model(np.eye(2))
    w = 0.7 - 0.3j
    omega = pb.pk_form(model, 0.2, np.array([1.0, w]))
    assert omega[1, 1].real == pytest.approx(1.0 / (1.0 + abs(w) ** 2) ** 2)
    assert abs(omega[0, 0]) < 1e-14 and abs(omega[0, 1]) < 1e-14
    assert pb.pk_top_power(model, 0.2, np.array([1.0, w])) < 1e-14


def test_twisted_family_is_projectively_flat():
    rng = np.random.default_rng(0)
    model = pb.twisted_model(np.eye(2))
    for _ in range(20):
        t = rng.standard_normal() + 1j * rng.standard_normal()
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        v[0] = 1.0
        assert pb.projective_flatness_residual(model, t) < 1e-12
        assert pb.pk_top_power(model, t, v) < 1e-10
        assert pb.fiber_positivity_margin(model, t, v) > 0


def test_twisted_curvature_is_identity_times_form():
    # Weight |t|^2 has curvature equal to the metric itself (coefficient one).
    model = pb.twisted_model(np.eye(3), weight=1.0)
    h, _, _ = model.jets(0.37 + 0.21j)
    assert np.max(np.abs(pb.chern_curvature(model, 0.37 + 0.21j) - h)) < 1e-12
    assert pb.ricci(model, 0.37 + 0.21j).real == pytest.approx(3.0)


def test_split_model_falsifies():
    model = pb.split_twist_model([1.0, 2.0])
    assert pb.projective_flatness_residual(model, 0.5) > 0.1
    assert pb.pk_top_power(model, 0.5, np.array([1.0, 1.0])) > 1e-3
    model3 = pb.split_twist_model([1.0, 2.0, 0.5])
    assert pb.projective_flatness_residual(model3, 0.5) > 0.1
    assert pb.pk_top_power(model3, 0.5, np.ones(3, dtype=complex)) > 1e-3


def test_scaled_constant_is_flat():
    rng = np.random.default_rng(1)
    model = pb.twisted_model(rand_pd(rng, 3), weight=0.6)
    assert pb.projective_flatness_residual(model, 0.8 - 0.1j) < 1e-12


def test_rank_one_always_flat():
    model = pb.twisted_model(np.eye(1), weight=2.0)
    assert pb.projective_flatness_residual(model, 0.7 + 0.4j) == 0.0


def test_fiber_fs_all_charts():
    rng = np.random.default_rng(2)
    h0 = rand_pd(rng, 3)
    for chart in range(3):
        model = pb.BundleMetricModel(r=3, jets=pb.constant_model(h0).jets,
                                     chart=chart)
        assert pb.fiber_fs_check(model, 0.1, samples=10) < 1e-10
        # Top power vanishes in every chart of a flat model.
        v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        v[chart] = 1.0
        assert pb.pk_top_power(model, 0.1, v) < 1e-12


def test_fiber_fs_projectively_flat_family():
    model = pb.twisted_model(np.eye(2))
    assert pb.fiber_fs_check(model, 0.3, samples=10) < 1e-10


def test_ricci_matches_log_determinant():
    from pklab import _fd

    model = pb.split_twist_model([1.0, 2.0])

    def logdet(z):
        return np.array(np.log(np.linalg.det(model.jets(z[0])[0])).real)

    hess = _fd.hermitian_hessian(logdet, np.array([0.5 + 0j]), step=1e-4)
    assert pb.ricci(model, 0.5).real == pytest.approx(-hess[0, 0].real, abs=1e-6)


def test_d_closedness():
    rng = np.random.default_rng(3)
    for model in (pb.twisted_model(rand_pd(rng, 2), 0.7),
                  pb.split_twist_model([1.0, 2.0])):
        res = pb.d_closedness_residual(model, 0.3 + 0.1j, np.array([1.0, 0.4 - 0.2j]))
        assert res < 1e-6


def test_form_is_hermitian():
    rng = np.random.default_rng(4)
    model = pb.split_twist_model([1.0, 2.0, 0.5])
    v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    v[0] = 1.0
    omega = pb.pk_form(model, 0.4 + 0.3j, v)
    assert np.max(np.abs(omega - omega.conj().T)) < 1e-12


def test_chart_exclusion():
    model = pb.constant_model(np.eye(2))
    with pytest.raises(pb.ChartError):
        pb.pk_form(model, 0.1, np.array([0.0, 1.0]))
