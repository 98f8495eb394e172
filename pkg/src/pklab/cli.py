"""Verification harness: named suites, seeded configs, machine-readable reports.

Every check record carries an anchor string naming the certified property
(the README property index maps anchors to plain statements) or the literal
"plumbing".  Reports are deterministic given the configuration: the seeded
generator is the only entropy source and wall time is kept out of the
canonical serialization.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import fibration as fib
from . import geodesics as geo
from . import higgs as hg
from . import kns
from . import projbundle as pb
from . import symplin as sl
from . import wpcurv as wp


class UsageError(ValueError):
    pass


DEFAULT_TOLERANCES = {
    "roundtrip": 1e-10,
    "chart-agreement": 1e-10,
    "bsd-symmetry": 1e-10,
    "bsd-radius-margin": 1e-12,
    "berndtsson-invariance": 1e-10,
    "holomorphy-probe": 1e-6,
    "motion-roundtrip": 1e-12,
    "motion-type": 1e-10,
    "algebraic-identity": 1e-10,
    "fd-identity": 1e-5,
    "hsc-margin": 1e-3,
    "bisectional": 1e-6,
    "ricci-margin": 1e-3,
    "kahler-closedness": 1e-6,
    "curvature-formula": 1e-4,
    "curvature-symmetry": 1e-6,
    "ratio-spread": 1e-8,
    "trace-inequality": 1e-9,
    "elliptic-exact": 1e-12,
    "wp-constancy": 1e-8,
    "schumacher-flat": 1e-8,
    "schumacher-perturbed": 1e-6,
    "bochner": 1e-10,
    "pk-zero": 1e-8,
    "pk-witness": 1e-3,
    "geodesic-residual": 1e-8,
    "ma-degenerate": 1e-8,
    "ma-witness": 1e-3,
    "legendre-grid": 2e-3,
    "dual-linearity-ratio": 10.0,
    "ma-order-low": 3.3,
    "ma-order-high": 4.7,
    "bm-positivity": 0.0,
    "mabuchi-positivity": -1e-10,
    "log-convexity": -1e-8,
    "projflat-zero": 1e-10,
    "fs-agreement": 1e-10,
    "d-closedness": 1e-6,
}


def parse_model_spec(spec: str) -> tuple[str, dict]:
    """Parse "family key=val key=val" into a family name and parameters."""
    parts = spec.split()
    if not parts:
        raise UsageError("empty model specification")
    family = parts[0]
    params: dict = {}
    for item in parts[1:]:
        if "=" not in item:
            raise UsageError(f"model parameter {item!r} must be key=value")
        key, val = item.split("=", 1)
        try:
            params[key] = int(val) if val.isdigit() else float(val)
        except ValueError:
            params[key] = val
    return family, params


@dataclass(frozen=True)
class SuiteConfig:
    suite: str
    seed: int = 7
    n: int = 2
    samples: int = 100
    tolerances: dict = field(default_factory=dict)
    grid: int = 64
    model: str | None = None

    def __post_init__(self):
        if self.suite not in SUITES and self.suite != "all":
            raise UsageError(f"unknown suite {self.suite!r}; known: "
                             f"{', '.join(sorted(SUITES))}, all")
        if self.n < 1:
            raise UsageError("n must be >= 1")
        if self.samples < 1:
            raise UsageError("samples must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        if self.model is not None:
            family, _ = parse_model_spec(self.model)
            if family not in fib.MODEL_FAMILIES and family not in (
                    "constant", "twisted", "split"):
                raise UsageError(f"unknown model family {family!r}")
        for key, val in self.tolerances.items():
            if key not in DEFAULT_TOLERANCES:
                raise UsageError(f"unknown tolerance key {key!r}")
            if key in ("dual-linearity-ratio", "ma-order-low"):
                if val > DEFAULT_TOLERANCES[key]:
                    raise UsageError("lower-bound tolerances may only be loosened downward")
            elif val < DEFAULT_TOLERANCES[key]:
                raise UsageError(f"tolerance {key!r} may only be loosened")


@dataclass
class CheckRecord:
    name: str
    anchor: str
    status: str             # pass | fail | inconclusive
    value: float
    threshold: float
    comparison: str = "<="
    witness: dict | None = None


@dataclass
class SuiteReport:
    suite: str
    config: dict
    overrides: list
    checks: list
    wall_time_s: float

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.checks)


class Tolerances:
    def __init__(self, cfg: SuiteConfig):
        self.cfg = cfg
        self.overrides = sorted(cfg.tolerances)

    def __call__(self, key: str) -> float:
        return self.cfg.tolerances.get(key, DEFAULT_TOLERANCES[key])


def _jsonable(obj):
    """Witnesses must replay from the report: numbers become plain floats and
    complex entries decimal strings, row-major."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.complexfloating, complex)):
        c = complex(obj)
        return f"{c.real!r}{c.imag:+}j"
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _check(name, anchor, value, threshold, comparison="<=", witness=None):
    value = float(value)
    threshold = float(threshold)
    if comparison == "<=":
        ok = value <= threshold
    elif comparison == ">=":
        ok = value >= threshold
    else:
        raise ValueError(comparison)
    return CheckRecord(name=name, anchor=anchor, status="pass" if ok else "fail",
                       value=value, threshold=threshold, comparison=comparison,
                       witness=_jsonable(witness) if not ok else None)


def _workspace(n: int):
    space = sl.standard_symplectic(n)
    j0 = sl.standard_complex_structure(n)
    frame = sl.unitary_frame(space, j0)
    return space, j0, frame


# ---------------------------------------------------------------------------
# Suite implementations
# ---------------------------------------------------------------------------

def suite_kns_roundtrip(cfg: SuiteConfig, tol: Tolerances):
    n = cfg.n
    rng = np.random.default_rng([cfg.seed, 1])
    space, j0, frame = _workspace(n)
    worst_rt = worst_agree = worst_sym = 0.0
    worst_radius = -np.inf
    witness = None
    for _ in range(cfg.samples):
        jp = sl.random_compatible_structure(space, rng)
        pt = kns.kns_tensor(j0, jp, frame)
        worst_sym = max(worst_sym, float(np.max(np.abs(pt.phi - pt.phi.T))))
        worst_radius = max(worst_radius, pt.radius)
        proj = kns.kns_tensor_by_projection(j0, jp, frame)
        agree = float(np.max(np.abs(proj - pt.phi)))
        back = kns.structure_from_bsd(j0, frame, pt)
        rt = float(np.max(np.abs(back.J - jp.J)))
        if rt > worst_rt:
            worst_rt = rt
            witness = {"J": jp.J.tolist()}
        worst_agree = max(worst_agree, agree)
    checks = [
        _check("roundtrip-error", "kns-bijectivity", worst_rt, tol("roundtrip"),
               witness=witness),
        _check("cayley-vs-projection", "kns-two-constructions", worst_agree,
               tol("chart-agreement")),
        _check("coordinate-symmetry", "bsd-membership", worst_sym, tol("bsd-symmetry")),
        _check("coordinate-radius", "bsd-membership", worst_radius,
               1.0 - tol("bsd-radius-margin")),
    ]

    # Berndtsson-style tensor invariance under complex-linear reparametrization.
    worst_inv = 0.0
    for _ in range(20):
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) + 3 * np.eye(n)
        b = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        s = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)) + 3 * np.eye(n)
        t1 = kns.RealLinearMap(linear_part=a, antilinear_part=b)
        ts = kns.RealLinearMap(linear_part=a @ s, antilinear_part=b @ s.conj())
        lhs = kns.berndtsson_tensor(ts)
        rhs = np.linalg.solve(s, kns.berndtsson_tensor(t1) @ s.conj())
        worst_inv = max(worst_inv, float(np.max(np.abs(lhs - rhs))))
    checks.append(_check("tensor-invariance", "linear-map-tensor", worst_inv,
                         tol("berndtsson-invariance")))

    base = kns.random_bsd_point(n, rng, 0.4)
    direction = kns.sym_from_coords(rng.standard_normal(kns.sym_dim(n))
                                    + 1j * rng.standard_normal(kns.sym_dim(n)), n)
    probe = kns.holomorphy_probe(space, j0, frame, base, direction)
    checks.append(_check("chart-transition-holomorphy", "chart-holomorphy", probe,
                         tol("holomorphy-probe")))

    worst_motion = 0.0
    worst_type = 0.0
    for _ in range(5):
        pt = kns.random_bsd_point(n, rng, 0.6)
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        zeta = kns.holomorphic_motion(pt, z)
        worst_motion = max(worst_motion,
                           float(np.max(np.abs(kns.inverse_motion(pt, zeta) - z))))
        worst_type = max(worst_type, kns.motion_form_residual(pt, zeta))
    checks.append(_check("motion-roundtrip", "holomorphic-motion", worst_motion,
                         tol("motion-roundtrip")))
    checks.append(_check("motion-form-type", "motion-form-type", worst_type,
                         tol("motion-type")))
    return checks


def suite_higgs(cfg: SuiteConfig, tol: Tolerances):
    n = min(cfg.n, 2)
    rng = np.random.default_rng([cfg.seed, 2])
    space, j0, frame = _workspace(n)
    checks = []
    points = [kns.BsdPoint(phi=np.zeros((n, n))), kns.random_bsd_point(n, rng, 0.45)]
    for k in [kk for kk in (0, 1, 2) if kk <= 2 * n]:
        field_ = hg.HiggsField(space, j0, frame, k)
        alg = fd = 0.0
        for bp in points:
            coords = kns.coords_from_sym(bp.phi)
            frame_k = field_.frame_at(coords)
            alg = max(alg, hg.theta_square_residual(frame_k),
                      hg.adjoint_check(frame_k), hg.type_block_residual(frame_k))
            split = hg.connection_split_check(field_, coords)
            flat = hg.flatness_check(space, j0, frame, bp, k)
            curv = 0.0
            for j in range(field_.nsym):
                for kb in range(field_.nsym):
                    curv = max(curv, float(np.max(np.abs(
                        hg.curvature_operator(field_, coords, j, kb)
                        - hg.curvature_algebraic(frame_k, j, kb)))))
            fd = max(fd, split.residual, flat.residual, curv,
                     hg.chern_compatibility_check(field_, coords),
                     hg.theta_holomorphy_check(field_, coords))
        checks.append(_check(f"algebraic-identities-k{k}", "higgs-structure", alg,
                             tol("algebraic-identity")))
        checks.append(_check(f"connection-identities-k{k}", "higgs-structure", fd,
                             tol("fd-identity")))
    return checks


def suite_burns_bounds(cfg: SuiteConfig, tol: Tolerances):
    n = cfg.n
    space, j0, frame = _workspace(n)
    rep = wp.burns_bounds(space, j0, frame, samples=cfg.samples,
                          seed=int(np.random.default_rng([cfg.seed, 3]).integers(2**31)))
    bound = -2.0 / n
    rng = np.random.default_rng([cfg.seed, 31])
    closed = wp.kahler_closedness_residual(space, j0, frame,
                                           kns.random_bsd_point(n, rng, 0.5))
    return [
        _check("max-holomorphic-sectional", "sectional-bound", rep.max_hsc,
               bound + tol("hsc-margin"), witness=rep.worst_hsc_witness),
        _check("max-bisectional", "bisectional-nonpositive", rep.max_bisectional,
               tol("bisectional")),
        _check("paired-bisectional-excess", "bisectional-paired-bound",
               rep.max_paired_bisectional_excess, tol("hsc-margin")),
        _check("max-ricci", "ricci-bound", rep.max_ricci, bound + tol("ricci-margin")),
        _check("metric-closedness", "metric-kahler", closed, tol("kahler-closedness")),
    ]


def suite_curvature_formula(cfg: SuiteConfig, tol: Tolerances):
    n = min(cfg.n, 2)
    rng = np.random.default_rng([cfg.seed, 4])
    space, j0, frame = _workspace(n)
    count = max(1, min(20, cfg.samples // 5))
    worst = 0.0
    worst_sym = 0.0
    witness = None
    for _ in range(count):
        bp = kns.random_bsd_point(n, rng, 0.55)
        resid = wp.curvature_formula_check(space, j0, frame, bp)
        tensor = wp.curvature_fd(space, j0, frame, bp)
        worst_sym = max(worst_sym, tensor.kahler_symmetry_defect())
        if resid > worst:
            worst = resid
            witness = {"basepoint": bp.phi.tolist()}
    checks = [
        _check("fd-vs-formula", "curvature-three-terms", worst,
               tol("curvature-formula"), witness=witness),
        _check("kahler-symmetries", "curvature-symmetry", worst_sym,
               tol("curvature-symmetry")),
    ]
    degrees = [k for k in (2,) if k <= 2 * n - 1] or []
    for k in degrees:
        bp = kns.random_bsd_point(n, rng, 0.45)
        rep = wp.df_metric(space, j0, frame, bp, normalization=k)
        if rep.degenerate:
            continue
        checks.append(_check(f"degree-ratio-spread-k{k}", "metric-degree-ratio",
                             rep.ratio_spread, tol("ratio-spread")))
        checks.append(CheckRecord(name=f"degree-ratio-value-k{k}",
                                  anchor="metric-degree-ratio", status="pass",
                                  value=float(rep.ratio_to_degree1),
                                  threshold=float("nan"), comparison="recorded"))
    return checks


def suite_trace_inequality(cfg: SuiteConfig, tol: Tolerances):
    rng = np.random.default_rng([cfg.seed, 5])
    worst_gap = -np.inf
    witness = None
    for n in range(1, 7):
        for _ in range(max(1, cfg.samples)):
            kappa = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            lhs, rhs = wp.trace_inequality(kappa)
            scale = max(1.0, lhs)
            gap = (rhs - lhs) / scale
            if gap > worst_gap:
                worst_gap = gap
                witness = {"kappa": [[str(x) for x in row] for row in kappa.tolist()]}
    worst_eq = 0.0
    for n in range(1, 7):
        for _ in range(50):
            q = np.linalg.qr(rng.standard_normal((n, n))
                             + 1j * rng.standard_normal((n, n)))[0]
            c = rng.uniform(0.2, 3.0)
            lhs, rhs = wp.trace_inequality(c * q)
            worst_eq = max(worst_eq, abs(lhs - rhs) / max(1.0, lhs))
    return [
        _check("pointwise-inequality", "trace-power-inequality", worst_gap,
               tol("trace-inequality"), witness=witness),
        _check("equality-on-scalar", "trace-power-equality", worst_eq,
               tol("trace-inequality")),
    ]


_MODEL_CACHE: dict = {}


def _cached_model(name: str, builder):
    if name not in _MODEL_CACHE:
        _MODEL_CACHE[name] = builder()
    return _MODEL_CACHE[name]


def suite_elliptic_family(cfg: SuiteConfig, tol: Tolerances):
    rng = np.random.default_rng([cfg.seed, 6])
    model = _cached_model(f"elliptic-{cfg.grid}", lambda: fib.elliptic_model(cfg.grid))
    worst_agree = worst_type = worst_top = worst_c = 0.0
    for _ in range(max(1, cfg.samples // 2)):
        t = rng.uniform(-1.5, 1.5) + 1j * rng.uniform(0.3, 3.0)
        slc = fib.elliptic_family(t)
        worst_agree = max(worst_agree, slc.agreement)
        worst_type = max(worst_type, slc.type_residual)
        worst_top = max(worst_top, slc.top_power)
        pts = (rng.standard_normal((1, 8)) + 1j * rng.standard_normal((1, 8)))
        _, _, _, _, _, c, _ = fib.evaluate_fields(model, t, pts)
        worst_c = max(worst_c, float(np.max(np.abs(c))))
    checks = [
        _check("representation-agreement", "elliptic-two-forms", worst_agree,
               tol("elliptic-exact")),
        _check("form-type", "elliptic-form-type", worst_type, tol("elliptic-exact")),
        _check("top-power", "elliptic-degenerate", worst_top, tol("elliptic-exact")),
        _check("geodesic-curvature", "elliptic-degenerate", worst_c,
               tol("elliptic-exact")),
    ]
    values = []
    for s in (0.5, 1.0, 2.0, 4.0):
        g = fib.wp_fiber_metric(model, 1j * s)[0, 0].real
        values.append(g * s * s)
    spread = (max(values) - min(values)) / abs(np.mean(values))
    checks.append(_check("wp-coefficient-constancy", "wp-fiber-scaling", spread,
                         tol("wp-constancy"),
                         witness=None))
    checks.append(CheckRecord(name="wp-coefficient-value", anchor="wp-fiber-scaling",
                              status="pass", value=float(np.mean(values)),
                              threshold=float("nan"), comparison="recorded"))
    worst_bochner = 0.0
    worst_pair = 0.0
    fiber = fib.SpectralFiber(model.lattice(1j), model.grid)
    for _ in range(10):
        coeffs = rng.standard_normal(4)
        xg = fiber.points_grid[0]
        phi = (coeffs[0] * np.cos(2 * np.pi * xg.real)
               + coeffs[1] * np.sin(2 * np.pi * xg.real)
               + coeffs[2] * np.cos(2 * np.pi * xg.imag)
               + coeffs[3] * np.cos(2 * np.pi * (xg.real + xg.imag)))
        nk, nb, _ = fib.bkn_identity_check(model, 1j, phi)
        worst_bochner = max(worst_bochner, abs(nk - nb))
        worst_pair = max(worst_pair, abs(fib.kappa_phi_pairing(model, 1j, phi)))
    checks.append(_check("flat-fiber-bochner", "flat-fiber-bochner", worst_bochner,
                         tol("bochner")))
    checks.append(_check("variation-pairing", "flat-fiber-pairing", worst_pair,
                         tol("bochner")))
    return checks


def suite_schumacher(cfg: SuiteConfig, tol: Tolerances):
    model = _cached_model(f"elliptic-{cfg.grid}", lambda: fib.elliptic_model(cfg.grid))
    if cfg.model is not None:
        family, params = parse_model_spec(cfg.model)
        if family not in fib.MODEL_FAMILIES:
            raise UsageError(f"suite schumacher needs a fibration family, got {family!r}")
        params.setdefault("grid", cfg.grid)
        pert = fib.build_model(family, **params)
        if not pert.proper:
            raise UsageError("schumacher requires a torus-fiber model")
    else:
        pert = _cached_model(f"perturbed-{cfg.grid}",
                             lambda: fib.perturbed_torus_model(eps=0.05, grid=cfg.grid))
    t_flat = 0.2 + 1.1j
    t_pert = 0.3 + 1.2j
    rep_flat = fib.schumacher_residual(model, t_flat)
    rep_pert = fib.schumacher_residual(pert, t_pert)
    lhs, rhs, fs_res = fib.fs_pushforward_check(pert, t_pert)
    avg_lhs, avg_rhs = fib.average_horizontal_positivity(pert, t_pert)
    mb = fib.bracket_mixed_check(pert, t_pert, np.array([0.23 + 0.11j]))
    dbar = fib.dbar_closedness_residual(pert, t_pert)
    return [
        _check("flat-family-residual", "schumacher-identity", rep_flat.residual,
               tol("schumacher-flat")),
        _check("perturbed-residual", "schumacher-identity", rep_pert.residual,
               tol("schumacher-perturbed")),
        _check("pushforward-identity", "metric-pushforward", fs_res,
               tol("schumacher-perturbed")),
        _check("average-positivity", "horizontal-average-positivity",
               -min(avg_lhs, avg_rhs), tol("schumacher-perturbed")),
        _check("average-identity", "horizontal-average-positivity",
               abs(avg_lhs - avg_rhs), tol("schumacher-perturbed")),
        _check("bracket-verticality", "mixed-bracket", mb.verticality_residual,
               tol("schumacher-flat")),
        _check("bracket-contraction", "mixed-bracket", mb.contraction_residual,
               tol("schumacher-perturbed")),
        _check("variation-dbar-closed", "variation-closedness", dbar,
               tol("schumacher-flat")),
    ]


def _pk_suite_models(grid: int):
    small = min(grid, 16)
    rng = np.random.default_rng(99)
    a0 = np.array([[2.0, 0.4 + 0.1j], [0.4 - 0.1j, 1.0]])
    a1 = np.array([[1.0, -0.3j], [0.3j, 2.5]])
    geod = geo.hermitian_geodesic(a0, a1)
    lin = geo.linear_hermitian_path(a0, a1)
    _ = rng
    return [
        (_cached_model(f"elliptic-{small}", lambda: fib.elliptic_model(small)), True),
        (_cached_model(f"theta-{small}", lambda: fib.theta_weight_model(small)), True),
        (fib.hermitian_quadratic_model(geod, 2, name="hermitian-geodesic"), True),
        (_cached_model("cross", lambda: fib.cross_term_model()), False),
        (_cached_model(f"pert-{small}",
                       lambda: fib.perturbed_torus_model(eps=0.05, grid=small)), False),
        (fib.hermitian_quadratic_model(lin, 2, name="hermitian-linear"), False),
    ]


def suite_pk_equivalence(cfg: SuiteConfig, tol: Tolerances):
    checks = []
    for model, expect_pk in _pk_suite_models(cfg.grid):
        ts = [0.25 + 1.1j, 1j] if model.proper else [0.3, 0.62]
        rep = fib.pk_residual(model, ts)
        both = max(rep.max_top_power, rep.max_c)
        either = min(rep.max_top_power, rep.max_c)
        if expect_pk:
            checks.append(_check(f"pk-{model.name}", "pk-equivalence", both,
                                 tol("pk-zero")))
        else:
            checks.append(_check(f"nonpk-{model.name}", "pk-equivalence", either,
                                 tol("pk-witness"), comparison=">="))
    return checks


def suite_geodesics(cfg: SuiteConfig, tol: Tolerances):
    rng = np.random.default_rng([cfg.seed, 8])
    worst_theta = worst_end = 0.0
    pairs = max(1, cfg.samples // 2)
    for _ in range(pairs):
        n = int(rng.integers(1, 6))
        g0 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        g1 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a0 = g0 @ g0.conj().T + 0.4 * np.eye(n)
        a1 = g1 @ g1.conj().T + 0.4 * np.eye(n)
        path = geo.hermitian_geodesic(a0, a1)
        worst_end = max(worst_end,
                        float(np.max(np.abs(path(0.0)[0] - a0))),
                        float(np.max(np.abs(path(1.0)[0] - a1))))
        for t in np.linspace(0.0, 1.0, 11):
            worst_theta = max(worst_theta,
                              float(np.max(np.abs(geo.theta_tt(path, t)))))
    checks = [
        _check("geodesic-curvature-residual", "matrix-geodesic", worst_theta,
               tol("geodesic-residual")),
        _check("geodesic-endpoints", "matrix-geodesic", worst_end,
               tol("geodesic-residual")),
    ]

    # Degeneracy equivalence, both truth values, plus duality preservation.
    # Falsification takes the largest determinant over several points per
    # path before the worst case over paths: a single sample may land near a
    # zero crossing of a non-vanishing determinant.
    ma_geo = ma_dual = 0.0
    ma_lin = ma_lin_dual = np.inf
    for _ in range(20):
        n = int(rng.integers(1, 4))
        g0 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        g1 = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a0 = g0 @ g0.conj().T + 0.6 * np.eye(n)
        a1 = g1 @ g1.conj().T + 0.6 * np.eye(n)
        geod = geo.hermitian_geodesic(a0, a1)
        lin = geo.linear_hermitian_path(a0, a1)
        dual = geo.hermitian_geodesic(geo.complex_legendre(a0), geo.complex_legendre(a1))
        lind = geo.linear_hermitian_path(geo.complex_legendre(a0), geo.complex_legendre(a1))
        lin_best = lind_best = 0.0
        for _ in range(5):
            z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            tau = complex(rng.uniform(0.2, 0.8), rng.uniform(-1, 1))
            ma_geo = max(ma_geo,
                         abs(geo.ma_determinant(geo.QuadraticPotential(geod), tau, z)))
            ma_dual = max(ma_dual,
                          abs(geo.ma_determinant(geo.QuadraticPotential(dual), tau, z)))
            lin_best = max(lin_best,
                           abs(geo.ma_determinant(geo.QuadraticPotential(lin), tau, z)))
            lind_best = max(lind_best,
                            abs(geo.ma_determinant(geo.QuadraticPotential(lind), tau, z)))
        ma_lin = min(ma_lin, lin_best)
        ma_lin_dual = min(ma_lin_dual, lind_best)
    checks += [
        _check("ma-along-geodesic", "geodesic-degeneracy", ma_geo, tol("ma-degenerate")),
        _check("ma-along-linear", "geodesic-degeneracy", ma_lin, tol("ma-witness"),
               comparison=">="),
        _check("ma-dual-geodesic", "legendre-duality", ma_dual, tol("ma-degenerate")),
        _check("ma-dual-linear", "legendre-duality", ma_lin_dual, tol("ma-witness"),
               comparison=">="),
    ]

    grid = geo.ConvexGrid.from_function(lambda x: x**2, -5, 5, 512)
    dual = geo.real_legendre(grid)
    err = float(np.max(np.abs(dual.values - dual.xs**2 / 4)))
    checks.append(_check("legendre-closed-form", "convex-conjugate", err,
                         tol("legendre-grid")))
    ddual = geo.real_legendre(dual, size=512)
    back = np.interp(ddual.xs, grid.xs, grid.values)
    inv_err = float(np.max(np.abs(back - ddual.values)[10:-10]))
    checks.append(_check("legendre-involution", "convex-conjugate", inv_err,
                         tol("legendre-grid")))

    a0v, a1v = 1.0, 4.0
    p0 = geo.ConvexGrid.from_function(lambda x: a0v * x**2, -5, 5, 512)
    p1 = geo.ConvexGrid.from_function(lambda x: a1v * x**2, -5, 5, 512)
    mid = geo.convex_geodesic(p0, p1, 0.5)
    bmid = 0.5 / a1v + 0.5 / a0v
    checks.append(_check("convex-geodesic-closed-form", "convex-geodesic",
                         float(np.max(np.abs(mid.values - mid.xs**2 / bmid))),
                         tol("legendre-grid")))
    d_geo = geo.dual_path_second_derivative(p0, p1, lambda t: geo.convex_geodesic(p0, p1, t))
    d_lin = geo.dual_path_second_derivative(
        p0, p1, lambda t: geo.ConvexGrid(xs=p0.xs, values=(1 - t) * p0.values + t * p1.values))
    checks.append(_check("dual-linearity-ratio", "dual-linearity",
                         d_lin / max(d_geo, 1e-300), tol("dual-linearity-ratio"),
                         comparison=">="))

    f_geo = lambda t, xs: xs**2 / (t / a1v + (1 - t) / a0v)
    f_lin = lambda t, xs: (1 - t) * a0v * xs**2 + t * a1v * xs**2
    r_coarse = geo.ma_grid_residual(f_geo, (0.2, 0.8), (-2, 2), nt=129, nx=129)
    r_fine = geo.ma_grid_residual(f_geo, (0.2, 0.8), (-2, 2), nt=257, nx=257)
    ratio = r_coarse / max(r_fine, 1e-300)
    checks.append(_check("ma-refinement-order-low", "ma-order", ratio,
                         tol("ma-order-low"), comparison=">="))
    checks.append(_check("ma-refinement-order-high", "ma-order", ratio,
                         tol("ma-order-high")))
    r_lin = geo.ma_grid_residual(f_lin, (0.2, 0.8), (-2, 2), nt=129, nx=129)
    checks.append(_check("ma-linear-control", "ma-order",
                         r_lin / max(r_coarse, 1e-300), 10.0, comparison=">="))

    probe = geo.gradient_image_probe(
        geo.ConvexGrid.from_function(lambda x: x**4 + x**2, -3, 3, 401), pairs=100,
        seed=cfg.seed % 2**31)
    checks.append(_check("gradient-image-midpoints", "gradient-image-convexity",
                         probe.members, probe.tested_pairs, comparison=">="))
    return checks


def suite_brunn_minkowski(cfg: SuiteConfig, tol: Tolerances):
    rng = np.random.default_rng([cfg.seed, 9])
    checks = []
    for n in (2, 3):
        basis = geo.symmetric_basis(n)
        worst = np.inf
        for _ in range(cfg.samples):
            g = rng.standard_normal((n, n))
            a = g @ g.T + 0.3 * np.eye(n)
            point = np.array([a[i, j] for i in range(n) for j in range(i, n)])
            cone = geo.ConeBasis(basis=basis, point=point)
            worst = min(worst, float(np.linalg.eigvalsh(geo.bm_hessian(cone)).min()))
        checks.append(_check(f"hessian-min-eig-n{n}", "logdet-convexity", worst,
                             tol("bm-positivity"), comparison=">="))
    worst_rho = np.inf
    worst_margin = np.inf
    for _ in range(20):
        n = int(rng.integers(1, 4))
        g0 = rng.standard_normal((n, n))
        g1 = rng.standard_normal((n, n))
        h0 = g0 @ g0.T + 0.4 * np.eye(n)
        h1 = g1 @ g1.T + 0.4 * np.eye(n)
        rep = geo.mabuchi_profile(h0, h1, np.linspace(0.05, 0.95, 19), volume=1.0)
        worst_rho = min(worst_rho, rep.min_rho)
        worst_margin = min(worst_margin, rep.log_convexity_margin)
    checks.append(_check("profile-nonnegative", "energy-convexity", worst_rho,
                         tol("mabuchi-positivity"), comparison=">="))
    checks.append(_check("profile-log-convexity", "energy-convexity", worst_margin,
                         tol("log-convexity"), comparison=">="))
    return checks


def suite_projbundle(cfg: SuiteConfig, tol: Tolerances):
    rng = np.random.default_rng([cfg.seed, 10])
    checks = []
    flat_models = []
    for r in (2, 3):
        g = rng.standard_normal((r, r)) + 1j * rng.standard_normal((r, r))
        h0 = g @ g.conj().T + 0.5 * np.eye(r)
        flat_models.append(pb.twisted_model(h0, weight=0.8, name=f"twisted-r{r}"))
        flat_models.append(pb.constant_model(np.eye(r), name=f"flat-r{r}"))
    worst_top = 0.0
    worst_fs = 0.0
    worst_pos = np.inf
    worst_flat = 0.0
    for model in flat_models:
        for _ in range(max(1, cfg.samples // len(flat_models) // 4)):
            t = rng.standard_normal() + 1j * rng.standard_normal()
            for _ in range(4):
                v = rng.standard_normal(model.r) + 1j * rng.standard_normal(model.r)
                v[model.chart] = 1.0
                worst_top = max(worst_top, pb.pk_top_power(model, t, v))
                worst_pos = min(worst_pos, pb.fiber_positivity_margin(model, t, v))
            worst_flat = max(worst_flat, pb.projective_flatness_residual(model, t))
        worst_fs = max(worst_fs, pb.fiber_fs_check(model, 0.3, samples=8,
                                                   seed=cfg.seed % 2**31))
    checks += [
        _check("flat-top-power", "projflat-degenerate", worst_top, tol("projflat-zero")),
        _check("flat-residual", "projflat-degenerate", worst_flat, tol("projflat-zero")),
        _check("fiber-positivity", "projflat-degenerate", worst_pos, 1e-6,
               comparison=">="),
        _check("fiber-fubini-study", "fiber-restriction", worst_fs,
               tol("fs-agreement")),
    ]
    for weights in ((1.0, 2.0), (1.0, 2.0, 0.5)):
        model = pb.split_twist_model(weights)
        resid = pb.projective_flatness_residual(model, 0.5)
        top = pb.pk_top_power(model, 0.5, np.ones(model.r, dtype=complex))
        checks.append(_check(f"falsifier-residual-r{model.r}", "projflat-falsifier",
                             resid, 0.1, comparison=">="))
        checks.append(_check(f"falsifier-top-power-r{model.r}", "projflat-falsifier",
                             top, tol("pk-witness"), comparison=">="))
    dmax = 0.0
    for model in [flat_models[0], pb.split_twist_model((1.0, 2.0))]:
        dmax = max(dmax, pb.d_closedness_residual(model, 0.3 + 0.1j,
                                                  np.array([1.0, 0.4 - 0.2j])))
    checks.append(_check("form-closedness", "form-closedness", dmax,
                         tol("d-closedness")))
    rank1 = pb.twisted_model(np.eye(1), weight=2.0)
    checks.append(_check("rank-one-flatness", "projflat-degenerate",
                         pb.projective_flatness_residual(rank1, 0.7 + 0.4j),
                         tol("projflat-zero")))
    if cfg.model is not None:
        family, params = parse_model_spec(cfg.model)
        if family in ("constant", "twisted", "split"):
            model = pb.build_bundle_model(family, **params)
            resid = pb.projective_flatness_residual(model, 0.4 + 0.2j)
            v = np.ones(model.r, dtype=complex)
            top = pb.pk_top_power(model, 0.4 + 0.2j, v)
            # The two degeneracy detectors must agree on the configured model.
            consistent = 0.0 if (resid < 1e-8) == (top < 1e-8) else 1.0
            checks.append(_check("configured-model-consistency", "projflat-degenerate",
                                 consistent, 0.5,
                                 witness={"family": family, "residual": resid,
                                          "top_power": top}))
    return checks


SUITES = {
    "kns-roundtrip": suite_kns_roundtrip,
    "higgs": suite_higgs,
    "burns-bounds": suite_burns_bounds,
    "curvature-formula": suite_curvature_formula,
    "trace-inequality": suite_trace_inequality,
    "elliptic-family": suite_elliptic_family,
    "schumacher": suite_schumacher,
    "pk-equivalence": suite_pk_equivalence,
    "geodesics": suite_geodesics,
    "brunn-minkowski": suite_brunn_minkowski,
    "projbundle": suite_projbundle,
}


def run_suite(config: SuiteConfig) -> SuiteReport:
    """Execute the named suite (or all of them) and collect check records.

    Checks of distinct sub-suites run concurrently; records are merged in
    registry order so reports are deterministic.
    """
    start = time.perf_counter()
    tol = Tolerances(config)
    if config.suite == "all":
        names = list(SUITES)
    else:
        names = [config.suite]
    results: list[CheckRecord] = []
    with ThreadPoolExecutor(max_workers=min(4, len(names))) as pool:
        futures = [pool.submit(SUITES[name], config, tol) for name in names]
        for name, fut in zip(names, futures):
            for record in fut.result():
                prefix = f"{name}/" if config.suite == "all" else ""
                record.name = prefix + record.name
                results.append(record)
    elapsed = time.perf_counter() - start
    cfg_echo = {"suite": config.suite, "seed": config.seed, "n": config.n,
                "samples": config.samples, "grid": config.grid,
                "model": config.model,
                "tolerances": dict(sorted(config.tolerances.items()))}
    return SuiteReport(suite=config.suite, config=cfg_echo,
                       overrides=[f"override:{k}" for k in sorted(config.tolerances)],
                       checks=results, wall_time_s=elapsed)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def report_payload(report: SuiteReport) -> dict:
    """Canonical nested structure; wall time is excluded so identical configs
    produce byte-identical files."""
    return {
        "suite": report.suite,
        "config": report.config,
        "overrides": report.overrides,
        "passed": report.passed,
        "checks": [asdict(c) for c in report.checks],
    }


def emit_report(report: SuiteReport, fmt: str, path: str | Path) -> Path:
    path = Path(path)
    if fmt == "json":
        text = json.dumps(report_payload(report), indent=2) + "\n"
        path.write_text(text)
    elif fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["name", "anchor", "status", "value", "threshold",
                         "comparison"])
        for c in report.checks:
            writer.writerow([c.name, c.anchor, c.status, repr(c.value),
                             repr(c.threshold), c.comparison])
        path.write_text(buf.getvalue())
    else:
        raise UsageError(f"unknown format {fmt!r}")
    return path


# ---------------------------------------------------------------------------
# Plot data
# ---------------------------------------------------------------------------

def profile_wp_coefficient(config: SuiteConfig):
    model = _cached_model(f"elliptic-{config.grid}",
                          lambda: fib.elliptic_model(config.grid))
    rows = []
    for s in np.linspace(0.5, 4.0, 15):
        g = fib.wp_fiber_metric(model, 1j * s)[0, 0].real
        rows.append((float(s), float(g)))
    return ["im_t", "wp_coefficient"], rows


def profile_ma_refinement(config: SuiteConfig):
    f_geo = lambda t, xs: xs**2 / (t / 4.0 + (1 - t) / 1.0)
    rows = []
    for m in (17, 33, 65, 129, 257):
        h = 4.0 / (m - 1)
        rows.append((float(h), geo.ma_grid_residual(f_geo, (0.2, 0.8), (-2, 2),
                                                    nt=m, nx=m)))
    return ["step", "ma_residual"], rows


def profile_burns_hsc(config: SuiteConfig):
    space, j0, frame = _workspace(config.n)
    rng = np.random.default_rng([config.seed, 30])
    rows = []
    for _ in range(min(config.samples, 40)):
        bp = kns.random_bsd_point(config.n, rng, 0.75)
        tensor = wp.curvature_fd(space, j0, frame, bp)
        _, gram_at = wp.metric_field(space, j0, frame)
        g = gram_at(kns.coords_from_sym(bp.phi))
        nsym = kns.sym_dim(config.n)
        xi = rng.standard_normal(nsym) + 1j * rng.standard_normal(nsym)
        xi = xi / np.sqrt(np.real(wp.df_inner(g, xi, xi)))
        rows.append((bp.radius, float(tensor.pair(xi, xi).real)))
    rows.sort()
    return ["basepoint_radius", "hsc"], rows


PROFILES = {
    "wp-coefficient": ("elliptic-family", profile_wp_coefficient),
    "ma-refinement": ("geodesics", profile_ma_refinement),
    "burns-hsc": ("burns-bounds", profile_burns_hsc),
}


def emit_plot_data(config: SuiteConfig, profile: str, path: str | Path) -> Path:
    available = [p for p, (s, _) in PROFILES.items()
                 if config.suite in (s, "all")]
    if not available:
        # Suite produces no profile data: warn and emit an empty file.
        print(f"warning: suite {config.suite!r} has no plot profiles; "
              f"writing empty output", file=sys.stderr)
        Path(path).write_text("")
        return Path(path)
    if profile not in PROFILES:
        raise UsageError(f"unknown profile {profile!r}; known: "
                         f"{', '.join(sorted(PROFILES))}")
    suite, fn = PROFILES[profile]
    if config.suite not in (suite, "all"):
        raise UsageError(f"profile {profile!r} belongs to suite {suite!r}")
    header, rows = fn(config)
    path = Path(path)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(x)) for x in row])
    path.write_text(buf.getvalue())
    return path


# ---------------------------------------------------------------------------
# Command-line front ends
# ---------------------------------------------------------------------------

def _load_config_file(path: str) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise UsageError(f"config file {path!r} not found")
    out: dict = {}
    if parser.has_section("verify"):
        sec = parser["verify"]
        for key in ("suite", "model"):
            if key in sec:
                out[key] = sec[key]
        for key in ("seed", "n", "samples", "grid"):
            if key in sec:
                out[key] = int(sec[key])
    if parser.has_section("model"):
        sec = parser["model"]
        if "family" in sec:
            extra = " ".join(f"{k}={v}" for k, v in sec.items() if k != "family")
            out["model"] = (sec["family"] + (" " + extra if extra else "")).strip()
    if parser.has_section("tolerances"):
        out["tolerances"] = {k: float(v) for k, v in parser["tolerances"].items()}
    return out


def _parse_tol(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"tolerance override {item!r} must be key=value")
        key, val = item.split("=", 1)
        out[key.strip()] = float(val)
    return out


def _config_from_args(args) -> SuiteConfig:
    base: dict = {}
    if getattr(args, "config", None):
        base = _load_config_file(args.config)
    merged_tol = dict(base.get("tolerances", {}))
    merged_tol.update(_parse_tol(getattr(args, "tol", None)))
    return SuiteConfig(
        suite=args.suite or base.get("suite", "all"),
        seed=args.seed if args.seed is not None else base.get("seed", 7),
        n=args.n if args.n is not None else base.get("n", 2),
        samples=args.samples if args.samples is not None else base.get("samples", 100),
        tolerances=merged_tol,
        grid=args.grid if args.grid is not None else base.get("grid", 64),
        model=getattr(args, "model", None) or base.get("model"),
    )


def main_verify(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="verify", description="Run a named verification suite.")
    parser.add_argument("--suite", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--grid", type=int, default=None)
    parser.add_argument("--tol", action="append", metavar="key=val")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--out", default=None)
    parser.add_argument("--config", default=None)
    parser.add_argument("--model", default=None,
                        metavar="family [key=val ...]",
                        help="built-in model family with parameters, e.g. "
                             "'perturbed-torus eps=0.05'")
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        report = run_suite(config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for check in report.checks:
        flag = "PASS" if check.status == "pass" else check.status.upper()
        print(f"[{flag}] {check.name}: value={check.value:.6g} "
              f"{check.comparison} {check.threshold:.6g} ({check.anchor})")
    print(f"suite={report.suite} checks={len(report.checks)} "
          f"passed={report.passed} wall={report.wall_time_s:.2f}s")
    if args.out:
        emit_report(report, args.format, args.out)
        print(f"report written to {args.out}")
    return 0 if report.passed else 1


def main_plot_data(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-data", description="Emit CSV series for external plotting.")
    parser.add_argument("--suite", required=True)
    parser.add_argument("--profile", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--grid", type=int, default=None)
    parser.add_argument("--config", default=None)
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        emit_plot_data(config, args.profile, args.out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"profile {args.profile} written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main_verify())
