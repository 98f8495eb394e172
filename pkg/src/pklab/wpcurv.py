"""Canonical metric on the bounded domain and its curvature bounds.

The metric is the Hilbert-Schmidt pairing of the degree-(-1,1) field matrices
with respect to the moving Gram data; its curvature tensor is measured by
central differences of the metric field and cross-checked against the
three-term algebraic formula (products of the field matrices plus the
projected first variation).  Certified bounds: holomorphic sectional
curvature at most -2/n, non-positive bisectional curvature, Ricci at most
-2/n, with unit fiber-volume normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fd
from .higgs import HiggsField
from .kns import BsdPoint, coords_from_sym, random_bsd_point, sym_dim
from .symplin import ComplexStructure, SymplecticSpace, UnitaryFrame

KAHLER_SYM_TOL = 1e-6


class DegenerateMetricError(ValueError):
    """The requested degree carries no metric (the field matrices vanish)."""


@dataclass(frozen=True)
class MetricSample:
    basepoint: BsdPoint
    gram: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gram, dtype=complex)
        if np.max(np.abs(g - g.conj().T)) > 1e-10 * max(1.0, np.max(np.abs(g))):
            raise ValueError("metric sample must be Hermitian")
        if np.linalg.eigvalsh(0.5 * (g + g.conj().T)).min() <= 0:
            raise DegenerateMetricError("metric sample must be positive definite")
        object.__setattr__(self, "gram", g)


@dataclass(frozen=True)
class CurvatureTensor:
    """entries[j, k, l, m] = R_{j kbar l mbar} at the basepoint."""

    entries: np.ndarray
    basepoint: BsdPoint

    def pair(self, xi: np.ndarray, eta: np.ndarray) -> complex:
        """R(xi, conj(xi), eta, conj(eta))."""
        return complex(np.einsum("jklm,j,k,l,m->", self.entries,
                                 xi, xi.conj(), eta, eta.conj()))

    def kahler_symmetry_defect(self) -> float:
        r = self.entries
        swap = np.transpose(r, (2, 1, 0, 3))          # j <-> l
        conj_pair = np.transpose(r, (1, 0, 3, 2)).conj()  # R_{jklm} = conj(R_{kjml})
        return float(max(np.max(np.abs(r - swap)), np.max(np.abs(r - conj_pair))))


@dataclass(frozen=True)
class DfMetricReport:
    degree: int
    gram: np.ndarray
    degenerate: bool
    sample: MetricSample | None
    ratio_to_degree1: float | None
    ratio_spread: float | None


@dataclass(frozen=True)
class BoundsReport:
    n: int
    samples: int
    max_hsc: float
    max_bisectional: float
    max_paired_bisectional_excess: float
    max_ricci: float
    worst_hsc_witness: dict
    hsc_bound: float

    def satisfied(self, tol: float = 1e-3, bis_tol: float = 1e-6) -> bool:
        b = -2.0 / self.n
        return (self.max_hsc <= b + tol and self.max_bisectional <= bis_tol
                and self.max_paired_bisectional_excess <= tol
                and self.max_ricci <= b + tol)


def metric_field(space: SymplecticSpace, J: ComplexStructure, frame: UnitaryFrame,
                 degree: int = 1):
    """coords -> Hilbert-Schmidt Gram matrix of the degree-(-1,1) field."""
    field_ = HiggsField(space, J, frame, degree)
    nsym = field_.nsym

    def gram_at(coords: np.ndarray) -> np.ndarray:
        theta = field_.theta(coords)
        h = field_.gram(coords)
        hinv_t = np.linalg.inv(h)
        adjoints = [hinv_t @ t.conj().T @ h for t in theta]
        out = np.empty((nsym, nsym), dtype=complex)
        for j in range(nsym):
            for k in range(nsym):
                out[j, k] = np.trace(theta[j] @ adjoints[k])
        return out

    return field_, gram_at


def df_metric(space: SymplecticSpace, J: ComplexStructure, frame: UnitaryFrame,
              basepoint: BsdPoint, normalization: int = 1) -> DfMetricReport:
    """Metric sample at a point, with the constant ratio to the degree-1 metric.

    Degrees 0 and 2n carry a vanishing field and are reported as degenerate.
    """
    coords = coords_from_sym(basepoint.phi)
    _, gram_k = metric_field(space, J, frame, degree=normalization)
    g = gram_k(coords)
    if np.max(np.abs(g)) < 1e-14:
        return DfMetricReport(degree=normalization, gram=g, degenerate=True,
                              sample=None, ratio_to_degree1=None, ratio_spread=None)
    ratio = None
    spread = None
    if normalization != 1:
        _, gram_1 = metric_field(space, J, frame, degree=1)
        g1 = gram_1(coords)
        ratios = g[np.abs(g1) > 1e-12] / g1[np.abs(g1) > 1e-12]
        ratio = float(np.mean(ratios.real))
        spread = float(np.max(np.abs(ratios - ratio)))
    return DfMetricReport(degree=normalization, gram=g, degenerate=False,
                          sample=MetricSample(basepoint=basepoint, gram=g),
                          ratio_to_degree1=ratio, ratio_spread=spread)


def curvature_fd(space: SymplecticSpace, J: ComplexStructure, frame: UnitaryFrame,
                 basepoint: BsdPoint, step: float = 1e-3,
                 richardson: bool = True) -> CurvatureTensor:
    """R_{j kbar l mbar} = -d_l d_mbar G_{j kbar} + G^{p qbar} d_l G_{j qbar} d_mbar G_{p kbar}."""
    coords = coords_from_sym(basepoint.phi)
    field_, gram_at = metric_field(space, J, frame, degree=1)
    field_.guard(coords)
    nsym = field_.nsym
    g0 = gram_at(coords)
    ginv = np.linalg.inv(g0)
    hess = _fd.hermitian_hessian(gram_at, coords, step=step, richardson=richardson)
    grads = [_fd.holo_derivative(gram_at, coords, l, step=step, richardson=richardson)
             for l in range(nsym)]
    r = np.empty((nsym, nsym, nsym, nsym), dtype=complex)
    for l in range(nsym):
        bl = grads[l] @ ginv
        for m in range(nsym):
            r[:, :, l, m] = -hess[l, m] + bl @ grads[m].conj().T
    return CurvatureTensor(entries=r, basepoint=basepoint)


def kahler_closedness_residual(space: SymplecticSpace, J: ComplexStructure,
                               frame: UnitaryFrame, basepoint: BsdPoint,
                               step: float = 1e-3) -> float:
    """max |d_l G_{j kbar} - d_j G_{l kbar}|: closedness of the metric form."""
    coords = coords_from_sym(basepoint.phi)
    _, gram_at = metric_field(space, J, frame, degree=1)
    nsym = sym_dim(frame.n)
    grads = [_fd.holo_derivative(gram_at, coords, l, step=step) for l in range(nsym)]
    worst = 0.0
    for l in range(nsym):
        for j in range(l + 1, nsym):
            worst = max(worst, float(np.max(np.abs(grads[l][j, :] - grads[j][l, :]))))
    return worst


def curvature_formula_terms(space: SymplecticSpace, J: ComplexStructure,
                            frame: UnitaryFrame, basepoint: BsdPoint,
                            step: float = 1e-3) -> np.ndarray:
    """Three-term algebraic curvature tensor.

    -(adj(th_m) th_j, adj(th_l) th_k) - (th_j adj(th_m), th_k adj(th_l))
    - (P_perp(d_l th_j), P_perp(d_m th_k)), with the Hilbert-Schmidt pairing,
    the metric adjoint, and P_perp the projection away from the span of the
    field matrices.
    """
    coords = coords_from_sym(basepoint.phi)
    field_ = HiggsField(space, J, frame, 1)
    field_.guard(coords)
    nsym = field_.nsym
    theta = field_.theta(coords)
    h = field_.gram(coords)
    hinv = np.linalg.inv(h)

    def adj(m):
        return hinv @ m.conj().T @ h

    def hs(a, b):
        return complex(np.trace(a @ adj(b)))

    gram = np.array([[hs(theta[j], theta[k]) for k in range(nsym)] for j in range(nsym)])

    def perp(x):
        rhs = np.array([hs(x, theta[q]) for q in range(nsym)])
        coeff = np.linalg.solve(gram.T, rhs)
        return x - sum(c * t for c, t in zip(coeff, theta))

    dtheta = np.empty((nsym, nsym), dtype=object)
    for l in range(nsym):
        block = _fd.holo_derivative(lambda c: np.stack(field_.theta(c)), coords, l, step=step)
        for j in range(nsym):
            dtheta[l, j] = perp(block[j])

    adj_theta = [adj(t) for t in theta]
    r = np.empty((nsym, nsym, nsym, nsym), dtype=complex)
    for j in range(nsym):
        for k in range(nsym):
            for l in range(nsym):
                for m in range(nsym):
                    t1 = hs(adj_theta[m] @ theta[j], adj_theta[l] @ theta[k])
                    t2 = hs(theta[j] @ adj_theta[m], theta[k] @ adj_theta[l])
                    t3 = hs(dtheta[l, j], dtheta[m, k])
                    r[j, k, l, m] = -t1 - t2 - t3
    return r


def curvature_formula_check(space: SymplecticSpace, J: ComplexStructure,
                            frame: UnitaryFrame, basepoint: BsdPoint,
                            step: float = 1e-3) -> float:
    """Max entrywise deviation between the difference tensor and the formula."""
    fd = curvature_fd(space, J, frame, basepoint, step=step)
    alg = curvature_formula_terms(space, J, frame, basepoint, step=step)
    return float(np.max(np.abs(fd.entries - alg)))


def df_inner(g: np.ndarray, xi: np.ndarray, eta: np.ndarray) -> complex:
    """<xi, eta> = sum G[j,k] xi^j conj(eta^k): first index pairs with xi."""
    return complex(np.dot(xi, g @ eta.conj()))


def _unit_vector(g: np.ndarray, raw: np.ndarray) -> np.ndarray:
    norm = np.sqrt(float(np.real(df_inner(g, raw, raw))))
    return raw / norm


def burns_bounds(space: SymplecticSpace, J: ComplexStructure, frame: UnitaryFrame,
                 samples: int, seed: int, radius: float = 0.75,
                 step: float = 1e-3) -> BoundsReport:
    """Seeded sweep of sectional, bisectional and Ricci bounds.

    Basepoints are seeded domain points; directions are unit vectors for the
    metric at each basepoint.  The fiber-volume factor is one in this linear
    model, so the certified bound is -2/n for both the sectional and Ricci
    sides, and the paired bisectional bound is -(2/n) |<eta, xi>|^2.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    n = frame.n
    nsym = sym_dim(n)
    rng = np.random.default_rng(seed)
    n_base = max(1, samples // 10)
    per_base = -(-samples // n_base)

    max_hsc = -np.inf
    max_bis = -np.inf
    max_paired = -np.inf
    max_ric = -np.inf
    witness: dict = {}
    done = 0
    for _ in range(n_base):
        if done >= samples:
            break
        bp = random_bsd_point(n, rng, radius)
        tensor = curvature_fd(space, J, frame, bp, step=step)
        coords = coords_from_sym(bp.phi)
        _, gram_at = metric_field(space, J, frame, degree=1)
        g = gram_at(coords)
        # G-orthonormal basis for the Ricci trace (Gram in the y^H H x
        # convention is the transpose of the coordinate matrix G).
        chol = np.linalg.cholesky(g.T)
        onb = np.linalg.inv(chol).conj().T   # columns are G-orthonormal
        for _ in range(per_base):
            if done >= samples:
                break
            xi = _unit_vector(g, rng.standard_normal(nsym) + 1j * rng.standard_normal(nsym))
            eta = _unit_vector(g, rng.standard_normal(nsym) + 1j * rng.standard_normal(nsym))
            hsc = tensor.pair(xi, xi).real
            bis = tensor.pair(xi, eta).real
            pairing = df_inner(g, eta, xi)
            paired_excess = bis + (2.0 / n) * abs(pairing) ** 2
            ric = sum(tensor.pair(xi, onb[:, a]).real for a in range(nsym))
            if hsc > max_hsc:
                max_hsc = hsc
                witness = {"basepoint": bp.phi.tolist(), "xi": xi.tolist()}
            max_bis = max(max_bis, bis)
            max_paired = max(max_paired, paired_excess)
            max_ric = max(max_ric, ric)
            done += 1
    return BoundsReport(n=n, samples=done, max_hsc=float(max_hsc),
                        max_bisectional=float(max_bis),
                        max_paired_bisectional_excess=float(max_paired),
                        max_ricci=float(max_ric), worst_hsc_witness=witness,
                        hsc_bound=-2.0 / n)


def trace_inequality(kappa: np.ndarray) -> tuple[float, float]:
    """(tr((k* k)^2), (1/n) (tr k* k)^2); the left side always dominates."""
    kappa = np.asarray(kappa, dtype=complex)
    if kappa.ndim != 2 or kappa.shape[0] != kappa.shape[1]:
        raise ValueError("square matrix required")
    n = kappa.shape[0]
    gram = kappa.conj().T @ kappa
    lhs = float(np.real(np.trace(gram @ gram)))
    rhs = float(np.real(np.trace(gram)) ** 2) / n
    return lhs, rhs
