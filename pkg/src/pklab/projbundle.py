"""Degenerate Kahler forms on projectivized bundles from projectively flat metrics.

A Hermitian bundle metric over a one-dimensional base is given through its
value, first and mixed second base derivatives.  The twisted log-potential
form (fiber log-Hessian plus the trace-normalized base curvature) is
assembled in an affine chart; for projectively flat metrics its top power
vanishes and it restricts to the Fubini-Study form of the fiber inner
product, while metrics with non-scalar curvature are falsifiers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import _fd


class ChartError(ValueError):
    """Point excluded from the affine chart (normalizing coordinate zero)."""


@dataclass(frozen=True)
class BundleMetricModel:
    """jets(t) -> (h, dh, ddh): metric matrix, d_t h and d_t d_tbar h."""

    r: int
    jets: Callable[[complex], tuple[np.ndarray, np.ndarray, np.ndarray]]
    name: str = ""
    m: int = 1
    chart: int = 0

    def metric(self, t: complex) -> np.ndarray:
        h = np.asarray(self.jets(t)[0], dtype=complex)
        if np.linalg.eigvalsh(0.5 * (h + h.conj().T)).min() <= 0:
            raise ValueError("bundle metric must be positive definite")
        return h


def chern_curvature(model: BundleMetricModel, t: complex) -> np.ndarray:
    """Lowered curvature matrix R[a, b] = R_{a bbar t tbar}.

    R_{a bbar} = -d_t d_tbar h_{a bbar} + sum h^{sbar tau} d_t h_{a sbar}
    conj(d_t h_{b tau bar}).
    """
    h, dh, ddh = model.jets(t)
    hinv = np.linalg.inv(h)
    return -np.asarray(ddh, dtype=complex) + dh @ hinv @ dh.conj().T


def ricci(model: BundleMetricModel, t: complex) -> complex:
    """Trace part of the curvature: coefficient of the Ricci form."""
    h, _, _ = model.jets(t)
    return complex(np.trace(np.linalg.solve(h, chern_curvature(model, t))))


def projective_flatness_residual(model: BundleMetricModel, t: complex) -> float:
    """Distance of the curvature from its trace part: zero iff projectively flat."""
    h, _, _ = model.jets(t)
    r = chern_curvature(model, t)
    return float(np.max(np.abs(r - (ricci(model, t) / model.r) * h)))


def _chart_coordinates(model: BundleMetricModel, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.size != model.r:
        raise ValueError("fiber point must have one component per rank")
    if abs(v[model.chart]) < 1e-13:
        raise ChartError("normalizing coordinate vanishes at this point")
    return v / v[model.chart]


def _log_hessian(h: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, complex]:
    """(d^2 log H / dv dvbar, H) for H = h_{a bbar} v^a conj(v^b)."""
    w = h @ v.conj()
    bigH = complex(v @ w)
    L = h / bigH - np.outer(w, w.conj()) / bigH**2
    return L, bigH


def pk_form(model: BundleMetricModel, t: complex, v: np.ndarray) -> np.ndarray:
    """Coefficient matrix of the twisted form at (t, [v]) in the affine chart.

    Basis order: dt first, then the fiber differentials skipping the chart
    coordinate.  The matrix is Hermitian; its fiber block is the log-Hessian
    in the corrected frame and the base block carries the curvature pairing
    plus the trace-part twist.
    """
    v = _chart_coordinates(model, v)
    h, dh, _ = model.jets(t)
    hinv = np.linalg.inv(h)
    L, bigH = _log_hessian(h, v)
    rmat = chern_curvature(model, t)
    ric = complex(np.trace(hinv @ rmat))
    # delta v^a = dv^a + b^a dt with b^a = v^beta h^{gbar a} d_t h_{beta gbar}.
    b = np.einsum("b,ga,bg->a", v, hinv, dh)
    fiber_idx = [a for a in range(model.r) if a != model.chart]
    dim = 1 + len(fiber_idx)
    omega = np.empty((dim, dim), dtype=complex)
    base_base = (-np.einsum("ab,a,b->", rmat, v, v.conj()) / bigH
                 + ric / model.r
                 + np.einsum("ab,a,b->", L, b, b.conj()))
    omega[0, 0] = base_base
    for col, nu in enumerate(fiber_idx):
        omega[0, 1 + col] = np.einsum("a,a->", L[:, nu], b)
        omega[1 + col, 0] = np.conj(omega[0, 1 + col])
    for rw, mu in enumerate(fiber_idx):
        for col, nu in enumerate(fiber_idx):
            omega[1 + rw, 1 + col] = L[mu, nu]
    return omega


def top_power_norm(omega: np.ndarray, fiber_dim: int) -> float:
    """Coefficient norm of the (fiber_dim + 1) power; the determinant when the
    total dimension equals fiber_dim + 1 (one-dimensional base)."""
    from itertools import combinations

    k = fiber_dim + 1
    dim = omega.shape[0]
    total = 0.0
    for rows in combinations(range(dim), k):
        for cols in combinations(range(dim), k):
            total += abs(np.linalg.det(omega[np.ix_(rows, cols)])) ** 2
    return float(np.sqrt(total))


def pk_top_power(model: BundleMetricModel, t: complex, v: np.ndarray) -> float:
    return top_power_norm(pk_form(model, t, v), model.r - 1)


def fiber_positivity_margin(model: BundleMetricModel, t: complex, v: np.ndarray) -> float:
    """Smallest eigenvalue of the fiber block of the form."""
    omega = pk_form(model, t, v)
    block = omega[1:, 1:]
    return float(np.linalg.eigvalsh(0.5 * (block + block.conj().T)).min())


def fubini_study_reference(h: np.ndarray, v: np.ndarray, chart: int) -> np.ndarray:
    """Fiber form of the constant inner product after diagonalization.

    Factors h = C C^H, rotates into coordinates where the squared length is
    the standard one (|C^T v|^2), applies the standard log-Hessian and pulls
    back through the chart Jacobian; an independent route to the fiber
    restriction.
    """
    r = h.shape[0]
    w_eig, u = np.linalg.eigh(0.5 * (h + h.conj().T))
    c = u @ np.diag(np.sqrt(np.clip(w_eig, 0.0, None)))   # h = C C^H
    vt = c.T @ v                     # rotated homogeneous coordinates
    big = float(np.real(vt.conj() @ vt))
    l_std = (np.eye(r) * big - np.outer(vt.conj(), vt)) / big**2
    full = c @ l_std @ c.conj().T
    fiber_idx = [a for a in range(r) if a != chart]
    return full[np.ix_(fiber_idx, fiber_idx)]


def fiber_fs_check(model: BundleMetricModel, t: complex, samples: int = 20,
                   seed: int = 0) -> float:
    """Sup over sampled chart points of |fiber block - reference form|."""
    rng = np.random.default_rng(seed)
    h = model.metric(t)
    worst = 0.0
    for _ in range(samples):
        v = rng.standard_normal(model.r) + 1j * rng.standard_normal(model.r)
        v[model.chart] = 1.0
        block = pk_form(model, t, v)[1:, 1:]
        ref = fubini_study_reference(h, v, model.chart)
        worst = max(worst, float(np.max(np.abs(block - ref))))
    return worst


def d_closedness_residual(model: BundleMetricModel, t: complex, v: np.ndarray,
                          step: float = 1e-4) -> float:
    """Exterior-derivative residual of the assembled coefficient field."""
    v = _chart_coordinates(model, v)
    fiber_idx = [a for a in range(model.r) if a != model.chart]

    def coeff(z: np.ndarray) -> np.ndarray:
        vv = np.ones(model.r, dtype=complex)
        for pos, a in enumerate(fiber_idx):
            vv[a] = z[1 + pos]
        return pk_form(model, z[0], vv)

    z0 = np.concatenate([[t], v[fiber_idx]])
    return _fd.d_residual_11(coeff, z0, step=step)


# ---------------------------------------------------------------------------
# Model library
# ---------------------------------------------------------------------------

def constant_model(h0: np.ndarray, name: str = "constant") -> BundleMetricModel:
    h0 = np.asarray(h0, dtype=complex)
    r = h0.shape[0]
    zero = np.zeros_like(h0)

    def jets(t: complex):
        return h0, zero, zero

    return BundleMetricModel(r=r, jets=jets, name=name)


def twisted_model(h0: np.ndarray, weight: float = 1.0,
                  name: str | None = None) -> BundleMetricModel:
    """h = exp(-weight |t|^2) h0: projectively flat with scalar curvature twist."""
    h0 = np.asarray(h0, dtype=complex)
    r = h0.shape[0]

    def jets(t: complex):
        f = np.exp(-weight * abs(t) ** 2)
        h = f * h0
        dh = -weight * np.conj(t) * h
        ddh = weight * (weight * abs(t) ** 2 - 1.0) * h
        return h, dh, ddh

    return BundleMetricModel(r=r, jets=jets, name=name or f"twisted({weight})")


def build_bundle_model(family: str, **params) -> BundleMetricModel:
    """Instantiate a built-in bundle family by name.

    Families: "constant" (r), "twisted" (r, weight), "split" (weights).
    """
    if family == "constant":
        return constant_model(np.eye(int(params.get("r", 2))))
    if family == "twisted":
        return twisted_model(np.eye(int(params.get("r", 2))),
                             weight=float(params.get("weight", 1.0)))
    if family == "split":
        weights = params.get("weights", "1,2")
        if isinstance(weights, str):
            weights = [float(w) for w in weights.split(",")]
        return split_twist_model(weights)
    raise ValueError(f"unknown bundle family {family!r}")


def split_twist_model(weights: Sequence[float],
                      name: str | None = None) -> BundleMetricModel:
    """Direct sum of line bundles with distinct twists: not projectively flat."""
    weights = np.asarray(list(weights), dtype=float)
    r = weights.size

    def jets(t: complex):
        f = np.exp(-weights * abs(t) ** 2)
        h = np.diag(f.astype(complex))
        dh = np.diag((-weights * np.conj(t) * f).astype(complex))
        ddh = np.diag((weights * (weights * abs(t) ** 2 - 1.0) * f).astype(complex))
        return h, dh, ddh

    return BundleMetricModel(r=r, jets=jets,
                             name=name or f"split{tuple(weights.tolist())}")
