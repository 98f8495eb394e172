"""Geodesic structures: Hermitian matrix paths, Legendre duality, convexity.

Positive Hermitian matrices carry the geodesic A0^{1/2} (A0^{-1/2} A1
A0^{-1/2})^t A0^{1/2}, characterized by the vanishing of A'' - A' A^{-1} A'
and equivalently by the degeneracy of the full complex Hessian of the
associated quadratic potential.  Real convex functions carry the dual
structure: geodesics are inverse transforms of linear dual paths, and the
log-determinant is strictly convex on the positive cone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

EIG_CLAMP = 1e-14


class ConvexityError(ValueError):
    pass


class ConeError(ValueError):
    pass


def _check_pd(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    herm = 0.5 * (a + a.conj().T)
    if np.max(np.abs(a - herm)) > 1e-10 * max(1.0, np.max(np.abs(a))):
        raise ValueError(f"{what} must be Hermitian")
    if np.linalg.eigvalsh(herm).min() <= 0:
        raise ValueError(f"{what} must be positive definite")
    return herm


# ---------------------------------------------------------------------------
# Hermitian-form geodesics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HermitianPath:
    """t -> (A, A', A'') of Hermitian matrices on a real interval."""

    evaluator: Callable[[float], tuple[np.ndarray, np.ndarray, np.ndarray]]

    def __call__(self, t: float):
        return self.evaluator(t)


def theta_tt(path: HermitianPath, t: float) -> np.ndarray:
    """A'' - A' A^{-1} A': zero along geodesics, Hermitian always."""
    a, da, d2a = path(t)
    a = _check_pd(a, "path value")
    return d2a - da @ np.linalg.solve(a, da)


def _matrix_power_factors(a0: np.ndarray, a1: np.ndarray):
    a0 = _check_pd(a0, "left endpoint")
    a1 = _check_pd(a1, "right endpoint")
    w0, u0 = np.linalg.eigh(a0)
    w0 = np.clip(w0, EIG_CLAMP, None)
    root = u0 @ np.diag(np.sqrt(w0)) @ u0.conj().T
    root_inv = u0 @ np.diag(1.0 / np.sqrt(w0)) @ u0.conj().T
    mid = root_inv @ a1 @ root_inv
    wm, um = np.linalg.eigh(0.5 * (mid + mid.conj().T))
    wm = np.clip(wm, EIG_CLAMP, None)
    return root, um, np.log(wm)


def hermitian_geodesic(a0: np.ndarray, a1: np.ndarray) -> HermitianPath:
    """Geodesic A0^{1/2} exp(t log(A0^{-1/2} A1 A0^{-1/2})) A0^{1/2}.

    Eigendecompositions keep the path exactly Hermitian; first and second
    derivatives are returned in closed form.
    """
    root, um, logw = _matrix_power_factors(a0, a1)
    base = root @ um

    def evaluator(t: float):
        et = np.exp(t * logw)
        a = base @ np.diag(et) @ base.conj().T
        da = base @ np.diag(logw * et) @ base.conj().T
        d2a = base @ np.diag(logw**2 * et) @ base.conj().T
        return 0.5 * (a + a.conj().T), 0.5 * (da + da.conj().T), 0.5 * (d2a + d2a.conj().T)

    return HermitianPath(evaluator=evaluator)


def linear_hermitian_path(a0: np.ndarray, a1: np.ndarray) -> HermitianPath:
    """Straight-line interpolation; not a geodesic unless the endpoints commute."""
    a0 = _check_pd(a0, "left endpoint")
    a1 = _check_pd(a1, "right endpoint")
    delta = a1 - a0

    def evaluator(t: float):
        return a0 + t * delta, delta, np.zeros_like(delta)

    return HermitianPath(evaluator=evaluator)


def complex_legendre(a: np.ndarray) -> np.ndarray:
    """Fiberwise conjugate of the quadratic potential <A z, z>: the inverse matrix."""
    a = _check_pd(a, "form")
    return np.linalg.inv(a)


class QuadraticPotential:
    """phi(tau, z) = z^T A(Re tau) conj(z) as a Hessian provider.

    The potential is constant in Im tau, so base derivatives carry the chain
    rule factors 1/2 and 1/4.
    """

    def __init__(self, path: HermitianPath):
        self.path = path

    def hessian(self, tau: complex, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        n = z.size
        a, da, d2a = self.path(float(np.real(tau)))
        h = np.empty((n + 1, n + 1), dtype=complex)
        h[0, 0] = 0.25 * np.einsum("jk,j,k->", d2a, z, z.conj())
        h[0, 1:] = 0.5 * np.einsum("jb,j->b", da, z)
        h[1:, 0] = h[0, 1:].conj()
        # h[1+a, 1+b] = d_a d_bbar phi = A[a, b] transposed into (a, bbar) slots.
        h[1:, 1:] = np.asarray(a, dtype=complex)
        return h


class ProductPotential:
    """phi = |z|^2 + |tau|^2: unit Hessian reference."""

    def hessian(self, tau: complex, z: np.ndarray) -> np.ndarray:
        return np.eye(np.asarray(z).size + 1, dtype=complex)


def ma_determinant(potential, tau: complex, z: np.ndarray) -> float:
    """Determinant of the full complex Hessian at a point (real for Hermitian)."""
    h = potential.hessian(tau, np.asarray(z, dtype=complex))
    return float(np.real(np.linalg.det(h)))


# ---------------------------------------------------------------------------
# Convex grids and the real transform
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvexGrid:
    """Samples of a convex function on a uniform one-dimensional grid."""

    xs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        vs = np.asarray(self.values, dtype=float)
        if xs.ndim != 1 or xs.shape != vs.shape or xs.size < 3:
            raise ValueError("grid needs matching 1-d arrays of length >= 3")
        steps = np.diff(xs)
        if np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]):
            raise ValueError("grid must be uniform")
        second = vs[:-2] - 2.0 * vs[1:-1] + vs[2:]
        scale = max(1.0, float(np.max(np.abs(vs))))
        if second.min() < -1e-9 * scale:
            raise ConvexityError("sampled second differences are negative")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", vs)

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], lo: float,
                      hi: float, size: int) -> "ConvexGrid":
        xs = np.linspace(lo, hi, size)
        return cls(xs=xs, values=np.asarray(f(xs), dtype=float))

    @property
    def step(self) -> float:
        return float(self.xs[1] - self.xs[0])

    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / self.step


def grid_to_csv(grid: ConvexGrid, path) -> None:
    """Write a grid as CSV: dimensions row, box row, then row-major values."""
    import csv as _csv
    from pathlib import Path

    with Path(path).open("w", newline="") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["dim", 1])
        writer.writerow(["box", repr(float(grid.xs[0])), repr(float(grid.xs[-1]))])
        for v in grid.values:
            writer.writerow([repr(float(v))])


def grid_from_csv(path) -> ConvexGrid:
    """Read a grid written by ``grid_to_csv``."""
    import csv as _csv
    from pathlib import Path

    with Path(path).open() as fh:
        rows = list(_csv.reader(fh))
    if not rows or rows[0][0] != "dim" or int(rows[0][1]) != 1:
        raise ValueError("expected a one-dimensional grid file")
    lo, hi = float(rows[1][1]), float(rows[1][2])
    values = np.array([float(r[0]) for r in rows[2:]])
    return ConvexGrid(xs=np.linspace(lo, hi, values.size), values=values)


def dual_eval(grid: ConvexGrid, ys: np.ndarray) -> np.ndarray:
    """Exact conjugate of the piecewise-linear extension at the query slopes.

    The maximizer index of max_i (x_i y - v_i) is the count of chord slopes
    below y, so a sorted-slope lookup replaces the quadratic sup scan.
    """
    ys = np.asarray(ys, dtype=float)
    idx = np.searchsorted(grid.slopes(), ys)
    return grid.xs[idx] * ys - grid.values[idx]


def real_legendre(grid: ConvexGrid, size: int | None = None) -> ConvexGrid:
    """Discrete conjugate on the gradient-image interval of the input."""
    s = grid.slopes()
    size = size or grid.xs.size
    ys = np.linspace(s[0], s[-1], size)
    return ConvexGrid(xs=ys, values=dual_eval(grid, ys))


def convex_geodesic(phi0: ConvexGrid, phi1: ConvexGrid, t: float,
                    size: int | None = None) -> ConvexGrid:
    """Inverse transform of the linear dual interpolation at time t.

    The output grid covers the slope range of the combined dual, where the
    piecewise-linear back-transform is exact.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    s0, s1 = phi0.slopes(), phi1.slopes()
    lo = max(s0[0], s1[0])
    hi = min(s0[-1], s1[-1])
    if hi <= lo:
        raise ConvexityError("gradient images of the endpoints do not overlap")
    size = size or max(phi0.xs.size, phi1.xs.size)
    ys = np.linspace(lo, hi, size)
    combo = t * dual_eval(phi1, ys) + (1.0 - t) * dual_eval(phi0, ys)
    dual = ConvexGrid(xs=ys, values=combo)
    ds = dual.slopes()
    xs = np.linspace(ds[0], ds[-1], size)
    return ConvexGrid(xs=xs, values=dual_eval(dual, xs))


def dual_path_second_derivative(phi0: ConvexGrid, phi1: ConvexGrid,
                                path: Callable[[float], ConvexGrid],
                                t: float = 0.5, dt: float = 0.125) -> float:
    """Max second t-difference of the dual of a path: zero along geodesics."""
    s0, s1 = phi0.slopes(), phi1.slopes()
    ys = np.linspace(max(s0[0], s1[0]) + 0.05 * abs(s0[0]),
                     min(s0[-1], s1[-1]) - 0.05 * abs(s0[-1]), 101)
    vals = [dual_eval(path(tt), ys) for tt in (t - dt, t, t + dt)]
    second = (vals[0] - 2.0 * vals[1] + vals[2]) / dt**2
    return float(np.max(np.abs(second)))


def ma_grid_residual(f: Callable[[float, np.ndarray], np.ndarray],
                     t_range: tuple[float, float], x_range: tuple[float, float],
                     nt: int = 17, nx: int = 33) -> float:
    """Max discrete Monge-Ampere determinant of a path of convex profiles.

    Central second differences on the (t, x) product grid; for a degenerate
    path the residual decays at second order in the grid step.
    """
    ts = np.linspace(*t_range, nt)
    xs = np.linspace(*x_range, nx)
    vals = np.stack([np.asarray(f(t, xs), dtype=float) for t in ts])
    ht = ts[1] - ts[0]
    hx = xs[1] - xs[0]
    dtt = (vals[2:, 1:-1] - 2 * vals[1:-1, 1:-1] + vals[:-2, 1:-1]) / ht**2
    dxx = (vals[1:-1, 2:] - 2 * vals[1:-1, 1:-1] + vals[1:-1, :-2]) / hx**2
    dtx = (vals[2:, 2:] - vals[2:, :-2] - vals[:-2, 2:] + vals[:-2, :-2]) / (4 * ht * hx)
    return float(np.max(np.abs(dtt * dxx - dtx**2)))


# ---------------------------------------------------------------------------
# Gradient images
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GradientImageReport:
    image_interval: tuple[float, float]
    tested_pairs: int
    members: int
    inconclusive: int


def gradient_image_probe(grid: ConvexGrid, pairs: int = 100,
                         seed: int = 0) -> GradientImageReport:
    """Membership of midpoints of gradient-image samples via interior minima.

    y belongs to the image iff x -> phi(x) - x y attains its minimum away from
    the grid boundary; boundary-dominated minima are flagged inconclusive.
    """
    grads = (grid.values[2:] - grid.values[:-2]) / (2.0 * grid.step)
    rng = np.random.default_rng(seed)
    members = 0
    inconclusive = 0
    for _ in range(pairs):
        ya, yb = rng.choice(grads, size=2, replace=True)
        y = 0.5 * (ya + yb)
        idx = int(np.argmin(grid.values - grid.xs * y))
        if 0 < idx < grid.xs.size - 1:
            members += 1
        else:
            inconclusive += 1
    return GradientImageReport(image_interval=(float(grads[0]), float(grads[-1])),
                               tested_pairs=pairs, members=members,
                               inconclusive=inconclusive)


# ---------------------------------------------------------------------------
# Log-determinant convexity on the positive cone
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConeBasis:
    """Basis of real symmetric matrices and a coefficient point in the cone."""

    basis: Sequence[np.ndarray]
    point: np.ndarray

    def matrix(self) -> np.ndarray:
        return sum(c * b for c, b in zip(self.point, self.basis))


def symmetric_basis(n: int) -> list[np.ndarray]:
    out = []
    for i in range(n):
        for j in range(i, n):
            m = np.zeros((n, n))
            if i == j:
                m[i, i] = 1.0
            else:
                m[i, j] = m[j, i] = 1.0
            out.append(m)
    return out


def bm_hessian(cone: ConeBasis) -> np.ndarray:
    """Hessian of -log det at the cone point: entries tr(A^{-1} A_j A^{-1} A_k)."""
    a = cone.matrix()
    if np.linalg.eigvalsh(0.5 * (a + a.T)).min() <= 0:
        raise ConeError("point lies outside the positive cone")
    solved = [np.linalg.solve(a, b) for b in cone.basis]
    size = len(cone.basis)
    h = np.empty((size, size))
    for j in range(size):
        for k in range(j, size):
            h[j, k] = h[k, j] = float(np.trace(solved[j] @ solved[k]).real)
    return h


@dataclass(frozen=True)
class MabuchiReport:
    ts: np.ndarray
    rho: np.ndarray
    second_derivative: np.ndarray   # volume * rho
    min_rho: float
    degenerate: bool
    log_convexity_margin: float | None


def mabuchi_profile(hess0: np.ndarray, hess1: np.ndarray, t_samples: Sequence[float],
                    volume: float = 1.0) -> MabuchiReport:
    """Convexity profile of the log-determinant energy on the quadratic class.

    For potentials with constant Hessians the profile rho(t) =
    tr((H(t)^{-1} H')^2) is spatially constant, so the energy's second
    derivative is volume * rho; rho is nonnegative and log-convex in t.
    """
    h0 = np.asarray(hess0, dtype=float)
    h1 = np.asarray(hess1, dtype=float)
    for h in (h0, h1):
        if np.linalg.eigvalsh(0.5 * (h + h.T)).min() <= 0:
            raise ConeError("quadratic Hessians must be positive definite")
    ts = np.asarray(list(t_samples), dtype=float)
    delta = h1 - h0
    rho = np.empty(ts.size)
    for i, t in enumerate(ts):
        ht = (1.0 - t) * h0 + t * h1
        m = np.linalg.solve(ht, delta)
        rho[i] = float(np.trace(m @ m).real)
    degenerate = bool(np.max(np.abs(delta)) == 0.0)
    margin = None
    if not degenerate and ts.size >= 3:
        logr = np.log(rho)
        second = logr[:-2] - 2.0 * logr[1:-1] + logr[2:]
        margin = float(second.min())
    return MabuchiReport(ts=ts, rho=rho, second_derivative=volume * rho,
                         min_rho=float(rho.min()), degenerate=degenerate,
                         log_convexity_margin=margin)
