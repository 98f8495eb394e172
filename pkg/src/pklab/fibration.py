"""Relative Kahler fibration toolkit on analytic models with torus fibers.

Models carry a local potential for the global form through its second and
third mixed derivatives (closed-form jets built symbolically, or a
finite-difference fallback).  Horizontal lifts, geodesic curvatures and the
fiber tensors measuring the variation of complex structure are evaluated
pointwise; on proper models the fibers are flat tori so fiber integration,
the Laplacian and the degeneracy diagnostics are spectral.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np
import sympy as sp

from . import _fd


class PositivityError(ValueError):
    """Fiber metric fails to be positive definite."""


class PropernessError(ValueError):
    """Operation requires a proper (torus-fiber) model."""


class GridResolutionError(ValueError):
    """Fiber grid too coarse for the potential's spectrum."""


class CaseNotCoveredError(ValueError):
    """Identity only certified for flat fiber metrics here."""


# ---------------------------------------------------------------------------
# Model definition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FibrationModel:
    """Analytic relative Kahler model with one-dimensional base.

    ``second(t, pts)`` returns (bb, bf, ff): the mixed base-base (scalar grid),
    base-fiber (n, P) and fiber-fiber (n, n, P) second derivatives of the
    potential at fiber points ``pts`` (complex (n, P)).  ``third`` returns
    (bff, fff) with bff[c, b] = d_t d_cbar d_bbar g and
    fff[a, c, b] = d_a d_cbar d_bbar g.  ``lattice`` maps t to 2n complex
    generators (rows) of the fiber lattice, or None for non-proper models.
    """

    name: str
    n: int
    second: Callable
    third: Callable
    lattice: Callable | None = None
    grid: int = 64
    m: int = 1

    @property
    def proper(self) -> bool:
        return self.lattice is not None


def _wirtinger_symbols(n: int):
    t, tb = sp.symbols("t tbar")
    zs = tuple(sp.Symbol(f"z{i}") for i in range(n))
    zbs = tuple(sp.Symbol(f"zb{i}") for i in range(n))
    return t, tb, zs, zbs


def model_from_potential(expr, name: str, n: int = 1, lattice: Callable | None = None,
                         grid: int = 64) -> FibrationModel:
    """Build a model from a symbolic potential in t, tbar, z0.., zb0..

    All required mixed derivatives are generated symbolically and compiled to
    vectorized callbacks; conjugate variables are substituted at call time.
    """
    t, tb, zs, zbs = _wirtinger_symbols(n)
    args = (t, tb) + zs + zbs

    def compile_(e):
        fn = sp.lambdify(args, e, modules="numpy")

        def call(tv, pts):
            vals = fn(tv, np.conj(tv), *pts, *np.conj(pts))
            return np.broadcast_to(np.asarray(vals, dtype=complex), pts.shape[1:]).copy()

        return call

    bb_f = compile_(sp.diff(expr, t, tb))
    bf_f = [compile_(sp.diff(expr, t, zbs[b])) for b in range(n)]
    ff_f = [[compile_(sp.diff(expr, zs[a], zbs[b])) for b in range(n)] for a in range(n)]
    bff_f = [[compile_(sp.diff(expr, t, zbs[c], zbs[b])) for b in range(n)] for c in range(n)]
    fff_f = [[[compile_(sp.diff(expr, zs[a], zbs[c], zbs[b])) for b in range(n)]
              for c in range(n)] for a in range(n)]

    def second(tv, pts):
        pts = np.asarray(pts, dtype=complex)
        bb = bb_f(tv, pts)
        bf = np.stack([bf_f[b](tv, pts) for b in range(n)])
        ff = np.stack([np.stack([ff_f[a][b](tv, pts) for b in range(n)]) for a in range(n)])
        return bb, bf, ff

    def third(tv, pts):
        pts = np.asarray(pts, dtype=complex)
        bff = np.stack([np.stack([bff_f[c][b](tv, pts) for b in range(n)]) for c in range(n)])
        fff = np.stack([np.stack([np.stack([fff_f[a][c][b](tv, pts) for b in range(n)])
                                  for c in range(n)]) for a in range(n)])
        return bff, fff

    return FibrationModel(name=name, n=n, second=second, third=third,
                          lattice=lattice, grid=grid)


def model_from_callable(potential: Callable, name: str, n: int = 1,
                        lattice: Callable | None = None, grid: int = 64,
                        step: float = 1e-4) -> FibrationModel:
    """Finite-difference fallback: jets from a plain real-valued potential.

    Accuracy is limited to roughly 1e-8 on second and 1e-5 on third
    derivatives; prefer symbolic models for tight residual work.
    """

    def as_field(tv, pts):
        def f(w):
            return potential(w[0], w[1:])

        return f, np.concatenate([[tv], pts])

    def second(tv, pts):
        pts = np.asarray(pts, dtype=complex)
        cols = pts.shape[1]
        bb = np.empty(cols, dtype=complex)
        bf = np.empty((n, cols), dtype=complex)
        ff = np.empty((n, n, cols), dtype=complex)
        for p in range(cols):
            f, z0 = as_field(tv, pts[:, p])
            hess = _fd.hermitian_hessian(f, z0, step=step, richardson=True)
            bb[p] = hess[0, 0]
            bf[:, p] = hess[0, 1:]
            ff[:, :, p] = hess[1:, 1:]
        return bb, bf, ff

    def third(tv, pts):
        pts = np.asarray(pts, dtype=complex)
        cols = pts.shape[1]
        bff = np.empty((n, n, cols), dtype=complex)
        fff = np.empty((n, n, n, cols), dtype=complex)
        for p in range(cols):
            f, z0 = as_field(tv, pts[:, p])

            def dzbar(idx):
                return lambda w: _fd.antiholo_derivative(f, w, idx, step=step, richardson=False)

            for b in range(n):
                g = dzbar(1 + b)
                hess_row = _fd.hermitian_hessian(g, z0, step=10 * step, richardson=False)
                bff[:, b, p] = hess_row[0, 1:]
                # hess_row[1 + a, 1 + c] = d_a d_cbar (d_bbar g) = fff[a, c, b].
                fff[:, :, b, p] = hess_row[1:, 1:]
        return bff, fff

    return FibrationModel(name=name, n=n, second=second, third=third,
                          lattice=lattice, grid=grid)


# ---------------------------------------------------------------------------
# Spectral torus fiber
# ---------------------------------------------------------------------------

class SpectralFiber:
    """Uniform grid on C^n / lattice with exact Fourier differentiation."""

    def __init__(self, generators: np.ndarray, size: int):
        gens = np.atleast_2d(np.asarray(generators, dtype=complex))
        self.n = gens.shape[1]
        if gens.shape[0] != 2 * self.n:
            raise ValueError("torus needs 2n generators")
        self.size = size
        self.gens = gens
        cols = [np.concatenate([g.real, g.imag]) for g in gens]
        self.L = np.stack(cols, axis=1)
        self.covolume = abs(np.linalg.det(self.L))
        if self.covolume < 1e-12:
            raise ValueError("degenerate lattice")
        axes = np.meshgrid(*([np.arange(size) / size] * (2 * self.n)), indexing="ij")
        frac = np.stack([a for a in axes])                     # (2n, grid)
        xy = np.einsum("rs,s...->r...", self.L, frac)
        self.points_grid = xy[: self.n] + 1j * xy[self.n:]      # (n, grid)
        self.shape = self.points_grid.shape[1:]
        freqs = np.meshgrid(*([np.fft.fftfreq(size, d=1.0 / size)] * (2 * self.n)),
                            indexing="ij")
        k = np.stack(freqs)                                     # (2n, grid)
        self.mu = 2.0 * np.pi * np.einsum("rs,s...->r...", np.linalg.inv(self.L).T, k)

    @property
    def points(self) -> np.ndarray:
        return self.points_grid.reshape(self.n, -1)

    def to_grid(self, flat: np.ndarray) -> np.ndarray:
        return np.asarray(flat).reshape(flat.shape[:-1] + self.shape)

    def _dx(self, f: np.ndarray, r: int) -> np.ndarray:
        return np.fft.ifftn(1j * self.mu[r] * np.fft.fftn(f))

    def d_z(self, f: np.ndarray, a: int) -> np.ndarray:
        return 0.5 * (self._dx(f, a) - 1j * self._dx(f, self.n + a))

    def d_zbar(self, f: np.ndarray, a: int) -> np.ndarray:
        return 0.5 * (self._dx(f, a) + 1j * self._dx(f, self.n + a))

    def integrate_lebesgue(self, f: np.ndarray) -> complex:
        return complex(np.mean(f) * self.covolume)

    def integrate_volume(self, f: np.ndarray, det_ff: np.ndarray) -> complex:
        """Integral of f against the fiber volume form (2^n det g) dLeb."""
        return complex(np.mean(f * det_ff) * (2.0 ** self.n) * self.covolume)

    def nyquist_fraction(self, f: np.ndarray) -> float:
        spec = np.abs(np.fft.fftn(f)) ** 2
        total = float(np.sum(spec))
        if total == 0.0:
            return 0.0
        freqs = np.meshgrid(*([np.abs(np.fft.fftfreq(self.size, d=1.0 / self.size))] *
                              (2 * self.n)), indexing="ij")
        top = np.stack(freqs).max(axis=0) > self.size / 3.0
        return float(np.sum(spec[top]) / total)

    def check_resolution(self, f: np.ndarray, tol: float = 1e-10,
                         floor: float = 1e-12) -> None:
        if float(np.max(np.abs(f))) < floor:
            return   # field is numerically zero; nothing to resolve
        frac = self.nyquist_fraction(f)
        if frac > tol:
            raise GridResolutionError(
                f"top-third spectral energy fraction {frac:.2e} exceeds {tol:.0e}")


# ---------------------------------------------------------------------------
# Pointwise fiber data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FiberState:
    """Lift coefficients, geodesic curvature and variation tensors at fixed t.

    Arrays carry the sample-point axis last: ``lifts`` (n, P) holds the fiber
    components u^a with V = d_t - u^a d_a, ``c`` (P,) the geodesic curvature,
    and ``ks`` (n, n, P) the tensor A^a_b = ks[a, b] of the fiber-direction
    variation; ``kappa_pair`` gives its pointwise metric pairing.
    """

    t: complex
    points: np.ndarray
    lifts: np.ndarray
    c: np.ndarray
    ks: np.ndarray
    ff: np.ndarray
    ff_inv: np.ndarray
    spectral: SpectralFiber | None = None

    def kappa_pair(self, other_ks: np.ndarray | None = None) -> np.ndarray:
        """Pointwise metric pairing <ks, other_ks> of variation tensors."""
        other = self.ks if other_ks is None else other_ks
        return kappa_pairing(self.ks, other, self.ff, self.ff_inv)


def kappa_pairing(a: np.ndarray, b: np.ndarray, ff: np.ndarray,
                  ff_inv: np.ndarray) -> np.ndarray:
    """<A, B> = A^a_c conj(B^s_g) g_{a sbar} conj(g^{gbar c}) pointwise."""
    return np.einsum("ac...,sg...,as...,gc...->...", a, b.conj(), ff, ff_inv.conj())


def _invert_ff(ff: np.ndarray) -> np.ndarray:
    moved = np.moveaxis(ff, (0, 1), (-2, -1))
    eig = np.linalg.eigvalsh(0.5 * (moved + np.conj(np.swapaxes(moved, -1, -2))))
    if eig.min() <= 0:
        raise PositivityError("fiber metric is not positive definite")
    return np.moveaxis(np.linalg.inv(moved), (-2, -1), (0, 1))


def evaluate_fields(model: FibrationModel, t: complex, pts: np.ndarray):
    """(bb, bf, ff, ff_inv, lifts u, c, ks) at the given fiber points."""
    bb, bf, ff = model.second(t, pts)
    ff_inv = _invert_ff(ff)
    # u^a = g_{t bbar} g^{bbar a};  the inverse convention is
    # g^{bbar a} = ff_inv[b, a].
    u = np.einsum("b...,ba...->a...", bf, ff_inv)
    c = bb - np.einsum("a...,a...->...", u, bf.conj())
    bff, fff = model.third(t, pts)
    # d_bbar(ff_inv)[c, a] = -sum ff_inv[c, s] fff[s, m, b] ff_inv[m, a].
    dinv = -np.einsum("cs...,smb...,ma...->cab...", ff_inv, fff, ff_inv)
    ks = -(np.einsum("cb...,ca...->ab...", bff, ff_inv)
           + np.einsum("c...,cab...->ab...", bf, dinv))
    return bb, bf, ff, ff_inv, u, c, ks


def fiber_state(model: FibrationModel, t: complex, sample_count: int = 128,
                seed: int = 0) -> FiberState:
    """Evaluate the fiber fields on the torus grid or on seeded box samples."""
    if model.proper:
        fiber = SpectralFiber(model.lattice(t), model.grid)
        pts = fiber.points
    else:
        fiber = None
        rng = np.random.default_rng(seed)
        pts = (rng.uniform(-1.0, 1.0, (model.n, sample_count))
               + 1j * rng.uniform(-1.0, 1.0, (model.n, sample_count)))
    bb, bf, ff, ff_inv, u, c, ks = evaluate_fields(model, t, pts)
    herm = float(np.max(np.abs(c.imag)))
    if herm > 1e-9 * max(1.0, float(np.max(np.abs(c)))):
        raise ValueError(f"geodesic curvature failed Hermiticity ({herm:.2e})")
    return FiberState(t=t, points=pts, lifts=u, c=c, ks=ks, ff=ff, ff_inv=ff_inv,
                      spectral=fiber)


# ---------------------------------------------------------------------------
# Degeneracy diagnostics
# ---------------------------------------------------------------------------

def form_matrix(model: FibrationModel, t: complex, pts: np.ndarray) -> np.ndarray:
    """Full (1+n) x (1+n) coefficient matrix of the form at each point."""
    bb, bf, ff = model.second(t, pts)
    cols = pts.shape[1]
    h = np.empty((1 + model.n, 1 + model.n, cols), dtype=complex)
    h[0, 0] = bb
    h[0, 1:] = bf
    h[1:, 0] = bf.conj()
    h[1:, 1:] = np.einsum("ab...->ba...", ff).conj()  # g_{a kbar} = conj(g_{k abar})
    return h


def top_power_norm(h: np.ndarray, fiber_dim: int) -> np.ndarray:
    """Pointwise coefficient norm of the (n+1)-st power of a (1,1)-form.

    The coefficients of omega^{n+1} / (n+1)! are the (n+1)-minors of the
    matrix; the Euclidean norm over all minors is returned.
    """
    dim = h.shape[0]
    k = fiber_dim + 1
    total = np.zeros(h.shape[2:], dtype=float)
    for rows in combinations(range(dim), k):
        for cols in combinations(range(dim), k):
            sub = h[np.ix_(rows, cols)]
            sub = np.moveaxis(sub, (0, 1), (-2, -1))
            total += np.abs(np.linalg.det(sub)) ** 2
    return np.sqrt(total)


@dataclass(frozen=True)
class PkReport:
    name: str
    max_top_power: float
    max_c: float

    def is_pk(self, tol: float = 1e-8) -> bool:
        return self.max_top_power <= tol and self.max_c <= tol


def pk_residual(model: FibrationModel, t_samples: Sequence[complex],
                sample_count: int = 64, seed: int = 1) -> PkReport:
    """Sup over samples of the top-power coefficient norm and of |c|."""
    worst_top = 0.0
    worst_c = 0.0
    for i, t in enumerate(t_samples):
        if model.proper:
            pts = SpectralFiber(model.lattice(t), min(model.grid, 16)).points
        else:
            rng = np.random.default_rng(seed + i)
            pts = (rng.uniform(-1.0, 1.0, (model.n, sample_count))
                   + 1j * rng.uniform(-1.0, 1.0, (model.n, sample_count)))
        h = form_matrix(model, t, pts)
        worst_top = max(worst_top, float(np.max(top_power_norm(h, model.n))))
        _, _, _, _, _, c, _ = evaluate_fields(model, t, pts)
        worst_c = max(worst_c, float(np.max(np.abs(c))))
    return PkReport(name=model.name, max_top_power=worst_top, max_c=worst_c)


def dform_residual(model: FibrationModel, t: complex, zeta: np.ndarray,
                   step: float = 1e-4) -> float:
    """d-closedness residual of the corrected form (base block minus c)."""
    zeta = np.asarray(zeta, dtype=complex).reshape(-1)

    def coeff(zvec: np.ndarray) -> np.ndarray:
        pts = zvec[1:].reshape(-1, 1)
        h = form_matrix(model, zvec[0], pts)[:, :, 0]
        bb, bf, ff = model.second(zvec[0], pts)
        ff_inv = _invert_ff(ff)
        u = np.einsum("b...,ba...->a...", bf, ff_inv)
        c = bb - np.einsum("a...,a...->...", u, bf.conj())
        h[0, 0] = h[0, 0] - c[0]
        return h

    z0 = np.concatenate([[t], zeta])
    return _fd.d_residual_11(coeff, z0, step=step)


# ---------------------------------------------------------------------------
# Fiber-integrated quantities
# ---------------------------------------------------------------------------

def _require_proper(model: FibrationModel) -> None:
    if not model.proper:
        raise PropernessError(f"model {model.name!r} has no fiber lattice")


def wp_fiber_metric(model: FibrationModel, t: complex) -> np.ndarray:
    """1x1 fiber integral of the variation-tensor pairing against the volume."""
    _require_proper(model)
    state = fiber_state(model, t)
    fiber = state.spectral
    det_ff = np.linalg.det(np.moveaxis(state.ff, (0, 1), (-2, -1)))
    inner = state.kappa_pair()
    val = fiber.integrate_volume(fiber.to_grid(inner), fiber.to_grid(det_ff))
    return np.array([[val]])


def dbar_closedness_residual(model: FibrationModel, t: complex) -> float:
    """Spectral residual of d_bbar ks[a, c] - d_cbar ks[a, b] on the fiber."""
    _require_proper(model)
    state = fiber_state(model, t)
    fiber = state.spectral
    n = model.n
    worst = 0.0
    for a in range(n):
        for b in range(n):
            gb = fiber.to_grid(state.ks[a, b])
            for cpt in range(b + 1, n):
                gc = fiber.to_grid(state.ks[a, cpt])
                diff = fiber.d_zbar(gc, b) - fiber.d_zbar(gb, cpt)
                worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def log_det_ff_grid(model: FibrationModel, t: complex, fiber: SpectralFiber) -> np.ndarray:
    _, _, ff = model.second(t, fiber.points)
    det = np.linalg.det(np.moveaxis(ff, (0, 1), (-2, -1)))
    return fiber.to_grid(np.log(det.real + 0j))


def dzbar_log_det_ff(model: FibrationModel, t: complex, pts: np.ndarray) -> np.ndarray:
    """Analytic d_bbar log det(ff) from the third jets: tr(ff^{-1} d_bbar ff)."""
    _, _, ff = model.second(t, pts)
    ff_inv = _invert_ff(ff)
    _, fff = model.third(t, pts)
    return np.einsum("ms...,smb...->b...", ff_inv, fff)


def relative_canonical_curvature(model: FibrationModel, t: complex,
                                 fiber: SpectralFiber, tstep: float = 1e-4) -> np.ndarray:
    """Theta(V, Vbar) grid: curvature of the relative canonical metric paired
    with the horizontal lift, computed from t-differences of log det(ff) and
    its analytic fiber gradient plus spectral fiber derivatives."""
    pts = fiber.points
    n = model.n

    def psi_grid(tv):
        return log_det_ff_grid(model, tv, fiber)

    def estimate(h):
        # psi_{t tbar} via the real/imag 5-point stencil.
        pp = psi_grid(t + h)
        pm = psi_grid(t - h)
        ip = psi_grid(t + 1j * h)
        im = psi_grid(t - 1j * h)
        p0 = psi_grid(t)
        return 0.25 * ((pp - 2 * p0 + pm) / h**2 + (ip - 2 * p0 + im) / h**2)

    co, fi = estimate(tstep), estimate(tstep / 2)
    psi_ttb = (4.0 * fi - co) / 3.0

    def grad_bar(tv):
        return np.stack([fiber.to_grid(g) for g in dzbar_log_det_ff(model, tv, pts)])

    def holo_t(f):
        def est(h):
            return 0.5 * ((f(t + h) - f(t - h)) / (2 * h)
                          - 1j * (f(t + 1j * h) - f(t - 1j * h)) / (2 * h))

        c2, f2 = est(tstep), est(tstep / 2)
        return (4.0 * f2 - c2) / 3.0

    psi_tb = holo_t(grad_bar)                       # (n, grid): d_t d_bbar psi
    gbar0 = grad_bar(t)
    psi_fb = np.stack([np.stack([fiber.d_z(gbar0[b], a) for b in range(n)])
                       for a in range(n)])          # (a, b, grid): d_a d_bbar psi
    _, _, ff, ff_inv, u, _, _ = evaluate_fields(model, t, pts)
    ug = np.stack([fiber.to_grid(u[a]) for a in range(n)])
    # Theta(V, Vbar) = psi_ttb - sum_b psi_{t bbar} conj(u^b)
    #                - sum_a psi_{a tbar} u^a + sum psi_{a bbar} u^a conj(u^b),
    # with psi_{a tbar} = conj(psi_{t abar}) since psi is real.
    theta = psi_ttb.astype(complex)
    for b in range(n):
        theta = theta - psi_tb[b] * ug[b].conj() - psi_tb[b].conj() * ug[b]
    for a in range(n):
        for b in range(n):
            theta = theta + psi_fb[a, b] * ug[a] * ug[b].conj()
    return theta


@dataclass(frozen=True)
class SchumacherReport:
    lhs: np.ndarray
    inner: np.ndarray
    box_c: np.ndarray
    residual: float


def box_on_function(fiber: SpectralFiber, f_grid: np.ndarray,
                    ff_inv_grid: np.ndarray) -> np.ndarray:
    """dbar-Laplacian on functions: -g^{bbar a} d_a d_bbar f."""
    n = fiber.n
    out = np.zeros_like(f_grid, dtype=complex)
    for a in range(n):
        for b in range(n):
            out -= ff_inv_grid[b, a] * fiber.d_z(fiber.d_zbar(f_grid, b), a)
    return out


def schumacher_residual(model: FibrationModel, t: complex,
                        tstep: float = 1e-4) -> SchumacherReport:
    """Grid residual of: canonical curvature = pairing - Laplacian of c."""
    _require_proper(model)
    fiber = SpectralFiber(model.lattice(t), model.grid)
    pts = fiber.points
    _, _, ff, ff_inv, u, c, ks = evaluate_fields(model, t, pts)
    fiber.check_resolution(fiber.to_grid(c).real)
    lhs = relative_canonical_curvature(model, t, fiber, tstep=tstep)
    inner = fiber.to_grid(kappa_pairing(ks, ks, ff, ff_inv))
    ff_inv_grid = np.stack([np.stack([fiber.to_grid(ff_inv[a, b]) for b in range(model.n)])
                            for a in range(model.n)])
    box_c = box_on_function(fiber, fiber.to_grid(c), ff_inv_grid)
    residual = float(np.max(np.abs(lhs - inner + box_c)))
    return SchumacherReport(lhs=lhs, inner=inner, box_c=box_c, residual=residual)


def fs_pushforward_check(model: FibrationModel, t: complex,
                         tstep: float = 1e-4) -> tuple[float, float, float]:
    """Fiber-integral identity: metric = pushforward of curvature wedge volume
    plus pushforward of scalar curvature times the squared form (n = 1)."""
    _require_proper(model)
    if model.n != 1:
        raise CaseNotCoveredError("pushforward identity implemented for 1-dim fibers")
    fiber = SpectralFiber(model.lattice(t), model.grid)
    pts = fiber.points
    bb, bf, ff, ff_inv, u, c, ks = evaluate_fields(model, t, pts)
    g_ff = fiber.to_grid(ff[0, 0]).real
    g_bf = fiber.to_grid(bf[0])
    g_bb = fiber.to_grid(bb)

    psi0 = log_det_ff_grid(model, t, fiber)
    theta_vv = relative_canonical_curvature(model, t, fiber, tstep=tstep)

    # Reconstruct the plain coefficient second derivatives of psi.
    def psi_grid(tv):
        return log_det_ff_grid(model, tv, fiber)

    def est(h):
        return 0.25 * ((psi_grid(t + h) - 2 * psi0 + psi_grid(t - h)) / h**2
                       + (psi_grid(t + 1j * h) - 2 * psi0 + psi_grid(t - 1j * h)) / h**2)

    psi_ttb = (4 * est(tstep / 2) - est(tstep)) / 3.0

    def grad_bar(tv):
        return fiber.to_grid(dzbar_log_det_ff(model, tv, pts)[0])

    def holo_t(f):
        def e(h):
            return 0.5 * ((f(t + h) - f(t - h)) / (2 * h)
                          - 1j * (f(t + 1j * h) - f(t - 1j * h)) / (2 * h))

        return (4 * e(tstep / 2) - e(tstep)) / 3.0

    psi_tb = holo_t(grad_bar)
    psi_zb = grad_bar(t)
    psi_zzb = fiber.d_z(psi_zb, 0)

    lhs = wp_fiber_metric(model, t)[0, 0].real

    scalar = -psi_zzb / g_ff
    det_h = g_bb * g_ff - np.abs(g_bf) ** 2
    wedge_term = 2.0 * fiber.integrate_lebesgue(
        psi_ttb * g_ff + psi_zzb * g_bb - psi_tb * g_bf.conj() - psi_tb.conj() * g_bf).real
    scalar_term = 2.0 * fiber.integrate_lebesgue(scalar * det_h).real
    rhs = wedge_term + scalar_term
    return lhs, rhs, abs(lhs - rhs)


def average_horizontal_positivity(model: FibrationModel, t: complex,
                                  tstep: float = 1e-4) -> tuple[float, float]:
    """(integral of the canonical curvature against the volume, metric value)."""
    rep = schumacher_residual(model, t, tstep=tstep)
    fiber = SpectralFiber(model.lattice(t), model.grid)
    _, _, ff, _, _, _, _ = evaluate_fields(model, t, fiber.points)
    det_ff = fiber.to_grid(np.linalg.det(np.moveaxis(ff, (0, 1), (-2, -1))))
    lhs = fiber.integrate_volume(rep.lhs, det_ff).real
    rhs = wp_fiber_metric(model, t)[0, 0].real
    return lhs, rhs


# ---------------------------------------------------------------------------
# Flat-fiber Bochner identities
# ---------------------------------------------------------------------------

def _require_flat_fiber(state: FiberState) -> None:
    ff = state.ff
    spread = float(np.max(np.abs(ff - ff[..., :1])))
    if spread > 1e-10 * max(1.0, float(np.max(np.abs(ff)))):
        raise CaseNotCoveredError("identity requires a fiber-flat metric")


def _kappa_phi(state: FiberState, phi: np.ndarray) -> np.ndarray:
    """Flat-fiber variation tensor of a fiber potential, flattened point axis."""
    fiber = state.spectral
    n = fiber.n
    ff_inv0 = state.ff_inv[..., 0]
    second_bar = np.stack([np.stack([fiber.d_zbar(fiber.d_zbar(phi, g), b)
                                     for b in range(n)]) for g in range(n)])
    kphi = np.einsum("ga,gb...->ab...", ff_inv0, second_bar)
    return kphi.reshape(n, n, -1)


def bkn_identity_check(model: FibrationModel, t: complex,
                       phi_grid: np.ndarray) -> tuple[float, float, str]:
    """(norm of the potential's variation tensor, norm of its Laplacian, case tag).

    For flat fiber metrics the two norms agree; curved fiber cases are not
    covered and raise.
    """
    _require_proper(model)
    state = fiber_state(model, t)
    _require_flat_fiber(state)
    fiber = state.spectral
    n = model.n
    phi = np.asarray(phi_grid, dtype=complex).reshape(fiber.shape)
    kphi = _kappa_phi(state, phi)
    inner = kappa_pairing(kphi, kphi, state.ff, state.ff_inv)
    det_ff = fiber.to_grid(np.linalg.det(np.moveaxis(state.ff, (0, 1), (-2, -1))).real)
    norm_k = np.sqrt(fiber.integrate_volume(fiber.to_grid(inner.real), det_ff).real)
    ff_inv_grid = np.stack([np.stack([fiber.to_grid(state.ff_inv[a, b])
                                      for b in range(n)]) for a in range(n)])
    box_phi = box_on_function(fiber, phi, ff_inv_grid)
    norm_box = np.sqrt(fiber.integrate_volume(np.abs(box_phi) ** 2, det_ff).real)
    return norm_k, norm_box, "ricci-flat-fiber"


def kappa_phi_pairing(model: FibrationModel, t: complex,
                      phi_grid: np.ndarray) -> complex:
    """Fiber integral <ks, kappa^phi>: vanishes for flat fibers (the scalar
    curvature is constant, so the variational pairing against any potential
    is trivial)."""
    _require_proper(model)
    state = fiber_state(model, t)
    _require_flat_fiber(state)
    fiber = state.spectral
    phi = np.asarray(phi_grid, dtype=complex).reshape(fiber.shape)
    kphi = _kappa_phi(state, phi)
    pair = kappa_pairing(state.ks, kphi, state.ff, state.ff_inv)
    det_ff = np.linalg.det(np.moveaxis(state.ff, (0, 1), (-2, -1)))
    return fiber.integrate_volume(fiber.to_grid(pair), fiber.to_grid(det_ff))


# ---------------------------------------------------------------------------
# Vector-field bracket oracles
# ---------------------------------------------------------------------------

def _lift_coefficients(model: FibrationModel):
    """Callable z = (t, zeta) -> components (1, -u^1..-u^n) of the lift."""

    def comps(zvec: np.ndarray) -> np.ndarray:
        pts = zvec[1:].reshape(-1, 1)
        _, bf, ff = model.second(zvec[0], pts)
        ff_inv = _invert_ff(ff)
        u = np.einsum("b...,ba...->a...", bf, ff_inv)[:, 0]
        return np.concatenate([[1.0 + 0j], -u])

    return comps


def bracket_vv_residual(model: FibrationModel, t: complex, zeta: np.ndarray,
                        step: float = 1e-4) -> float:
    """|[V, W]| for the holomorphic lift against itself (one base direction).

    [V, W]^A = V^B d_B W^A - W^B d_B V^A via finite differences; with a single
    base coordinate both slots carry the same lift and the bracket vanishes
    identically, which the evaluation reproduces.
    """
    comps = _lift_coefficients(model)
    z0 = np.concatenate([[t], np.asarray(zeta, dtype=complex).reshape(-1)])
    v0 = comps(z0)
    w0 = v0
    out = np.zeros_like(v0)
    for bidx in range(z0.size):
        dv = _fd.holo_derivative(comps, z0, bidx, step=step)
        out += v0[bidx] * dv - w0[bidx] * dv
    return float(np.max(np.abs(out)))


@dataclass(frozen=True)
class MixedBracketReport:
    verticality_residual: float
    contraction_residual: float


def bracket_mixed_check(model: FibrationModel, t: complex,
                        zeta: np.ndarray, step: float = 1e-4) -> MixedBracketReport:
    """[V, conj(V)] is vertical and its hook into the form restricted to the
    fiber equals i d(c) restricted to the fiber."""
    comps = _lift_coefficients(model)
    z0 = np.concatenate([[t], np.asarray(zeta, dtype=complex).reshape(-1)])
    dim = z0.size
    v0 = comps(z0)

    # (0,1) components of [V, conj(V)]: V^B d_B conj(V^A); (1,0) components:
    # -conj(V^B) d_Bbar V^A.
    part01 = np.zeros(dim, dtype=complex)
    part10 = np.zeros(dim, dtype=complex)
    for bidx in range(dim):
        dcomp = _fd.holo_derivative(lambda z: comps(z).conj(), z0, bidx, step=step)
        part01 += v0[bidx] * dcomp
        dcomp2 = _fd.antiholo_derivative(comps, z0, bidx, step=step)
        part10 += -v0[bidx].conj() * dcomp2

    vertical = float(max(abs(part01[0]), abs(part10[0])))

    pts = z0[1:].reshape(-1, 1)
    h = form_matrix(model, z0[0], pts)[:, :, 0]

    def c_fn(zvec: np.ndarray) -> complex:
        p = zvec[1:].reshape(-1, 1)
        _, _, _, _, _, c, _ = evaluate_fields(model, zvec[0], p)
        return complex(c[0])

    worst = 0.0
    for beta in range(1, dim):
        # dzetabar^beta component: sum_A H[A, beta] X^A = d_betabar c.
        lhs = sum(h[a, beta] * part10[a] for a in range(dim))
        rhs = _fd.antiholo_derivative(c_fn, z0, beta, step=step)
        worst = max(worst, abs(lhs - rhs))
        # dzeta^beta component: -sum_B H[beta, B] X^{Bbar} = d_beta c.
        lhs2 = -sum(h[beta, b] * part01[b] for b in range(dim))
        rhs2 = _fd.holo_derivative(c_fn, z0, beta, step=step)
        worst = max(worst, abs(lhs2 - rhs2))
    return MixedBracketReport(verticality_residual=vertical,
                              contraction_residual=float(worst))


# ---------------------------------------------------------------------------
# Closed-form elliptic-curve family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EllipticSlice:
    """Both representations of the family form at one (t, zeta).

    ``map_coefficients`` are (A, B) of the marking map z = A zeta + B conj(zeta)
    normalized by 1 -> 1, t -> i.  ``potential_form`` and ``pullback_form`` are
    the 2x2 coefficient matrices (basis dt, dzeta) from the local potential
    and from pulling back the flat reference form; they must agree.
    """

    t: complex
    map_coefficients: tuple[complex, complex]
    potential_form: np.ndarray
    pullback_form: np.ndarray
    agreement: float
    type_residual: float
    fiber_coefficient: float
    top_power: float


def elliptic_family(t: complex) -> EllipticSlice:
    """Closed-form slice of the flat torus family at a base point.

    Raises for points outside the upper half plane.
    """
    t = complex(t)
    if t.imag <= 0:
        raise ValueError("base point must have positive imaginary part")
    d = t - np.conj(t)
    a = (1j - np.conj(t)) / d
    b = (t - 1j) / d
    a_t = -a / d
    a_tb = (1j - t) / d**2
    b_t = (1j - np.conj(t)) / d**2
    b_tb = (t - 1j) / d**2

    # Pull the flat fiber form back through z = a zeta + b conj(zeta); the
    # zeta-value drops out of the fiber block but feeds the base components.
    def pullback_at(zeta: complex) -> tuple[np.ndarray, float]:
        p = a_t * zeta + b_t * np.conj(zeta)
        q = a_tb * zeta + b_tb * np.conj(zeta)
        h = np.array([
            [p * np.conj(p) - q * np.conj(q), p * np.conj(a) - b * np.conj(q)],
            [a * np.conj(p) - q * np.conj(b), a * np.conj(a) - b * np.conj(b)],
        ])
        type_part = abs(p * np.conj(b) - a * np.conj(q))
        return h, type_part

    model = elliptic_model()
    rng = np.random.default_rng(2)
    agreement = 0.0
    type_resid = 0.0
    top = 0.0
    zeta0 = 0.37 + 0.41j
    for zeta in [zeta0] + list(rng.standard_normal(3) + 1j * rng.standard_normal(3)):
        pts = np.array([[zeta]], dtype=complex)
        h_pot = form_matrix(model, t, pts)[:, :, 0]
        h_pull, type_part = pullback_at(zeta)
        agreement = max(agreement, float(np.max(np.abs(h_pot - h_pull))))
        type_resid = max(type_resid, type_part)
        top = max(top, abs(np.linalg.det(h_pull)))
    pts0 = np.array([[zeta0]], dtype=complex)
    fiber_coeff = float(form_matrix(model, t, pts0)[1, 1, 0].real)
    if fiber_coeff <= 0:
        raise PositivityError("fiber coefficient must be positive")
    return EllipticSlice(t=t, map_coefficients=(a, b),
                         potential_form=form_matrix(model, t, pts0)[:, :, 0],
                         pullback_form=pullback_at(zeta0)[0],
                         agreement=agreement, type_residual=type_resid,
                         fiber_coefficient=fiber_coeff, top_power=top)


# ---------------------------------------------------------------------------
# Built-in models
# ---------------------------------------------------------------------------

def product_model(base_weight: float = 1.0, grid: int = 16) -> FibrationModel:
    """g = |z|^2 + w |t|^2: zero lifts and variation; c equals the base weight."""
    t, tb, zs, zbs = _wirtinger_symbols(1)
    expr = zs[0] * zbs[0] + base_weight * t * tb
    return model_from_potential(expr, f"product(w={base_weight})", n=1,
                                lattice=lambda tv: np.array([[1.0], [1j]]), grid=grid)


def vertical_model(grid: int = 16) -> FibrationModel:
    """g = |z|^2: degenerate in base directions; the trivial fibration."""
    t, tb, zs, zbs = _wirtinger_symbols(1)
    return model_from_potential(zs[0] * zbs[0], "vertical", n=1,
                                lattice=lambda tv: np.array([[1.0], [1j]]), grid=grid)


def cross_term_model(lam: float = 0.2, grid: int = 16) -> FibrationModel:
    """g = |z|^2 + |t|^2 + lam |z|^2 |t|^2: not a degenerate form."""
    t, tb, zs, zbs = _wirtinger_symbols(1)
    expr = zs[0] * zbs[0] + t * tb + lam * zs[0] * zbs[0] * t * tb
    return model_from_potential(expr, f"cross({lam})", n=1, lattice=None, grid=grid)


def elliptic_model(grid: int = 64) -> FibrationModel:
    """Flat torus family over the upper half plane.

    Potential 2 (Im z)^2 / Im t, whose complex Hessian is exactly the pullback
    of the flat reference form under the marking map (1 -> 1, t -> i); see
    ``elliptic_family`` for the two-representation agreement check.
    """
    t, tb, zs, zbs = _wirtinger_symbols(1)
    s = (t - tb) / (2 * sp.I)
    expr = -((zs[0] - zbs[0]) ** 2) / (2 * s)
    return model_from_potential(
        expr, "elliptic", n=1,
        lattice=lambda tv: np.array([[1.0], [tv]], dtype=complex), grid=grid)


def theta_weight_model(grid: int = 64) -> FibrationModel:
    """Flat torus family with potential 2 (Re z)^2 / Im t.

    Also a degenerate relative Kahler form with the same fiber restriction as
    the elliptic family; its Re-z profile is the convex geodesic ray whose
    Legendre transform is linear in Im t.
    """
    t, tb, zs, zbs = _wirtinger_symbols(1)
    s = (t - tb) / (2 * sp.I)
    expr = (zs[0] + zbs[0]) ** 2 / (2 * s)
    return model_from_potential(
        expr, "theta-weight", n=1,
        lattice=lambda tv: np.array([[1.0], [tv]], dtype=complex), grid=grid)


def perturbed_torus_model(eps: float = 0.02, grid: int = 64) -> FibrationModel:
    """Flat family plus a trigonometric perturbation in a true torus coordinate.

    The perturbation argument is the first real torus coordinate
    a = Re z - Re t (Im z / Im t), which shifts by integers under both lattice
    translations at every base point, so all derived fields stay periodic.
    The geodesic curvature becomes a genuine fiber function (the naive
    cos(2 pi Re z) is not deck-invariant and would break periodicity).
    """
    t, tb, zs, zbs = _wirtinger_symbols(1)
    s = (t - tb) / (2 * sp.I)
    b = (zs[0] - zbs[0]) / (t - tb)
    a = (zs[0] + zbs[0]) / 2 - ((t + tb) / 2) * b
    expr = -((zs[0] - zbs[0]) ** 2) / (2 * s) + eps * s * sp.cos(2 * sp.pi * a)
    return model_from_potential(
        expr, f"perturbed-torus({eps})", n=1,
        lattice=lambda tv: np.array([[1.0], [tv]], dtype=complex), grid=grid)


MODEL_FAMILIES = {
    "product": product_model,
    "vertical": vertical_model,
    "cross": cross_term_model,
    "elliptic": elliptic_model,
    "theta-weight": theta_weight_model,
    "perturbed-torus": perturbed_torus_model,
}


def build_model(family: str, **params) -> FibrationModel:
    """Instantiate a built-in family by name with keyword parameters."""
    if family not in MODEL_FAMILIES:
        raise ValueError(f"unknown model family {family!r}; known: "
                         f"{', '.join(sorted(MODEL_FAMILIES))}")
    return MODEL_FAMILIES[family](**params)


def hermitian_quadratic_model(path, n: int, name: str = "hermitian-path") -> FibrationModel:
    """Potential z^T A(Re tau) conj(z) for a path of positive matrices.

    The base is the complexified real line; jets follow from the chain rule
    d_tau = (1/2) d_x on functions of the real part.
    """

    def second(tv, pts):
        a, da, d2a = path(float(np.real(tv)))
        cols = pts.shape[1]
        bb = 0.25 * np.einsum("jk,j...,k...->...", d2a, pts, pts.conj())
        bf = 0.5 * np.einsum("jb,j...->b...", da, pts)
        ff = np.repeat(np.asarray(a, dtype=complex)[:, :, None], cols, axis=2)
        return bb, bf, ff

    def third(tv, pts):
        # All third jets with two conjugate fiber slots vanish on a pure
        # z-zbar quadratic.
        cols = pts.shape[1]
        return (np.zeros((n, n, cols), dtype=complex),
                np.zeros((n, n, n, cols), dtype=complex))

    return FibrationModel(name=name, n=n, second=second, third=third, lattice=None)
