"""Charts on the space of compatible complex structures.

A compatible structure J' is measured against a reference J by the tensor
whose matrix in a unitary frame is the chart coordinate: a complex symmetric
n x n matrix Phi with spectral radius of Phi conj(Phi) below one (the type-III
bounded symmetric domain).  Two independent constructions are provided: the
Cayley-type closed form (1 + J J')(1 - J J')^{-1} and a direct projection
solve; their agreement is a core test surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _fd
from .symplin import (
    ComplexStructure,
    SymplecticSpace,
    UnitaryFrame,
    polarize_structure,
    type_projectors,
    unitary_frame,
)

SYM_TOL = 1e-10
BOUNDARY_MARGIN = 1e-12


class DomainError(ValueError):
    """Input does not define a point of the bounded domain."""


class BoundaryProximityError(ValueError):
    """Requested stencil exits the bounded domain."""


class AdmissibilityError(ValueError):
    """Real-linear map with singular complex-linear part."""


def spectral_radius_phibar(phi: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(phi @ phi.conj()))))


@dataclass(frozen=True)
class BsdPoint:
    """Complex symmetric matrix coordinate on the bounded domain."""

    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=complex)
        if phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
            raise DomainError("phi must be a square matrix")
        if np.max(np.abs(phi - phi.T)) > SYM_TOL:
            raise DomainError("phi must be symmetric within 1e-10")
        if spectral_radius_phibar(phi) >= 1.0 - BOUNDARY_MARGIN:
            raise DomainError("spectral radius of phi conj(phi) must stay below 1")
        object.__setattr__(self, "phi", phi)

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @property
    def radius(self) -> float:
        return spectral_radius_phibar(self.phi) ** 0.5


@dataclass(frozen=True)
class RealLinearMap:
    """T(z) = A z + B conj(z) on C^n."""

    linear_part: np.ndarray
    antilinear_part: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.linear_part, dtype=complex)
        b = np.asarray(self.antilinear_part, dtype=complex)
        if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("linear and antilinear parts must be square of equal size")
        object.__setattr__(self, "linear_part", a)
        object.__setattr__(self, "antilinear_part", b)


# ---------------------------------------------------------------------------
# Coordinates on the space of symmetric matrices
# ---------------------------------------------------------------------------

def sym_basis(n: int) -> list[np.ndarray]:
    """Real basis E_aa (a = b) and E_ab + E_ba (a < b), lexicographic."""
    out = []
    for a in range(n):
        for b in range(a, n):
            m = np.zeros((n, n))
            if a == b:
                m[a, a] = 1.0
            else:
                m[a, b] = 1.0
                m[b, a] = 1.0
            out.append(m)
    return out


def sym_dim(n: int) -> int:
    return n * (n + 1) // 2


def sym_from_coords(coords: np.ndarray, n: int) -> np.ndarray:
    coords = np.asarray(coords, dtype=complex)
    phi = np.zeros((n, n), dtype=complex)
    idx = 0
    for a in range(n):
        for b in range(a, n):
            phi[a, b] += coords[idx]
            if a != b:
                phi[b, a] += coords[idx]
            idx += 1
    return phi


def coords_from_sym(phi: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex)
    n = phi.shape[0]
    return np.array([phi[a, b] for a in range(n) for b in range(a, n)], dtype=complex)


def random_bsd_point(n: int, rng: np.random.Generator, radius: float = 0.7) -> BsdPoint:
    """Seeded symmetric matrix rescaled to the requested spectral radius."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    phi = 0.5 * (g + g.T)
    rho = spectral_radius_phibar(phi) ** 0.5
    target = radius * rng.uniform(0.1, 1.0)
    if rho > 0:
        phi = phi * (target / rho)
    return BsdPoint(phi=phi)


# ---------------------------------------------------------------------------
# Chart maps
# ---------------------------------------------------------------------------

def _cayley_operator(J: ComplexStructure, Jp: ComplexStructure) -> np.ndarray:
    """(1 + J J')(1 - J J')^{-1} as an operator on covector coordinate columns."""
    k = J.covector_action()
    kp = Jp.covector_action()
    prod = k @ kp
    eye = np.eye(J.dim)
    denom = eye - prod
    if np.linalg.cond(denom) > 1e14:
        raise DomainError("1 - J J' is singular: structures are not a compatible pair")
    return np.linalg.solve(denom.T, (eye + prod).T).T


def kns_tensor(J: ComplexStructure, Jp: ComplexStructure, frame: UnitaryFrame) -> BsdPoint:
    """Matrix of the Cayley-form tensor of J' against J in the given frame.

    The full-space operator restricted to the (1,0) covectors of J lands in
    the (0,1) covectors; its coefficients against the conjugate frame are the
    chart coordinates.
    """
    op = _cayley_operator(J, Jp)
    basis = frame.dual_basis_matrix()
    n = frame.n
    images = op @ basis[:, :n]
    coeffs = np.linalg.solve(basis, images)
    purity = float(np.max(np.abs(coeffs[:n, :])))
    scale = max(1.0, float(np.max(np.abs(coeffs))))
    if purity > 1e-9 * scale:
        raise DomainError(f"tensor image has a spurious (1,0) part ({purity:.2e})")
    return BsdPoint(phi=coeffs[n:, :])


def kns_tensor_by_projection(J: ComplexStructure, Jp: ComplexStructure,
                             frame: UnitaryFrame) -> np.ndarray:
    """Independent construction of the chart matrix by a projection solve.

    Decomposes each frame covector xi^k along (1,0)-covectors of J' plus
    (0,1)-covectors of J; minus the second component, expanded in the
    conjugate frame, gives the matrix.  No Cayley algebra is used: the
    (1,0) space of J' comes from its type projector's column space.
    """
    n = frame.n
    p10, _ = type_projectors(Jp)
    u, s, _ = np.linalg.svd(p10)
    if s[n - 1] < 0.5:
        raise DomainError("degenerate (1,0) space")
    basis_p = u[:, :n]                       # columns span (1,0) covectors of J'
    basis_bar = frame.dual_basis_matrix()[:, n:]   # (0,1) covectors of J
    stacked = np.hstack([basis_p, basis_bar])
    if np.linalg.cond(stacked) > 1e14:
        raise DomainError("(1,0) of J' and (0,1) of J fail to be transverse")
    phi = np.empty((n, n), dtype=complex)
    for k in range(n):
        coeff = np.linalg.solve(stacked, frame.columns[k])
        phi[:, k] = -coeff[n:]
    return phi


def structure_from_bsd(J: ComplexStructure, frame: UnitaryFrame, point: BsdPoint) -> ComplexStructure:
    """Compatible structure whose (1,0) covectors are spanned by xi^k + sum phi[j,k] conj(xi^j)."""
    n = frame.n
    if point.n != n:
        raise DomainError("point size does not match the frame")
    phi = point.phi
    graph = np.block([[np.eye(n), phi.conj()], [phi, np.eye(n)]])
    basis = frame.dual_basis_matrix() @ graph
    eig = np.diag(np.concatenate([1j * np.ones(n), -1j * np.ones(n)]))
    k_new = basis @ eig @ np.linalg.inv(basis)
    imag_norm = float(np.max(np.abs(k_new.imag)))
    if imag_norm > 1e-9:
        raise DomainError(f"reconstructed structure is not real ({imag_norm:.2e})")
    return polarize_structure(k_new.real.T)


def berndtsson_tensor(T: RealLinearMap, cond_limit: float = 1e12) -> np.ndarray:
    """T1^{-1} T2 for an admissible real-linear map T = T1 + T2."""
    a = T.linear_part
    if np.linalg.cond(a) > cond_limit:
        raise AdmissibilityError("complex-linear part is singular within tolerance")
    return np.linalg.solve(a, T.antilinear_part)


# ---------------------------------------------------------------------------
# Holomorphic motion
# ---------------------------------------------------------------------------

def holomorphic_motion(point: BsdPoint, z: np.ndarray) -> np.ndarray:
    """zeta = z + phi conj(z)."""
    z = np.asarray(z, dtype=complex)
    return z + point.phi @ z.conj()


def inverse_motion(point: BsdPoint, zeta: np.ndarray) -> np.ndarray:
    """z = (1 - phi conj(phi))^{-1} (zeta - phi conj(zeta))."""
    zeta = np.asarray(zeta, dtype=complex)
    phi = point.phi
    rhs = zeta - phi @ zeta.conj()
    return np.linalg.solve(np.eye(point.n) - phi @ phi.conj(), rhs)


def _standard_sym_matrix(dim: int) -> np.ndarray:
    """Real matrix of i sum dz^a wedge dzbar^a in (Re z, Im z) coordinates."""
    w = np.zeros((2 * dim, 2 * dim))
    w[:dim, dim:] = 2.0 * np.eye(dim)
    w[dim:, :dim] = -2.0 * np.eye(dim)
    return w


def motion_form_residual(point: BsdPoint, zeta: np.ndarray, step: float = 1e-4) -> float:
    """Worst pairing of two holomorphic coordinate differentials under the motion form.

    The pullback of the flat fiber form under the inverse motion, completed by
    a base Kahler term so the total form is symplectic, must pair any two
    (1,0) coordinate differentials to zero; that is the vanishing of the
    (2,0) part ((0,2) follows by conjugation since the form is real).
    """
    n = point.n
    nsym = sym_dim(n)
    zeta = np.asarray(zeta, dtype=complex)
    base_coords = coords_from_sym(point.phi)

    def z_map(x: np.ndarray) -> np.ndarray:
        t = x[:nsym]
        zf = x[nsym:]
        pt = BsdPoint(phi=sym_from_coords(t, n))
        return inverse_motion(pt, zf)

    x0 = np.concatenate([base_coords, zeta])
    dim = x0.size

    # Real Jacobian of z(t, zeta) by central differences.
    real0 = np.concatenate([x0.real, x0.imag])

    def z_real(xr: np.ndarray) -> np.ndarray:
        zc = xr[:dim] + 1j * xr[dim:]
        z = z_map(zc)
        return np.concatenate([z.real, z.imag])

    h = step
    jac = np.empty((2 * n, 2 * dim))
    for a in range(2 * dim):
        e = np.zeros(2 * dim)
        e[a] = h
        # Fourth-order central stencil keeps the pullback oracle near 1e-12.
        jac[:, a] = (z_real(real0 - 2 * e) - 8.0 * z_real(real0 - e)
                     + 8.0 * z_real(real0 + e) - z_real(real0 + 2 * e)) / (12.0 * h)

    omega = jac.T @ _standard_sym_matrix(n) @ jac
    base_block = _standard_sym_matrix(nsym)
    # Base coordinates sit at real slots [0, nsym) and [dim, dim + nsym).
    sel = np.concatenate([np.arange(nsym), dim + np.arange(nsym)])
    omega[np.ix_(sel, sel)] += base_block

    omega_inv = np.linalg.inv(omega)

    def covector(slot: int) -> np.ndarray:
        row = np.zeros(2 * dim, dtype=complex)
        row[slot] = 1.0
        row[dim + slot] = 1j
        return row

    holo = [covector(s) for s in range(dim)]
    worst = 0.0
    for a in range(dim):
        for b in range(a, dim):
            val = holo[a] @ omega_inv @ holo[b]
            worst = max(worst, abs(val))
    return float(worst)


# ---------------------------------------------------------------------------
# Holomorphy probe
# ---------------------------------------------------------------------------

def chart_transition(space: SymplecticSpace, J: ComplexStructure, frame: UnitaryFrame,
                     target_J: ComplexStructure, target_frame: UnitaryFrame):
    """Coordinate expression of the transition into the chart centered at target_J."""

    def transition(coords: np.ndarray) -> np.ndarray:
        pt = BsdPoint(phi=sym_from_coords(coords, frame.n))
        jp = structure_from_bsd(J, frame, pt)
        return kns_tensor(target_J, jp, target_frame).phi

    return transition


def holomorphy_probe(space: SymplecticSpace, J: ComplexStructure, frame: UnitaryFrame,
                     base: BsdPoint, direction: np.ndarray, step: float = 1e-3,
                     richardson: bool = False) -> float:
    """Cauchy-Riemann residual of the chart transition at ``base`` along ``direction``.

    The second chart is centered at the structure that ``base`` labels; a zero
    direction returns zero by convention.
    """
    direction = np.asarray(direction, dtype=complex)
    if np.max(np.abs(direction - direction.T)) > SYM_TOL:
        raise ValueError("direction must be a symmetric matrix")
    scale = float(np.max(np.abs(direction)))
    if scale == 0.0:
        return 0.0
    direction = direction / scale

    base_coords = coords_from_sym(base.phi)
    dir_coords = coords_from_sym(direction)

    # All stencil points must stay inside the domain before any chart work.
    for delta in (step, -step, 1j * step, -1j * step, step / 2, -step / 2,
                  1j * step / 2, -1j * step / 2):
        probe_phi = sym_from_coords(base_coords + delta * dir_coords, frame.n)
        if spectral_radius_phibar(probe_phi) >= 1.0 - BOUNDARY_MARGIN:
            raise BoundaryProximityError("finite-difference stencil exits the domain")

    target_J = structure_from_bsd(J, frame, base)
    target_frame = unitary_frame(space, target_J)
    transition = chart_transition(space, J, frame, target_J, target_frame)

    residual = _fd.dbar_along(lambda c: transition(c), base_coords,
                              dir_coords, step=step, richardson=richardson)
    return float(np.max(np.abs(residual)))
