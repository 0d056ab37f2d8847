"""Linear Beltrami Solver: maps from prescribed Beltrami coefficients.

Writing the target coefficient per face as ``mu = rho + i tau``, the partial
derivatives of the sought map satisfy the divergence-form elliptic equations

    div(A grad u) = 0,   div(A grad v) = 0,
    A = [[alpha1, alpha2], [alpha2, alpha3]],

with per-face coefficients rational in ``(rho, tau)``.  Discretizing the
divergence with the hat-function coefficients of ``divergence_coeffs`` yields
one sparse symmetric positive definite system shared by both coordinates.
Boundary conditions and interior landmark correspondences are imposed by hard
elimination, so they hold exactly in the solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InputError, NumericalError
from .mesh import TriMesh, divergence_coeffs, DivergenceCoeffs
from .beltrami import BeltramiField, _face_values

RECTANGLE_TOL = 1e-9
_SINGULAR_TOL = 1e-12


@dataclass
class AlphaCoeffs:
    """Per-face coefficients of the elliptic operator."""

    a1: np.ndarray
    a2: np.ndarray
    a3: np.ndarray


def alpha_coeffs(mu) -> AlphaCoeffs:
    """Elliptic coefficients from a per-face Beltrami coefficient.

    alpha1 = ((rho-1)^2 + tau^2) / (1 - rho^2 - tau^2)
    alpha2 = -2 tau / (1 - rho^2 - tau^2)
    alpha3 = ((rho+1)^2 + tau^2) / (1 - rho^2 - tau^2)
    """
    values = mu.values if isinstance(mu, BeltramiField) else np.asarray(mu, dtype=np.complex128)
    rho, tau = values.real, values.imag
    den = 1.0 - rho**2 - tau**2
    if den.size and den.min() < _SINGULAR_TOL:
        bad = np.where(den < _SINGULAR_TOL)[0]
        raise NumericalError(
            f"coefficient singular (|mu| ~>= 1) on face(s) {bad.tolist()[:10]}; clamp mu first"
        )
    a1 = ((rho - 1.0) ** 2 + tau**2) / den
    a2 = -2.0 * tau / den
    a3 = (1.0 + 2.0 * rho + rho**2 + tau**2) / den
    return AlphaCoeffs(a1, a2, a3)


@dataclass
class ConstraintSet:
    """Boundary condition plus interior landmark pairs.

    boundary_kind:
        "dirichlet_full": both coordinates of every boundary vertex fixed to
            ``dirichlet_values`` (an (n, 2) array; only boundary rows used).
        "rectangle_free": boundary must be an axis-aligned rectangle; each
            side fixes only the coordinate normal to it (to the side's own
            value) and the four corners are fully pinned.
    landmarks: vertex indices and (k, 2) targets; both coordinates fixed.
    """

    boundary_kind: str = "rectangle_free"
    dirichlet_values: Optional[np.ndarray] = None
    landmark_indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    landmark_targets: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self):
        if self.boundary_kind not in ("dirichlet_full", "rectangle_free"):
            raise InputError(f"unknown boundary_kind {self.boundary_kind!r}")
        self.landmark_indices = np.asarray(self.landmark_indices, dtype=np.int64).reshape(-1)
        self.landmark_targets = np.asarray(self.landmark_targets, dtype=np.float64).reshape(-1, 2)
        if len(self.landmark_indices) != len(self.landmark_targets):
            raise InputError("landmark indices and targets must have equal length")
        if len(np.unique(self.landmark_indices)) != len(self.landmark_indices):
            raise InputError("duplicate landmark vertex indices")
        if self.dirichlet_values is not None:
            self.dirichlet_values = np.asarray(self.dirichlet_values, dtype=np.float64)
        elif self.boundary_kind == "dirichlet_full":
            raise InputError("dirichlet_full requires dirichlet_values")


@dataclass
class LbsSystem:
    """Assembled sparse system plus per-coordinate eliminated constraints."""

    matrix: sp.csr_matrix
    fixed_mask: np.ndarray  # (n, 2) bool
    fixed_values: np.ndarray  # (n, 2) float, meaningful where fixed

    def reduced(self, coord: int):
        """Free-subsystem ``(M_ff, rhs, free_index)`` for coordinate 0 or 1."""
        fixed = self.fixed_mask[:, coord]
        free = ~fixed
        M_ff = self.matrix[free][:, free]
        rhs = -self.matrix[free][:, fixed] @ self.fixed_values[fixed, coord]
        return M_ff.tocsc(), rhs, np.where(free)[0]

    def dump_matrix_market(self, path) -> None:
        """Debug dump of the unreduced operator in matrix-market format."""
        from scipy.io import mmwrite

        mmwrite(str(path), self.matrix)


def _rectangle_sides(mesh: TriMesh):
    bv = mesh.boundary_vertices
    pts = mesh.vertices[bv]
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    on_left = np.abs(pts[:, 0] - x0) < RECTANGLE_TOL
    on_right = np.abs(pts[:, 0] - x1) < RECTANGLE_TOL
    on_bottom = np.abs(pts[:, 1] - y0) < RECTANGLE_TOL
    on_top = np.abs(pts[:, 1] - y1) < RECTANGLE_TOL
    off = ~(on_left | on_right | on_bottom | on_top)
    if off.any():
        raise InputError(
            "rectangle_free requires an axis-aligned rectangular boundary; "
            f"vertex {int(bv[np.where(off)[0][0]])} lies on no side"
        )
    return bv, on_left | on_right, on_bottom | on_top


def assemble_lbs(mesh: TriMesh, alphas: AlphaCoeffs, constraints: ConstraintSet,
                 coeffs: Optional[DivergenceCoeffs] = None) -> LbsSystem:
    """Assemble the divergence-form operator and eliminate constraints.

    The operator is ``Dx^T a1 Dx + Dx^T a2 Dy + Dy^T a2 Dx + Dy^T a3 Dy``
    with ``Dx/Dy`` the per-face gradient operators; it is symmetric and,
    restricted to free coordinates, positive definite for admissible mu.
    """
    if coeffs is None:
        coeffs = divergence_coeffs(mesh)
    if not (np.all(np.isfinite(alphas.a1)) and np.all(np.isfinite(alphas.a2))
            and np.all(np.isfinite(alphas.a3))):
        raise NumericalError("non-finite elliptic coefficients")
    Dx, Dy = coeffs.grad_x, coeffs.grad_y
    d1 = sp.diags(alphas.a1)
    d2 = sp.diags(alphas.a2)
    d3 = sp.diags(alphas.a3)
    M = (Dx.T @ d1 @ Dx + Dx.T @ d2 @ Dy + Dy.T @ d2 @ Dx + Dy.T @ d3 @ Dy).tocsr()

    n = mesh.n_vertices
    fixed_mask = np.zeros((n, 2), dtype=bool)
    fixed_values = np.zeros((n, 2))

    if constraints.boundary_kind == "dirichlet_full":
        if constraints.dirichlet_values is None:
            raise InputError("dirichlet_full requires dirichlet_values")
        if constraints.dirichlet_values.shape != (n, 2):
            raise InputError(
                f"dirichlet_values must be ({n}, 2), got {constraints.dirichlet_values.shape}"
            )
        bv = mesh.boundary_vertices
        fixed_mask[bv] = True
        fixed_values[bv] = constraints.dirichlet_values[bv]
    else:
        bv, on_vertical, on_horizontal = _rectangle_sides(mesh)
        fixed_mask[bv[on_vertical], 0] = True
        fixed_values[bv[on_vertical], 0] = mesh.vertices[bv[on_vertical], 0]
        fixed_mask[bv[on_horizontal], 1] = True
        fixed_values[bv[on_horizontal], 1] = mesh.vertices[bv[on_horizontal], 1]

    for idx, target in zip(constraints.landmark_indices, constraints.landmark_targets):
        for coord in range(2):
            if fixed_mask[idx, coord] and abs(fixed_values[idx, coord] - target[coord]) > RECTANGLE_TOL:
                raise InputError(
                    f"landmark at vertex {int(idx)} conflicts with a fixed boundary value"
                )
        fixed_mask[idx] = True
        fixed_values[idx] = target

    return LbsSystem(matrix=M, fixed_mask=fixed_mask, fixed_values=fixed_values)


def solve_lbs(mesh: TriMesh, mu, constraints: ConstraintSet,
              coeffs: Optional[DivergenceCoeffs] = None,
              rtol: float = 1e-10) -> np.ndarray:
    """Reconstruct the map with Beltrami coefficient ``mu`` under constraints.

    Returns an (n, 2) positions array.  Constraints hold exactly (hard
    elimination); the free equations are solved by sparse LU and the
    relative residual is checked against ``rtol``.
    """
    values = _face_values(mu, mesh.n_faces)
    system = assemble_lbs(mesh, alpha_coeffs(values), constraints, coeffs=coeffs)
    out = system.fixed_values.copy()
    for coord in range(2):
        M_ff, rhs, free_index = system.reduced(coord)
        if len(free_index) == 0:
            continue
        try:
            lu = spla.splu(M_ff)
            x = lu.solve(rhs)
        except RuntimeError as exc:
            raise NumericalError(f"LBS system is singular: {exc}") from exc
        residual = np.linalg.norm(M_ff @ x - rhs)
        scale = max(np.linalg.norm(rhs), 1.0)
        if not np.isfinite(residual) or residual > rtol * scale:
            raise NumericalError(
                f"LBS solve did not converge: relative residual {residual / scale:.3e}"
            )
        out[free_index, coord] = x
    return out
