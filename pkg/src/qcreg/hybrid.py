"""Hybrid landmark + intensity registration with a multiresolution pyramid.

The intensity term is driven by a demon force: a displacement field built
from the pointwise intensity difference and the gradients of both images,
converted to a per-face Beltrami perturbation and composed onto the current
map's coefficient.  Landmarks stay hard constraints of every reconstruction
solve, so they are matched exactly at every iterate and every pyramid level.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import InputError
from .mesh import TriMesh, divergence_coeffs, face_affine
from .beltrami import (
    BeltramiField,
    beltrami_from_map,
    clamp_to_disk,
    compose_beltrami,
    face_to_vertex,
    jacobian,
    vertex_to_face,
)
from .lbs import ConstraintSet, solve_lbs
from .smoothing import CoefficientSmoother, cot_laplacian
from .landmark import RegistrationParams, RegistrationResult, energy_lm, _landmark_error
from .image import IntensityField, build_pyramid

_DEGENERATE_TOL = 1e-14


@dataclass
class HybridParams(RegistrationParams):
    """Registration knobs plus the intensity-descent weights.

    gamma_i: weight of the intensity descent direction.
    sigma: splitting weight coupling mu to the smoothed field (also the
        smoothing solve's penalty).
    demon_noise: noise scale in the demon-force denominators.
    pyramid_levels: number of coarsening layers (0 = single resolution).
    """

    gamma_i: float = 1.0
    sigma: float = 2.0
    demon_noise: float = 1.0
    pyramid_levels: int = 3

    def __post_init__(self):
        super().__post_init__()
        if self.gamma_i <= 0 or self.sigma <= 0 or self.demon_noise <= 0:
            raise InputError("gamma_i, sigma and demon_noise must be > 0")
        if self.pyramid_levels < 0:
            raise InputError("pyramid_levels must be >= 0")


def demon_force(i1: IntensityField, i2: IntensityField, points, warped_points,
                demon_noise: float = 1.0) -> np.ndarray:
    """Demon-force displacement at each point.

    ``i1`` and its gradient are sampled at ``points``; ``i2`` and its
    gradient are sampled at ``warped_points`` (the current map images of the
    same points).  Terms with vanishing denominator contribute zero.
    """
    if demon_noise <= 0:
        raise InputError("demon_noise must be > 0")
    v1 = i1.sample(points)
    g1 = i1.sample_gradient(points)
    v2 = i2.sample(warped_points)
    g2 = i2.sample_gradient(warped_points)
    diff = v1 - v2
    a2d2 = (demon_noise * diff) ** 2
    out = np.zeros_like(g1)
    for g in (g2, g1):
        den = (g**2).sum(axis=1) + a2d2
        ok = den > 0
        out[ok] += (diff[ok] / den[ok])[:, None] * g[ok]
    return out


def demon_beltrami(mesh: TriMesh, u) -> BeltramiField:
    """Beltrami coefficient of the displacement map v -> v + u(v).

    Faces collapsed by the displacement get a guarded denominator; the
    resulting coefficient is meant to be clamped before use.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (mesh.n_vertices, 2):
        raise InputError(f"u must be ({mesh.n_vertices}, 2), got {u.shape}")
    aff = face_affine(mesh, mesh.vertices + u)
    num = (aff.a - aff.d) + 1j * (aff.c + aff.b)
    den = (aff.a + aff.d) + 1j * (aff.c - aff.b)
    den = np.where(np.abs(den) < _DEGENERATE_TOL, _DEGENERATE_TOL, den)
    return BeltramiField(num / den, "face")


class Mismatch(NamedTuple):
    absolute: float
    relative: float


def intensity_mismatch(i1: IntensityField, i2: IntensityField, mesh: TriMesh,
                       positions) -> Mismatch:
    """Area-weighted squared intensity mismatch of the warped target.

    absolute = sum_v w_v (I1(v) - I2(f(v)))^2 with w_v a third of the
    incident face areas; relative divides by sum_v w_v I1(v)^2.
    """
    w = np.zeros(mesh.n_vertices)
    np.add.at(w, mesh.faces, (mesh.areas / 3.0)[:, None])
    v1 = i1.sample(mesh.vertices)
    v2 = i2.sample(np.asarray(positions, dtype=np.float64))
    absolute = float(np.sum(w * (v1 - v2) ** 2))
    norm = float(np.sum(w * v1**2))
    relative = absolute / norm if norm > 0 else 0.0
    return Mismatch(absolute, relative)


def prolongate_map(coarse_positions, coarse_shape, fine_shape) -> np.ndarray:
    """Bilinear prolongation of a coarse-grid map to a nested finer grid.

    Positions are flattened in grid-mesh vertex order; the grids are the
    regular triangulations of rasters with the given (rows, cols) shapes.
    At nodes shared by both grids the coarse values are reproduced exactly.
    """
    ch, cw = coarse_shape
    fh, fw = fine_shape
    coarse_positions = np.asarray(coarse_positions, dtype=np.float64)
    if coarse_positions.shape != (ch * cw, 2):
        raise InputError(
            f"coarse map must be ({ch * cw}, 2), got {coarse_positions.shape}"
        )
    for fine, coarse in ((fh, ch), (fw, cw)):
        if coarse != (fine + 1) // 2 and fine != coarse:
            raise InputError(
                f"grids not factor-2 nested: fine {fine_shape}, coarse {coarse_shape}"
            )
    grid = coarse_positions.reshape(ch, cw, 2)
    # fine node (r, c) at normalized coords (c/(fw-1), r/(fh-1)) lands on the
    # coarse grid at (r * (ch-1) / (fh-1), c * (cw-1) / (fw-1))
    rr = np.arange(fh) * (ch - 1) / (fh - 1)
    cc = np.arange(fw) * (cw - 1) / (fw - 1)
    R, C = np.meshgrid(rr, cc, indexing="ij")
    r0 = np.clip(np.floor(R).astype(int), 0, ch - 2)
    c0 = np.clip(np.floor(C).astype(int), 0, cw - 2)
    fr = (R - r0)[..., None]
    fc = (C - c0)[..., None]
    out = (
        grid[r0, c0] * (1 - fr) * (1 - fc)
        + grid[r0, c0 + 1] * (1 - fr) * fc
        + grid[r0 + 1, c0] * fr * (1 - fc)
        + grid[r0 + 1, c0 + 1] * fr * fc
    )
    return out.reshape(fh * fw, 2)


def _snap_landmarks(mesh: TriMesh, source_points, targets) -> ConstraintSet:
    """Snap continuous landmark source points to grid vertices, dropping
    duplicates after snapping (nearest wins)."""
    indices = []
    kept_targets = []
    seen = set()
    for p, q in zip(source_points, targets):
        idx = int(np.argmin(((mesh.vertices - p) ** 2).sum(axis=1)))
        if idx in seen:
            continue
        seen.add(idx)
        indices.append(idx)
        kept_targets.append(q)
    return ConstraintSet(
        boundary_kind="rectangle_free",
        landmark_indices=np.array(indices, dtype=np.int64),
        landmark_targets=np.array(kept_targets).reshape(-1, 2),
    )


def register_hybrid(mesh: TriMesh, i1: IntensityField, i2: IntensityField,
                    constraints: ConstraintSet,
                    params: Optional[HybridParams] = None) -> RegistrationResult:
    """Landmark + intensity registration, coarse to fine.

    ``mesh`` must be the grid triangulation of ``i1`` (one vertex per raster
    node); landmark indices refer to it.  With ``pyramid_levels > 0`` the
    rasters are coarsened, registered on the coarse grids, and each result
    is prolongated as the next level's initial map.
    """
    if params is None:
        params = HybridParams()
    if (mesh.n_vertices != i1.rows * i1.cols
            or not np.allclose(mesh.vertices, i1.grid().vertices)):
        raise InputError("mesh must be the grid triangulation of i1")
    if params.pyramid_levels > 0 and constraints.boundary_kind != "rectangle_free":
        raise InputError("multiresolution registration requires rectangle_free boundary")
    if (i1.rows, i1.cols) != (i2.rows, i2.cols):
        raise InputError("i1 and i2 must share a raster shape")

    pyr1 = build_pyramid(i1, params.pyramid_levels)
    pyr2 = build_pyramid(i2, params.pyramid_levels)
    lm_points = mesh.vertices[constraints.landmark_indices]
    lm_targets = constraints.landmark_targets

    positions = None
    prev_shape = None
    result = None
    for level in range(params.pyramid_levels, -1, -1):
        f1, f2 = pyr1[level], pyr2[level]
        level_mesh = f1.grid() if level > 0 else mesh
        if level == 0 or params.pyramid_levels == 0:
            level_constraints = constraints
        else:
            level_constraints = _snap_landmarks(level_mesh, lm_points, lm_targets)
        if positions is not None:
            positions = prolongate_map(positions, prev_shape, (f1.rows, f1.cols))
        result = _register_level(level_mesh, f1, f2, level_constraints, params,
                                 init_positions=positions)
        positions = result.positions
        prev_shape = (f1.rows, f1.cols)
    return result


def _register_level(mesh, i1, i2, constraints, params, init_positions=None):
    coeffs = divergence_coeffs(mesh)
    laplacian = cot_laplacian(mesh)
    smoother = CoefficientSmoother(mesh, params.alpha, params.sigma, laplacian=laplacian)
    delta = params.clamp_delta

    if init_positions is None:
        mu_tilde = BeltramiField(np.zeros(mesh.n_faces, dtype=np.complex128), "face")
        positions = solve_lbs(mesh, mu_tilde, constraints, coeffs=coeffs)
        mu = beltrami_from_map(mesh, positions)
        nu = BeltramiField(np.zeros(mesh.n_vertices, dtype=np.complex128), "vertex")
    else:
        positions = init_positions
        mu = clamp_to_disk(beltrami_from_map(mesh, positions), delta)
        nu = clamp_to_disk(face_to_vertex(mesh, mu), delta)

    trace_rows = []
    energy_trace = []
    mismatch_trace = []
    converged = False
    iterations = 0

    def record(it, pos, nu_now):
        energy = energy_lm(mesh, nu_now, params.alpha, params.p, coeffs=coeffs)
        mm = intensity_mismatch(i1, i2, mesh, pos)
        flips = int(np.sum(jacobian(mesh, pos) <= 0))
        max_mu = float(np.abs(beltrami_from_map(mesh, pos).values).max())
        energy_trace.append((it, energy))
        mismatch_trace.append((it, mm.relative))
        trace_rows.append((it, energy, _landmark_error(pos, constraints), max_mu, flips))

    record(0, positions, nu)

    for it in range(1, params.max_iters + 1):
        iterations = it
        u = demon_force(i1, i2, mesh.vertices, positions, params.demon_noise)
        mu_d = clamp_to_disk(demon_beltrami(mesh, u), delta)
        d_mu1 = compose_beltrami(mesh, positions, mu_d).values - mu.values
        d_mu2 = -2.0 * (mu.values - vertex_to_face(mesh, nu).values)
        mu_tilde = clamp_to_disk(
            BeltramiField(mu.values + params.gamma_i * d_mu1 + params.sigma * d_mu2, "face"),
            delta,
        )
        positions = solve_lbs(mesh, mu_tilde, constraints, coeffs=coeffs)
        mu_next = beltrami_from_map(mesh, positions)

        nu = smoother.smooth(face_to_vertex(mesh, mu_next))
        probe = solve_lbs(mesh, clamp_to_disk(vertex_to_face(mesh, nu), delta),
                          constraints, coeffs=coeffs)
        d = face_to_vertex(mesh, beltrami_from_map(mesh, probe)).values - nu.values
        nu = clamp_to_disk(BeltramiField(nu.values + params.step_t * d, "vertex"), delta)

        change = float(np.abs(mu_next.values - mu.values).max())
        mu = mu_next
        record(it, positions, nu)
        if change < params.epsilon:
            converged = True
            break

    flips = int(np.sum(jacobian(mesh, positions) <= 0))
    return RegistrationResult(
        positions=positions,
        nu=nu,
        energy_trace=energy_trace,
        flip_count=flips,
        landmark_error=_landmark_error(positions, constraints),
        converged=converged,
        iterations=iterations,
        trace_rows=trace_rows,
        mismatch_trace=mismatch_trace,
    )
