"""Planar triangle meshes, per-face gradients and the discrete divergence.

A map between meshes is represented as an ``(n, 2)`` float array of target
vertex positions ("positions array"), one row per mesh vertex.  All per-face
differential quantities (gradients, Beltrami coefficients, Jacobians) are
derived from the piecewise linear interpolation of such an array.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import MeshError, InputError

# A face counts as degenerate when its area falls below this fraction of the
# mesh bounding-box area.
DEGENERATE_AREA_FACTOR = 1e-12


class FaceAffine(NamedTuple):
    """Per-face derivatives of a piecewise linear map: u_x, u_y, v_x, v_y."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray


class TriMesh:
    """Planar triangulation with positively oriented faces.

    Faces supplied with clockwise orientation are silently reordered (two
    indices swapped); the number of reordered faces is kept in
    ``flipped_input_faces`` and reported with a warning.

    Attributes:
        vertices: (n, 2) float array of vertex coordinates.
        faces: (m, 3) int array of CCW vertex triples.
        areas: (m,) positive face areas.
        boundary_vertices: sorted int array of vertices on boundary edges.
    """

    def __init__(self, vertices, faces):
        vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        faces = np.ascontiguousarray(faces, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise MeshError(f"vertices must be (n, 2), got {vertices.shape}")
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise MeshError(f"faces must be (m, 3), got {faces.shape}")
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise MeshError("face indices out of range")

        signed = _signed_areas(vertices, faces)
        flipped = signed < 0
        if flipped.any():
            faces = faces.copy()
            faces[flipped, 1], faces[flipped, 2] = (
                faces[flipped, 2].copy(),
                faces[flipped, 1].copy(),
            )
            signed = np.abs(signed)
            warnings.warn(f"reordered {int(flipped.sum())} clockwise face(s)")
        self.flipped_input_faces = int(flipped.sum())

        bbox = vertices.max(axis=0) - vertices.min(axis=0)
        bbox_area = max(bbox[0] * bbox[1], np.finfo(float).tiny)
        bad = np.where(signed < DEGENERATE_AREA_FACTOR * bbox_area)[0]
        if bad.size:
            raise MeshError(f"degenerate face(s) with ~zero area: {bad.tolist()[:10]}")

        self.vertices = vertices
        self.faces = faces
        self.areas = signed

        self._check_manifold()

    def _check_manifold(self):
        edges = np.sort(
            np.concatenate(
                [self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]]
            ),
            axis=1,
        )
        uniq, counts = np.unique(edges, axis=0, return_counts=True)
        if (counts > 2).any():
            raise MeshError("non-manifold edge (shared by more than two faces)")
        boundary_edges = uniq[counts == 1]
        self.boundary_edges = boundary_edges
        self.boundary_vertices = np.unique(boundary_edges)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def vertex_face_counts(self) -> np.ndarray:
        """Number of incident faces per vertex."""
        counts = np.zeros(self.n_vertices, dtype=np.int64)
        np.add.at(counts, self.faces, 1)
        return counts


def _signed_areas(vertices, faces):
    e1 = vertices[faces[:, 1]] - vertices[faces[:, 0]]
    e2 = vertices[faces[:, 2]] - vertices[faces[:, 0]]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def grid_mesh(rows: int, cols: int, x0=0.0, y0=0.0, x1=1.0, y1=1.0) -> TriMesh:
    """Regular grid triangulation: rows x cols vertices, two triangles per cell."""
    if rows < 2 or cols < 2:
        raise MeshError("grid_mesh needs at least 2 x 2 vertices")
    xs = np.linspace(x0, x1, cols)
    ys = np.linspace(y0, y1, rows)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    r, c = np.meshgrid(np.arange(rows - 1), np.arange(cols - 1), indexing="ij")
    v00 = (r * cols + c).ravel()
    v01 = v00 + 1
    v10 = v00 + cols
    v11 = v10 + 1
    lower = np.column_stack([v00, v01, v11])
    upper = np.column_stack([v00, v11, v10])
    faces = np.concatenate([lower, upper])
    return TriMesh(vertices, faces)


def face_affine(mesh: TriMesh, positions) -> FaceAffine:
    """Per-face derivatives (a, b, c, d) of the piecewise linear map.

    On each face the 2x2 edge-difference system
    ``[v1 - v0; v2 - v0] * grad = [f1 - f0; f2 - f0]`` is inverted in closed
    form; the determinant is twice the (positive) face area.
    """
    positions = _check_positions(mesh, positions)
    v = mesh.vertices
    f = mesh.faces
    e1 = v[f[:, 1]] - v[f[:, 0]]
    e2 = v[f[:, 2]] - v[f[:, 0]]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]  # = 2 * area > 0

    d1 = positions[f[:, 1]] - positions[f[:, 0]]
    d2 = positions[f[:, 2]] - positions[f[:, 0]]
    a = (e2[:, 1] * d1[:, 0] - e1[:, 1] * d2[:, 0]) / det
    b = (-e2[:, 0] * d1[:, 0] + e1[:, 0] * d2[:, 0]) / det
    c = (e2[:, 1] * d1[:, 1] - e1[:, 1] * d2[:, 1]) / det
    d = (-e2[:, 0] * d1[:, 1] + e1[:, 0] * d2[:, 1]) / det
    return FaceAffine(a, b, c, d)


@dataclass
class DivergenceCoeffs:
    """Hat-function gradient coefficients per (face, corner) pair.

    ``A[t, l]`` (resp. ``B``) is the weight of vertex ``faces[t, l]`` in the
    x-derivative (resp. y-derivative) of a scalar vertex field on face ``t``:
    ``D_x s (T) = sum_l A[T, l] * s[faces[T, l]]``.  ``grad_x`` / ``grad_y``
    hold the same weights as sparse (faces x vertices) operators.
    """

    A: np.ndarray
    B: np.ndarray
    grad_x: sp.csr_matrix
    grad_y: sp.csr_matrix


def divergence_coeffs(mesh: TriMesh) -> DivergenceCoeffs:
    """Gradient / divergence coefficients of the mesh.

    For face ``T = [v_i, v_j, v_k]`` the coefficients are
    ``A_i = (h_j - h_k) / (2 Area(T))`` and ``B_i = (g_k - g_j) / (2 Area(T))``
    (cyclically), with ``(g, h)`` the vertex coordinates.  With this scaling
    the linear combinations reproduce ``face_affine`` exactly.
    """
    v = mesh.vertices
    f = mesh.faces
    g = v[:, 0][f]  # (m, 3)
    h = v[:, 1][f]
    twoA = (2.0 * mesh.areas)[:, None]
    A = np.column_stack(
        [g1 - g2 for g1, g2 in ((h[:, 1], h[:, 2]), (h[:, 2], h[:, 0]), (h[:, 0], h[:, 1]))]
    ) / twoA
    B = np.column_stack(
        [g1 - g2 for g1, g2 in ((g[:, 2], g[:, 1]), (g[:, 0], g[:, 2]), (g[:, 1], g[:, 0]))]
    ) / twoA

    rows = np.repeat(np.arange(mesh.n_faces), 3)
    cols = f.ravel()
    shape = (mesh.n_faces, mesh.n_vertices)
    grad_x = sp.csr_matrix((A.ravel(), (rows, cols)), shape=shape)
    grad_y = sp.csr_matrix((B.ravel(), (rows, cols)), shape=shape)
    return DivergenceCoeffs(A=A, B=B, grad_x=grad_x, grad_y=grad_y)


def discrete_divergence(coeffs: DivergenceCoeffs, field) -> np.ndarray:
    """Divergence of a per-face vector field, one value per vertex.

    ``Div(V)(v_i) = sum over faces T incident to v_i of
    A_i^T V1(T) + B_i^T V2(T)``; vanishes at interior vertices on rotated
    gradients ``(-D_y u, D_x u)``.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.shape != (coeffs.grad_x.shape[0], 2):
        raise InputError(
            f"field must be ({coeffs.grad_x.shape[0]}, 2), got {field.shape}"
        )
    return coeffs.grad_x.T @ field[:, 0] + coeffs.grad_y.T @ field[:, 1]


def _check_positions(mesh: TriMesh, positions) -> np.ndarray:
    positions = np.asarray(positions, dtype=np.float64)
    if positions.shape != (mesh.n_vertices, 2):
        raise InputError(
            f"map must be ({mesh.n_vertices}, 2), got {positions.shape}"
        )
    return positions


# ---------------------------------------------------------------------------
# Mesh file I/O (2D meshes stored with z = 0)


def read_mesh(path) -> TriMesh:
    """Read a triangle mesh from an OFF or OBJ file (z coordinate dropped)."""
    path = str(path)
    if path.lower().endswith(".obj"):
        return _read_obj(path)
    if not path.lower().endswith(".off"):
        raise InputError(f"unsupported mesh format: {path}")
    return _read_off(path)


def write_mesh(path, mesh: TriMesh) -> None:
    """Write a mesh as OFF or OBJ (chosen by extension) with z = 0."""
    path = str(path)
    if path.lower().endswith(".obj"):
        _write_obj(path, mesh)
    else:
        _write_off(path, mesh)


def _tokens(path):
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                yield line.split()


def _read_off(path):
    it = _tokens(path)
    try:
        header = next(it)
    except StopIteration:
        raise InputError(f"{path}: empty OFF file") from None
    if header[0].upper() != "OFF":
        raise InputError(f"{path}: missing OFF header")
    counts = header[1:] if len(header) > 1 else next(it)
    nv, nf = int(counts[0]), int(counts[1])
    verts = np.empty((nv, 2))
    for i in range(nv):
        tok = next(it)
        verts[i] = [float(tok[0]), float(tok[1])]
    faces = np.empty((nf, 3), dtype=np.int64)
    for i in range(nf):
        tok = next(it)
        if int(tok[0]) != 3:
            raise InputError(f"{path}: only triangle faces supported")
        faces[i] = [int(t) for t in tok[1:4]]
    return TriMesh(verts, faces)


def _write_off(path, mesh):
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_faces} 0\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r} 0\n")
        for i, j, k in mesh.faces:
            fh.write(f"3 {i} {j} {k}\n")


def _read_obj(path):
    verts, faces = [], []
    for tok in _tokens(path):
        if tok[0] == "v":
            verts.append([float(tok[1]), float(tok[2])])
        elif tok[0] == "f":
            idx = [int(t.split("/")[0]) - 1 for t in tok[1:]]
            if len(idx) != 3:
                raise InputError(f"{path}: only triangle faces supported")
            faces.append(idx)
    if not verts or not faces:
        raise InputError(f"{path}: no mesh data found")
    return TriMesh(np.array(verts), np.array(faces))


def _write_obj(path, mesh):
    with open(path, "w") as fh:
        for x, y in mesh.vertices:
            fh.write(f"v {float(x)!r} {float(y)!r} 0\n")
        for i, j, k in mesh.faces:
            fh.write(f"f {i + 1} {j + 1} {k + 1}\n")
