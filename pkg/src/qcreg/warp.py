"""Rendering of registration results: warped images and deformed grids."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import InputError
from .image import IntensityField
from .mesh import TriMesh, _check_positions


def eval_map(mesh: TriMesh, positions, points) -> np.ndarray:
    """Evaluate the piecewise linear map at arbitrary source points.

    Each point is located in the mesh (nearest-centroid candidates, then a
    barycentric containment test with a small tolerance; the best candidate
    wins for points marginally outside) and mapped barycentrically.
    """
    positions = _check_positions(mesh, positions)
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    centroids = mesh.vertices[mesh.faces].mean(axis=1)
    tree = cKDTree(centroids)
    k = min(16, mesh.n_faces)
    _, candidates = tree.query(points, k=k)
    candidates = np.atleast_2d(candidates)

    out = np.empty((len(points), 2))
    tri = mesh.vertices[mesh.faces]  # (m, 3, 2)
    for row, (p, cand) in enumerate(zip(points, candidates)):
        best_face, best_bary, best_score = -1, None, -np.inf
        for t in cand:
            a, b, c = tri[t]
            det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
            l2 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det
            l3 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det
            bary = np.array([1.0 - l2 - l3, l2, l3])
            score = bary.min()
            if score > best_score:
                best_face, best_bary, best_score = t, bary, score
            if score >= -1e-12:
                break
        out[row] = best_bary @ positions[mesh.faces[best_face]]
    return out


def warp_image(i1: IntensityField, mesh: TriMesh, positions,
               shape=None) -> IntensityField:
    """Backward warp of ``i1`` under the map: output(x) = i1(f^-1(x)).

    Each mapped (target) triangle is rasterized; covered pixels sample
    ``i1`` at the barycentrically pulled-back source point.  Uncovered
    pixels are left at 0; their count is stored on ``uncovered_pixels``.
    """
    positions = _check_positions(mesh, positions)
    if shape is None:
        shape = (i1.rows, i1.cols)
    rows, cols = shape
    out = np.zeros((rows, cols))
    covered = np.zeros((rows, cols), dtype=bool)
    hx = 1.0 / (cols - 1)
    hy = 1.0 / (rows - 1)

    tgt = positions[mesh.faces]  # (m, 3, 2)
    src = mesh.vertices[mesh.faces]
    for t in range(mesh.n_faces):
        a, b, c = tgt[t]
        det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
        if det == 0:
            continue
        lo = np.minimum(np.minimum(a, b), c)
        hi = np.maximum(np.maximum(a, b), c)
        c0 = max(int(np.floor(lo[0] / hx)), 0)
        c1 = min(int(np.ceil(hi[0] / hx)), cols - 1)
        r0 = max(int(np.floor(lo[1] / hy)), 0)
        r1 = min(int(np.ceil(hi[1] / hy)), rows - 1)
        if c1 < c0 or r1 < r0:
            continue
        cc, rr = np.meshgrid(np.arange(c0, c1 + 1), np.arange(r0, r1 + 1))
        px = cc * hx
        py = rr * hy
        l2 = ((px - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (py - a[1])) / det
        l3 = ((b[0] - a[0]) * (py - a[1]) - (px - a[0]) * (b[1] - a[1])) / det
        l1 = 1.0 - l2 - l3
        inside = (l1 >= -1e-12) & (l2 >= -1e-12) & (l3 >= -1e-12)
        if not inside.any():
            continue
        pulled = (
            l1[inside, None] * src[t, 0]
            + l2[inside, None] * src[t, 1]
            + l3[inside, None] * src[t, 2]
        )
        vals = i1.sample(pulled)
        out[rr[inside], cc[inside]] = vals
        covered[rr[inside], cc[inside]] = True

    field = IntensityField(np.clip(out, 0.0, 1.0))
    field.uncovered_pixels = int((~covered).sum())
    return field


def render_deformed_grid(mesh: TriMesh, positions, spacing: float = 0.1,
                         shape=(257, 257)) -> IntensityField:
    """Raster of the images of horizontal/vertical gridlines under the map.

    Gridlines of the source bounding box at the given spacing are sampled
    densely, mapped, and drawn (white on black).
    """
    if spacing <= 0:
        raise InputError("spacing must be > 0")
    positions = _check_positions(mesh, positions)
    rows, cols = shape
    out = np.zeros((rows, cols))
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    n_samples = 4 * max(rows, cols)

    lines = []
    for x in np.arange(lo[0], hi[0] + spacing / 2, spacing):
        ys = np.linspace(lo[1], hi[1], n_samples)
        lines.append(np.column_stack([np.full_like(ys, min(x, hi[0])), ys]))
    for y in np.arange(lo[1], hi[1] + spacing / 2, spacing):
        xs = np.linspace(lo[0], hi[0], n_samples)
        lines.append(np.column_stack([xs, np.full_like(xs, min(y, hi[1]))]))

    span = np.maximum(hi - lo, 1e-12)
    for line in lines:
        mapped = eval_map(mesh, positions, line)
        cc = np.clip(np.rint((mapped[:, 0] - lo[0]) / span[0] * (cols - 1)), 0, cols - 1)
        rr = np.clip(np.rint((mapped[:, 1] - lo[1]) / span[1] * (rows - 1)), 0, rows - 1)
        out[rr.astype(int), cc.astype(int)] = 1.0
    return IntensityField(out)
