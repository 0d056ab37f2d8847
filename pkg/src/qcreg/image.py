"""Grayscale rasters as continuous intensity fields on the unit square.

A raster of shape (rows, cols) is identified with samples on the regular
grid node (r, c) -> (x, y) = (c / (cols - 1), r / (rows - 1)).  Evaluation
between nodes is bilinear; gradients are central differences at the nodes
(one-sided on the borders) interpolated the same way.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import InputError
from .mesh import TriMesh, grid_mesh


class IntensityField:
    """Continuous view of a 2D intensity raster with values in [0, 1]."""

    def __init__(self, values):
        values = np.ascontiguousarray(values, dtype=np.float64)
        if values.ndim != 2 or min(values.shape) < 2:
            raise InputError(f"raster must be 2D with both dims >= 2, got {values.shape}")
        if not np.isfinite(values).all():
            raise InputError("raster contains non-finite values")
        if values.min() < 0.0 or values.max() > 1.0:
            raise InputError("intensities must lie in [0, 1]")
        self.values = values
        self.rows, self.cols = values.shape
        self._hx = 1.0 / (self.cols - 1)
        self._hy = 1.0 / (self.rows - 1)
        self._gx = np.gradient(values, self._hx, axis=1)
        self._gy = np.gradient(values, self._hy, axis=0)

    def _grid_coords(self, points):
        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        c = np.clip(points[:, 0] / self._hx, 0.0, self.cols - 1.0)
        r = np.clip(points[:, 1] / self._hy, 0.0, self.rows - 1.0)
        return r, c

    @staticmethod
    def _bilinear(grid, r, c):
        r0 = np.clip(np.floor(r).astype(int), 0, grid.shape[0] - 2)
        c0 = np.clip(np.floor(c).astype(int), 0, grid.shape[1] - 2)
        fr = r - r0
        fc = c - c0
        return (
            grid[r0, c0] * (1 - fr) * (1 - fc)
            + grid[r0, c0 + 1] * (1 - fr) * fc
            + grid[r0 + 1, c0] * fr * (1 - fc)
            + grid[r0 + 1, c0 + 1] * fr * fc
        )

    def sample(self, points) -> np.ndarray:
        """Bilinear evaluation at (k, 2) points; outside samples clamp to the border."""
        r, c = self._grid_coords(points)
        return self._bilinear(self.values, r, c)

    def sample_gradient(self, points) -> np.ndarray:
        """(k, 2) interpolated gradient (d/dx, d/dy) at the given points."""
        r, c = self._grid_coords(points)
        return np.column_stack(
            [self._bilinear(self._gx, r, c), self._bilinear(self._gy, r, c)]
        )

    def grid(self) -> TriMesh:
        """Regular grid triangulation with one vertex per raster node."""
        return grid_mesh(self.rows, self.cols)

    def vertex_values(self) -> np.ndarray:
        """Raster values flattened in grid-mesh vertex order."""
        return self.values.ravel()


def build_pyramid(field: IntensityField, levels: int):
    """Coarsening pyramid: element 0 is the input, each next level halves
    both dimensions by 2x2 box averaging (odd tails averaged over what is
    available).  Returns ``levels + 1`` fields, fine to coarse."""
    if levels < 0:
        raise InputError("levels must be >= 0")
    out = [field]
    for _ in range(levels):
        prev = out[-1].values
        if prev.shape[0] < 4 or prev.shape[1] < 4:
            raise InputError(
                f"raster {field.values.shape} too small for {levels} pyramid level(s)"
            )
        out.append(IntensityField(_box_halve(prev)))
    return out


def _box_halve(a):
    rows = (a.shape[0] + 1) // 2
    cols = (a.shape[1] + 1) // 2
    out = np.empty((rows, cols))
    for r in range(rows):
        for c in range(cols):
            out[r, c] = a[2 * r : 2 * r + 2, 2 * c : 2 * c + 2].mean()
    return out


# ---------------------------------------------------------------------------
# PGM (P2 ascii / P5 binary) input and output


def read_pgm(path) -> IntensityField:
    """Read a P2/P5 PGM raster, normalized to [0, 1]."""
    with open(str(path), "rb") as fh:
        data = fh.read()
    if data[:2] not in (b"P2", b"P5"):
        raise InputError(f"{path}: not a P2/P5 PGM file")
    binary = data[:2] == b"P5"

    # strip comments, then collect header tokens
    pos = 2
    tokens = []
    while len(tokens) < 3:
        m = re.match(rb"\s*(?:#[^\n]*\n\s*)*(\S+)", data[pos:])
        if not m:
            raise InputError(f"{path}: truncated PGM header")
        tokens.append(m.group(1))
        pos += m.end()
    width, height, maxval = (int(t) for t in tokens)
    if maxval <= 0:
        raise InputError(f"{path}: invalid maxval {maxval}")

    if binary:
        pos += 1  # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.uint8
        count = width * height
        raw = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
        if raw.size < count:
            raise InputError(f"{path}: truncated PGM payload")
    else:
        raw = np.array(data[pos:].split(), dtype=np.float64)
        if raw.size != width * height:
            raise InputError(f"{path}: expected {width * height} samples, got {raw.size}")
    values = raw.astype(np.float64).reshape(height, width) / maxval
    return IntensityField(values)


def write_pgm(path, field: IntensityField, binary: bool = True, maxval: int = 255) -> None:
    """Write a raster as P5 (binary) or P2 (ascii) PGM."""
    q = np.clip(np.rint(field.values * maxval), 0, maxval)
    header = f"{'P5' if binary else 'P2'}\n{field.cols} {field.rows}\n{maxval}\n"
    with open(str(path), "wb") as fh:
        fh.write(header.encode())
        if binary:
            dtype = np.dtype(">u2") if maxval > 255 else np.uint8
            fh.write(q.astype(dtype).tobytes())
        else:
            lines = [" ".join(str(int(x)) for x in row) for row in q]
            fh.write(("\n".join(lines) + "\n").encode())
