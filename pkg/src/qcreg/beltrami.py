"""Beltrami coefficients of piecewise linear maps and their algebra.

The Beltrami coefficient of a map ``f`` on a face with derivatives
``(a, b, c, d) = (u_x, u_y, v_x, v_y)`` is

    mu(T) = ((a - d) + i (c + b)) / ((a + d) + i (c - b)),

i.e. ``f_zbar / f_z`` with ``f_z = ((a + d) + i (c - b)) / 2``.  A map with
``|mu| < 1`` on every face has positive Jacobian everywhere and is therefore
a diffeomorphism onto its image.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError
from .mesh import TriMesh, face_affine, _check_positions

DEFAULT_CLAMP_DELTA = 0.02
_DEGENERATE_TOL = 1e-14


@dataclass
class BeltramiField:
    """Complex coefficient field, supported per face or per vertex."""

    values: np.ndarray
    support: str  # "face" or "vertex"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.support not in ("face", "vertex"):
            raise InputError(f"unknown support {self.support!r}")

    def max_modulus(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0

    def to_csv(self, path) -> None:
        """Dump as CSV rows ``index,re,im``."""
        with open(path, "w") as fh:
            fh.write(f"# support={self.support}\n")
            for i, z in enumerate(self.values):
                fh.write(f"{i},{float(z.real)!r},{float(z.imag)!r}\n")

    @classmethod
    def from_csv(cls, path) -> "BeltramiField":
        support = "face"
        values = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line.startswith("#"):
                    if "support=" in line:
                        support = line.split("support=")[1].strip()
                    continue
                if not line:
                    continue
                _, re, im = line.split(",")
                values.append(complex(float(re), float(im)))
        return cls(np.array(values), support)


def _face_values(mu, n_faces) -> np.ndarray:
    """Accept a face-supported BeltramiField or a bare complex array."""
    if isinstance(mu, BeltramiField):
        if mu.support != "face":
            raise InputError(f"expected per-face field, got per-{mu.support}")
        values = mu.values
    else:
        values = np.asarray(mu, dtype=np.complex128)
    if values.shape != (n_faces,):
        raise InputError(f"expected {n_faces} face values, got {values.shape}")
    return values


def f_z(affine) -> np.ndarray:
    """Per-face complex derivative ((a + d) + i (c - b)) / 2."""
    return ((affine.a + affine.d) + 1j * (affine.c - affine.b)) / 2.0


def f_zbar(affine) -> np.ndarray:
    """Per-face anti-holomorphic derivative ((a - d) + i (c + b)) / 2."""
    return ((affine.a - affine.d) + 1j * (affine.c + affine.b)) / 2.0


def beltrami_from_map(mesh: TriMesh, positions) -> BeltramiField:
    """Per-face Beltrami coefficient of a piecewise linear map."""
    aff = face_affine(mesh, positions)
    num = (aff.a - aff.d) + 1j * (aff.c + aff.b)
    den = (aff.a + aff.d) + 1j * (aff.c - aff.b)
    bad = np.where(np.abs(den) < _DEGENERATE_TOL)[0]
    if bad.size:
        raise NumericalError(
            f"degenerate (anti-conformal or collapsed) face(s): {bad.tolist()[:10]}"
        )
    return BeltramiField(num / den, "face")


def jacobian(mesh: TriMesh, positions) -> np.ndarray:
    """Per-face Jacobian determinant a*d - b*c."""
    aff = face_affine(mesh, positions)
    return aff.a * aff.d - aff.b * aff.c


def max_dilation(mu: BeltramiField) -> float:
    """Maximal dilation K = (1 + ||mu||_inf) / (1 - ||mu||_inf)."""
    m = mu.max_modulus() if isinstance(mu, BeltramiField) else float(np.abs(mu).max())
    if m >= 1.0:
        raise NumericalError(f"not quasi-conformal: max |mu| = {m} >= 1")
    return (1.0 + m) / (1.0 - m)


def face_to_vertex(mesh: TriMesh, mu) -> BeltramiField:
    """Unweighted average of incident face values at each vertex."""
    values = _face_values(mu, mesh.n_faces)
    acc = np.zeros(mesh.n_vertices, dtype=np.complex128)
    np.add.at(acc, mesh.faces, values[:, None])
    counts = mesh.vertex_face_counts()
    isolated = np.where(counts == 0)[0]
    if isolated.size:
        raise InputError(f"isolated vertices with no incident face: {isolated.tolist()[:10]}")
    return BeltramiField(acc / counts, "vertex")


def vertex_to_face(mesh: TriMesh, nu) -> BeltramiField:
    """Average of the three corner values on each face."""
    if isinstance(nu, BeltramiField):
        if nu.support != "vertex":
            raise InputError(f"expected per-vertex field, got per-{nu.support}")
        values = nu.values
    else:
        values = np.asarray(nu, dtype=np.complex128)
    if values.shape != (mesh.n_vertices,):
        raise InputError(f"expected {mesh.n_vertices} vertex values, got {values.shape}")
    return BeltramiField(values[mesh.faces].mean(axis=1), "face")


def compose_beltrami(mesh: TriMesh, positions, mu_d) -> BeltramiField:
    """Beltrami coefficient of a perturbation composed onto the map.

    For a map ``f`` and a perturbation with coefficient ``mu_d``, the
    composed coefficient per face is

        (mu(f) + (conj(f_z)/f_z) mu_d) / (1 + (conj(f_z)/f_z) conj(mu(f)) mu_d).
    """
    mu_d = _face_values(mu_d, mesh.n_faces)
    aff = face_affine(mesh, positions)
    fz = f_z(aff)
    bad = np.where(np.abs(fz) < _DEGENERATE_TOL)[0]
    if bad.size:
        raise NumericalError(f"degenerate composition (f_z ~ 0) on face(s): {bad.tolist()[:10]}")
    mu_f = f_zbar(aff) / fz
    ratio = np.conj(fz) / fz
    den = 1.0 + ratio * np.conj(mu_f) * mu_d
    bad = np.where(np.abs(den) < _DEGENERATE_TOL)[0]
    if bad.size:
        raise NumericalError(f"degenerate composition denominator on face(s): {bad.tolist()[:10]}")
    return BeltramiField((mu_f + ratio * mu_d) / den, "face")


def clamp_to_disk(mu: BeltramiField, delta: float = DEFAULT_CLAMP_DELTA) -> BeltramiField:
    """Radially rescale values with |mu| > 1 - delta onto that circle."""
    if not 0.0 < delta < 1.0:
        raise InputError(f"delta must be in (0, 1), got {delta}")
    values = mu.values if isinstance(mu, BeltramiField) else np.asarray(mu, dtype=np.complex128)
    support = mu.support if isinstance(mu, BeltramiField) else "face"
    limit = 1.0 - delta
    mod = np.abs(values)
    out = np.where(mod > limit, values * (limit / np.maximum(mod, 1e-300)), values)
    return BeltramiField(out, support)
