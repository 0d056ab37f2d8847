"""Map quality checks: flips, dilation, landmark error, mismatch."""

from __future__ import annotations

import time
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from .mesh import TriMesh
from .beltrami import beltrami_from_map, jacobian, max_dilation
from .lbs import ConstraintSet
from .hybrid import intensity_mismatch
from .image import IntensityField


def count_flips(mesh: TriMesh, positions) -> int:
    """Number of faces with non-positive Jacobian under the map."""
    return int(np.sum(jacobian(mesh, positions) <= 0))


@dataclass
class QualityReport:
    flip_count: int
    max_mu: float
    dilation_K: float
    landmark_error: float
    mismatch_relative: Optional[float]
    wall_time: float

    def to_kv(self, path) -> None:
        """Write as flat key=value lines."""
        with open(path, "w") as fh:
            for key, value in asdict(self).items():
                if value is None:
                    fh.write(f"{key}=None\n")
                elif key == "flip_count":
                    fh.write(f"{key}={int(value)}\n")
                else:
                    fh.write(f"{key}={float(value)!r}\n")

    @classmethod
    def from_kv(cls, path) -> "QualityReport":
        kv = {}
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                key, value = line.split("=", 1)
                kv[key] = None if value == "None" else float(value)
        return cls(
            flip_count=int(kv["flip_count"]),
            max_mu=kv["max_mu"],
            dilation_K=kv["dilation_K"],
            landmark_error=kv["landmark_error"],
            mismatch_relative=kv["mismatch_relative"],
            wall_time=kv["wall_time"],
        )

    def __str__(self):
        lines = [
            f"flips            {self.flip_count}",
            f"max |mu|         {self.max_mu:.6g}",
            f"dilation K       {self.dilation_K:.6g}",
            f"landmark error   {self.landmark_error:.3e}",
        ]
        if self.mismatch_relative is not None:
            lines.append(f"rel. mismatch    {self.mismatch_relative:.3e}")
        lines.append(f"wall time        {self.wall_time:.3f} s")
        return "\n".join(lines)


def quality_report(mesh: TriMesh, positions, constraints: Optional[ConstraintSet] = None,
                   i1: Optional[IntensityField] = None,
                   i2: Optional[IntensityField] = None,
                   wall_time: float = 0.0) -> QualityReport:
    """Aggregate flip count, dilation, landmark and intensity errors."""
    t0 = time.perf_counter()
    positions = np.asarray(positions, dtype=np.float64)
    flips = count_flips(mesh, positions)
    mu = beltrami_from_map(mesh, positions)
    max_mu = mu.max_modulus()
    dilation = max_dilation(mu) if max_mu < 1.0 else float("inf")
    lm_err = 0.0
    if constraints is not None and len(constraints.landmark_indices):
        diff = positions[constraints.landmark_indices] - constraints.landmark_targets
        lm_err = float(np.linalg.norm(diff, axis=1).max())
    mismatch = None
    if i1 is not None and i2 is not None:
        mismatch = intensity_mismatch(i1, i2, mesh, positions).relative
    elapsed = wall_time if wall_time else time.perf_counter() - t0
    return QualityReport(
        flip_count=flips,
        max_mu=max_mu,
        dilation_K=dilation,
        landmark_error=lm_err,
        mismatch_relative=mismatch,
        wall_time=elapsed,
    )
