"""Command-line front end.

Subcommands: ``register-landmark``, ``register-hybrid``, ``validate``,
``render``.  Options may come from ``--config`` files (flat ``key=value``
lines, ``#`` comments) and are overridden by flags.  Exit codes: 0 success,
2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InputError, NumericalError, QcregError
from .mesh import TriMesh, read_mesh, write_mesh
from .beltrami import beltrami_from_map
from .lbs import ConstraintSet
from .landmark import RegistrationParams, register_landmarks
from .hybrid import HybridParams, register_hybrid
from .image import IntensityField, read_pgm, write_pgm
from .warp import render_deformed_grid, warp_image
from .diagnostics import quality_report


@dataclass
class JobConfig:
    """Everything one invocation needs; mirrors the CLI flags."""

    mode: str = "validate"
    source: str = ""
    target: str = ""
    landmarks: str = ""
    map_path: str = ""
    boundary_kind: str = "rectangle_free"
    output: str = "out"
    grid_spacing: float = 0.1
    # registration parameters
    alpha: float = 1.0
    p: float = 2.0
    gamma: float = 10.0
    step_t: float = 0.5
    epsilon: float = 1e-4
    max_iters: int = 200
    clamp_delta: float = 0.02
    # hybrid-only parameters
    gamma_i: float = 1.0
    sigma: float = 2.0
    demon_noise: float = 1.0
    pyramid_levels: int = 3

    def registration_params(self) -> RegistrationParams:
        return RegistrationParams(
            alpha=self.alpha, p=self.p, gamma=self.gamma, step_t=self.step_t,
            epsilon=self.epsilon, max_iters=self.max_iters, clamp_delta=self.clamp_delta,
        )

    def hybrid_params(self) -> HybridParams:
        return HybridParams(
            alpha=self.alpha, p=self.p, gamma=self.gamma, step_t=self.step_t,
            epsilon=self.epsilon, max_iters=self.max_iters, clamp_delta=self.clamp_delta,
            gamma_i=self.gamma_i, sigma=self.sigma, demon_noise=self.demon_noise,
            pyramid_levels=self.pyramid_levels,
        )


def load_config(path) -> dict:
    """Parse a flat key=value config file."""
    out = {}
    valid = {f.name for f in fields(JobConfig)}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in valid:
                raise InputError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def load_landmarks(path, mesh: TriMesh):
    """Parse landmark CSV lines ``sx,sy,tx,ty`` or ``vertex_index,tx,ty``.

    Source points are snapped to the nearest mesh vertex; returns
    ``(indices, targets, snap_distances)``.  Duplicate source vertices after
    snapping are an error.
    """
    indices, targets, snaps = [], [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                if len(parts) == 4:
                    sx, sy, tx, ty = (float(v) for v in parts)
                    d2 = ((mesh.vertices - (sx, sy)) ** 2).sum(axis=1)
                    idx = int(np.argmin(d2))
                    snaps.append(float(np.sqrt(d2[idx])))
                elif len(parts) == 3:
                    idx = int(parts[0])
                    tx, ty = float(parts[1]), float(parts[2])
                    if not 0 <= idx < mesh.n_vertices:
                        raise ValueError(f"vertex index {idx} out of range")
                    snaps.append(0.0)
                else:
                    raise ValueError("expected 3 or 4 comma-separated fields")
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
            indices.append(idx)
            targets.append((tx, ty))
    indices = np.array(indices, dtype=np.int64)
    if len(np.unique(indices)) != len(indices):
        raise InputError(f"{path}: duplicate source vertices after snapping")
    return indices, np.array(targets, dtype=np.float64).reshape(-1, 2), np.array(snaps)


def write_map_csv(path, positions, mesh_path="") -> None:
    with open(path, "w") as fh:
        fh.write(f"# mesh: {mesh_path}\n")
        fh.write("vertex_index,x,y\n")
        for i, (x, y) in enumerate(positions):
            fh.write(f"{i},{float(x)!r},{float(y)!r}\n")


def read_map_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("vertex_index"):
                continue
            idx, x, y = line.split(",")
            rows.append((int(idx), float(x), float(y)))
    rows.sort()
    return np.array([(x, y) for _, x, y in rows])


def _constraints(mesh, config: JobConfig) -> ConstraintSet:
    if config.landmarks:
        indices, targets, snaps = load_landmarks(config.landmarks, mesh)
        if snaps.size:
            print(f"landmarks: {len(indices)} pairs, max snap distance {snaps.max():.3e}")
    else:
        indices = np.empty(0, dtype=np.int64)
        targets = np.empty((0, 2))
    dirichlet = mesh.vertices if config.boundary_kind == "dirichlet_full" else None
    return ConstraintSet(
        boundary_kind=config.boundary_kind,
        dirichlet_values=dirichlet,
        landmark_indices=indices,
        landmark_targets=targets,
    )


def run_job(config: JobConfig) -> int:
    """Execute one job and write its artifacts; returns the exit code."""
    out = Path(config.output)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()

    if config.mode == "landmark":
        mesh = read_mesh(config.source)
        constraints = _constraints(mesh, config)
        result = register_landmarks(mesh, constraints, config.registration_params())
        elapsed = time.perf_counter() - t0
        _write_registration_artifacts(out, mesh, result, constraints, config,
                                      elapsed=elapsed)
    elif config.mode == "hybrid":
        i1 = read_pgm(config.source)
        i2 = read_pgm(config.target)
        mesh = i1.grid()
        constraints = _constraints(mesh, config)
        result = register_hybrid(mesh, i1, i2, constraints, config.hybrid_params())
        elapsed = time.perf_counter() - t0
        _write_registration_artifacts(out, mesh, result, constraints, config,
                                      i1=i1, i2=i2, elapsed=elapsed)
        write_pgm(out / "warped.pgm", warp_image(i1, mesh, result.positions))
        with open(out / "mismatch.csv", "w") as fh:
            fh.write("iteration,relative_mismatch\n")
            for it, mm in result.mismatch_trace:
                fh.write(f"{it},{float(mm)!r}\n")
    elif config.mode == "validate":
        mesh = read_mesh(config.source)
        positions = read_map_csv(config.map_path) if config.map_path else mesh.vertices.copy()
        if positions.shape != (mesh.n_vertices, 2):
            raise InputError("map does not match mesh vertex count")
        constraints = _constraints(mesh, config) if config.landmarks else None
        report = quality_report(mesh, positions, constraints,
                                wall_time=time.perf_counter() - t0)
        print(report)
        report.to_kv(out / "report.kv")
    elif config.mode == "render":
        mesh = read_mesh(config.source)
        positions = read_map_csv(config.map_path) if config.map_path else mesh.vertices.copy()
        grid = render_deformed_grid(mesh, positions, config.grid_spacing)
        write_pgm(out / "grid.pgm", grid)
        if config.target:
            image = read_pgm(config.target)
            write_pgm(out / "warped.pgm", warp_image(image, mesh, positions))
    else:
        raise InputError(f"unknown mode {config.mode!r}")
    return 0


def _write_registration_artifacts(out: Path, mesh, result, constraints, config,
                                  i1=None, i2=None, elapsed=0.0):
    write_map_csv(out / "map.csv", result.positions, mesh_path=config.source)
    result.nu.to_csv(out / "nu.csv")
    result.trace_to_csv(out / "trace.csv")
    report = quality_report(mesh, result.positions, constraints, i1=i1, i2=i2,
                            wall_time=elapsed)
    with open(out / "report.txt", "w") as fh:
        fh.write(str(report) + "\n")
    report.to_kv(out / "report.kv")
    write_pgm(out / "grid.pgm", render_deformed_grid(mesh, result.positions,
                                                     config.grid_spacing))
    write_mesh(out / "result_mesh.off", TriMesh(result.positions, mesh.faces))
    print(report)
    print(f"iterations       {result.iterations} "
          f"({'converged' if result.converged else 'max_iters reached'})")


def _casters():
    """Config-file value casters, keyed by JobConfig field name."""
    out = {}
    for f in fields(JobConfig):
        default = getattr(JobConfig, f.name)
        if isinstance(default, bool) or isinstance(default, str):
            out[f.name] = str
        elif isinstance(default, int):
            out[f.name] = int
        else:
            out[f.name] = float
    return out


def _build_parser():
    parser = argparse.ArgumentParser(prog="qcreg",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "register-landmark": "landmark registration on a mesh",
        "register-hybrid": "landmark + intensity registration on PGM images",
        "validate": "quality report for a mesh and optional map",
        "render": "deformed grid / warped image for a mesh and map",
    }
    numeric = _casters()
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--source", help="mesh (OFF/OBJ) or image (PGM)")
        p.add_argument("--target", help="target image (PGM)")
        p.add_argument("--landmarks", help="landmark CSV")
        p.add_argument("--map", dest="map_path", help="map CSV (vertex_index,x,y)")
        p.add_argument("--boundary-kind", dest="boundary_kind",
                       choices=["rectangle_free", "dirichlet_full"])
        p.add_argument("--output", help="output directory")
        for key in ("alpha", "p", "gamma", "step_t", "epsilon", "clamp_delta",
                    "gamma_i", "sigma", "demon_noise", "grid_spacing"):
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float)
        for key in ("max_iters", "pyramid_levels"):
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=int)
    return parser, numeric


_MODE_BY_COMMAND = {
    "register-landmark": "landmark",
    "register-hybrid": "hybrid",
    "validate": "validate",
    "render": "render",
}


def build_job_config(argv) -> JobConfig:
    parser, numeric = _build_parser()
    args = parser.parse_args(argv)
    config = JobConfig(mode=_MODE_BY_COMMAND[args.command])
    if args.config:
        for key, value in load_config(args.config).items():
            setattr(config, key, numeric[key](value))
    for key in vars(args):
        if key in ("command", "config"):
            continue
        value = getattr(args, key)
        if value is not None:
            setattr(config, key, value)
    return config


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = build_job_config(argv)
        return run_job(config)
    except (InputError, FileNotFoundError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except QcregError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
