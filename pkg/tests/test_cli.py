import numpy as np
import pytest

import qcreg as q
from qcreg.cli import (
    build_job_config,
    load_config,
    load_landmarks,
    main,
    read_map_csv,
    write_map_csv,
)
from synth import disk_image


@pytest.fixture
def mesh_file(tmp_path):
    mesh = q.grid_mesh(9, 9)
    path = tmp_path / "mesh.off"
    q.write_mesh(path, mesh)
    return path, mesh


@pytest.fixture
def landmark_file(tmp_path, mesh_file):
    _, mesh = mesh_file
    path = tmp_path / "lm.csv"
    path.write_text("# source_x,source_y,target_x,target_y\n"
                    "0.5,0.5,0.52,0.51\n"
                    "0.25,0.25,0.26,0.24\n")
    return path


class TestConfigParsing:
    def test_key_value_file(self, tmp_path):
        path = tmp_path / "job.cfg"
        path.write_text("gamma = 5.0  # stronger fidelity\nmax_iters=50\n")
        cfg = load_config(path)
        assert cfg == {"gamma": "5.0", "max_iters": "50"}

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "job.cfg"
        path.write_text("gammma=5\n")
        with pytest.raises(q.InputError):
            load_config(path)

    def test_flags_override_config(self, tmp_path):
        path = tmp_path / "job.cfg"
        path.write_text("gamma=5.0\nalpha=2.0\n")
        cfg = build_job_config(["register-landmark", "--config", str(path),
                                "--gamma", "7.5"])
        assert cfg.gamma == 7.5
        assert cfg.alpha == 2.0
        assert cfg.mode == "landmark"


class TestLandmarkParsing:
    def test_snapping(self, landmark_file, mesh_file):
        _, mesh = mesh_file
        idx, targets, snaps = load_landmarks(landmark_file, mesh)
        assert len(idx) == 2
        assert np.allclose(mesh.vertices[idx[0]], [0.5, 0.5])
        assert np.allclose(targets[0], [0.52, 0.51])
        assert snaps.max() < 1e-12

    def test_index_form(self, tmp_path, mesh_file):
        _, mesh = mesh_file
        path = tmp_path / "lm.csv"
        path.write_text("40,0.55,0.5\n")
        idx, targets, _ = load_landmarks(path, mesh)
        assert idx[0] == 40

    def test_bad_line_reports_number(self, tmp_path, mesh_file):
        _, mesh = mesh_file
        path = tmp_path / "lm.csv"
        path.write_text("0.5,0.5,0.52\n")
        with pytest.raises(q.InputError, match="1"):
            load_landmarks(path, mesh)

    def test_duplicates_after_snapping(self, tmp_path, mesh_file):
        _, mesh = mesh_file
        path = tmp_path / "lm.csv"
        path.write_text("0.50,0.50,0.6,0.6\n0.51,0.49,0.7,0.7\n")
        with pytest.raises(q.InputError, match="duplicate"):
            load_landmarks(path, mesh)


class TestMapCsv:
    def test_round_trip(self, tmp_path):
        positions = np.random.default_rng(0).uniform(size=(12, 2))
        path = tmp_path / "map.csv"
        write_map_csv(path, positions, mesh_path="mesh.off")
        assert np.allclose(read_map_csv(path), positions)


class TestEndToEnd:
    def test_register_landmark_writes_artifacts(self, tmp_path, mesh_file,
                                                landmark_file):
        mesh_path, _ = mesh_file
        out = tmp_path / "out"
        code = main(["register-landmark",
                     "--source", str(mesh_path),
                     "--landmarks", str(landmark_file),
                     "--output", str(out)])
        assert code == 0
        for name in ("map.csv", "nu.csv", "trace.csv", "report.txt",
                     "report.kv", "grid.pgm", "result_mesh.off"):
            assert (out / name).exists(), name
        report = q.QualityReport.from_kv(out / "report.kv")
        assert report.flip_count == 0
        assert report.landmark_error < 1e-9

    def test_validate_and_render_consume_the_map(self, tmp_path, mesh_file,
                                                 landmark_file):
        mesh_path, _ = mesh_file
        out = tmp_path / "out"
        main(["register-landmark", "--source", str(mesh_path),
              "--landmarks", str(landmark_file), "--output", str(out)])
        code = main(["validate", "--source", str(mesh_path),
                     "--map", str(out / "map.csv"),
                     "--output", str(tmp_path / "val")])
        assert code == 0
        assert (tmp_path / "val" / "report.kv").exists()
        code = main(["render", "--source", str(mesh_path),
                     "--map", str(out / "map.csv"),
                     "--output", str(tmp_path / "render")])
        assert code == 0
        assert (tmp_path / "render" / "grid.pgm").exists()

    def test_register_hybrid_writes_artifacts(self, tmp_path):
        i1 = disk_image(17, 0.47, 0.5, rad=0.15)
        i2 = disk_image(17, 0.5, 0.5, rad=0.15)
        q.write_pgm(tmp_path / "i1.pgm", i1)
        q.write_pgm(tmp_path / "i2.pgm", i2)
        out = tmp_path / "out"
        code = main(["register-hybrid",
                     "--source", str(tmp_path / "i1.pgm"),
                     "--target", str(tmp_path / "i2.pgm"),
                     "--demon-noise", "16", "--gamma-i", "0.3",
                     "--sigma", "0.1", "--pyramid-levels", "1",
                     "--max-iters", "20",
                     "--output", str(out)])
        assert code == 0
        assert (out / "warped.pgm").exists()
        assert (out / "mismatch.csv").exists()

    def test_missing_file_exits_2(self, tmp_path):
        code = main(["validate", "--source", str(tmp_path / "nope.off"),
                     "--output", str(tmp_path / "out")])
        assert code == 2

    def test_bad_landmarks_exit_2(self, tmp_path, mesh_file):
        mesh_path, _ = mesh_file
        bad = tmp_path / "lm.csv"
        bad.write_text("not,a,number,line\n")
        code = main(["register-landmark", "--source", str(mesh_path),
                     "--landmarks", str(bad),
                     "--output", str(tmp_path / "out")])
        assert code == 2

    def test_numerical_failure_exits_3(self, tmp_path, mesh_file):
        mesh_path, mesh = mesh_file
        collapsed = tmp_path / "collapsed.csv"
        write_map_csv(collapsed, np.zeros((mesh.n_vertices, 2)))
        code = main(["validate", "--source", str(mesh_path),
                     "--map", str(collapsed),
                     "--output", str(tmp_path / "out")])
        assert code == 3
