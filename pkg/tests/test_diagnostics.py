import numpy as np
import pytest

import qcreg as q


class TestCountFlips:
    def test_identity_has_none(self):
        mesh = q.grid_mesh(9, 9)
        assert q.count_flips(mesh, mesh.vertices) == 0

    def test_reflection_flips_everything(self):
        mesh = q.grid_mesh(9, 9)
        mirrored = mesh.vertices * [1.0, -1.0]
        assert q.count_flips(mesh, mirrored) == mesh.n_faces


class TestQualityReport:
    def test_aggregates_fields(self):
        mesh = q.grid_mesh(9, 9)
        idx = np.array([40])
        cs = q.ConstraintSet(landmark_indices=idx,
                             landmark_targets=mesh.vertices[idx])
        report = q.quality_report(mesh, mesh.vertices, cs)
        assert report.flip_count == 0
        assert report.max_mu == pytest.approx(0.0)
        assert report.dilation_K == pytest.approx(1.0)
        assert report.landmark_error == pytest.approx(0.0)

    def test_includes_mismatch_when_images_given(self):
        xs = np.linspace(0, 1, 9)
        X, Y = np.meshgrid(xs, xs)
        field = q.IntensityField(0.5 + 0.3 * X * Y)
        mesh = field.grid()
        report = q.quality_report(mesh, mesh.vertices, i1=field, i2=field)
        assert report.mismatch_relative == pytest.approx(0.0)

    def test_kv_round_trip(self, tmp_path):
        report = q.QualityReport(flip_count=2, max_mu=0.7, dilation_K=5.6,
                                 landmark_error=1e-9, mismatch_relative=0.01,
                                 wall_time=1.5)
        path = tmp_path / "report.kv"
        report.to_kv(path)
        back = q.QualityReport.from_kv(path)
        assert back == report

    def test_str_mentions_flips(self):
        report = q.QualityReport(flip_count=0, max_mu=0.1, dilation_K=1.2,
                                 landmark_error=0.0, mismatch_relative=None,
                                 wall_time=0.1)
        assert "flip" in str(report)
