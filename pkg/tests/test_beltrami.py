import numpy as np
import pytest

import qcreg as q


def affine_positions(mesh, a, b, c, d):
    return np.column_stack([
        a * mesh.vertices[:, 0] + b * mesh.vertices[:, 1],
        c * mesh.vertices[:, 0] + d * mesh.vertices[:, 1],
    ])


class TestBeltramiFromMap:
    def test_identity_is_conformal(self):
        mesh = q.grid_mesh(5, 5)
        mu = q.beltrami_from_map(mesh, mesh.vertices)
        assert np.allclose(mu.values, 0.0)
        assert mu.support == "face"

    def test_known_affine_coefficient(self):
        mesh = q.grid_mesh(5, 5)
        a, b, c, d = 2.0, 0.3, -0.1, 1.0
        mu = q.beltrami_from_map(mesh, affine_positions(mesh, a, b, c, d))
        expected = ((a - d) + 1j * (c + b)) / ((a + d) + 1j * (c - b))
        assert np.allclose(mu.values, expected)

    def test_pure_scaling_stays_conformal(self):
        mesh = q.grid_mesh(5, 5)
        mu = q.beltrami_from_map(mesh, 3.0 * mesh.vertices + 1.0)
        assert np.abs(mu.values).max() < 1e-14

    def test_degenerate_map_raises(self):
        mesh = q.grid_mesh(4, 4)
        with pytest.raises(q.NumericalError):
            q.beltrami_from_map(mesh, np.zeros_like(mesh.vertices))


class TestJacobian:
    def test_matches_determinant_identity(self):
        mesh = q.grid_mesh(6, 6)
        rng = np.random.default_rng(5)
        positions = mesh.vertices + 0.02 * rng.normal(size=mesh.vertices.shape)
        jac = q.jacobian(mesh, positions)
        aff = q.face_affine(mesh, positions)
        assert np.allclose(jac, aff.a * aff.d - aff.b * aff.c)
        fz = ((aff.a + aff.d) + 1j * (aff.c - aff.b)) / 2.0
        mu = q.beltrami_from_map(mesh, positions)
        assert np.allclose(jac, np.abs(fz) ** 2 * (1 - np.abs(mu.values) ** 2))


class TestDilation:
    def test_max_dilation_formula(self):
        mu = q.BeltramiField(np.array([0.0, 0.5j, 0.2]), support="face")
        assert q.max_dilation(mu) == pytest.approx(1.5 / 0.5)

    def test_inadmissible_coefficient(self):
        mu = q.BeltramiField(np.array([1.0 + 0j]), support="face")
        with pytest.raises(q.NumericalError):
            q.max_dilation(mu)


class TestSupportTransfer:
    def test_round_trip_preserves_constants(self):
        mesh = q.grid_mesh(6, 6)
        c = 0.3 - 0.4j
        mu = q.BeltramiField(np.full(mesh.n_faces, c), support="face")
        nu = q.face_to_vertex(mesh, mu)
        assert nu.support == "vertex"
        assert np.allclose(nu.values, c)
        back = q.vertex_to_face(mesh, nu)
        assert np.allclose(back.values, c)

    def test_support_mismatch_rejected(self):
        mesh = q.grid_mesh(4, 4)
        nu = q.BeltramiField(np.zeros(mesh.n_vertices, complex), support="vertex")
        with pytest.raises(q.InputError):
            q.face_to_vertex(mesh, nu)


class TestCompose:
    def test_identity_second_map_is_neutral(self):
        mesh = q.grid_mesh(5, 5)
        rng = np.random.default_rng(2)
        positions = mesh.vertices + 0.02 * rng.normal(size=mesh.vertices.shape)
        mu_f = q.beltrami_from_map(mesh, positions)
        zero = q.BeltramiField(np.zeros(mesh.n_faces, complex), support="face")
        comp = q.compose_beltrami(mesh, positions, zero)
        assert np.allclose(comp.values, mu_f.values)

    def test_composition_of_affine_maps(self):
        # compare against the coefficient of the actual composed map
        mesh = q.grid_mesh(6, 6)
        A = np.array([[1.2, 0.1], [-0.05, 0.95]])
        f = mesh.vertices @ A.T
        B = np.array([[1.0, 0.2], [0.1, 1.1]])
        mu_d = q.beltrami_from_map(mesh, mesh.vertices @ B.T)
        comp = q.compose_beltrami(mesh, f, mu_d)
        direct = q.beltrami_from_map(mesh, f @ B.T)
        assert np.allclose(comp.values, direct.values, atol=1e-12)


class TestClamp:
    def test_inside_disk_unchanged(self):
        mu = q.BeltramiField(np.array([0.1 + 0.2j, -0.5j]), support="face")
        out = q.clamp_to_disk(mu, 0.02)
        assert np.allclose(out.values, mu.values)

    def test_large_values_rescaled(self):
        mu = q.BeltramiField(np.array([2.0 + 0j, 0.0]), support="face")
        out = q.clamp_to_disk(mu, 0.02)
        assert np.abs(out.values[0]) == pytest.approx(0.98)
        assert np.angle(out.values[0]) == pytest.approx(0.0)
        assert out.values[1] == 0.0


class TestCsv:
    def test_round_trip(self, tmp_path):
        mu = q.BeltramiField(np.array([0.1 + 0.2j, -0.3 - 0.4j]), support="face")
        path = tmp_path / "mu.csv"
        mu.to_csv(path)
        back = q.BeltramiField.from_csv(path)
        assert back.support == "face"
        assert np.allclose(back.values, mu.values)
