import numpy as np
import pytest

import qcreg as q


class TestCotLaplacian:
    def test_zero_row_sums(self):
        mesh = q.grid_mesh(8, 8)
        lap = q.cot_laplacian(mesh)
        assert np.abs(lap.sum(axis=1)).max() < 1e-12

    def test_annihilates_constants(self):
        mesh = q.grid_mesh(8, 8)
        lap = q.cot_laplacian(mesh)
        assert np.abs(lap @ np.ones(mesh.n_vertices)).max() < 1e-12

    def test_symmetric(self):
        mesh = q.grid_mesh(8, 8)
        lap = q.cot_laplacian(mesh)
        assert np.abs((lap - lap.T).toarray()).max() < 1e-14

    def test_right_isoceles_grid_weights(self):
        # grid triangles are right isoceles: axis edges sit opposite two 45
        # degree corners (weight (1 + 1)/2), hypotenuses opposite 90 degree
        # corners (weight 0)
        mesh = q.grid_mesh(3, 3)
        lap = q.cot_laplacian(mesh).toarray()
        center, right, hyp = 4, 5, 6
        assert lap[center, right] == pytest.approx(1.0)
        assert lap[center, hyp] == pytest.approx(0.0)
        assert lap[center, center] == pytest.approx(-4.0)


class TestSmoother:
    def test_constant_closed_form(self):
        mesh = q.grid_mesh(9, 9)
        c = 0.4 + 0.0j
        const = q.BeltramiField(np.full(mesh.n_vertices, c), support="vertex")
        nu = q.smooth_coefficient(mesh, const, alpha=1.0, gamma=1.0)
        assert np.allclose(nu.values, 0.2)

    def test_output_is_smoother(self):
        mesh = q.grid_mesh(17, 17)
        rng = np.random.default_rng(9)
        noisy = q.BeltramiField(
            0.3 * (rng.normal(size=mesh.n_vertices)
                   + 1j * rng.normal(size=mesh.n_vertices)),
            support="vertex")
        nu = q.smooth_coefficient(mesh, noisy, alpha=1.0, gamma=0.01)
        lap = q.cot_laplacian(mesh)
        def roughness(v):
            return np.abs(lap @ v).sum()
        assert roughness(nu.values) < roughness(noisy.values)

    def test_face_input_rejected(self):
        mesh = q.grid_mesh(5, 5)
        mu = q.BeltramiField(np.zeros(mesh.n_faces, complex), support="face")
        with pytest.raises(q.InputError):
            q.smooth_coefficient(mesh, mu, alpha=1.0, gamma=1.0)

    def test_literal_form_differs(self):
        mesh = q.grid_mesh(9, 9)
        c = 0.4 + 0.0j
        const = q.BeltramiField(np.full(mesh.n_vertices, c), support="vertex")
        literal = q.CoefficientSmoother(mesh, alpha=1.0, gamma=1.0,
                                        literal_form=True).smooth(const)
        # the uncorrected equation scales constants by 1/(2 alpha + 2 gamma)
        assert np.allclose(literal.values, 0.1)

    def test_smoother_reuse_matches_one_shot(self):
        mesh = q.grid_mesh(9, 9)
        rng = np.random.default_rng(1)
        field = q.BeltramiField(
            0.2 * (rng.normal(size=mesh.n_vertices)
                   + 1j * rng.normal(size=mesh.n_vertices)),
            support="vertex")
        sm = q.CoefficientSmoother(mesh, alpha=2.0, gamma=3.0)
        a = sm.smooth(field)
        b = q.smooth_coefficient(mesh, field, alpha=2.0, gamma=3.0)
        assert np.allclose(a.values, b.values)
