import unittest

import numpy as np

from kuramoto_workshop.model import ModelParams, PhasePoint, TWO_PI, \
    centroid, diagonal_rotate, field_jacobian, gap_to_maximum, gradient, \
    hessian, hessian_cos_sin, is_antipodal, order_parameter, potential, \
    torus_distance, vector_field, wrap_angles, wrap_to_pi


class TestPhasePoint(unittest.TestCase):
    def test_wrapping(self):
        p = PhasePoint([-np.pi / 2, 3 * TWO_PI + 1.0, TWO_PI])
        np.testing.assert_allclose(p.angles, [3 * np.pi / 2, 1.0, 0.0], atol=1e-12)
        self.assertEqual(p.m, 3)
        self.assertEqual(len(p), 3)
        with self.assertRaises(ValueError):
            p.angles[0] = 1.0

    def test_invalid(self):
        with self.assertRaises(ValueError):
            PhasePoint([0.0])
        with self.assertRaises(ValueError):
            PhasePoint([0.0, np.nan])

    def test_wrap_helpers(self):
        self.assertEqual(wrap_angles([-1e-18])[0], 0.0)
        np.testing.assert_allclose(wrap_to_pi([3 * np.pi / 2, -3 * np.pi / 2]),
                                   [-np.pi / 2, np.pi / 2])

    def test_isclose_modulo_two_pi(self):
        p = PhasePoint([0.0, 1.0])
        self.assertTrue(p.isclose(PhasePoint([TWO_PI - 1e-12, 1.0])))
        self.assertFalse(p.isclose(PhasePoint([0.0, 1.1])))

    def test_canonical_points(self):
        sync = PhasePoint.synchronized(4, 0.3)
        self.assertEqual(potential(sync), 0.0)
        roots = PhasePoint.roots_of_unity(3)
        np.testing.assert_allclose(roots.angles, [0.0, TWO_PI / 3, 2 * TWO_PI / 3])
        self.assertAlmostEqual(potential(roots), 9 / 2, places=12)
        self.assertLess(gap_to_maximum(roots), 1e-28)


class TestPotential(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.Generator(np.random.PCG64(7))

    def test_centroid_identity(self):
        for m in range(2, 11):
            for _ in range(1000):
                theta = self.rng.uniform(0, TWO_PI, m)
                r = centroid(theta).r
                self.assertLess(abs(potential(theta) - (1 - r ** 2) * m ** 2 / 2), 1e-12)

    def test_potential_range(self):
        m = 6
        for _ in range(100):
            v = potential(self.rng.uniform(0, TWO_PI, m))
            self.assertGreaterEqual(v, 0.0)
            self.assertLessEqual(v, m ** 2 / 2 + 1e-12)

    def test_gap_to_maximum(self):
        theta = self.rng.uniform(0, TWO_PI, 5)
        self.assertAlmostEqual(gap_to_maximum(theta), 25 / 2 - potential(theta), places=12)

    def test_order_parameter(self):
        r, psi = order_parameter(PhasePoint.synchronized(5, 1.0))
        self.assertAlmostEqual(r, 1.0)
        self.assertAlmostEqual(psi, 1.0)

    def test_diagonal_invariance(self):
        theta = self.rng.uniform(0, TWO_PI, 5)
        rotated = diagonal_rotate(theta, 0.7)
        self.assertAlmostEqual(potential(theta), potential(rotated), places=12)
        np.testing.assert_allclose(vector_field(theta), vector_field(rotated), atol=1e-12)


class TestField(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.Generator(np.random.PCG64(11))

    def test_field_is_negative_gradient(self):
        h = 1e-6
        for m in (2, 3, 5, 8):
            theta = self.rng.uniform(0, TWO_PI, m)
            numeric = np.empty(m)
            for j in range(m):
                step = np.zeros(m)
                step[j] = h
                numeric[j] = (potential(theta + step) - potential(theta - step)) / (2 * h)
            field = vector_field(theta)
            self.assertLess(np.linalg.norm(field + numeric) /
                            max(np.linalg.norm(numeric), 1e-12), 1e-6)
            np.testing.assert_allclose(gradient(theta), -field)

    def test_field_orthogonal_to_diagonal(self):
        theta = self.rng.uniform(0, TWO_PI, 7)
        self.assertAlmostEqual(vector_field(theta).sum(), 0.0, places=12)

    def test_hessian_forms_agree(self):
        for m in (2, 4, 7):
            theta = self.rng.uniform(0, TWO_PI, m)
            h = hessian(theta)
            np.testing.assert_allclose(h, hessian_cos_sin(theta), atol=1e-12)
            np.testing.assert_allclose(h, h.T)
            np.testing.assert_allclose(h @ np.ones(m), 0.0, atol=1e-12)
            np.testing.assert_allclose(field_jacobian(theta), h, atol=1e-12)

    def test_generalized_field(self):
        m = 4
        theta = self.rng.uniform(0, TWO_PI, m)
        omega = np.array([0.1, -0.2, 0.0, 0.3])
        params = ModelParams(m, omega, np.full((m, m), 2.0))
        np.testing.assert_allclose(vector_field(theta, params),
                                   omega + 2 * vector_field(theta), atol=1e-12)
        # ω_i - Σ a_ij sin(θ_i - θ_j) is the same field
        other = omega - (params.coupling *
                         np.sin(theta[:, None] - theta[None, :])).sum(axis=1)
        np.testing.assert_allclose(vector_field(theta, params), other, atol=1e-12)
        with self.assertRaises(ValueError):
            vector_field(np.zeros(3), params)

    def test_generalized_jacobian(self):
        m = 5
        params = ModelParams.standard(m).perturbed(self.rng, 0.05, 0.05)
        theta = self.rng.uniform(0, TWO_PI, m)
        h = 1e-6
        numeric = np.column_stack([
            (vector_field(theta + h * e, params) - vector_field(theta - h * e, params)) / (2 * h)
            for e in np.eye(m)])
        np.testing.assert_allclose(field_jacobian(theta, params), numeric, atol=1e-8)


class TestModelParams(unittest.TestCase):
    def test_defaults(self):
        params = ModelParams.standard(4)
        self.assertTrue(params.is_standard)
        self.assertTrue(params.is_symmetric)
        self.assertEqual(params.to_dict()["omega"], [0.0] * 4)

    def test_validation(self):
        with self.assertRaises(ValueError):
            ModelParams(1)
        with self.assertRaises(ValueError):
            ModelParams(3, omega=[0.0, 1.0])
        with self.assertRaises(ValueError):
            ModelParams(3, coupling=np.ones((2, 2)))

    def test_perturbed(self):
        rng = np.random.Generator(np.random.PCG64(0))
        params = ModelParams.standard(5).perturbed(rng, 0.01, 0.01)
        self.assertFalse(params.is_standard)
        self.assertTrue(params.is_symmetric)
        self.assertLessEqual(np.max(np.abs(params.omega)), 0.01)
        self.assertLessEqual(np.max(np.abs(params.coupling - 1)), 0.01)

    def test_centered(self):
        params = ModelParams(3, omega=[1.0, 2.0, 3.0]).centered()
        np.testing.assert_allclose(params.omega, [-1.0, 0.0, 1.0])
        theta = np.array([0.1, 0.5, 2.0])
        self.assertAlmostEqual(vector_field(theta, params).sum(), 0.0, places=12)


class TestGeometry(unittest.TestCase):
    def test_antipodal(self):
        self.assertTrue(is_antipodal([0.0, np.pi, 0.0, np.pi]))
        self.assertTrue(is_antipodal([0.3, 0.3 + np.pi, 0.3]))
        self.assertFalse(is_antipodal([0.0, 1.0, np.pi]))
        with self.assertRaises(ValueError):
            is_antipodal([0.0, np.pi], tol=0)

    def test_torus_distance(self):
        self.assertAlmostEqual(torus_distance([0.1, 0.0], [TWO_PI - 0.1, 0.0]), 0.2)
        self.assertEqual(torus_distance([1.0, 2.0], [1.0, 2.0]), 0.0)
