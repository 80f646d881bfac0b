import unittest

import numpy as np

from kuramoto_workshop.exceptions import SingularApproachError
from kuramoto_workshop.flow import IntegrationOptions, alpha_limit_retraction, \
    auxiliary_field, curve_length, flow_auxiliary, hessian_bound_violation, \
    integrate, level_set_point, lipschitz_constant, ratio, ratio_bound, \
    ratio_closed_form, ratio_comparison, ratio_floor
from kuramoto_workshop.cells import normal_frame
from kuramoto_workshop.model import PhasePoint, TWO_PI, gap_to_maximum, \
    gradient, potential
from kuramoto_workshop.quotient import project


def _normal(theta):
    # unit vector along Cos with the diagonal removed
    v = np.cos(theta)
    v = v - v.mean()
    return v / np.linalg.norm(v)


class TestAuxiliaryField(unittest.TestCase):
    def setUp(self):
        self.base = PhasePoint.roots_of_unity(5)

    def test_gap_derivative(self):
        # dV/dt along W equals w
        theta = self.base.angles + 0.05 * _normal(self.base.angles)
        w = gap_to_maximum(theta)
        self.assertAlmostEqual(float(gradient(theta) @ auxiliary_field(theta)), w, places=12)

    def test_zero_at_equilibria(self):
        np.testing.assert_array_equal(auxiliary_field(np.zeros(4)), np.zeros(4))

    def test_exponential_decay(self):
        start = level_set_point(self.base, _normal(self.base.angles), 0.1)
        self.assertAlmostEqual(potential(start), 12.5 - 0.1, places=10)
        trace = integrate(start.angles, 5.0, opts=IntegrationOptions(rtol=1e-10, atol=1e-12),
                          field_fn=auxiliary_field, potential_fn=potential)
        gaps = np.array([gap_to_maximum(y) for y in trace.states])
        expected = 0.1 * np.exp(-trace.times)
        self.assertLess(np.max(np.abs(gaps - expected) / expected), 0.01)

    def test_retraction(self):
        start = level_set_point(self.base, _normal(self.base.angles), 0.1)
        limit, diagnostics = alpha_limit_retraction(start, epsilon=0.125)
        self.assertLess(gap_to_maximum(limit), 1e-12)
        early = diagnostics.times <= 5.0
        expected = diagnostics.gaps[0] * np.exp(-diagnostics.times[early])
        self.assertLess(np.max(np.abs(diagnostics.gaps[early] - expected) / expected), 0.01)
        self.assertLessEqual(diagnostics.hessian_violation, 1e-9)
        self.assertTrue(np.all((diagnostics.ratios > 0) & (diagnostics.ratios < 1)))

    def test_retraction_from_quotient_point(self):
        start = level_set_point(self.base, _normal(self.base.angles), 0.01)
        limit, _ = alpha_limit_retraction(project(start))
        self.assertLess(gap_to_maximum(limit), 1e-12)

    def test_retraction_rejects_low_start(self):
        with self.assertRaises(ValueError):
            alpha_limit_retraction(PhasePoint(np.zeros(5)))

    def test_start_on_maximum_set(self):
        limit, diagnostics = alpha_limit_retraction(self.base)
        self.assertTrue(limit.isclose(self.base))
        self.assertEqual(len(diagnostics.trace), 1)

    def test_ratio_cap(self):
        # Y is close to 1/(2m) next to a singular point of the maximum set
        singular = np.array([np.pi, np.pi, 0.0, 0.0])
        start = singular + 1e-3 * np.array([1.0, -1.0, 0.0, 0.0]) + \
            1e-2 * np.array([1.0, 1.0, -1.0, -1.0]) / 2
        self.assertAlmostEqual(ratio(start), 0.125, places=2)
        with self.assertRaises(SingularApproachError) as ctx:
            alpha_limit_retraction(PhasePoint(start), ratio_cap=0.05)
        self.assertIsNotNone(ctx.exception.trace)


class TestBounds(unittest.TestCase):
    def test_ratio_bound(self):
        self.assertAlmostEqual(ratio_bound(5, 0.0), 0.1)
        self.assertLess(ratio_bound(5, 0.5), 0.1)

    def test_lipschitz_constant(self):
        m, eps = 5, 0.125
        y = ratio_bound(m, eps)
        self.assertAlmostEqual(lipschitz_constant(m, eps, 0.0), np.exp(2 * np.sqrt(2) * y))
        self.assertAlmostEqual(lipschitz_constant(m, eps, 1.0), np.exp(2 * np.sqrt(2)))

    def test_hessian_bound(self):
        rng = np.random.Generator(np.random.PCG64(9))
        for _ in range(50):
            self.assertLessEqual(hessian_bound_violation(rng.uniform(0, TWO_PI, 6)), 1e-9)

    def test_ratio_near_maximum(self):
        base = PhasePoint.roots_of_unity(5)
        theta = base.angles + 1e-3 * _normal(base.angles)
        # Y -> 1/m approaching a smooth point of the maximum set
        self.assertAlmostEqual(ratio(theta), 0.2, places=2)


class TestCurves(unittest.TestCase):
    def test_curve_length(self):
        n = 400
        circle = [PhasePoint([0.0, 0.1 * np.cos(a), 0.1 * np.sin(a)])
                  for a in TWO_PI * np.arange(n) / n]
        self.assertAlmostEqual(curve_length(circle), TWO_PI * 0.1, places=4)
        self.assertLess(curve_length(circle, closed=False), curve_length(circle))

    def test_flow_auxiliary_preserves_count(self):
        base = PhasePoint.roots_of_unity(5)
        points = [level_set_point(base, _normal(base.angles), 0.1)]
        flowed = flow_auxiliary(points, 1.0)
        self.assertEqual(len(flowed), 1)
        self.assertAlmostEqual(gap_to_maximum(flowed[0]), 0.1 * np.exp(-1.0), places=6)

    def test_level_set_point_unreachable(self):
        base = PhasePoint.roots_of_unity(5)
        with self.assertRaises(ValueError):
            level_set_point(base, _normal(base.angles), 12.0, reach=0.01)


class TestRatioAlongRetraction(unittest.TestCase):
    def test_closed_form(self):
        rng = np.random.Generator(np.random.PCG64(4))
        for m in (3, 5, 6):
            for _ in range(20):
                theta = rng.uniform(0, TWO_PI, m)
                self.assertAlmostEqual(ratio(theta), ratio_closed_form(theta), places=9)
                self.assertGreaterEqual(ratio(theta), ratio_floor(m) * (1 - 1e-12))

    def test_floor_lies_above_rest_point(self):
        for m in range(3, 10):
            self.assertLess(ratio_bound(m, 0.1), ratio_floor(m))

    def test_comparison_bound(self):
        self.assertAlmostEqual(float(ratio_comparison(0.2, 0.05, 5, 0.0)), 0.2)
        a = 2 * (5 + np.sqrt(0.1))
        blowup = np.log(a / (a - 5.0))
        self.assertTrue(np.isfinite(ratio_comparison(0.2, 0.05, 5, 0.99 * blowup)))
        self.assertEqual(float(ratio_comparison(0.2, 0.05, 5, 1.01 * blowup)), np.inf)

    def test_ratios_on_retraction_orbits(self):
        m, epsilon = 5, 0.1
        base = PhasePoint.roots_of_unity(m)
        normals = normal_frame(base).orthonormal()
        rng = np.random.Generator(np.random.PCG64(5))
        for phi in rng.uniform(0, TWO_PI, 5):
            direction = np.cos(phi) * normals[:, 0] + np.sin(phi) * normals[:, 1]
            start = level_set_point(base, direction, 0.05)
            _, diagnostics = alpha_limit_retraction(start, epsilon=epsilon)
            ratios = diagnostics.ratios
            resolved = diagnostics.gaps > 1e-10
            self.assertTrue(np.all(ratios[resolved] >= ratio_floor(m) * (1 - 1e-9)))
            # the rest point 1/(2(m + √(2ε))) never bounds Y from above
            self.assertGreater(ratios[0], ratio_bound(m, epsilon))
            bounds = diagnostics.comparison_bounds()
            finite = np.isfinite(bounds)
            self.assertTrue(finite[0])
            self.assertTrue(np.all(ratios[finite] <= bounds[finite] * (1 + 1e-8)))
            # Y ends near 1/m at a smooth point of the maximum set
            self.assertAlmostEqual(ratios[resolved][-1], 1 / m, delta=0.05)
