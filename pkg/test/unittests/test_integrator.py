import io
import json
import unittest
from os import environ

import numpy as np

from kuramoto_workshop.equilibria import EquilibriumKind, equilibrium
from kuramoto_workshop.exceptions import ConvergenceError
from kuramoto_workshop.flow import Direction, IntegrationOptions, TerminalKind, \
    converge, integrate, omega_limit, perfect_morse_field, \
    perfect_morse_potential, persistence_check, random_quotient_point
from kuramoto_workshop.model import ModelParams, PhasePoint, TWO_PI, \
    potential, wrap_to_pi
from kuramoto_workshop.quotient import QuotientPoint, project


class TestIntegrate(unittest.TestCase):
    def setUp(self):
        self.rng = np.random.Generator(np.random.PCG64(1))

    def test_options_validation(self):
        with self.assertRaises(ValueError):
            IntegrationOptions(method="Euler")
        with self.assertRaises(ValueError):
            IntegrationOptions(rtol=0)

    def test_potential_decreases(self):
        start = PhasePoint(self.rng.uniform(0, TWO_PI, 5))
        trace = integrate(start, 5.0)
        self.assertEqual(trace.terminal, TerminalKind.MAX_TIME)
        self.assertEqual(trace.space, "ambient")
        self.assertTrue(np.all(np.diff(trace.potentials) <= 1e-9))
        self.assertAlmostEqual(trace.times[-1], 5.0)
        self.assertAlmostEqual(trace.potentials[0], potential(start))

    def test_backward_times(self):
        start = project(self.rng.uniform(0, TWO_PI, 4))
        trace = integrate(start, 0.5, Direction.BACKWARD)
        self.assertEqual(trace.space, "quotient")
        self.assertAlmostEqual(trace.times[-1], -0.5)
        self.assertTrue(np.all(np.diff(trace.potentials) >= -1e-9))
        forward = trace.reversed()
        self.assertAlmostEqual(forward.times[0], 0.0)
        np.testing.assert_allclose(forward.states[0], trace.final_state)

    def test_invalid_calls(self):
        with self.assertRaises(ValueError):
            integrate(PhasePoint([0.0, 1.0]), 0.0)
        with self.assertRaises(ValueError):
            integrate(np.zeros(3), 1.0)
        with self.assertRaises(ValueError):
            integrate(PhasePoint([0.0, 1.0, 2.0]), 1.0, params=ModelParams.standard(4))

    def test_equal_angles_stay_equal(self):
        theta = self.rng.uniform(0, TWO_PI, 6)
        theta[[1, 4]] = theta[0]
        theta[3] = theta[2]
        opts = IntegrationOptions(rtol=1e-10, atol=1e-10)
        trace = integrate(PhasePoint(theta), 50.0, opts=opts)
        spread = np.max(np.abs(wrap_to_pi(trace.states[:, [1, 4]] - trace.states[:, [0]])))
        self.assertLess(spread, 1e-9)
        self.assertLess(np.max(np.abs(wrap_to_pi(trace.states[:, 3] - trace.states[:, 2]))),
                        1e-9)

    def test_monitor_stops(self):
        start = PhasePoint(self.rng.uniform(0, TWO_PI, 5))
        level = potential(start) / 2
        trace = integrate(start, 100.0, monitor=lambda t, y: potential(y) < level)
        self.assertEqual(trace.terminal, TerminalKind.STOPPED)
        self.assertLess(trace.potentials[-1], level)

    def test_custom_field(self):
        trace = integrate(np.array([1.0, 2.0]), 20.0, field_fn=perfect_morse_field,
                          potential_fn=perfect_morse_potential)
        self.assertEqual(trace.space, "custom")
        np.testing.assert_allclose(np.mod(trace.final_state, TWO_PI), 0.0, atol=1e-6)
        self.assertLess(trace.potentials[-1], 1e-10)

    def test_circle_sink_closed_form(self):
        # θ' = -sin θ solves to θ(t) = 2 arctan(e^{-t + c}), c = ln tan(θ0/2)
        opts = IntegrationOptions(rtol=1e-11, atol=1e-13)
        for theta0 in (0.3, 1.0, 2.5, 3.1):
            c = np.log(np.tan(theta0 / 2))
            for direction, t_span in ((Direction.FORWARD, 15.0), (Direction.BACKWARD, 3.0)):
                trace = integrate(np.array([theta0]), t_span, direction, opts=opts,
                                  field_fn=perfect_morse_field)
                self.assertGreater(len(trace), 5)
                expected = 2 * np.arctan(np.exp(-trace.times + c))
                np.testing.assert_allclose(trace.states[:, 0], expected, atol=1e-8)

    def test_csv_export(self):
        trace = integrate(PhasePoint([0.0, 1.0, 2.5]), 1.0)
        frame = trace.to_frame()
        self.assertEqual(list(frame.columns), ["t", "x1", "x2", "x3", "V", "r"])
        self.assertEqual(len(frame), len(trace))
        stream = io.StringIO()
        trace.to_csv(stream, header={"m": 3})
        lines = stream.getvalue().splitlines()
        self.assertEqual(json.loads(lines[0][2:]), {"m": 3})
        self.assertEqual(lines[1], "t,x1,x2,x3,V,r")


class TestConverge(unittest.TestCase):
    def test_random_start_reaches_sink(self):
        rng = np.random.Generator(np.random.PCG64(2))
        for _ in range(10):
            trace = converge(random_quotient_point(5, rng))
            self.assertEqual(trace.terminal, TerminalKind.CONVERGED)
            self.assertEqual(trace.limit.kind, EquilibriumKind.SINK)

    def test_saddle_is_its_own_limit(self):
        record = equilibrium({0}, 5)
        limit = omega_limit(record.quotient_point)
        self.assertEqual(limit.subset, record.subset)

    def test_start_on_maximum_set(self):
        start = PhasePoint.roots_of_unity(5)
        trace = converge(start)
        self.assertEqual(len(trace), 1)
        self.assertIsInstance(trace.limit, PhasePoint)
        self.assertEqual(trace.terminal, TerminalKind.CONVERGED)

    def test_timeout(self):
        start = QuotientPoint([0.5, 1.0, 3.0, 4.0])
        with self.assertRaises(ConvergenceError) as ctx:
            converge(start, t_span=0.01)
        self.assertIsNotNone(ctx.exception.trace)

    def test_perturbed_model_locks(self):
        rng = np.random.Generator(np.random.PCG64(4))
        params = ModelParams.standard(5).perturbed(rng, 0.0, 0.01)
        trace = converge(random_quotient_point(5, rng), params)
        self.assertIsInstance(trace.limit, QuotientPoint)
        self.assertLess(trace.potentials[-1], 1e-6)

    @unittest.skipUnless(environ.get("KURAMOTO_SLOW_TESTS"), "slow census")
    def test_sink_census(self):
        rng = np.random.Generator(np.random.PCG64(0))
        sinks = 0
        for _ in range(1000):
            try:
                limit = omega_limit(random_quotient_point(5, rng))
            except ConvergenceError:
                continue
            sinks += limit.kind == EquilibriumKind.SINK
        self.assertGreaterEqual(sinks, 990)


class TestPersistence(unittest.TestCase):
    def test_small_perturbation(self):
        rng = np.random.Generator(np.random.PCG64(5))
        params = ModelParams.standard(5).perturbed(rng, 0.01, 0.01)
        report = persistence_check(params)
        self.assertEqual(report.expected, 16)
        self.assertTrue(report.ok, report.failures)
        self.assertLess(max(report.shifts), 0.1)

    def test_standard_model_is_fixed(self):
        report = persistence_check(ModelParams.standard(4))
        self.assertTrue(report.ok)
        self.assertEqual(report.expected, 5)
        self.assertLess(max(report.shifts), 1e-10)
