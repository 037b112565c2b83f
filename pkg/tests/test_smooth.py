"""Tests for smooth energies, line talwegs and stability probes."""

import math
import unittest

import numpy as np

from gradflow import mms, smooth
from gradflow.errors import InvalidInputError
from gradflow.models.oracles import MMConfig
from gradflow.models.smooth import SmoothEnergy


class RegistryTestCase(unittest.TestCase):
    """Test the energy registry and its gradient check."""

    def test_registered_energies_pass(self):
        """Test that every registered energy passes the finite-difference check."""
        for name, params in (('quadratic', {}), ('quartic', {}), ('coscup', {}), ('saddle', {}),
                             ('polynomial', {'coeffs': [0.0, 0.0, 1.0, 0.0, 0.25]})):
            with self.subTest(name=name):
                E = smooth.smooth_energy(name, **params)
                self.assertEqual(E.name, name)

    def test_unknown(self):
        """Test that unknown names are rejected."""
        with self.assertRaises(InvalidInputError):
            smooth.smooth_energy('rosenbrock')

    def test_wrong_gradient_detected(self):
        """Test that a wrong gradient is caught."""
        E = SmoothEnergy('bad', 2, value=lambda x: float(np.dot(x, x)), gradient=lambda x: x)
        self.assertGreater(smooth.gradient_error(E, np.random.default_rng(0)), 1e-5)

    def test_diagonal_quadratic(self):
        """Test that a vector Q is read as a diagonal and sets lam to its minimum."""
        E = smooth.quadratic(Q=[2.0, 0.5])
        self.assertAlmostEqual(E.value(np.array([1.0, 2.0])), 2.0)
        self.assertAlmostEqual(E.lam, 0.5)

    def test_prox_matches_closed_form(self):
        """Test the BFGS step against v/(1 + tau) for |x|^2/2."""
        prox = smooth.euclidean_prox(smooth.quadratic(dim=2))
        np.testing.assert_allclose(prox.solve(0.5, np.array([3.0, -1.5]), 2.0), [2.0, -1.0], atol=1e-7)

    def test_evolve_on_quartic(self):
        """Test monotone minimizing movements on a degenerate well."""
        E = smooth.quartic()
        traj = mms.evolve(smooth.euclidean_prox(E), smooth.oracle(E), np.array([1.0, 0.5]),
                          MMConfig(p=2.0, tau=0.1, horizon=1.0))
        self.assertEqual(traj.energy_increases(1e-12), [])
        self.assertLess(traj.energies[-1], traj.energies[0])


class TalwegTestCase(unittest.TestCase):
    """Test straight-line talwegs."""

    def test_quadratic_constants(self):
        """Test C = 1/sqrt(2) and C_h = sqrt(2)/|v0| for |x|^2/2."""
        report = smooth.smooth_line_talweg(smooth.quadratic(dim=2), [0.0, 0.0], [3.0, 4.0])
        self.assertTrue(report.monotone)
        self.assertAlmostEqual(report.ls_constant, 1.0 / math.sqrt(2.0), places=10)
        self.assertAlmostEqual(report.inverse_h_constant, math.sqrt(2.0) / 5.0, places=10)
        np.testing.assert_allclose(report.taylor_ratios, 12.5)
        self.assertAlmostEqual(report.taylor_limit, 12.5)
        self.assertEqual(report.certificate.alpha, 0.5)

    def test_saddle_direction_not_monotone(self):
        """Test that the descending direction of a saddle fails."""
        report = smooth.smooth_line_talweg(smooth.saddle(), [0.0, 0.0], [0.0, 1.0])
        self.assertFalse(report.monotone)
        self.assertEqual(report.status.value, 'FAIL')

    def test_degenerate_direction(self):
        """Test that v0 = phi is rejected."""
        with self.assertRaises(InvalidInputError):
            smooth.smooth_line_talweg(smooth.quadratic(dim=2), [1.0, 1.0], [1.0, 1.0])

    def test_singular_hessian(self):
        """Test that a degenerate minimum is rejected."""
        with self.assertRaises(InvalidInputError):
            smooth.smooth_line_talweg(smooth.quartic(), [0.0, 0.0], [1.0, 0.0])


class StabilityTestCase(unittest.TestCase):
    """Test empirical Lyapunov stability."""

    def test_quadratic_stable(self):
        """Test that a strict minimum is stable and a local minimum."""
        report = smooth.stability_probe(smooth.quadratic(dim=2), [0.0, 0.0], 0.5, deltas=[0.25],
                                        tau=0.1, horizon=1.0)
        self.assertTrue(report.stable)
        self.assertTrue(report.local_minimum)
        self.assertEqual(report.verdict, 'STABLE')
        self.assertLessEqual(report.excursions[0], 0.25 + 1e-9)
        self.assertEqual(report.n_starts, 32)

    def test_saddle_unstable(self):
        """Test that the saddle escapes and is not a local minimum."""
        report = smooth.stability_probe(smooth.saddle(), [0.0, 0.0], 0.5, deltas=[0.25], tau=0.1, horizon=1.0)
        self.assertFalse(report.stable)
        self.assertFalse(report.local_minimum)
        self.assertEqual(report.verdict, 'UNSTABLE')

    def test_bad_radius(self):
        """Test that eps must be positive."""
        with self.assertRaises(InvalidInputError):
            smooth.stability_probe(smooth.quadratic(dim=2), [0.0, 0.0], 0.0)


if __name__ == '__main__':
    unittest.main()
