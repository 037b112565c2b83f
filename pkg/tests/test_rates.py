"""Tests for decay and extinction predictions."""

import itertools
import math
import unittest

import numpy as np

from gradflow import rates
from gradflow.errors import InvalidInputError
from gradflow.models.certificates import Status
from gradflow.models.decay import Regime
from gradflow.models.trajectory import Trajectory


def timeline(times, energies=None):
    energies = [0.0] * len(times) if energies is None else energies
    return Trajectory(times=times, states=[None] * len(times), energies=energies)


class ClassifyTestCase(unittest.TestCase):
    """Test regime selection."""

    def test_regimes(self):
        """Test the three regimes around alpha = 1/p."""
        self.assertIs(rates.classify(2.0, 0.25), Regime.POLYNOMIAL)
        self.assertIs(rates.classify(2.0, 0.5), Regime.EXPONENTIAL)
        self.assertIs(rates.classify(2.0, 1.0), Regime.EXTINCTION)

    def test_boundary_to_rounding(self):
        """Test that alpha p = 1 up to rounding is exponential."""
        self.assertIs(rates.classify(3.0, 1.0 / 3.0), Regime.EXPONENTIAL)


class PredictTestCase(unittest.TestCase):
    """Test closed-form predictions."""

    def test_extinction_anchor(self):
        """Test p=2, alpha=1, c=1, E0=1/2: the bound is (1/2 - t)^+."""
        pred = rates.predict(2.0, 1.0, 1.0, 0.0, 0.5)
        self.assertIs(pred.regime, Regime.EXTINCTION)
        self.assertAlmostEqual(pred.t_hat, 0.5)
        self.assertAlmostEqual(pred.c_tilde, 1.0)
        self.assertAlmostEqual(pred.t_hat_stated, 0.5)
        np.testing.assert_allclose(pred.bound([0.0, 0.2, 0.5, 0.7]), [0.5, 0.3, 0.0, 0.0], atol=1e-15)

    def test_extinction_scaling_in_e0(self):
        """Test how both deadlines scale with the initial entropy."""
        for p, alpha in itertools.product((2.0, 2.5, 3.0, 4.0, 6.0), (0.6, 0.7, 0.8, 1.0)):
            with self.subTest(p=p, alpha=alpha):
                one = rates.predict(p, alpha, 1.3, 0.2, 1.0)
                two = rates.predict(p, alpha, 1.3, 0.2, 2.0)
                self.assertIs(one.regime, Regime.EXTINCTION)
                integrated = (p * alpha - 1.0) / (p - 1.0)
                stated = (p * alpha - 1.0) / (alpha * (p - 1.0))
                self.assertTrue(math.isclose((two.t_hat - 0.2) / (one.t_hat - 0.2), 2.0 ** integrated,
                                             rel_tol=1e-12))
                self.assertTrue(math.isclose((two.t_hat_stated - 0.2) / (one.t_hat_stated - 0.2),
                                             2.0 ** stated, rel_tol=1e-12))

    def test_extinction_bound_vanishes_at_deadline(self):
        """Test that the extinction bound reaches zero at t_hat and stays there."""
        pred = rates.predict(3.0, 0.8, 0.7, 1.0, 0.4)
        self.assertEqual(float(pred.bound(pred.t_hat + 1e-9)), 0.0)
        self.assertGreater(float(pred.bound(pred.t_hat - 1e-3)), 0.0)
        self.assertAlmostEqual(float(pred.bound(0.0)), pred.H0)

    def test_exponential_rate(self):
        """Test the rate 1/(p c^p')."""
        pred = rates.predict(2.0, 0.5, 2.0, 0.0, 1.0)
        self.assertIs(pred.regime, Regime.EXPONENTIAL)
        self.assertAlmostEqual(pred.rate, 0.125)
        self.assertAlmostEqual(pred.H0, 4.0)
        self.assertAlmostEqual(float(pred.bound(8.0)), 4.0 * math.exp(-1.0))
        self.assertIsNone(pred.t_hat)

    def test_polynomial_decay(self):
        """Test the polynomial envelope and its exponent."""
        pred = rates.predict(2.0, 0.25, 1.0, 0.0, 1.0)
        self.assertIs(pred.regime, Regime.POLYNOMIAL)
        self.assertAlmostEqual(pred.meta['decay_exponent'], 0.5)
        values = pred.bound(np.linspace(0.0, 100.0, 50))
        self.assertAlmostEqual(values[0], pred.H0)
        self.assertTrue(np.all(np.diff(values) < 0))
        self.assertTrue(np.all(values > 0))

    def test_zero_entropy(self):
        """Test that E0 = 0 gives a zero bound."""
        pred = rates.predict(2.0, 1.0, 1.0, 0.0, 0.0)
        np.testing.assert_array_equal(pred.bound([0.0, 1.0]), [0.0, 0.0])

    def test_validation(self):
        """Test parameter ranges."""
        for args in ((1.0, 0.5, 1.0, 0.0, 1.0), (2.0, 0.0, 1.0, 0.0, 1.0), (2.0, 1.5, 1.0, 0.0, 1.0),
                     (2.0, 0.5, 0.0, 0.0, 1.0), (2.0, 0.5, 1.0, 0.0, -1.0), (2.0, 0.5, 1.0, 0.0, math.inf)):
            with self.subTest(args=args):
                with self.assertRaises(InvalidInputError):
                    rates.predict(*args)

    def test_hilbert(self):
        """Test the p = 2 specialisation and its envelope metadata."""
        pred = rates.predict_hilbert(1.0, 1.0, 0.0, 0.5)
        self.assertEqual(pred.p, 2.0)
        self.assertEqual(pred.meta['space'], 'hilbert')
        self.assertAlmostEqual(pred.meta['et_envelope_t0'], 0.5)

    def test_table(self):
        """Test the Cartesian product of parameters."""
        table = rates.prediction_table([2.0, 3.0], [0.25, 0.5, 1.0], [1.0], [0.1, 1.0, 10.0])
        self.assertEqual(len(table), 18)
        self.assertEqual({pred.regime for pred in table},
                         {Regime.EXPONENTIAL, Regime.EXTINCTION, Regime.POLYNOMIAL})


class CompareTestCase(unittest.TestCase):
    """Test measured distances against a prediction."""

    def setUp(self):
        """Set up the anchor prediction and a trajectory sitting on its bound."""
        self.pred = rates.predict(2.0, 1.0, 1.0, 0.0, 0.5)
        self.traj = timeline([0.0, 0.25, 0.5, 0.75])

    def test_on_the_bound(self):
        """Test that distances equal to the bound pass with zero tolerance."""
        cmp = rates.compare(self.pred, self.traj, [0.5, 0.25, 0.0, 0.0], t_star=0.5)
        self.assertEqual(cmp.status, Status.PASS)
        self.assertEqual(cmp.violations, 0)
        self.assertTrue(cmp.deadline_ok)
        self.assertEqual(len(cmp.rows()), 4)

    def test_above_the_bound(self):
        """Test that a distance above the bound is a violation."""
        cmp = rates.compare(self.pred, self.traj, [0.5, 0.3, 0.0, 0.0])
        self.assertEqual(cmp.status, Status.FAIL)
        self.assertEqual(cmp.violations, 1)
        self.assertAlmostEqual(cmp.worst_slack, -0.05)

    def test_late_extinction(self):
        """Test that a late extinction fails the deadline."""
        cmp = rates.compare(self.pred, self.traj, [0.5, 0.25, 0.0, 0.0], t_star=0.6)
        self.assertEqual(cmp.status, Status.FAIL)
        self.assertFalse(cmp.deadline_ok)

    def test_tolerance(self):
        """Test that slack within the tolerance passes."""
        cmp = rates.compare(self.pred, self.traj, [0.5, 0.3, 0.0, 0.0], tol=0.06)
        self.assertEqual(cmp.status, Status.PASS)

    def test_samples_before_t0_ignored(self):
        """Test that only samples at or after t0 are compared."""
        pred = rates.predict(2.0, 1.0, 1.0, 0.25, 0.5)
        cmp = rates.compare(pred, self.traj, [9.0, 0.5, 0.25, 0.0])
        self.assertEqual(cmp.status, Status.PASS)
        self.assertEqual(cmp.times.tolist(), [0.25, 0.5, 0.75])

    def test_length_mismatch(self):
        """Test that one distance per sample is required."""
        with self.assertRaises(InvalidInputError):
            rates.compare(self.pred, self.traj, [0.5, 0.25])

    def test_trajectory_before_t0(self):
        """Test that a trajectory ending before t0 is rejected."""
        pred = rates.predict(2.0, 1.0, 1.0, 5.0, 0.5)
        with self.assertRaises(InvalidInputError):
            rates.compare(pred, self.traj, [0.5, 0.25, 0.0, 0.0])


class ExtinctionBoundTestCase(unittest.TestCase):
    """Test the a-posteriori extinction bound."""

    def test_minimum_over_samples(self):
        """Test min over s of s + C E(v(s)|phi)."""
        traj = timeline([0.0, 1.0, 2.0], [3.0, 1.0, 0.0])
        np.testing.assert_allclose(rates.extinction_profile(traj, 0.5), [1.5, 1.5, 2.0])
        self.assertAlmostEqual(rates.extinction_bound_inf(traj, 0.5), 1.5)

    def test_equilibrium_energy_offset(self):
        """Test that E(phi) is subtracted."""
        traj = timeline([0.0, 1.0], [4.0, 2.0])
        self.assertAlmostEqual(rates.extinction_bound_inf(traj, 1.0, equilibrium_energy=2.0), 1.0)

    def test_constant_must_be_positive(self):
        """Test that C <= 0 is rejected."""
        with self.assertRaises(InvalidInputError):
            rates.extinction_bound_inf(timeline([0.0]), 0.0)


if __name__ == '__main__':
    unittest.main()
