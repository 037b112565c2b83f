"""Tests for the metric-space primitives."""

import math
import unittest

import numpy as np

from gradflow import core
from gradflow.errors import InvalidInputError
from gradflow.models.oracles import EnergyOracle
from gradflow.models.trajectory import Trajectory


def half_square(dim=1, lam=1.0):
    """E(x) = |x|^2 / 2 with its exact slope |x|."""
    return EnergyOracle(eval=lambda x: 0.5 * float(np.dot(x, x)),
                        equilibrium=np.zeros(dim), lam=lam,
                        slope=lambda x: float(np.linalg.norm(x)))


class MetricDerivativeTestCase(unittest.TestCase):
    """Test finite-difference speeds and polygonal lengths."""

    def setUp(self):
        """Set up a three-sample curve on the line."""
        self.traj = Trajectory(times=[0.0, 1.0, 2.0],
                               states=[np.array([0.0]), np.array([1.0]), np.array([3.0])],
                               energies=[0.0, 0.5, 4.5])

    def test_one_sided_at_the_ends(self):
        """Test that the first and last speeds use one-sided differences."""
        self.assertAlmostEqual(core.metric_derivative(self.traj, core.euclidean_distance, 0), 1.0)
        self.assertAlmostEqual(core.metric_derivative(self.traj, core.euclidean_distance, 2), 2.0)

    def test_central_inside(self):
        """Test the central difference at an interior sample."""
        self.assertAlmostEqual(core.metric_derivative(self.traj, core.euclidean_distance, 1), 1.5)

    def test_index_out_of_range(self):
        """Test that a bad sample index is rejected."""
        with self.assertRaises(InvalidInputError):
            core.metric_derivative(self.traj, core.euclidean_distance, 3)

    def test_single_sample_rejected(self):
        """Test that one sample is not enough for a speed or a length."""
        traj = Trajectory(times=[0.0], states=[np.zeros(1)], energies=[0.0])
        with self.assertRaises(InvalidInputError):
            core.metric_derivative(traj, core.euclidean_distance, 0)
        with self.assertRaises(InvalidInputError):
            core.arc_length(traj, core.euclidean_distance)

    def test_arc_length(self):
        """Test the polygonal length."""
        self.assertAlmostEqual(core.arc_length(self.traj, core.euclidean_distance), 3.0)

    def test_arc_length_grows_under_refinement(self):
        """Test that doubling the sample density never shortens a smooth curve."""
        def sampled(n):
            t = np.linspace(0.0, 2.0, n + 1)
            states = [np.array([math.cos(3.0 * s), math.sin(s) * s]) for s in t]
            return Trajectory(times=list(t), states=states, energies=[0.0] * (n + 1))

        lengths = [core.arc_length(sampled(4 * 2 ** k), core.euclidean_distance) for k in range(6)]
        for coarse, fine in zip(lengths, lengths[1:]):
            self.assertGreaterEqual(fine, coarse - 1e-12)
        self.assertLess(lengths[-1] - lengths[-2], lengths[1] - lengths[0])

    def test_infinite_distance_rejected(self):
        """Test that a non-finite distance raises."""
        with self.assertRaises(InvalidInputError):
            core.arc_length(self.traj, lambda a, b: math.inf)


class SlopeEstimateTestCase(unittest.TestCase):
    """Test the sup-representation slope estimate."""

    def test_exact_in_one_dimension(self):
        """Test that the estimate recovers |x| for |x|^2/2 on the line."""
        est = core.slope_estimate(half_square(), np.array([2.0]))
        self.assertAlmostEqual(est.value, 2.0, places=9)
        self.assertEqual(est.lam_used, 1.0)
        self.assertTrue(est.convexity_verified)

    def test_lower_bound_in_the_plane(self):
        """Test that coordinate probes give a lower bound of the slope."""
        est = core.slope_estimate(half_square(dim=2), np.array([3.0, 4.0]))
        self.assertLessEqual(est.value, 5.0 + 1e-9)
        self.assertAlmostEqual(est.value, 4.0, places=9)

    def test_undeclared_modulus(self):
        """Test that a missing modulus falls back to lam=0 and is flagged."""
        est = core.slope_estimate(half_square(lam=None), np.array([2.0]))
        self.assertEqual(est.lam_used, 0.0)
        self.assertFalse(est.convexity_verified)
        self.assertLessEqual(est.value, 2.0)

    def test_probes_at_the_state(self):
        """Test that probes all at distance zero raise."""
        with self.assertRaises(InvalidInputError):
            core.slope_estimate(half_square(), np.array([1.0]), probes=[np.array([1.0])])

    def test_infinite_probe_skipped(self):
        """Test that probes outside the domain are skipped."""
        orc = EnergyOracle(eval=lambda x: math.inf if x[0] < 0 else 0.5 * x[0] ** 2, lam=1.0)
        est = core.slope_estimate(orc, np.array([1.0]), probes=[np.array([-1.0]), np.array([0.5])])
        self.assertAlmostEqual(est.value, 1.0)


class DissipationTestCase(unittest.TestCase):
    """Test the energy dissipation balance."""

    def _implicit_euler(self, tau=0.1, steps=10):
        xs = [1.0]
        for _ in range(steps):
            xs.append(xs[-1] / (1.0 + tau))
        return Trajectory(times=[k * tau for k in range(steps + 1)],
                          states=[np.array([x]) for x in xs],
                          energies=[0.5 * x ** 2 for x in xs],
                          slopes=[abs(x) for x in xs])

    def test_interval_residual(self):
        """Test the closed-form residual -x_k+1^2 tau^3 / 4 of implicit Euler."""
        traj = self._implicit_euler()
        reports = core.check_dissipation(traj, 2.0, core.euclidean_distance)
        self.assertEqual(len(reports), 10)
        for k, rep in enumerate(reports):
            x_next = traj.states[k + 1][0]
            self.assertAlmostEqual(rep.residual, -x_next ** 2 * 0.1 ** 3 / 4, places=12)
            self.assertFalse(rep.energy_increase)

    def test_total_residual_small(self):
        """Test that the summed residual is a small fraction of the energy drop."""
        traj = self._implicit_euler()
        reports = core.check_dissipation(traj, 2.0, core.euclidean_distance)
        drop = traj.energies[0] - traj.energies[-1]
        self.assertLess(abs(core.total_residual(reports)), 0.01 * drop)

    def test_energy_increase_flagged(self):
        """Test that a rising energy is flagged."""
        traj = Trajectory(times=[0.0, 1.0], states=[np.zeros(1), np.ones(1)],
                          energies=[0.0, 1.0], slopes=[0.0, 1.0])
        reports = core.check_dissipation(traj, 2.0, core.euclidean_distance)
        self.assertTrue(reports[0].energy_increase)

    def test_missing_slopes(self):
        """Test that slopes are required."""
        traj = Trajectory(times=[0.0, 1.0], states=[np.zeros(1), np.ones(1)], energies=[1.0, 0.0])
        with self.assertRaises(InvalidInputError):
            core.check_dissipation(traj, 2.0, core.euclidean_distance)

    def test_exponent_must_exceed_one(self):
        """Test that p <= 1 is rejected."""
        with self.assertRaises(InvalidInputError):
            core.check_dissipation(self._implicit_euler(), 1.0, core.euclidean_distance)


class RelativeEntropyTestCase(unittest.TestCase):
    """Test E(v | phi)."""

    def test_value(self):
        """Test E(v) - E(phi)."""
        self.assertAlmostEqual(core.relative_entropy(half_square(), np.array([2.0])), 2.0)

    def test_no_equilibrium(self):
        """Test that an oracle without equilibrium is rejected."""
        orc = EnergyOracle(eval=lambda x: 0.0)
        with self.assertRaises(InvalidInputError):
            core.relative_entropy(orc, np.zeros(1))

    def test_infinite_energy(self):
        """Test that a state outside the domain is rejected."""
        orc = EnergyOracle(eval=lambda x: math.inf if x[0] > 0 else 0.0, equilibrium=np.zeros(1))
        with self.assertRaises(InvalidInputError):
            core.relative_entropy(orc, np.ones(1))


if __name__ == '__main__':
    unittest.main()
