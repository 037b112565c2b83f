"""Tests for the minimizing-movement engine."""

import unittest

import numpy as np

from gradflow import core, mms
from gradflow.errors import FlowAbortedError, InvalidInputError, ProxToleranceError
from gradflow.models.oracles import EnergyOracle, MMConfig, ProxOracle


def quadratic_oracle():
    return EnergyOracle(eval=lambda x: 0.5 * float(np.dot(x, x)), equilibrium=np.zeros(1), lam=1.0,
                        slope=lambda x: float(np.linalg.norm(x)))


def exact_prox(tolerance=1e-9):
    """Closed-form proximal step of |x|^2/2 for p = 2."""
    return ProxOracle(solve=lambda tau, v, p: np.asarray(v, dtype=float) / (1.0 + tau),
                      tolerance=tolerance, distance=core.euclidean_distance)


class MMStepTestCase(unittest.TestCase):
    """Test single implicit steps."""

    def test_step_functional(self):
        """Test Phi_p at a known point."""
        value = mms.step_functional(quadratic_oracle(), core.euclidean_distance, 0.5,
                                    np.array([1.0]), np.array([0.0]), 2.0)
        self.assertAlmostEqual(value, 1.0)

    def test_accepts_the_minimizer(self):
        """Test that the exact proximal point is accepted."""
        v = mms.mm_step(exact_prox(), quadratic_oracle(), 0.25, np.array([1.0]), 2.0)
        np.testing.assert_allclose(v, [0.8])

    def test_rejects_a_bad_solver(self):
        """Test that a point worse than staying put raises."""
        bad = ProxOracle(solve=lambda tau, v, p: v + 10.0, tolerance=1e-9, distance=core.euclidean_distance)
        with self.assertRaises(ProxToleranceError) as ctx:
            mms.mm_step(bad, quadratic_oracle(), 0.1, np.array([1.0]), 2.0)
        self.assertGreater(ctx.exception.gap, ctx.exception.tolerance)

    def test_nonpositive_step(self):
        """Test that tau <= 0 is rejected."""
        with self.assertRaises(InvalidInputError):
            mms.mm_step(exact_prox(), quadratic_oracle(), 0.0, np.array([1.0]), 2.0)

    def test_config_validation(self):
        """Test MMConfig bounds."""
        with self.assertRaises(InvalidInputError):
            MMConfig(p=1.0)
        with self.assertRaises(InvalidInputError):
            MMConfig(tau=-1.0)
        self.assertEqual(MMConfig(tau=0.1, horizon=1.0).steps, 10)


class EvolveTestCase(unittest.TestCase):
    """Test whole minimizing-movement runs."""

    def setUp(self):
        """Set up a ten-step run of implicit Euler."""
        self.cfg = MMConfig(p=2.0, tau=0.1, horizon=1.0)
        self.traj = mms.evolve(exact_prox(), quadratic_oracle(), np.array([1.0]), self.cfg)

    def test_samples(self):
        """Test time stamps and the closed-form iterates."""
        self.assertEqual(len(self.traj), 11)
        np.testing.assert_allclose(self.traj.t, 0.1 * np.arange(11), atol=1e-12)
        np.testing.assert_allclose(self.traj.states[-1], [1.1 ** -10])

    def test_energy_nonincreasing(self):
        """Test monotone energies."""
        self.assertEqual(self.traj.energy_increases(0.0), [])

    def test_discrete_dissipation_below_drop(self):
        """Test the discrete energy inequality summed over the run."""
        drop = self.traj.energies[0] - self.traj.energies[-1]
        self.assertLessEqual(mms.discrete_dissipation(self.traj, 2.0, core.euclidean_distance), drop + 1e-14)

    def test_dissipation_residual(self):
        """Test that the energy balance closes up to a small residual."""
        reports = core.check_dissipation(self.traj, 2.0, core.euclidean_distance)
        drop = self.traj.energies[0] - self.traj.energies[-1]
        self.assertLess(abs(core.total_residual(reports)), 0.02 * drop)

    def test_abort_keeps_partial(self):
        """Test that a failing step aborts with the samples so far attached."""
        calls = {'n': 0}

        def flaky(tau, v, p):
            calls['n'] += 1
            return v / (1.0 + tau) if calls['n'] < 3 else v + 100.0

        prox = ProxOracle(solve=flaky, tolerance=1e-9, distance=core.euclidean_distance)
        with self.assertRaises(FlowAbortedError) as ctx:
            mms.evolve(prox, quadratic_oracle(), np.array([1.0]), self.cfg)
        self.assertEqual(len(ctx.exception.partial), 3)
        self.assertIsInstance(ctx.exception.cause, ProxToleranceError)

    def test_infinite_start(self):
        """Test that a start outside the domain is rejected."""
        orc = EnergyOracle(eval=lambda x: float('inf'))
        with self.assertRaises(InvalidInputError):
            mms.evolve(exact_prox(), orc, np.array([1.0]), self.cfg)


class RefinementTestCase(unittest.TestCase):
    """Test the step-halving study."""

    def test_contracting(self):
        """Test that Cauchy distances shrink as the step halves."""
        cfg = MMConfig(p=2.0, tau=0.1, horizon=1.0, refine_levels=4)
        study = mms.refine_study(exact_prox(), quadratic_oracle(), np.array([1.0]), cfg)
        self.assertEqual(study.taus, [0.1, 0.05, 0.025, 0.0125])
        self.assertEqual(len(study.distances), 3)
        self.assertTrue(all(study.contracting))
        for ratio in study.ratios:
            self.assertGreater(ratio, 1.5)

    def test_non_dyadic_horizon(self):
        """Test that each level has twice the steps of the previous one when tau does not divide the horizon."""
        for tau, horizon, coarse_steps in ((2.0, 7.0, 4), (1.0, 0.4, 1), (0.3, 1.0, 3)):
            with self.subTest(tau=tau, horizon=horizon):
                cfg = MMConfig(p=2.0, tau=tau, horizon=horizon, refine_levels=3)
                study = mms.refine_study(exact_prox(), quadratic_oracle(), np.array([1.0]), cfg)
                self.assertEqual([len(traj) for traj in study.levels],
                                 [coarse_steps * 2 ** level + 1 for level in range(3)])
                for coarse, fine in zip(study.levels, study.levels[1:]):
                    np.testing.assert_allclose(coarse.t, fine.t[::2], atol=1e-12)
                self.assertEqual(len(study.distances), 2)

    def test_needs_two_levels(self):
        """Test that one level is not a study."""
        with self.assertRaises(InvalidInputError):
            mms.refine_study(exact_prox(), quadratic_oracle(), np.array([1.0]), MMConfig(refine_levels=1))


if __name__ == '__main__':
    unittest.main()
