"""Tests for total-variation flows and their extinction audit."""

import math
import unittest

import numpy as np

from gradflow import tvflow
from gradflow.errors import ExtinctionNotReachedError, InvalidInputError
from gradflow.models.certificates import Status
from gradflow.models.grid import BoundaryCondition, GridFunction

DIRICHLET, NEUMANN = BoundaryCondition.DIRICHLET, BoundaryCondition.NEUMANN


class EnergyTestCase(unittest.TestCase):
    """Test the discrete total variation."""

    def test_box_carries_its_trace(self):
        """Test that a Dirichlet box of height a has TV 2a."""
        self.assertAlmostEqual(tvflow.tv_energy(tvflow.box_datum(64, 16, 48, a=1.5)), 3.0)

    def test_neumann_step(self):
        """Test that a Neumann step has a single jump."""
        self.assertAlmostEqual(tvflow.tv_energy(tvflow.box_datum(64, 0, 32, bc=NEUMANN)), 1.0)

    def test_constants_are_free_under_neumann(self):
        """Test that constants have zero Neumann variation."""
        self.assertEqual(tvflow.tv_energy(GridFunction(np.full((8, 8), 3.0), 1 / 8, NEUMANN)), 0.0)

    def test_adjoint(self):
        """Test <G u, p> = <u, G^T p> for both boundary conditions."""
        rng = np.random.default_rng(11)
        u = rng.standard_normal((6, 5))
        for bc in (DIRICHLET, NEUMANN):
            with self.subTest(bc=bc):
                g = tvflow.forward_gradient(u, bc)
                p = rng.standard_normal(g.shape)
                self.assertAlmostEqual(float(np.sum(g * p)), float(np.sum(u * tvflow.gradient_adjoint(p, bc))))


class Prox1DTestCase(unittest.TestCase):
    """Test the exact 1D proximal map."""

    def test_box_shrinks(self):
        """Test that an interior box of width w drops by 2 tau / w."""
        u = tvflow.box_datum(64, 16, 48)
        w = tvflow.tv_prox_1d(u, 0.05)
        np.testing.assert_allclose(w.values[16:48], 0.8, atol=1e-10)
        np.testing.assert_allclose(w.values[:16], 0.0, atol=1e-12)
        np.testing.assert_allclose(w.values[48:], 0.0, atol=1e-12)

    def test_large_step_extinguishes(self):
        """Test that a step beyond w / 2 sends the box to zero."""
        w = tvflow.tv_prox_1d(tvflow.box_datum(64, 16, 48), 1.0)
        np.testing.assert_allclose(w.values, 0.0, atol=1e-12)

    def test_neumann_mean(self):
        """Test that the Neumann proximal map preserves the mean."""
        rng = np.random.default_rng(5)
        u = GridFunction(rng.standard_normal(50), 1 / 50, NEUMANN)
        w = tvflow.tv_prox_1d(u, 0.02)
        self.assertAlmostEqual(w.mean(), u.mean(), places=12)
        self.assertLess(tvflow.tv_energy(w), tvflow.tv_energy(u))

    def test_nonexpansive(self):
        """Test |prox(u) - prox(w)| <= |u - w| in L2 on random pairs."""
        rng = np.random.default_rng(23)
        for bc in (DIRICHLET, NEUMANN):
            for _ in range(20):
                u = GridFunction(rng.standard_normal(40), 1 / 40, bc)
                w = GridFunction(rng.standard_normal(40), 1 / 40, bc)
                tau = rng.uniform(0.001, 0.1)
                with self.subTest(bc=bc, tau=tau):
                    gap = tvflow.tv_prox_1d(u, tau).distance(tvflow.tv_prox_1d(w, tau))
                    self.assertLessEqual(gap, u.distance(w) + 1e-10)

    def test_taut_string_tube(self):
        """Test that the cumulative residual stays in the tube and touches it at every jump."""
        rng = np.random.default_rng(31)
        u = GridFunction(np.cumsum(rng.standard_normal(60)), 1 / 60, NEUMANN)
        tau = 0.05
        lam = tau / u.h
        w = tvflow.tv_prox_1d(u, tau)
        offset = np.cumsum(u.values - w.values)
        self.assertAlmostEqual(offset[-1], 0.0, places=9)
        self.assertTrue(np.all(np.abs(offset) <= lam * (1.0 + 1e-9)))
        jumps = np.diff(w.values)
        on_jump = np.abs(jumps) > 1e-7
        self.assertTrue(np.any(on_jump))
        np.testing.assert_allclose(offset[:-1][on_jump], -lam * np.sign(jumps[on_jump]), atol=1e-8 * lam)

    def test_zero_step(self):
        """Test that tau = 0 is the identity."""
        u = tvflow.box_datum(16, 4, 12)
        np.testing.assert_allclose(tvflow.tv_prox_1d(u, 0.0).values, u.values)

    def test_rejects_2d(self):
        """Test the dimension check."""
        with self.assertRaises(InvalidInputError):
            tvflow.tv_prox_1d(tvflow.disc_datum(8), 0.1)

    def test_negative_step(self):
        """Test that tau < 0 is rejected."""
        with self.assertRaises(InvalidInputError):
            tvflow.tv_prox_1d(tvflow.box_datum(16, 4, 12), -0.1)


class Prox2DTestCase(unittest.TestCase):
    """Test the accelerated dual projection."""

    def _objective(self, w, u, tau):
        return 0.5 * w.distance(u) ** 2 + tau * tvflow.tv_energy(w)

    def test_objective_decreases(self):
        """Test that the proximal point beats staying put."""
        u = tvflow.disc_datum(32)
        w, info = tvflow.tv_prox_2d(u, 0.01)
        self.assertLess(self._objective(w, u, 0.01), 0.01 * tvflow.tv_energy(u))
        self.assertEqual(info.method, 'fista')
        self.assertGreater(info.iterations, 0)

    def test_neumann_mean(self):
        """Test mean conservation under Neumann conditions."""
        rng = np.random.default_rng(2)
        u = GridFunction(rng.random((16, 16)), 1 / 16, NEUMANN)
        w, _ = tvflow.tv_prox_2d(u, 0.01)
        self.assertAlmostEqual(w.mean(), u.mean(), places=12)

    def test_iteration_cap_warns(self):
        """Test that a capped solve reports WARN."""
        _, info = tvflow.tv_prox_2d(tvflow.disc_datum(32), 0.05, max_iter=1, tol=1e-14)
        self.assertEqual(info.status, Status.WARN)


class FlowTestCase(unittest.TestCase):
    """Test whole flows against closed-form extinction times."""

    def test_dirichlet_box(self):
        """Test T* = 1/4 for a unit box of width 1/2 and its audit."""
        inst = tvflow.make_instance(tvflow.box_datum(64, 16, 48), name='box')
        self.assertAlmostEqual(inst.constant, 0.5)
        result = tvflow.run_tv_flow(inst, tau=1 / 64, horizon=0.5)
        self.assertTrue(result.reached)
        self.assertAlmostEqual(result.t_star, 0.25, delta=1 / 64)
        self.assertEqual(result.trajectory.energy_increases(0.0), [])
        audit = tvflow.extinction_audit(inst, result)
        self.assertEqual(audit.status, Status.PASS)
        self.assertEqual(audit.violations, [])
        self.assertAlmostEqual(audit.bound, 0.25, delta=2 / 64)
        self.assertGreater(audit.r_squared, 0.999)
        self.assertLess(audit.slope, 0.0)

    def test_neumann_half(self):
        """Test that a half step relaxes to its mean by t = 1/4."""
        inst = tvflow.make_instance(tvflow.box_datum(64, 0, 32, bc=NEUMANN), name='half')
        result = tvflow.run_tv_flow(inst, tau=0.01, horizon=0.4)
        self.assertAlmostEqual(result.t_star, 0.25, delta=0.01)
        self.assertLessEqual(result.mean_drift, 1e-12)
        np.testing.assert_allclose(result.trajectory.states[-1].values, 0.5, atol=1e-9)
        self.assertEqual(tvflow.extinction_audit(inst, result).status, Status.PASS)

    def test_snapshots(self):
        """Test that every k-th field is kept."""
        inst = tvflow.make_instance(tvflow.box_datum(32, 8, 24), name='box')
        result = tvflow.run_tv_flow(inst, tau=1 / 32, horizon=0.5, snapshot_every=4)
        self.assertEqual([t for t, _ in result.snapshots], [k * 4 / 32 for k in range(5)])

    def test_not_reached(self):
        """Test that the audit refuses a flow that never went extinct."""
        inst = tvflow.make_instance(tvflow.box_datum(64, 16, 48), name='box')
        result = tvflow.run_tv_flow(inst, tau=1 / 64, horizon=0.05)
        self.assertFalse(result.reached)
        with self.assertRaises(ExtinctionNotReachedError):
            tvflow.extinction_audit(inst, result)

    def test_disc_extinction(self):
        """Test a small disc against the sharp planar bound."""
        inst = tvflow.make_instance(tvflow.disc_datum(32), name='disc', params={'a': 1.0, 'R': 0.25})
        result = tvflow.run_tv_flow(inst, tau=0.0025, horizon=0.2)
        self.assertTrue(result.reached)
        self.assertLess(result.t_star, 0.5 * 0.25 + 0.02)
        self.assertEqual(tvflow.extinction_audit(inst, result).status, Status.PASS)


class ConstantsTestCase(unittest.TestCase):
    """Test Sobolev and Poincaré-Sobolev constants."""

    def test_dirichlet_1d(self):
        """Test S_1 |Omega|^(1/2) = 1/2 on the unit interval."""
        self.assertAlmostEqual(tvflow.sobolev_1d_dirichlet(16, 1 / 16), 0.5)

    def test_neumann_1d(self):
        """Test the step sweep on 16 cells."""
        self.assertAlmostEqual(tvflow.poincare_sobolev_1d_neumann(16, 1 / 16), 15 / 16)

    def test_planar(self):
        """Test that 2D Dirichlet instances use the sharp constant."""
        constant, source = tvflow.instance_constant(tvflow.disc_datum(8))
        self.assertAlmostEqual(constant, 1.0 / math.sqrt(2.0 * math.pi))
        self.assertIn('isoperimetric', source)

    def test_planar_neumann_positive(self):
        """Test that the 2D Neumann sweep gives a positive estimate."""
        self.assertGreater(tvflow.poincare_sobolev_2d_neumann((8, 8), 1 / 8), 0.0)

    def test_dissipation_slopes(self):
        """Test sqrt(-dE/dt) from energy drops."""
        np.testing.assert_allclose(tvflow.dissipation_slopes(np.array([3.0, 2.0, 0.0]), 1.0),
                                   [1.0, 1.0, math.sqrt(2.0)])

    def test_box_bounds(self):
        """Test that boxes must fit in the grid."""
        with self.assertRaises(InvalidInputError):
            tvflow.box_datum(8, 4, 12)

    def test_default_tau(self):
        """Test the disc step rule min(h, a R / 100)."""
        inst = tvflow.make_instance(tvflow.disc_datum(32), params={'a': 1.0, 'R': 0.25})
        self.assertAlmostEqual(tvflow.default_tau(inst), 0.0025)


if __name__ == '__main__':
    unittest.main()
