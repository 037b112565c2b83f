"""Tests for Wasserstein flows on quantile functions."""

import math
import unittest

import numpy as np
from scipy.stats import norm

from gradflow import wflow1d
from gradflow.errors import ConvexityError, DensityError, EquilibriumError, InvalidInputError
from gradflow.models.certificates import Status
from gradflow.models.measures import FreeEnergySpec, Interaction, InternalEnergy, Potential, QuantileRepr


def truncated_exponential(g=1.0):
    """Entropy with V(x) = g x on [0, 1]; the equilibrium density is proportional to exp(-g x)."""
    return FreeEnergySpec(F=InternalEnergy.entropy(), V=Potential.linear(g, domain=(0.0, 1.0)),
                          name='truncated-exponential')


def exponential_quantiles(g, M):
    s = (np.arange(M) + 0.5) / M
    return -np.log1p(-s * (1.0 - math.exp(-g))) / g


class DistanceTestCase(unittest.TestCase):
    """Test W_p on quantile samples."""

    def test_shift(self):
        """Test that a shift by c is at distance |c| for every p."""
        X = QuantileRepr.gaussian(0.0, 1.0, 64)
        for p in (1.0, 2.0, 3.5):
            with self.subTest(p=p):
                self.assertAlmostEqual(wflow1d.wasserstein_p(X, X.shifted(0.3), p), 0.3)

    def test_metric_axioms(self):
        """Test exact symmetry and the triangle inequality on random triples."""
        rng = np.random.default_rng(17)
        for p in (1.0, 2.0, 3.5):
            for _ in range(25):
                X, Y, Z = (np.sort(rng.normal(rng.uniform(-2.0, 2.0), rng.uniform(0.1, 3.0), 64))
                           for _ in range(3))
                with self.subTest(p=p):
                    self.assertEqual(wflow1d.wasserstein_p(X, Y, p), wflow1d.wasserstein_p(Y, X, p))
                    self.assertLessEqual(wflow1d.wasserstein_p(X, Z, p),
                                         wflow1d.wasserstein_p(X, Y, p) + wflow1d.wasserstein_p(Y, Z, p) + 1e-12)

    def test_mismatch(self):
        """Test that sample counts must agree."""
        with self.assertRaises(InvalidInputError):
            wflow1d.wasserstein_p(QuantileRepr.gaussian(0.0, 1.0, 8), QuantileRepr.gaussian(0.0, 1.0, 16))

    def test_representation_checks(self):
        """Test that quantile samples must be nondecreasing and finite."""
        with self.assertRaises(InvalidInputError):
            QuantileRepr(np.array([1.0, 0.0]))
        with self.assertRaises(InvalidInputError):
            QuantileRepr(np.array([0.0, np.inf]))


class EnergyTestCase(unittest.TestCase):
    """Test the free energy and its Fisher information."""

    def test_outside_domain(self):
        """Test that leaving the domain of V costs +inf."""
        self.assertEqual(wflow1d.free_energy(truncated_exponential(), [-0.1, 0.5]), math.inf)

    def test_collapsed_gap(self):
        """Test that a vanishing gap cannot be turned into a density."""
        with self.assertRaises(DensityError):
            wflow1d.fisher_information(wflow1d.fokker_planck(), np.array([0.0, 0.0, 1.0]))

    def test_window_removes_edge_jump(self):
        """Test that the end quantiles carry the pressure jump and converge once windowed out."""
        spec = truncated_exponential()
        coarse = wflow1d.fisher_information(spec, exponential_quantiles(1.0, 64), window=1)
        fine = wflow1d.fisher_information(spec, exponential_quantiles(1.0, 256), window=1)
        raw = wflow1d.fisher_information(spec, exponential_quantiles(1.0, 64))
        self.assertGreater(raw.I, 100.0 * coarse.I)
        self.assertGreater(coarse.I / fine.I, 16.0)
        self.assertAlmostEqual(coarse.windowed_mass, 62 / 64)

    def test_window_bounds(self):
        """Test that the window must leave some quantiles."""
        with self.assertRaises(InvalidInputError):
            wflow1d.fisher_information(wflow1d.fokker_planck(), QuantileRepr.gaussian(0.0, 1.0, 8), window=4)


class JKOStepTestCase(unittest.TestCase):
    """Test single implicit steps."""

    def test_mean_contracts(self):
        """Test mean(Y) = mean(X)/(1 + kappa tau) for the Fokker-Planck energy."""
        spec = wflow1d.fokker_planck(kappa=1.0)
        Y = wflow1d.jko_step(spec, QuantileRepr.gaussian(2.0, 1.0, 256), 0.1)
        self.assertAlmostEqual(Y.mean(), 2.0 / 1.1, delta=1e-6)
        self.assertTrue(np.all(np.diff(Y.X) > 0))

    def test_energy_decreases(self):
        """Test that a step does not increase the energy."""
        spec = wflow1d.porous_medium()
        X = QuantileRepr.gaussian(1.0, 0.5, 128)
        Y = wflow1d.jko_step(spec, X, 0.05)
        self.assertLessEqual(wflow1d.free_energy(spec, Y), wflow1d.free_energy(spec, X))

    def test_bad_step(self):
        """Test that tau <= 0 is rejected."""
        with self.assertRaises(InvalidInputError):
            wflow1d.jko_step(wflow1d.fokker_planck(), QuantileRepr.gaussian(0.0, 1.0, 16), 0.0)


class EquilibriumTestCase(unittest.TestCase):
    """Test equilibrium solves."""

    @classmethod
    def setUpClass(cls):
        """Solve the Fokker-Planck equilibrium once."""
        cls.spec = wflow1d.fokker_planck()
        cls.nu = wflow1d.equilibrium_solve(cls.spec, M=256)

    def test_closed_form_start(self):
        """Test that polish=False returns the Gaussian midpoint quantiles."""
        nu = wflow1d.equilibrium_solve(self.spec, M=256, polish=False)
        np.testing.assert_allclose(nu.X, norm.ppf(nu.s), atol=1e-12)
        self.assertTrue(nu.meta['closed_form'])

    def test_polished_residual(self):
        """Test the acceptance residual and closeness to N(0, 1)."""
        self.assertLessEqual(self.nu.meta['residual'], 1e-6 * (1.0 + abs(self.nu.meta['energy'])))
        central = slice(13, 243)
        np.testing.assert_allclose(self.nu.X[central], norm.ppf(self.nu.s)[central], atol=1e-2)

    def test_stationary(self):
        """Test that a step from the equilibrium stays put."""
        Y = wflow1d.jko_step(self.spec, self.nu, 0.1)
        self.assertLessEqual(wflow1d.wasserstein_p(Y, self.nu), 1e-7)

    def test_porous_closed_form(self):
        """Test the Barenblatt-type profile of m = 2 in a unit well."""
        nu = wflow1d.equilibrium_solve(wflow1d.porous_medium(m=2.0, kappa=1.0), M=512, polish=False)
        C = (3.0 / (2.0 * math.sqrt(2.0))) ** (2.0 / 3.0)
        L = math.sqrt(2.0 * C)
        self.assertAlmostEqual(nu.meta['C'], C, places=10)
        self.assertAlmostEqual(nu.meta['support'][1], L, places=10)
        self.assertLess(nu.X[-1], L)
        self.assertGreater(nu.X[-1], 0.9 * L)
        self.assertAlmostEqual(nu.X[0], -nu.X[-1], places=9)

    def test_interaction(self):
        """Test that quadratic attraction tightens the Gaussian to variance 1/(kappa + k)."""
        nu = wflow1d.equilibrium_solve(wflow1d.drift_interaction(kappa=1.0, k=0.5), M=128)
        self.assertFalse(nu.meta['closed_form'])
        central = slice(7, 121)
        expected = norm.ppf(nu.s, scale=1.0 / math.sqrt(1.5))
        np.testing.assert_allclose(nu.X[central], expected[central], atol=2e-2)

    def test_needs_confinement(self):
        """Test that lam_V = 0 has no guaranteed equilibrium."""
        with self.assertRaises(ConvexityError):
            wflow1d.equilibrium_solve(truncated_exponential())

    def test_unknown_preset(self):
        """Test the preset registry."""
        with self.assertRaises(InvalidInputError):
            wflow1d.preset('heat')


class InequalityTestCase(unittest.TestCase):
    """Test the entropy-transport family at discrete measures."""

    @classmethod
    def setUpClass(cls):
        """Solve the Fokker-Planck equilibrium once."""
        cls.spec = wflow1d.fokker_planck()
        cls.nu = wflow1d.equilibrium_solve(cls.spec, M=256)

    def test_random_gaussians(self):
        """Test that every inequality holds at seeded random Gaussians."""
        rng = np.random.default_rng(42)
        for _ in range(8):
            mu = QuantileRepr.gaussian(rng.uniform(-3.0, 3.0), rng.uniform(0.3, 2.5), 256)
            audit = wflow1d.audit_inequalities(self.spec, mu, self.nu)
            with self.subTest(mean=mu.mean()):
                self.assertTrue(audit.passed, [r for r in audit.records if r.status is not Status.PASS])

    def test_generalized_at_lam_is_log_sobolev(self):
        """Test that the generalized inequality at lam_hat = lam_V is log-Sobolev."""
        audit = wflow1d.audit_inequalities(self.spec, QuantileRepr.gaussian(1.0, 0.7, 256), self.nu)
        generalized, log_sobolev = audit.get('generalized-lojasiewicz[0.5]'), audit.get('log-sobolev')
        self.assertEqual(generalized.rhs, log_sobolev.rhs)
        self.assertEqual(generalized.lhs, log_sobolev.lhs)
        self.assertIn('hwi', [r.name for r in audit.records])

    def test_reference_must_be_equilibrium(self):
        """Test that a non-stationary reference is refused."""
        with self.assertRaises(EquilibriumError):
            wflow1d.audit_inequalities(self.spec, self.nu, QuantileRepr.gaussian(2.0, 1.0, 256))

    def test_needs_convexity(self):
        """Test that an unconfined energy cannot be audited."""
        spec = FreeEnergySpec(F=InternalEnergy.entropy(), name='heat')
        with self.assertRaises(ConvexityError):
            wflow1d.audit_inequalities(spec, self.nu, self.nu)

    def test_convex_interaction_refused(self):
        """Test that an interaction with a positive modulus is refused."""
        W = Interaction('quadratic', W=lambda x: 0.5 * x ** 2, dW=lambda x: x, d2W=lambda x: np.ones_like(x), lam=1.0)
        spec = FreeEnergySpec(F=InternalEnergy.entropy(), V=Potential.quadratic(1.0), W=W)
        with self.assertRaises(ConvexityError):
            wflow1d.audit_inequalities(spec, self.nu, self.nu)


class FlowTestCase(unittest.TestCase):
    """Test JKO trajectories."""

    @classmethod
    def setUpClass(cls):
        """Run the Ornstein-Uhlenbeck flow from N(2, 1)."""
        cls.spec = wflow1d.fokker_planck()
        cls.nu = wflow1d.equilibrium_solve(cls.spec, M=512)
        cls.traj = wflow1d.run_wflow(cls.spec, QuantileRepr.gaussian(2.0, 1.0, 512), tau=0.01, horizon=1.0,
                                     equilibrium=cls.nu)

    def test_monotone_with_slopes(self):
        """Test nonincreasing energies and recorded slopes."""
        self.assertEqual(len(self.traj), 101)
        self.assertEqual(self.traj.energy_increases(0.0), [])
        self.assertTrue(self.traj.has_slopes())

    def test_ornstein_uhlenbeck(self):
        """Test W_2(mu(t), nu) against 2 exp(-t)."""
        distances = wflow1d.distances_to(self.traj, self.nu)
        expected = 2.0 * np.exp(-self.traj.t)
        np.testing.assert_allclose(distances, expected, rtol=0.03)

    def test_decay_audit(self):
        """Test the transport and envelope chains with the declared modulus."""
        audit = wflow1d.decay_audit(self.spec, self.traj, self.nu)
        self.assertEqual(audit.transport_status, Status.PASS)
        self.assertEqual(audit.envelope_status, Status.PASS)
        self.assertEqual(audit.violations, (0, 0))

    def test_misdeclared_modulus_fails(self):
        """Test that ten times the true modulus is caught."""
        audit = wflow1d.decay_audit(self.spec, self.traj, self.nu, lam=5.0)
        self.assertNotEqual((audit.transport_status, audit.envelope_status), (Status.PASS, Status.PASS))

    def test_snapshots(self):
        """Test the snapshot stride."""
        snaps = wflow1d.quantile_snapshots(self.traj, 25)
        self.assertEqual(len(snaps), 5)
        self.assertEqual(snaps[0][1].size, 512)
        with self.assertRaises(InvalidInputError):
            wflow1d.quantile_snapshots(self.traj, 0)


if __name__ == '__main__':
    unittest.main()
