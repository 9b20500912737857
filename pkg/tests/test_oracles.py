import os
import unittest

import numpy as np

from config import Config
from lab import oracles
from numerics.density import DensityContext, closed_form_c_NG, theta
from numerics.kernels import (
    absolute_moment_along,
    first_radial_moment,
    halfspace_mass,
    make_bump_kernel,
    slice_integral,
)
from numerics.profiles import builtin_profile

ANISO = [[1.5, 0.0], [0.0, 1.0]]
SIGMAS = Config.ORACLE_SIGMA
GRID_SAMPLES = 10_000_000 if os.getenv("PERIMETER_LAB_SLOW") else 1_000_000


class TestKernelOracles(unittest.TestCase):
    """Quadrature values against fixed-seed Monte Carlo estimates."""

    def setUp(self):
        self.radial = make_bump_kernel(2)
        self.aniso = make_bump_kernel(2, ANISO)

    def assertAgrees(self, estimate, value):
        self.assertTrue(
            estimate.agrees_with(value, SIGMAS),
            f"{estimate.quantity}: oracle {estimate.estimate:.8g} +- {estimate.standard_error:.2e} vs {value:.8g}",
        )

    def test_halfspace(self):
        for K, nu, t in ((self.radial, np.array([0.6, 0.8]), 0.3),
                         (self.aniso, np.array([1.0, 0.0]), 0.5),
                         (self.aniso, np.array([0.0, 1.0]), 0.2)):
            estimate = oracles.mc_halfspace_oracle(K, nu, t, n=200_000, seed=101)
            self.assertAgrees(estimate, halfspace_mass(K, nu, t))

    def test_halfspace_grid(self):
        # 10 directions x 2 kernels; t stays inside the anisotropic extent 1/1.5
        angles = np.linspace(0.0, np.pi, 10, endpoint=False)
        offsets = np.linspace(0.05, 0.55, 10)
        pairs = [(K, np.array([np.cos(a), np.sin(a)]), t)
                 for K in (self.radial, self.aniso) for a, t in zip(angles, offsets)]
        self.assertEqual(len(pairs), 20)
        for i, (K, nu, t) in enumerate(pairs):
            with self.subTest(radial=K.is_radial, nu=nu.tolist(), t=t):
                estimate = oracles.mc_halfspace_oracle(K, nu, t, n=GRID_SAMPLES, seed=Config.ORACLE_SEED + i)
                self.assertAgrees(estimate, halfspace_mass(K, nu, t))

    def test_halfspace_limits(self):
        nu = np.array([0.6, 0.8])
        self.assertAgrees(oracles.mc_halfspace_oracle(self.aniso, nu, 0.0, n=100_000, seed=1), 0.5)
        edge = oracles.mc_halfspace_oracle(self.aniso, nu, 1.0, n=20_000, seed=1)
        self.assertEqual(edge.estimate, 0.0)
        self.assertEqual(edge.standard_error, 0.0)

    def test_halfspace_3d(self):
        K = make_bump_kernel(3)
        nu = np.array([0.0, 0.6, 0.8])
        estimate = oracles.mc_halfspace_oracle(K, nu, 0.25, n=200_000, seed=5)
        self.assertAgrees(estimate, halfspace_mass(K, nu, 0.25))

    def test_mass(self):
        for K in (self.radial, self.aniso):
            self.assertAgrees(oracles.mc_mass_oracle(K, n=200_000, seed=3), 1.0)

    def test_moment(self):
        nu = np.array([0.6, 0.8])
        estimate = oracles.mc_moment_oracle(self.aniso, nu, n=200_000, seed=9)
        self.assertAgrees(estimate, absolute_moment_along(self.aniso, nu))

    def test_slice(self):
        estimate = oracles.mc_slice_oracle(self.aniso, [1.0, 0.0], 0.5, n=200_000, seed=17)
        self.assertAgrees(estimate, slice_integral(self.aniso, [1.0, 0.0], 0.5))
        estimate = oracles.mc_slice_oracle(self.radial, [0.6, 0.8], 0.1, n=200_000, seed=17)
        self.assertAgrees(estimate, slice_integral(self.radial, [0.6, 0.8], 0.1))

    def test_theta(self):
        ctx = DensityContext(self.aniso, builtin_profile("expm1"))
        nu = np.array([0.6, 0.8])
        estimate = oracles.mc_theta_oracle(ctx, nu, n=200_000, seed=23)
        self.assertAgrees(estimate, theta(ctx, nu))

    def test_theta_closed_forms(self):
        zero = oracles.mc_theta_oracle(DensityContext(self.aniso, builtin_profile("zero")), [1.0, 0.0],
                                       n=20_000, seed=2)
        self.assertEqual(zero.estimate, 0.0)
        radial = DensityContext(self.radial, builtin_profile("identity"))
        estimate = oracles.mc_theta_oracle(radial, [0.0, 1.0], n=200_000, seed=2)
        self.assertAgrees(estimate, closed_form_c_NG(self.radial))

    def test_radial_moment(self):
        estimate = oracles.radial_moment_oracle(self.radial)
        self.assertAlmostEqual(estimate.estimate, first_radial_moment(self.radial), delta=1e-8)
        self.assertGreater(estimate.standard_error, 0.0)
        self.assertIn("--quantity radial_moment", estimate.command)
        with self.assertRaises(ValueError):
            oracles.radial_moment_oracle(self.aniso)


class TestOracleContract(unittest.TestCase):

    def setUp(self):
        self.K = make_bump_kernel(2)

    def test_same_seed_same_estimate(self):
        a = oracles.mc_halfspace_oracle(self.K, [0.0, 1.0], 0.2, n=20_000, seed=42)
        b = oracles.mc_halfspace_oracle(self.K, [0.0, 1.0], 0.2, n=20_000, seed=42)
        self.assertEqual(a.estimate, b.estimate)
        self.assertEqual(a.standard_error, b.standard_error)

    def test_records_reproduction_command(self):
        estimate = oracles.mc_halfspace_oracle(self.K, [0.0, 1.0], 0.2, n=20_000, seed=42)
        self.assertEqual(estimate.samples, 20_000)
        self.assertEqual(estimate.seed, 42)
        self.assertIn("--quantity halfspace", estimate.command)
        self.assertIn("--seed 42", estimate.command)
        self.assertIn("--samples 20000", estimate.command)

    def test_minimum_samples(self):
        with self.assertRaises(ValueError):
            oracles.mc_mass_oracle(self.K, n=100)

    def test_ball_samples_are_inside(self):
        rng = np.random.default_rng(0)
        batches = list(oracles.ball_samples(rng, 3, 5000, batch=2000))
        points = np.concatenate(batches)
        self.assertEqual(points.shape, (5000, 3))
        self.assertTrue(np.all(np.sum(points ** 2, axis=1) < 1.0))


if __name__ == '__main__':
    unittest.main()
