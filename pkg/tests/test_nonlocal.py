import unittest

import numpy as np

from numerics.density import DensityContext, theta
from numerics.kernels import halfspace_mass, make_bump_kernel
from numerics.nonlocal_energy import (
    ResolutionError,
    build_stencil,
    convolve_direct,
    convolve_fft,
    eval_F_eps,
    evaluate_functional,
    required_resolution,
)
from numerics.profiles import builtin_profile
from numerics.shapes import Ball, Box, Slab, rasterize
from utils.data_structures import Domain, IndicatorField


class TestStencil(unittest.TestCase):

    def setUp(self):
        self.K = make_bump_kernel(2)
        self.dom = Domain(lower=(0.0, 0.0), upper=(1.0, 1.0), resolution=64)

    def test_unit_discrete_mass(self):
        st = build_stencil(self.K, 0.125, self.dom)
        self.assertEqual(st.radius, 8)
        self.assertEqual(st.weights.shape, (17, 17))
        self.assertAlmostEqual(float(st.weights.sum()), 1.0, delta=1e-14)
        self.assertAlmostEqual(st.raw_mass, 1.0, delta=1e-3)

    def test_symmetric(self):
        st = build_stencil(make_bump_kernel(2, [[1.5, 0.0], [0.0, 1.0]]), 0.125, self.dom)
        self.assertTrue(np.array_equal(st.weights, st.weights[::-1, ::-1]))

    def test_offsets_align_with_weights(self):
        st = build_stencil(self.K, 0.0625, self.dom)
        offsets = st.offsets()
        self.assertEqual(offsets.shape, (81, 2))
        center = np.nonzero(np.all(offsets == 0, axis=1))[0][0]
        self.assertEqual(st.weights.ravel()[center], st.weights.max())

    def test_resolution_gate(self):
        with self.assertRaises(ResolutionError) as ctx:
            build_stencil(self.K, 3.0 / 64.0, self.dom)
        self.assertEqual(ctx.exception.required_resolution, 86)
        self.assertEqual(required_resolution(self.dom, 3.0 / 64.0), 86)
        # exactly 4h is allowed
        self.assertEqual(build_stencil(self.K, 4.0 / 64.0, self.dom).radius, 4)

    def test_rejects_nonpositive_epsilon(self):
        with self.assertRaises(ValueError):
            build_stencil(self.K, 0.0, self.dom)


class TestConvolutions(unittest.TestCase):

    def setUp(self):
        self.K = make_bump_kernel(2)
        self.dom = Domain(lower=(0.0, 0.0), upper=(1.0, 1.0), resolution=64)
        self.st = build_stencil(self.K, 0.125, self.dom)

    def test_paths_agree_on_random_fields(self):
        rng = np.random.default_rng(3)
        for _ in range(3):
            field = IndicatorField(domain=self.dom, values=rng.integers(0, 2, size=self.dom.shape).astype(float))
            diff = np.max(np.abs(convolve_fft(field, self.st) - convolve_direct(field, self.st)))
            self.assertLessEqual(diff, 1e-10)

    def test_outside_domain_is_empty(self):
        field = IndicatorField(domain=self.dom, values=np.ones(self.dom.shape))
        conv = convolve_direct(field, self.st)
        np.testing.assert_allclose(conv[20:44, 20:44], 1.0, atol=1e-13)
        self.assertLess(conv[0, 0], 0.5)

    def test_flat_interface_matches_halfspace_mass(self):
        values = np.zeros(self.dom.shape)
        values[:32, :] = 1.0
        field = IndicatorField(domain=self.dom, values=values)
        conv = convolve_fft(field, self.st)
        # first complement row sees the kernel mass beyond half a voxel
        expected = halfspace_mass(self.K, [1.0, 0.0], (0.5 / 64.0) / 0.125)
        self.assertAlmostEqual(conv[32, 32], expected, delta=5e-3)
        complement = convolve_fft(IndicatorField(domain=self.dom, values=1.0 - values), self.st)
        self.assertAlmostEqual(conv[32, 32] + complement[32, 32], 1.0, delta=1e-12)

    def test_stencil_larger_than_grid(self):
        coarse = Domain(lower=(0.0, 0.0), upper=(1.0, 1.0), resolution=8)
        st = build_stencil(self.K, 1.0, coarse)
        field = IndicatorField(domain=coarse, values=np.zeros(coarse.shape))
        with self.assertRaises(ValueError):
            convolve_direct(field, st)


class TestFunctional(unittest.TestCase):

    def setUp(self):
        self.K = make_bump_kernel(2)
        self.f = builtin_profile("identity")
        self.dom = Domain(lower=(0.0, 0.0), upper=(1.0, 1.0), resolution=64)

    def test_empty_set_and_whole_domain(self):
        self.assertEqual(eval_F_eps(Ball(center=(3.0, 3.0), radius=0.5), 0.125, self.f, self.K, self.dom), 0.0)
        self.assertEqual(eval_F_eps(Box(lower=(0.0, 0.0), upper=(1.0, 1.0)), 0.125, self.f, self.K, self.dom), 0.0)

    def test_zero_profile(self):
        zero = builtin_profile("zero")
        self.assertEqual(eval_F_eps(Ball(center=(0.5, 0.5), radius=0.3), 0.125, zero, self.K, self.dom), 0.0)

    def test_flat_slab_close_to_limit(self):
        slab = Slab(normal=(1.0, 0.0), offset_low=0.25, offset_high=0.75)
        dom = self.dom.with_resolution(128)
        value = eval_F_eps(slab, 1.0 / 16.0, self.f, self.K, dom)
        reference = 2.0 * theta(DensityContext(self.K, self.f), [1.0, 0.0])
        self.assertLess(abs(value - reference) / reference, 0.05)

    def test_methods_agree(self):
        ball = Ball(center=(0.5, 0.5), radius=0.3)
        fft = evaluate_functional(ball, 0.125, self.f, self.K, self.dom, method="fft")
        direct = evaluate_functional(ball, 0.125, self.f, self.K, self.dom, method="direct")
        self.assertAlmostEqual(fft.value, direct.value, delta=1e-10 * direct.value)
        self.assertEqual(fft.stencil_radius, 8)
        self.assertGreater(fft.complement_voxels, 0)

    def test_precomputed_field(self):
        ball = Ball(center=(0.5, 0.5), radius=0.3)
        field = rasterize(ball, self.dom, 3)
        a = eval_F_eps(ball, 0.125, self.f, self.K, self.dom, field=field)
        b = eval_F_eps(ball, 0.125, self.f, self.K, self.dom, supersample=3)
        self.assertEqual(a, b)

    def test_even_supersample_rejected(self):
        ball = Ball(center=(0.5, 0.5), radius=0.3)
        with self.assertRaises(ValueError):
            eval_F_eps(ball, 0.125, self.f, self.K, self.dom, supersample=2)
        with self.assertRaises(ValueError):
            eval_F_eps(ball, 0.125, self.f, self.K, self.dom, field=rasterize(ball, self.dom, 4))

    def test_binary_ball_close_to_limit(self):
        ball = Ball(center=(0.5, 0.5), radius=0.3)
        reference = theta(DensityContext(self.K, self.f), [0.0, 1.0]) * 2.0 * np.pi * 0.3
        value = eval_F_eps(ball, 1.0 / 16.0, self.f, self.K, self.dom.with_resolution(128))
        self.assertLess(abs(value - reference) / reference, 0.02)

    def test_smaller_profile_gives_smaller_functional(self):
        # t^2 <= t on [0, 1], on the same raster and stencil
        power = builtin_profile("power", 2.0)
        aniso = make_bump_kernel(2, [[1.5, 0.0], [0.0, 1.0]])
        shapes = (Ball(center=(0.5, 0.5), radius=0.3), Box(lower=(0.2, 0.3), upper=(0.7, 0.6)),
                  Slab(normal=(0.6, 0.8), offset_low=0.3, offset_high=0.8))
        for K in (self.K, aniso):
            for shape in shapes:
                field = rasterize(shape, self.dom, 1)
                low = eval_F_eps(shape, 0.125, power, K, self.dom, field=field)
                high = eval_F_eps(shape, 0.125, self.f, K, self.dom, field=field)
                self.assertGreater(low, 0.0)
                self.assertLessEqual(low, high)

    def test_nonnegative_on_random_shapes(self):
        rng = np.random.default_rng(12)
        profiles = [builtin_profile(name, 2.0 if name == "power" else None)
                    for name in ("identity", "power", "expm1", "saturating")]
        for _ in range(12):
            if rng.random() < 0.5:
                shape = Ball(center=tuple(rng.uniform(0.0, 1.0, 2)), radius=float(rng.uniform(0.05, 0.6)))
            else:
                corners = np.sort(rng.uniform(-0.2, 1.2, size=(2, 2)), axis=0)
                shape = Box(lower=tuple(corners[0]), upper=tuple(corners[1]))
            for f in profiles:
                value = eval_F_eps(shape, 0.125, f, self.K, self.dom)
                self.assertGreaterEqual(value, 0.0)

    def test_random_fields_nonnegative(self):
        rng = np.random.default_rng(13)
        for _ in range(5):
            field = IndicatorField(domain=self.dom, values=rng.integers(0, 2, size=self.dom.shape).astype(float))
            value = eval_F_eps(None, 0.125, self.f, self.K, self.dom, field=field)
            self.assertGreaterEqual(value, 0.0)

    def test_resolution_error(self):
        with self.assertRaises(ResolutionError):
            eval_F_eps(Ball(center=(0.5, 0.5), radius=0.3), 0.03, self.f, self.K, self.dom)

    def test_unknown_method(self):
        with self.assertRaises(ValueError):
            evaluate_functional(Ball(center=(0.5, 0.5), radius=0.3), 0.125, self.f, self.K, self.dom, method="sparse")


if __name__ == '__main__':
    unittest.main()
