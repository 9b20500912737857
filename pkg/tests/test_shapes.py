import unittest

import numpy as np

from numerics.shapes import (
    Ball,
    Box,
    Graph,
    Slab,
    boundary_quadrature,
    constant_height,
    cosine_perturbation,
    indicator,
    rasterize,
    shape_from_spec,
    sine_height,
)
from utils.data_structures import Domain, ShapeSpec

UNIT = Domain(lower=(0.0, 0.0), upper=(1.0, 1.0), resolution=64)


class TestIndicators(unittest.TestCase):

    def test_ball_is_closed(self):
        ball = Ball(center=(0.5, 0.5), radius=0.25)
        self.assertEqual(indicator(ball, [0.75, 0.5]), 1)
        self.assertEqual(indicator(ball, [0.76, 0.5]), 0)

    def test_box_and_slab(self):
        box = Box(lower=(0.25, 0.25), upper=(0.75, 0.75))
        self.assertEqual(indicator(box, [0.25, 0.75]), 1)
        self.assertEqual(indicator(box, [0.2, 0.5]), 0)
        slab = Slab(normal=(1.0, 0.0), offset_low=0.25, offset_high=0.75)
        self.assertEqual(indicator(slab, [0.5, 10.0]), 1)
        self.assertEqual(indicator(slab, [0.8, 0.5]), 0)

    def test_graph(self):
        graph = Graph(base_lower=(0.0,), base_upper=(1.0,), height=constant_height(0.5))
        self.assertEqual(indicator(graph, [0.3, 0.5]), 1)
        self.assertEqual(indicator(graph, [0.3, 0.51]), 0)
        self.assertEqual(indicator(graph, [1.2, 0.1]), 0)

    def test_invalid_shapes(self):
        with self.assertRaises(ValueError):
            Ball(center=(0.0, 0.0), radius=0.0)
        with self.assertRaises(ValueError):
            Box(lower=(0.5, 0.0), upper=(0.5, 1.0))
        with self.assertRaises(ValueError):
            Slab(normal=(1.0, 1.0), offset_low=0.0, offset_high=1.0)


class TestRasterize(unittest.TestCase):

    def test_box_on_voxel_edges_is_exact(self):
        box = Box(lower=(0.25, 0.25), upper=(0.75, 0.5))
        field = rasterize(box, UNIT, supersample=2)
        self.assertEqual(field.values.shape, (64, 64))
        self.assertAlmostEqual(field.volume(), 0.125, delta=1e-14)
        self.assertTrue(set(np.unique(field.values)) <= {0.0, 1.0})

    def test_ball_volume(self):
        ball = Ball(center=(0.5, 0.5), radius=0.3)
        field = rasterize(ball, UNIT.with_resolution(256), supersample=4)
        self.assertAlmostEqual(field.volume(), ball.volume(), delta=1e-3)

    def test_fractions(self):
        field = rasterize(Ball(center=(0.5, 0.5), radius=0.3), UNIT, supersample=3)
        self.assertTrue(np.all((field.values >= 0.0) & (field.values <= 1.0)))
        partial = (field.values > 0.0) & (field.values < 1.0)
        self.assertTrue(np.any(partial))
        np.testing.assert_allclose(field.values * 9, np.round(field.values * 9), atol=1e-12)

    def test_3d(self):
        dom = Domain(lower=(0.0, 0.0, 0.0), upper=(1.0, 1.0, 1.0), resolution=16)
        field = rasterize(Box(lower=(0.25, 0.25, 0.25), upper=(0.75, 0.75, 0.75)), dom, supersample=2)
        self.assertAlmostEqual(field.volume(), 0.125, delta=1e-14)

    def test_dimension_mismatch(self):
        with self.assertRaises(ValueError):
            rasterize(Ball(center=(0.5, 0.5, 0.5), radius=0.2), UNIT)


class TestBoundaryQuadrature(unittest.TestCase):

    def test_circle_length(self):
        bq = boundary_quadrature(Ball(center=(0.5, 0.5), radius=0.3), UNIT, 256)
        self.assertAlmostEqual(bq.total_weight, 2.0 * np.pi * 0.3, delta=1e-10)
        np.testing.assert_allclose(np.linalg.norm(bq.normals, axis=1), 1.0, atol=1e-14)
        self.assertEqual(bq.flags, [])

    def test_sphere_area(self):
        dom = Domain(lower=(0.0, 0.0, 0.0), upper=(1.0, 1.0, 1.0), resolution=16)
        bq = boundary_quadrature(Ball(center=(0.5, 0.5, 0.5), radius=0.25), dom, 32)
        self.assertAlmostEqual(bq.total_weight, 4.0 * np.pi * 0.25 ** 2, delta=1e-10)

    def test_coarse_flag(self):
        bq = boundary_quadrature(Ball(center=(0.5, 0.5), radius=0.3), UNIT, 16)
        self.assertIn("coarse-order", bq.flags)

    def test_ball_clipped_by_domain(self):
        bq = boundary_quadrature(Ball(center=(0.0, 0.5), radius=0.25), UNIT, 256)
        self.assertIn("clipped", bq.flags)
        self.assertAlmostEqual(bq.total_weight, np.pi * 0.25, delta=0.02)

    def test_box_perimeter_and_normals(self):
        bq = boundary_quadrature(Box(lower=(0.25, 0.3), upper=(0.75, 0.7)), UNIT, 8)
        self.assertAlmostEqual(bq.total_weight, 2 * 0.5 + 2 * 0.4, delta=1e-13)
        left = bq.points[:, 0] == 0.25
        np.testing.assert_array_equal(bq.normals[left], np.tile([-1.0, 0.0], (int(left.sum()), 1)))

    def test_box_filling_domain_has_no_boundary(self):
        bq = boundary_quadrature(Box(lower=(0.0, 0.0), upper=(1.0, 1.0)), UNIT, 8)
        self.assertEqual(len(bq), 0)
        self.assertIn("clipped", bq.flags)

    def test_slab_faces(self):
        bq = boundary_quadrature(Slab(normal=(1.0, 0.0), offset_low=0.25, offset_high=0.75), UNIT, 8)
        self.assertAlmostEqual(bq.total_weight, 2.0, delta=1e-13)

    def test_oblique_slab_in_2d(self):
        n = (np.sqrt(0.5), np.sqrt(0.5))
        bq = boundary_quadrature(Slab(normal=n, offset_low=0.5, offset_high=0.9), UNIT, 8)
        # chords of {x + y = c} in the unit square: sqrt(2) c for c <= 1, sqrt(2)(2 - c) beyond
        c_low, c_high = 0.5 * np.sqrt(2.0), 0.9 * np.sqrt(2.0)
        expected = np.sqrt(2.0) * c_low + np.sqrt(2.0) * (2.0 - c_high)
        self.assertAlmostEqual(bq.total_weight, expected, delta=1e-12)

    def test_sine_graph_arclength(self):
        graph = Graph(base_lower=(0.0,), base_upper=(1.0,), height=sine_height(0.5, 0.1, 1.0))
        bq = boundary_quadrature(graph, UNIT, 256)
        x = np.linspace(0.0, 1.0, 10001)
        integrand = np.sqrt(1.0 + (0.2 * np.pi * np.cos(2.0 * np.pi * x)) ** 2)
        expected = float(np.sum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(x)))
        self.assertAlmostEqual(bq.total_weight, expected, delta=1e-10)
        self.assertTrue(np.all(bq.normals[:, 1] > 0.0))

    def test_graph_with_floor_and_sides(self):
        dom = Domain(lower=(-1.0, -1.0), upper=(2.0, 2.0), resolution=16)
        graph = Graph(base_lower=(0.0,), base_upper=(1.0,), height=constant_height(0.5), graph_only=False)
        bq = boundary_quadrature(graph, dom, 16)
        self.assertAlmostEqual(bq.total_weight, 1.0 + 1.0 + 0.5 + 0.5, delta=1e-13)

    def test_rejects_low_order(self):
        with self.assertRaises(ValueError):
            boundary_quadrature(Ball(center=(0.5, 0.5), radius=0.3), UNIT, 2)


class TestHeightMaps(unittest.TestCase):

    def test_perturbation(self):
        graph = Graph(base_lower=(0.0,), base_upper=(1.0,), height=sine_height(0.5, 0.1, 1.0))
        bumped = graph.perturbed(0.05, cosine_perturbation(2.0))
        x = np.array([[0.0], [0.125]])
        np.testing.assert_allclose(bumped.height.value(x), [0.55, 0.5 + 0.1 * np.sin(np.pi / 4.0)], atol=1e-15)
        np.testing.assert_allclose(bumped.height.gradient(x)[:, 0],
                                   [0.2 * np.pi, 0.2 * np.pi * np.cos(np.pi / 4.0) - 0.05 * 4.0 * np.pi],
                                   atol=1e-13)

    def test_graph_volume(self):
        graph = Graph(base_lower=(0.0,), base_upper=(1.0,), height=sine_height(0.5, 0.1, 1.0))
        self.assertAlmostEqual(graph.volume(), 0.5, delta=1e-14)


class TestShapeFromSpec(unittest.TestCase):

    def test_kinds(self):
        self.assertIsInstance(shape_from_spec(ShapeSpec(kind="ball"), 2), Ball)
        self.assertIsInstance(shape_from_spec(ShapeSpec(kind="box"), 2), Box)
        self.assertIsInstance(shape_from_spec(ShapeSpec(kind="slab"), 2), Slab)
        graph = shape_from_spec(ShapeSpec(kind="graph", height="constant", base=0.4), 2)
        self.assertIsInstance(graph, Graph)
        self.assertAlmostEqual(float(graph.height.value(np.array([[0.3]]))[0]), 0.4)

    def test_wrong_length(self):
        with self.assertRaises(ValueError):
            shape_from_spec(ShapeSpec(kind="ball"), 3)


if __name__ == '__main__':
    unittest.main()
