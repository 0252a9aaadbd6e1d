# -*- coding: utf-8 -*-
'''
Unit tests for lattices, stencils, quadrature and grid codecs.
'''
import math

from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings as hypothesis_settings, strategies as st
import numpy as np

from .formats import from_binary, from_csv, to_binary, to_csv
from .grid import (
    BoundaryPolicy,
    Grid,
    GridError,
    GridFunction,
    MultiIndex,
    finite_diff,
    integrate,
    pointwise_add,
    pointwise_mul,
    sample,
    scalar_mul,
    sup_norm,
)


class GridTest(SimpleTestCase):

    def test_symmetric_grid(self):
        grid = Grid.symmetric(8, 1/64)
        self.assertEqual(grid.shape, (1025,))
        self.assertEqual(grid.axes[0][512], 0.0)
        self.assertEqual(grid.axes[0][0], -8.0)
        self.assertTrue(grid.is_symmetric)

    def test_grid_validation(self):
        with self.assertRaises(GridError):
            Grid((-1.0,), (1.0,), (0.3,))
        with self.assertRaises(GridError):
            Grid((0.5,), (1.0,), (0.25,))
        with self.assertRaises(GridError):
            Grid((-1.0,), (1.0,), (0.0,))
        with self.assertRaises(GridError):
            Grid.symmetric(1, 0.5, dim=4)

    def test_shrink_and_restrict(self):
        grid = Grid.symmetric(4, 1)
        sub = grid.shrink((2,))
        self.assertEqual(sub.lower, (-2.0,))
        f = sample(lambda x: x, grid)
        np.testing.assert_array_equal(f.restrict(sub).values, [-2, -1, 0, 1, 2])

    def test_multi_index(self):
        self.assertEqual(MultiIndex.coerce(2, dim=2).orders, (2, 0))
        self.assertEqual([str(m) for m in MultiIndex.up_to(2, 1)], ["(0,0)", "(0,1)", "(1,0)"])
        with self.assertRaises(GridError):
            MultiIndex((5,))
        with override_settings(MAX_DERIVATIVE_ORDER=2):
            with self.assertRaises(GridError):
                MultiIndex((1, 2))


class SampleTest(SimpleTestCase):

    def test_zero(self):
        f = sample(lambda x: 0, Grid.symmetric(3, 0.5))
        self.assertTrue(np.all(f.values == 0))
        self.assertEqual(f.values.shape, (13,))

    def test_constant(self):
        f = sample(lambda x: 1, Grid.symmetric(1, 1))
        np.testing.assert_array_equal(f.values, [1, 1, 1])

    def test_direct_evaluation(self):
        f = sample(lambda x: x**2, Grid.symmetric(2, 1))
        np.testing.assert_array_equal(f.values, [4, 1, 0, 1, 4])

    def test_non_finite_names_coordinate(self):
        with self.assertRaises(GridError) as cm:
            sample(lambda x: 1 / x, Grid.symmetric(2, 1))
        self.assertIn("(0)", str(cm.exception))

    def test_values_are_immutable(self):
        f = sample(lambda x: x, Grid.symmetric(1, 1))
        with self.assertRaises(ValueError):
            f.values[0] = 5


class FiniteDiffTest(SimpleTestCase):

    def test_constant(self):
        grid = Grid.symmetric(4, 1)
        d = finite_diff(sample(lambda x: 3.0, grid), 1)
        self.assertEqual(d.grid, grid.shrink((2,)))
        self.assertTrue(np.all(d.values == 0))

    def test_linear_exact(self):
        d = finite_diff(sample(lambda x: x, Grid.symmetric(4, 1)), MultiIndex((1,)))
        np.testing.assert_array_equal(d.values, np.ones(5))

    def test_quadratic_exact(self):
        d = finite_diff(sample(lambda x: x**2, Grid.symmetric(4, 1)), MultiIndex((2,)))
        np.testing.assert_allclose(d.values, 2.0, rtol=1e-12)

    def test_quartic_polynomial_exact(self):
        grid = Grid.symmetric(3, 0.5)
        f = sample(lambda x: x**4 - 3 * x**3 + x, grid)
        d = finite_diff(f, 1)
        x = d.grid.axes[0]
        np.testing.assert_allclose(d.values, 4 * x**3 - 9 * x**2 + 1, rtol=1e-12, atol=1e-10)

    def test_higher_orders(self):
        grid = Grid.symmetric(4, 0.5)
        d3 = finite_diff(sample(lambda x: x**3, grid), 3)
        d4 = finite_diff(sample(lambda x: x**4, grid), 4)
        np.testing.assert_allclose(d3.values, 6.0, rtol=1e-10)
        np.testing.assert_allclose(d4.values, 24.0, rtol=1e-10)
        self.assertEqual(d4.grid, grid.shrink((3,)))

    def test_mixed_derivative(self):
        grid = Grid.symmetric((3, 3), (0.5, 0.5))
        d = finite_diff(sample(lambda x, y: x**2 * y, grid), (1, 1))
        x, _y = d.grid.coordinates()
        np.testing.assert_allclose(d.values, 2 * x, rtol=1e-12, atol=1e-12)
        self.assertEqual(d.grid, grid.shrink((2, 2)))

    def test_one_sided_keeps_grid(self):
        grid = Grid.symmetric(2, 0.25)
        f = sample(lambda x: x**3, grid, BoundaryPolicy.ONE_SIDED)
        d = finite_diff(f, 1)
        self.assertEqual(d.grid, grid)
        np.testing.assert_allclose(d.values, 3 * grid.axes[0]**2, atol=1e-8)

    def test_stencil_too_large(self):
        with self.assertRaises(GridError) as cm:
            finite_diff(sample(lambda x: x, Grid.symmetric(1, 1)), 1)
        self.assertIn("axis 0", str(cm.exception))

    @hypothesis_settings(deadline=None, max_examples=50)
    @given(
        a=st.floats(-10, 10, allow_nan=False),
        b=st.floats(-10, 10, allow_nan=False),
        order=st.integers(1, 4),
    )
    def test_linearity(self, a, b, order):
        grid = Grid.symmetric(2, 1/8)
        f = sample(np.sin, grid)
        g = sample(lambda x: x**3 - x, grid)
        lhs = finite_diff(a * f + b * g, order)
        rhs = a * finite_diff(f, order) + b * finite_diff(g, order)
        scale = 1 + abs(a) + abs(b)
        np.testing.assert_allclose(lhs.values, rhs.values, rtol=1e-9, atol=1e-9 * scale * 8**order)

    def test_product_rule_residual(self):
        # |D(fg) - f Dg - g Df| <= K h^4 with K frozen at 2 for sin, cos
        for h in (1/8, 1/16):
            grid = Grid.symmetric(3, h)
            f = sample(np.sin, grid)
            g = sample(np.cos, grid)
            lhs = finite_diff(f * g, 1)
            inner = lhs.grid
            rhs = f.restrict(inner) * finite_diff(g, 1) + g.restrict(inner) * finite_diff(f, 1)
            self.assertLessEqual(sup_norm(lhs - rhs), 2 * h**4)


class NormAndQuadratureTest(SimpleTestCase):

    def test_sup_norm(self):
        self.assertEqual(sup_norm(sample(lambda x: 0, Grid.symmetric(1, 1))), 0)
        self.assertEqual(sup_norm(sample(lambda x: x, Grid.symmetric(3, 1))), 3)
        f = sample(lambda x: (1 + x**2) * np.exp(-x**2), Grid.symmetric(8, 1/64))
        self.assertEqual(sup_norm(f), 1.0)

    def test_integrate(self):
        self.assertEqual(integrate(sample(lambda x: 0, Grid.symmetric(1, 1))), 0)
        self.assertEqual(integrate(sample(lambda x: 1, Grid((0,), (1,), (0.25,)))), 1.0)
        gaussian = sample(lambda x: np.exp(-x**2), Grid.symmetric(8, 1/64))
        self.assertAlmostEqual(integrate(gaussian), math.sqrt(math.pi), delta=1e-10)

    def test_integrate_box_volume(self):
        grid = Grid((-1, -1), (2, 1), (0.5, 0.25))
        self.assertEqual(integrate(sample(lambda x, y: 1, grid)), grid.volume)
        self.assertEqual(grid.volume, 6.0)

    @hypothesis_settings(deadline=None, max_examples=30)
    @given(
        st.lists(st.floats(-100, 100, allow_nan=False), min_size=9, max_size=9),
        st.lists(st.floats(-100, 100, allow_nan=False), min_size=9, max_size=9),
    )
    def test_additivity_and_submultiplicativity(self, u, v):
        grid = Grid.symmetric(2, 0.5)
        f = GridFunction(grid, np.array(u))
        g = GridFunction(grid, np.array(v))
        total = integrate(f) + integrate(g)
        self.assertAlmostEqual(integrate(f + g), total, delta=1e-10 * (1 + abs(total)) + 1e-9)
        self.assertLessEqual(sup_norm(f * g), sup_norm(f) * sup_norm(g) * (1 + 1e-15))


class PointwiseTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(2, 1)
        self.x = sample(lambda x: x, self.grid)

    def test_products(self):
        zero = sample(lambda x: 0, self.grid)
        one = sample(lambda x: 1, self.grid)
        np.testing.assert_array_equal(pointwise_mul(self.x, zero).values, 0)
        np.testing.assert_array_equal(pointwise_mul(self.x, one).values, self.x.values)
        np.testing.assert_array_equal(pointwise_mul(self.x, self.x).values, [4, 1, 0, 1, 4])

    def test_add_and_scale(self):
        np.testing.assert_array_equal(pointwise_add(self.x, self.x).values, scalar_mul(2, self.x).values)

    def test_grid_mismatch(self):
        other = sample(lambda x: x, Grid.symmetric(2, 0.5))
        with self.assertRaises(GridError):
            pointwise_mul(self.x, other)


class FormatTest(SimpleTestCase):

    def test_binary_bit_exact(self):
        f = sample(lambda x, y: np.exp(-x**2 - y**2) / 3, Grid.symmetric((2, 1), (1/8, 1/4)))
        g = from_binary(to_binary(f))
        self.assertEqual(g.grid, f.grid)
        self.assertEqual(g.values.tobytes(), f.values.tobytes())

    def test_binary_complex(self):
        f = GridFunction(Grid.symmetric(1, 0.5), np.array([1j, 2, 3 - 1j, 0.1, 1e-300j]))
        g = from_binary(to_binary(f))
        self.assertTrue(g.is_complex)
        self.assertEqual(g.values.tobytes(), f.values.tobytes())

    def test_csv(self):
        f = sample(lambda x: x / 3, Grid.symmetric(1, 0.25))
        text = to_csv(f)
        self.assertTrue(text.startswith("x0,value\n"))
        g = from_csv(text)
        self.assertEqual(g.grid, f.grid)
        np.testing.assert_array_equal(g.values, f.values)

    def test_corrupt_binary(self):
        with self.assertRaises(GridError):
            from_binary(b"\x05\x00\x00\x00\x00\x00\x00\x00notjs")
