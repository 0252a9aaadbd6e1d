'''
Unit tests for group windows, convolution, the integrated representation
and the crossed factorization.
'''
import math

from django.test import SimpleTestCase
import numpy as np

from grids.grid import Grid, GridError, GridFunction, sample, sup_norm, zeros
from scales.calculus import check_subpolynomial
from scales.catalog import Polynomial
from scales.scale import Scale, ScaleError
from .groups import AD_BOUND_NOTE, ActionSpec, CrossedProductError, GroupWindow, certify_action, check_tempered, shift_values
from .product import CrossedElement, algebra_mult, convolve, crossed_seminorm, group_translate
from .representation import (
    act_on_module,
    approx_identity,
    check_action_estimate,
    check_convolution_continuity,
    check_covariance,
    check_right_approximate_unit,
    check_smoothing_bound,
    factorize_crossed,
    factorize_crossed_element,
    garding_smooth,
    unit_omega,
    unit_weights,
)


QUADRATIC = Polynomial(coefficients=[1, 0, 1])
LINEAR = Polynomial(coefficients=[1, 1])


def gaussian(x):
    return np.exp(-x ** 2)


class IntegerWindowMixin:

    def setUp(self):
        self.grid = Grid.symmetric(8, 1/64)
        self.window = GroupWindow.integers(4)
        self.action = ActionSpec.translation(self.window, self.grid, steps_per_unit=4)
        self.omega = self.window.scale(LINEAR)
        self.sigma = Scale.from_closed_form(QUADRATIC, self.grid)
        self.a = sample(gaussian, self.grid)
        self.e = sample(lambda x: np.exp(-(x - 1) ** 2 / 2), self.grid)
        self.rng = np.random.default_rng(42)

    def random_element(self):
        inside = np.abs(self.grid.coordinates()[0]) <= 7
        slices = []
        for g in self.window.points:
            values = self.rng.uniform(-1, 1, self.grid.shape) * inside if abs(g) <= 1 else np.zeros(self.grid.shape)
            slices.append(GridFunction(self.grid, values))
        return CrossedElement(self.window, slices, self.omega)


class GroupWindowTest(SimpleTestCase):

    def test_integer_window(self):
        window = GroupWindow.integers(2)
        np.testing.assert_array_equal(window.points, [-2, -1, 0, 1, 2])
        self.assertEqual(window.haar_weight, 1.0)
        self.assertEqual(window.index_of(0), 2)
        with self.assertRaises(CrossedProductError):
            window.index_of(3)

    def test_sampled_window(self):
        window = GroupWindow.sampled(1, 0.25)
        self.assertEqual(window.size, 9)
        self.assertEqual(window.haar_weight, 0.25)
        self.assertEqual(window.index_of(-0.5), 2)

    def test_invalid_windows(self):
        with self.assertRaises(CrossedProductError):
            GroupWindow.integers(0)
        with self.assertRaises(CrossedProductError):
            GroupWindow("Z_window", 2, 0.5)

    def test_shift_values(self):
        values = np.arange(1.0, 6.0)
        np.testing.assert_array_equal(shift_values(values, 0, 2), [0, 0, 1, 2, 3])
        np.testing.assert_array_equal(shift_values(values, 0, -1), [2, 3, 4, 5, 0])
        np.testing.assert_array_equal(shift_values(values, 0, 7), np.zeros(5))

    def test_action_composes(self):
        grid = Grid.symmetric(2, 0.25)
        action = ActionSpec.translation(GroupWindow.integers(3), grid)
        a = sample(lambda x: np.exp(-x ** 2), grid)
        np.testing.assert_array_equal(action.apply(0, a).values, a.values)
        np.testing.assert_array_equal(action.apply(1, action.apply(1, a)).values, action.apply(2, a).values)
        self.assertEqual(action.ad_bound_note, AD_BOUND_NOTE)

    def test_misaligned_sampled_action(self):
        with self.assertRaises(GridError):
            ActionSpec.translation(GroupWindow.sampled(1, 0.125), Grid.symmetric(2, 0.25))


class ConvolutionTest(IntegerWindowMixin, SimpleTestCase):

    def test_zero(self):
        F1 = self.random_element()
        F2 = CrossedElement.zero(self.window, self.grid, self.omega)
        self.assertEqual(convolve(F1, F2, self.action).sup(), 0.0)

    def test_point_masses_with_trivial_action(self):
        action = ActionSpec.trivial(self.window, self.grid)
        b = sample(lambda x: 1 / (1 + x ** 2), self.grid)
        F1 = CrossedElement.delta(self.window, self.omega, self.a)
        F2 = CrossedElement.delta(self.window, self.omega, b)
        product = convolve(F1, F2, action)
        np.testing.assert_allclose(product.at(0).values, (self.a * b).values, rtol=1e-15, atol=0)
        for g in (-4, -1, 1, 4):
            self.assertEqual(sup_norm(product.at(g)), 0.0)

    def test_associative(self):
        worst = 0.0
        for _ in range(100):
            F1, F2, F3 = self.random_element(), self.random_element(), self.random_element()
            left = convolve(convolve(F1, F2, self.action), F3, self.action)
            right = convolve(F1, convolve(F2, F3, self.action), self.action)
            worst = max(worst, (left - right).sup())
        self.assertLessEqual(worst, 1e-9)

    def test_bilinear(self):
        F1, F2, F3 = self.random_element(), self.random_element(), self.random_element()
        left = convolve(F1 * 2.0 + F2, F3, self.action)
        right = convolve(F1, F3, self.action) * 2.0 + convolve(F2, F3, self.action)
        self.assertLessEqual((left - right).sup(), 1e-12)

    def test_mismatched_windows(self):
        other = GroupWindow.integers(3)
        F1 = self.random_element()
        F2 = CrossedElement.zero(other, self.grid, other.scale(LINEAR))
        with self.assertRaises(CrossedProductError):
            convolve(F1, F2, self.action)

    def test_slice_count(self):
        with self.assertRaises(CrossedProductError):
            CrossedElement(self.window, [self.a] * 3, self.omega)


class CrossedSeminormTest(IntegerWindowMixin, SimpleTestCase):

    def test_zero(self):
        F = CrossedElement.zero(self.window, self.grid, self.omega)
        self.assertEqual(crossed_seminorm(F, (2, 0, (1, 0)), self.sigma), 0.0)

    def test_point_mass(self):
        F = CrossedElement.delta(self.window, self.omega, self.a)
        self.assertAlmostEqual(crossed_seminorm(F, (3, 0, (1, 0)), self.sigma), 1.0, places=14)

    def test_two_slices(self):
        weights = np.zeros(self.window.size)
        weights[self.window.index_of(-1)] = weights[self.window.index_of(1)] = 1
        F = CrossedElement.tensor(self.window, self.omega, weights, self.a)
        self.assertAlmostEqual(crossed_seminorm(F, (1, 0, (0, 0))), 2 * (2 * 1.0), places=14)

    def test_no_group_derivatives_on_integers(self):
        with self.assertRaises(CrossedProductError):
            crossed_seminorm(self.random_element(), (0, 1, (0, 0)))

    def test_group_derivative_on_sampled_window(self):
        window = GroupWindow.sampled(2, 1/32)
        grid = Grid.symmetric(1, 1/32)
        F = CrossedElement.from_function(window, unit_omega(window), lambda g: zeros(grid) + math.exp(-g ** 2))
        edge = 2 - 1/16
        self.assertAlmostEqual(crossed_seminorm(F, (0, 1, (0, 0))), 2 * (1 - math.exp(-edge ** 2)), delta=0.02)

    def test_group_derivative_on_three_dimensional_slices(self):
        window = GroupWindow.sampled(1, 0.25)
        grid = Grid.symmetric(0.5, 0.25, dim=3)
        F = CrossedElement.from_function(window, unit_omega(window), lambda g: zeros(grid) + g)
        # X F = 1 on the 5 window points the stencil keeps
        self.assertAlmostEqual(crossed_seminorm(F, (0, 1, (0, 0))), 5 * 0.25, places=12)


class TranslateTest(IntegerWindowMixin, SimpleTestCase):

    def test_identity(self):
        F = self.random_element()
        self.assertEqual((group_translate(F, 0, self.action) - F).sup(), 0.0)
        self.assertEqual((algebra_mult(zeros(self.grid) + 1.0, F) - F).sup(), 0.0)

    def test_covariant_compatibility(self):
        F = self.random_element()
        for g in (-2, 1, 3):
            left = group_translate(algebra_mult(self.a, F), g, self.action)
            right = algebra_mult(self.action.apply(g, self.a), group_translate(F, g, self.action))
            self.assertLessEqual((left - right).sup(), 1e-15)

    def test_truncation_note(self):
        F = CrossedElement.delta(self.window, self.omega, self.a, g=4)
        moved = group_translate(F, 1, self.action)
        self.assertEqual(moved.sup(), 0.0)
        self.assertEqual(len(moved.notes), 1)


class RepresentationTest(IntegerWindowMixin, SimpleTestCase):

    def test_zero(self):
        F = CrossedElement.zero(self.window, self.grid, self.omega)
        self.assertEqual(sup_norm(act_on_module(F, self.e, self.action)), 0.0)

    def test_point_mass(self):
        F = CrossedElement.delta(self.window, self.omega, self.a)
        np.testing.assert_array_equal(act_on_module(F, self.e, self.action).values, (self.a * self.e).values)

    def test_homomorphism(self):
        worst = 0.0
        for _ in range(20):
            F1, F2 = self.random_element(), self.random_element()
            left = act_on_module(convolve(F1, F2, self.action), self.e, self.action)
            right = act_on_module(F1, act_on_module(F2, self.e, self.action), self.action)
            worst = max(worst, sup_norm(left - right))
        self.assertLessEqual(worst, 1e-9)

    def test_covariance(self):
        certificate = check_covariance(0, self.a, self.e, self.action)
        self.assertTrue(certificate.passed)
        self.assertEqual(certificate.details["difference"], 0.0)
        certificate = check_covariance(1, self.a, self.e, self.action)
        self.assertTrue(certificate.passed)
        self.assertLessEqual(certificate.details["difference"], 1e-12)
        certificate = check_covariance(2, self.a, self.e, ActionSpec.trivial(self.window, self.grid))
        self.assertEqual(certificate.details["difference"], 0.0)

    def test_tempered(self):
        certificate = check_tempered(self.action, self.omega, self.sigma, [self.e], d=1)
        self.assertTrue(certificate.passed)
        self.assertIn(AD_BOUND_NOTE, certificate.notes)

    def test_certified_action(self):
        action = certify_action(self.action, self.sigma, self.omega, order=1)
        self.assertEqual(action.scaled_space.kind, "scaled_space")
        self.assertTrue(action.scaled_space.passed)
        self.assertEqual(action.tempered.kind, "tempered")
        self.assertTrue(action.tempered.passed)
        self.assertEqual(action.tempered.constant("order"), 1)
        self.assertIs(action.tempered_for(1, self.omega, self.sigma), action.tempered)
        self.assertEqual(action.tempered_for(2, self.omega, self.sigma).constant("order"), 2)
        self.assertIsNone(self.action.tempered)

    def test_certified_estimate_holds_for_any_element(self):
        action = certify_action(self.action, self.sigma, self.omega, order=1)
        for _ in range(5):
            e = GridFunction(self.grid, self.rng.uniform(-1, 1, self.grid.shape))
            certificate = check_action_estimate(self.random_element(), e, action, self.omega, self.sigma, 1)
            self.assertTrue(certificate.passed)
            self.assertEqual(certificate.constant("C"), action.tempered.constant("C"))

    def test_tempered_exponent_bound(self):
        certificate = check_tempered(self.action, self.omega, self.sigma, [self.e], d=1, d_max=0)
        self.assertEqual(certificate.constant("d"), 0)
        with self.assertRaises(ScaleError):
            check_tempered(self.action, self.omega, self.sigma, [self.e], d=1, d_max=-1)

    def test_action_estimate(self):
        for d in (0, 1, 2):
            certificate = check_action_estimate(self.random_element(), self.e, self.action, self.omega, self.sigma, d)
            self.assertTrue(certificate.passed)

    def test_smoothing_bound(self):
        f = sample(lambda g: np.exp(-g ** 2), self.window.grid)
        certificate = check_smoothing_bound(f, self.a, self.action, self.omega, self.sigma, 1, 2)
        self.assertTrue(certificate.passed)
        self.assertGreaterEqual(certificate.constant("D"), 1.0)

    def test_convolution_continuity(self):
        subpolynomial = check_subpolynomial(self.omega)
        self.assertTrue(subpolynomial.passed)
        for d in (0, 1, 2):
            certificate = check_convolution_continuity(self.random_element(), self.random_element(), self.action, subpolynomial, d)
            self.assertTrue(certificate.passed)


class ApproximateIdentityTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(8, 1/32)
        self.window = GroupWindow.sampled(2, 1/32)
        self.action = ActionSpec.translation(self.window, self.grid)
        self.a = sample(lambda x: 1 / (1 + x ** 2), self.grid)
        self.e = sample(gaussian, self.grid)

    def test_integers(self):
        window = GroupWindow.integers(2)
        action = ActionSpec.translation(window, self.grid)
        unit = approx_identity(3, self.a, window)
        self.assertEqual(sup_norm(unit.at(0) - self.a), 0.0)
        np.testing.assert_array_equal(act_on_module(unit, self.e, action).values, (self.a * self.e).values)

    def test_unit_mass(self):
        for radius in (1, 0.5, 0.25):
            self.assertAlmostEqual(self.window.haar_weight * float(np.sum(unit_weights(self.window, radius))), 1.0, places=12)

    def test_convergence(self):
        target = self.a * self.e
        errors = [
            sup_norm(act_on_module(approx_identity(n, self.a, self.window), self.e, self.action) - target)
            for n in range(3)
        ]
        self.assertTrue(errors[0] > errors[1] > errors[2])

    def test_zero(self):
        self.assertEqual(approx_identity(1, zeros(self.grid), self.window).sup(), 0.0)

    def test_window_limits(self):
        with self.assertRaises(CrossedProductError):
            approx_identity(0, self.a, GroupWindow.sampled(0.5, 1/32))
        with self.assertRaises(CrossedProductError):
            approx_identity(5, self.a, self.window)

    def test_right_approximate_unit(self):
        F = CrossedElement.from_function(self.window, unit_omega(self.window), lambda g: self.e * math.exp(-4 * g ** 2))
        report = check_right_approximate_unit(F, self.a, self.window, self.action, [1, 0.5, 0.25])
        self.assertTrue(report.decreasing)
        self.assertEqual(len(report.defects), 3)


class GardingTest(SimpleTestCase):

    def test_point_mass(self):
        grid = Grid.symmetric(8, 1/64)
        window = GroupWindow.integers(2)
        e = sample(gaussian, grid)
        f = GridFunction(window.grid, np.array([0.0, 0.0, 1.0, 0.0, 0.0]))
        np.testing.assert_array_equal(garding_smooth(f, e, ActionSpec.translation(window, grid)).values, e.values)

    def test_invariant_element(self):
        grid = Grid.symmetric(8, 1/32)
        window = GroupWindow.sampled(1, 1/32)
        e = sample(gaussian, grid)
        f = GridFunction(window.grid, unit_weights(window, 0.5))
        smooth = garding_smooth(f, e, ActionSpec.trivial(window, grid))
        np.testing.assert_allclose(smooth.values, e.values, rtol=1e-12)

    def test_quadrature_oracle(self):
        grid = Grid.symmetric(8, 1/32)
        window = GroupWindow.sampled(1, 1/32)
        e = sample(gaussian, grid)
        weights = unit_weights(window, 0.25)
        smooth = garding_smooth(GridFunction(window.grid, weights), e, ActionSpec.translation(window, grid))
        x = grid.coordinates()[0]
        oracle = sum(window.spacing * w * np.exp(-(x - g) ** 2) for g, w in zip(window.points, weights) if w)
        np.testing.assert_allclose(smooth.values, oracle, rtol=0, atol=1e-10)

    def test_support_outside_window(self):
        grid = Grid.symmetric(8, 1/64)
        window = GroupWindow.integers(2)
        f = zeros(GroupWindow.integers(3).grid)
        with self.assertRaises(CrossedProductError):
            garding_smooth(f, sample(gaussian, grid), ActionSpec.translation(window, grid))


class CrossedFactorizationTest(IntegerWindowMixin, SimpleTestCase):

    def setUp(self):
        super().setUp()
        self.f = sample(lambda g: np.exp(-g ** 2), self.window.grid)

    def test_point_mass(self):
        f = GridFunction(self.window.grid, np.eye(self.window.size)[self.window.identity_index])
        b, residual = factorize_crossed(self.e, f, self.a, self.action)
        self.assertEqual(sup_norm(b.at(0) - self.a), 0.0)
        self.assertEqual(residual, 0.0)

    def test_gaussian_slices(self):
        b, residual = factorize_crossed(self.e, self.f, self.a, self.action)
        self.assertLessEqual(residual, 1e-9)
        np.testing.assert_allclose(b.at(1).values, math.exp(-1) * self.action.apply(1, self.a).values, rtol=1e-15)

    def test_zero(self):
        b, residual = factorize_crossed(self.e, self.f, zeros(self.grid), self.action)
        self.assertEqual(b.sup(), 0.0)
        self.assertEqual(residual, 0.0)

    def test_factorize_element(self):
        result = factorize_crossed_element(self.a, self.f, self.action, self.sigma)
        self.assertTrue(result.certificate.passed)
        self.assertLessEqual(result.residual, 1e-6)
        self.assertEqual(result.b.window, self.window)
