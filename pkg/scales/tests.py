'''
Unit tests for the scale calculus and mollification.
'''
import math

from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings as hypothesis_settings, strategies as st
import numpy as np

from grids.grid import Grid, GridError, finite_diff, sample
from .calculus import (
    check_proper,
    check_scaled_space,
    check_subpolynomial,
    check_translational_equivalence,
    equivalent,
    fit_domination,
    reflect,
)
from .catalog import Constant, ExpAbs, Mollified, Polynomial, Power, parse_closed_form
from .certificate import TRUNCATED_DOMAIN_FLAG, Certificate
from .mollify import bump, bump_derivative, mollify_scale
from .scale import ActionKind, PointAction, Scale, ScaleError, ScaleKind


QUADRATIC = Polynomial(coefficients=[1, 0, 1])


def quadratic(grid):
    return Scale.from_closed_form(QUADRATIC, grid)


def constant(grid):
    return Scale.from_closed_form(Constant(), grid)


def sampled(expr, grid, kind=ScaleKind.ON_SPACE):
    return Scale(sample(expr, grid), kind=kind)


class CatalogTest(SimpleTestCase):

    def test_parse_by_name(self):
        form = parse_closed_form({"name": "power", "p": 2})
        self.assertIsInstance(form, Power)
        self.assertEqual(float(form(np.array(3.0))), 10.0)
        self.assertIsInstance(parse_closed_form({"name": "exp_abs"}), ExpAbs)

    def test_polynomial_needs_normalized_constant(self):
        with self.assertRaises(ValueError):
            Polynomial(coefficients=[0.5, 1])

    def test_radial_in_two_dimensions(self):
        grid = Grid.symmetric(2, 0.25, dim=2)
        sigma = quadratic(grid)
        self.assertEqual(float(sigma.value_at([[1.0, 1.0]])[0]), 3.0)
        np.testing.assert_allclose(sigma.values, sigma.values.T)

    def test_mollified_round_trip(self):
        form = Mollified(base=QUADRATIC, offsets=[[-0.5], [0.5]], weights=[0.5, 0.5])
        parsed = parse_closed_form(form.dict())
        self.assertEqual(float(parsed(np.array(0.0))), 1.25)


class ScaleTest(SimpleTestCase):

    def test_rejects_values_below_one(self):
        with self.assertRaises(ScaleError):
            sampled(lambda x: 0.5 + x * 0, Grid.symmetric(1, 0.5))

    def test_clips_rounding_noise(self):
        scale = sampled(lambda x: 1 - 1e-14 + x * 0, Grid.symmetric(1, 0.5))
        self.assertTrue(np.all(scale.values >= 1))

    def test_shift_with_closed_form_keeps_grid(self):
        grid = Grid.symmetric(2, 0.5)
        shifted = quadratic(grid).shifted((0.3,))
        self.assertEqual(shifted.grid, grid)
        self.assertAlmostEqual(shifted.values[4], 1 + 0.3 ** 2)

    def test_sampled_shift_uses_sub_grid(self):
        grid = Grid.symmetric(2, 0.5)
        scale = sampled(lambda x: 1 + x ** 2, grid)
        shifted = scale.shifted((1.0,))
        self.assertEqual(shifted.grid.lower, (-1.0,))
        self.assertEqual(shifted.grid.upper, (2.0,))
        np.testing.assert_array_equal(shifted.values, 1 + (shifted.grid.axes[0] - 1) ** 2)

    def test_sampled_shift_must_be_aligned(self):
        scale = sampled(lambda x: 1 + x ** 2, Grid.symmetric(2, 0.5))
        with self.assertRaises(ScaleError):
            scale.shifted((0.3,))
        with self.assertRaises(ScaleError):
            scale.shifted((5.0,))

    def test_point_action(self):
        action = PointAction(ActionKind.TRANSLATION, axis=1, step=0.5)
        self.assertEqual(action.displacement(2, 2), (0.0, 1.0))
        self.assertEqual(PointAction(ActionKind.TRIVIAL).displacement(3, 1), (0.0,))


class DominationTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(8, 1/8)

    def test_self_domination(self):
        sigma = quadratic(self.grid)
        cert = fit_domination(sigma, sigma)
        self.assertTrue(cert.passed)
        self.assertEqual(cert.constants["d"], 1)
        self.assertAlmostEqual(cert.constants["C"], 1.0)
        self.assertLessEqual(cert.worst_residual, 0)

    def test_linear_by_quadratic(self):
        cert = fit_domination(quadratic(self.grid), Scale.from_closed_form(Power(p=1), self.grid))
        self.assertTrue(cert.passed)
        self.assertEqual(cert.constants["d"], 1)
        self.assertAlmostEqual(cert.constants["C"], 1.0)
        self.assertEqual(cert.constants["D"], 1.0)

    def test_constant_cannot_dominate_growth(self):
        cert = fit_domination(constant(self.grid), quadratic(self.grid), cap=10)
        self.assertFalse(cert.passed)
        self.assertGreater(cert.worst_residual, 0)
        self.assertGreaterEqual(cert.details["C_fit"], 64)
        self.assertEqual(abs(cert.witness[0]), 8.0)

    def test_grid_mismatch(self):
        with self.assertRaises(GridError):
            fit_domination(quadratic(self.grid), quadratic(Grid.symmetric(4, 1/8)))

    def test_domination_composes(self):
        rho = Scale.from_closed_form(Polynomial(coefficients=[1, 0, 0, 0, 1]), self.grid)
        sigma = quadratic(self.grid)
        gamma = Scale.from_closed_form(Power(p=1), self.grid)
        first = fit_domination(sigma, gamma)
        second = fit_domination(rho, sigma)
        self.assertTrue(first.passed and second.passed)
        d = int(first.constants["d"] * second.constants["d"] + 1)
        self.assertTrue(fit_domination(rho, gamma, d_max=d).passed)

    def test_explicit_zero_bound(self):
        with self.assertRaises(ScaleError):
            fit_domination(quadratic(self.grid), quadratic(self.grid), d_max=0)

    def test_certificate_json(self):
        cert = fit_domination(quadratic(self.grid), quadratic(self.grid))
        data = cert.to_json()
        self.assertIn('"pass": true', data)
        self.assertTrue(Certificate.parse_raw(data).revalidate())


class EquivalenceTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(8, 1/8)

    def test_reflexive(self):
        sigma = quadratic(self.grid)
        self.assertTrue(all(c.passed for c in equivalent(sigma, sigma)))

    def test_square(self):
        sigma = quadratic(self.grid)
        square = Scale.from_closed_form(Polynomial(coefficients=[1, 0, 2, 0, 1]), self.grid)
        forward, backward = equivalent(sigma, square, cap=10)
        self.assertTrue(forward.passed and backward.passed)
        self.assertEqual(forward.constants["d"], 2)
        self.assertEqual(backward.constants["d"], 1)

    def test_constant_and_quadratic(self):
        forward, backward = equivalent(constant(self.grid), quadratic(self.grid), cap=10)
        self.assertFalse(forward.passed)
        self.assertTrue(backward.passed)

    @hypothesis_settings(deadline=None, max_examples=20)
    @given(st.floats(0.5, 3), st.floats(0.5, 3))
    def test_symmetric(self, p, q):
        grid = Grid.symmetric(4, 1/4)
        a = Scale.from_closed_form(Power(p=p), grid)
        b = Scale.from_closed_form(Power(p=q), grid)
        ab = equivalent(a, b, cap=100)
        ba = equivalent(b, a, cap=100)
        self.assertEqual(ab[0].passed and ab[1].passed, ba[0].passed and ba[1].passed)


class TranslationalTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(8, 1/8)

    def test_identity_shift(self):
        cert = check_translational_equivalence(quadratic(self.grid), [0.0])
        self.assertTrue(cert.passed)
        self.assertAlmostEqual(cert.constants["C"], 1.0)
        self.assertEqual(cert.constants["d"], 1)

    def test_unit_shifts(self):
        cert = check_translational_equivalence(quadratic(self.grid), [1.0, -1.0])
        self.assertTrue(cert.passed)
        self.assertLessEqual(cert.constants["C"], 4)
        self.assertLessEqual(cert.constants["d"], 2)
        self.assertEqual(cert.details["shifts"], [[1.0], [-1.0]])

    def test_sampled_scale_matches_closed_form(self):
        closed = check_translational_equivalence(quadratic(self.grid), [1.0])
        grid_only = check_translational_equivalence(sampled(lambda x: 1 + x ** 2, self.grid), [1.0])
        self.assertTrue(grid_only.passed)
        self.assertLessEqual(grid_only.constants["C"], closed.constants["C"] * (1 + 1e-9))

    def test_constant_scale(self):
        cert = check_translational_equivalence(constant(self.grid), [0.5, -2.0])
        self.assertAlmostEqual(cert.constants["C"], 1.0)
        self.assertEqual(cert.constants["d"], 1)

    def test_shift_outside_box(self):
        with self.assertRaises(ScaleError):
            check_translational_equivalence(sampled(lambda x: 1 + x ** 2, self.grid), [20.0])


class SubpolynomialTest(SimpleTestCase):

    def setUp(self):
        self.group = Grid.symmetric(10, 1)

    def test_constant(self):
        cert = check_subpolynomial(Scale.from_closed_form(Constant(), self.group, ScaleKind.ON_GROUP))
        self.assertTrue(cert.passed)
        self.assertAlmostEqual(cert.constants["C"], 1.0)
        self.assertEqual(cert.constants["d"], 1)

    def test_linear_weight(self):
        omega = sampled(lambda g: 1 + np.abs(g), self.group, ScaleKind.ON_GROUP)
        cert = check_subpolynomial(omega)
        self.assertTrue(cert.passed)
        self.assertAlmostEqual(cert.constants["C"], 1.0)
        self.assertEqual(cert.constants["d"], 1)

    def test_exponential_is_submultiplicative(self):
        cert = check_subpolynomial(Scale.from_closed_form(ExpAbs(), self.group, ScaleKind.ON_GROUP))
        self.assertTrue(cert.passed)
        self.assertEqual(cert.constants["d"], 1)

    def test_double_exponential_fails(self):
        omega = sampled(lambda g: np.exp(np.exp(np.abs(g))), Grid.symmetric(5, 1), ScaleKind.ON_GROUP)
        with np.errstate(over="ignore"):
            cert = check_subpolynomial(omega, d_max=4)
        self.assertFalse(cert.passed)
        self.assertEqual(cert.constants["C"], cert.constants["C_max"])

    def test_explicit_pairs(self):
        omega = sampled(lambda g: 1 + np.abs(g), self.group)
        cert = check_subpolynomial(omega, [(3, 4), (-2, 5)])
        self.assertEqual(len(cert.witness), 2)


class ReflectTest(SimpleTestCase):

    def test_even_scale(self):
        omega = quadratic(Grid.symmetric(3, 1))
        np.testing.assert_array_equal(reflect(omega).values, omega.values)

    def test_one_sided_weight(self):
        omega = sampled(lambda g: 1 + np.maximum(g, 0), Grid.symmetric(3, 1), ScaleKind.ON_GROUP)
        reflected = reflect(omega)
        np.testing.assert_array_equal(reflected.values, [4, 3, 2, 1, 1, 1, 1])
        self.assertEqual(reflected.kind, ScaleKind.ON_GROUP)
        np.testing.assert_array_equal(reflect(reflected).values, omega.values)

    def test_asymmetric_grid(self):
        with self.assertRaises(ScaleError):
            reflect(sampled(lambda g: 1 + g * 0, Grid((-1.0,), (2.0,), (1.0,))))


class ScaledSpaceTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(8, 1/8)
        self.group = Grid.symmetric(2, 1)
        self.omega = sampled(lambda g: 1 + np.abs(g), self.group, ScaleKind.ON_GROUP)

    def test_identity_element(self):
        cert = check_scaled_space(quadratic(self.grid), self.omega, PointAction(), samples=[0.0])
        self.assertTrue(cert.passed)
        self.assertEqual(cert.constants["l"], 1)
        self.assertAlmostEqual(cert.constants["C"], 1.0)

    def test_translation(self):
        cert = check_scaled_space(quadratic(self.grid), self.omega, PointAction())
        self.assertTrue(cert.passed)
        self.assertEqual(cert.constants["l"], 1)
        self.assertLessEqual(cert.constants["C"], 2 * 3 ** 2)

    def test_trivial_action(self):
        cert = check_scaled_space(quadratic(self.grid), self.omega, PointAction(ActionKind.TRIVIAL))
        self.assertAlmostEqual(cert.constants["C"], 1.0)
        self.assertEqual(cert.constants["l"], 1)

    def test_explicit_zero_bounds(self):
        with self.assertRaises(ScaleError):
            check_scaled_space(quadratic(self.grid), self.omega, PointAction(), l_max=0)
        with self.assertRaises(ScaleError):
            check_scaled_space(quadratic(self.grid), self.omega, PointAction(), d_max=0)

    def test_sampled_scale_on_sub_grid(self):
        sigma = sampled(lambda x: 1 + x ** 2, self.grid)
        cert = check_scaled_space(sigma, self.omega, PointAction())
        self.assertTrue(cert.passed)


class ProperTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(8, 1/8)

    def test_quadratic(self):
        cert = check_proper(quadratic(self.grid))
        self.assertTrue(cert.passed)
        self.assertIn(TRUNCATED_DOMAIN_FLAG, cert.flags)
        minima = cert.details["shell_minima"]
        self.assertEqual(minima, sorted(minima))

    def test_constant(self):
        cert = check_proper(constant(self.grid))
        self.assertFalse(cert.passed)

    def test_oscillating(self):
        cert = check_proper(sampled(lambda x: 1 + np.abs(np.sin(x)), self.grid))
        self.assertFalse(cert.passed)

    def test_equivalent_scale_keeps_verdict(self):
        shifted_up = sampled(lambda x: 2 + x ** 2, self.grid)
        self.assertEqual(check_proper(shifted_up).passed, check_proper(quadratic(self.grid)).passed)

    def test_two_dimensional(self):
        cert = check_proper(quadratic(Grid.symmetric(4, 0.25, dim=2)))
        self.assertTrue(cert.passed)


class MollifyTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(4, 1/32)

    def test_bump_has_unit_mass(self):
        phi = bump(0.25, (1/32,))
        self.assertAlmostEqual(float(np.sum(phi.values)) / 32, 1.0, places=12)
        self.assertEqual(phi.values[0], 0.0)
        self.assertTrue(np.all(phi.values >= 0))

    def test_constant_is_fixed(self):
        result = mollify_scale(constant(self.grid))
        np.testing.assert_allclose(result.scale.values, 1.0, atol=1e-12)
        self.assertTrue(result.upper.passed and result.lower.passed and result.derivative.passed)

    def test_quadratic(self):
        sigma = quadratic(self.grid)
        smooth, upper, lower, derivative = mollify_scale(sigma, box=0.25)
        self.assertTrue(np.all(smooth.values >= sigma.values / 2))
        self.assertTrue(np.all(smooth.values <= 2 * sigma.values))
        for cert in (upper, lower, derivative):
            self.assertTrue(cert.passed)
            self.assertLessEqual(cert.constants["d"], 2)
        self.assertEqual(set(derivative.details["per_index"]), {"(1)", "(2)"})
        self.assertIsInstance(smooth.closed_form, Mollified)

    def test_sampled_scale_shrinks_grid(self):
        sigma = sampled(lambda x: 1 + x ** 2, self.grid)
        result = mollify_scale(sigma, box=0.25)
        self.assertEqual(result.scale.grid.upper, (3.75,))
        self.assertIsNone(result.scale.closed_form)
        self.assertTrue(result.derivative.passed)

    def test_narrowing_support_converges(self):
        sigma = quadratic(self.grid)
        errors = []
        for radius in (0.5, 0.25, 0.125):
            smooth = mollify_scale(sigma, box=radius).scale
            errors.append(float(np.max(np.abs(smooth.values - sigma.values) / sigma.values)))
        self.assertGreater(errors[0], errors[1])
        self.assertGreater(errors[1], errors[2])

    def test_derivative_matches_bump_derivative(self):
        grid = Grid.symmetric(2, 1/128)
        sigma = quadratic(grid)
        smooth = mollify_scale(sigma, box=0.25).scale
        dphi = bump_derivative(0.25, (1/128,))
        expected = np.zeros(grid.shape)
        for g, w in zip(dphi.grid.axes[0], dphi.values):
            expected += w / 128 * sigma.shifted((g,)).values
        derivative = finite_diff(smooth.f, 1)
        cut = grid.slices_of(derivative.grid)
        np.testing.assert_allclose(derivative.values, expected[cut], rtol=1e-5, atol=1e-7)

    def test_rejects_bad_bumps(self):
        phi = bump(0.25, (1/32,))
        with self.assertRaises(ScaleError):
            mollify_scale(quadratic(self.grid), phi.with_values(phi.values * 2))
        with self.assertRaises(ScaleError):
            mollify_scale(quadratic(self.grid), bump(0.5, (1/32,)), box=0.25)
        with self.assertRaises(ScaleError):
            bump(0.3, (1/32,))

    @override_settings(MOLLIFIER_DERIVATIVE_ORDER=1)
    def test_configured_order(self):
        result = mollify_scale(quadratic(self.grid))
        self.assertEqual(list(result.derivative.details["per_index"]), ["(1)"])

    def test_mollified_scale_at_least_one(self):
        result = mollify_scale(sampled(lambda x: 1 + np.abs(np.sin(3 * x)), self.grid))
        self.assertTrue(np.all(result.scale.values >= 1))
        self.assertTrue(math.isfinite(result.upper.constants["C"]))
