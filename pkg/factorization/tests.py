'''
Unit tests for lambda sequences, function factorization and module
factorization.
'''
from fractions import Fraction
import itertools
import math

from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st
import numpy as np
from pydantic import parse_obj_as

from grids.grid import Grid, MultiIndex, sample, zeros
from scales.catalog import Polynomial
from scales.scale import Scale
from schwartz.profiles import GaussianProfile
from .engine import factorize_function, partial_sum_certificate
from .modules import (
    AnyMultiplier,
    ContinuousModule,
    ProfileMultiplier,
    SigmaModule,
    SigmaPower,
    extend_multiplier,
    factorize_module_element,
)
from .products import (
    CapExhaustedError,
    FactorizationError,
    LambdaSequence,
    accepted_sum,
    alpha_coefficients,
    eval_chi_lambda,
    eval_phi_lambda,
    select_lambda,
)


QUADRATIC = Polynomial(coefficients=[1, 0, 1])


def gaussian(x):
    return np.exp(-x ** 2)


def brute_force_alphas(exponents):
    inverse_squares = [Fraction(1, 4 ** k) for k in exponents]
    return [
        sum((math.prod(c) for c in itertools.combinations(inverse_squares, n)), Fraction(0))
        for n in range(len(exponents) + 1)
    ]


class AlphaTest(SimpleTestCase):

    def test_small_sequence(self):
        lam = LambdaSequence.from_exponents([0, 1, 2])
        self.assertEqual(lam.lambdas, [1.0, 2.0, 4.0])
        self.assertEqual(lam.alphas, [1.0, 21 / 16, 21 / 64, 1 / 64])
        self.assertEqual(lam.series(1.0), 85 / 32)

    def test_product_and_inverse(self):
        lam = LambdaSequence.from_exponents([0, 1, 2])
        value, tail = eval_phi_lambda(lam, 1.0)
        self.assertEqual(float(value), 85 / 32)
        self.assertAlmostEqual(float(tail), math.exp(lam.tail_mass), places=15)
        self.assertAlmostEqual(float(eval_chi_lambda(lam, 1.0)), 32 / 85, places=15)
        value, tail = eval_phi_lambda(lam, 0.0, with_tail_certificate=False)
        self.assertEqual(float(value), 1.0)
        self.assertIsNone(tail)

    @hypothesis_settings(max_examples=40, deadline=None)
    @given(st.sets(st.integers(min_value=0, max_value=12), min_size=0, max_size=7))
    def test_against_exact_symmetric_polynomials(self, exponents):
        exponents = sorted(exponents)
        alphas = alpha_coefficients(exponents)
        for alpha, exact in zip(alphas, brute_force_alphas(exponents)):
            self.assertTrue(math.isclose(alpha, float(exact), rel_tol=1e-14, abs_tol=0))

    def test_series_matches_product(self):
        x = np.linspace(-10, 10, 1000)
        for exponents in ([0, 1, 2], range(12), [1, 3, 4, 9], range(5, 17), [0]):
            lam = LambdaSequence.from_exponents(exponents)
            value, _ = eval_phi_lambda(lam, x)
            np.testing.assert_allclose(lam.series(x), value, rtol=1e-12)
            np.testing.assert_allclose(value * eval_chi_lambda(lam, x), 1.0, rtol=1e-12)

    def test_rejects_unordered_exponents(self):
        with self.assertRaises(FactorizationError):
            alpha_coefficients([2, 1])
        with self.assertRaises(ValueError):
            LambdaSequence(exponents=[0, 1], alphas=[1.0, 0.5], tail_mass=0.1)


class SelectLambdaTest(SimpleTestCase):

    def check_bounds(self, lam, log_m, epsilon):
        for n in range(1, lam.K + 1):
            beta = epsilon * 2.0 ** -n / (1 + math.exp(log_m[n]))
            self.assertLessEqual(lam.alphas[n], beta * (1 + 1e-12))
            self.assertLessEqual(lam.alphas[n], 1 / n ** 2)
        self.assertLessEqual(accepted_sum(lam, log_m, log_scale=True), 2 * epsilon)

    def test_zero_table(self):
        lam = select_lambda([0.0] * 65, 1e-8)
        self.check_bounds(lam, np.full(65, -np.inf), 1e-8)
        self.assertEqual(lam.exponents, list(range(lam.offset, lam.offset + lam.K)))

    def test_unit_table(self):
        lam = select_lambda([1.0] * 65, 1e-8)
        self.check_bounds(lam, np.zeros(65), 1e-8)

    def test_factorial_table(self):
        log_m = np.array([math.lgamma(n + 1) for n in range(65)])
        lam = select_lambda(log_m, 1e-8, log_scale=True)
        self.check_bounds(lam, log_m, 1e-8)

    def test_geometric_table(self):
        log_m = np.arange(65) * math.log(2)
        lam = select_lambda(log_m, 1e-8, log_scale=True)
        self.check_bounds(lam, log_m, 1e-8)

    def test_larger_table_needs_larger_offset(self):
        small = select_lambda([1.0] * 65, 1e-8)
        large = select_lambda(np.array([n * n for n in range(65)], dtype=float), 1e-8, log_scale=True)
        self.assertGreater(large.offset, small.offset)

    def test_offset_cap(self):
        log_m = np.array([math.lgamma(n + 1) for n in range(65)])
        with self.assertRaises(CapExhaustedError) as context:
            select_lambda(log_m, 1e-8, log_scale=True, max_offset=0)
        self.assertEqual(context.exception.n, 1)

    def test_rejects_nonpositive_epsilon(self):
        for epsilon in (0.0, -1e-8):
            with self.assertRaises(FactorizationError):
                select_lambda([1.0] * 65, epsilon)

    def test_rejects_infinite_table(self):
        with self.assertRaises(FactorizationError):
            select_lambda([1.0, math.inf])


class FactorizeFunctionTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(8, 1/64)
        self.sigma = Scale.from_closed_form(QUADRATIC, self.grid)

    def test_gaussian(self):
        psi = sample(gaussian, self.grid)
        result = factorize_function(psi, self.sigma)
        self.assertLessEqual(result.residual, 1e-6)
        self.assertLessEqual(result.residual, result.budget.total)
        self.assertTrue(np.all(result.theta.values > 0))
        np.testing.assert_allclose(result.theta.values, result.theta.values[::-1], rtol=0, atol=1e-12)
        phi_of_sigma, _ = eval_phi_lambda(result.lam, result.sigma.values)
        np.testing.assert_allclose(result.theta.values * phi_of_sigma, 1.0, rtol=0, atol=1e-12)
        self.assertTrue(result.report.consistent)
        self.assertTrue(result.theta_report.consistent)
        self.assertTrue(all(c.passed for c in result.certificates.values()))

    def test_zero(self):
        result = factorize_function(zeros(self.grid), self.sigma)
        self.assertEqual(result.n_series, 0)
        self.assertEqual(result.residual, 0.0)
        self.assertFalse(np.any(result.phi.values))

    def test_odd_function(self):
        psi = sample(lambda x: x * np.exp(-x ** 2), self.grid)
        result = factorize_function(psi, self.sigma)
        self.assertLessEqual(result.residual, 1e-6)
        np.testing.assert_allclose(result.phi.values, -result.phi.values[::-1], rtol=0, atol=1e-10)

    def test_slow_decay_is_rejected(self):
        psi = sample(lambda x: 1 / (1 + x ** 2), self.grid)
        with self.assertRaises(FactorizationError):
            factorize_function(psi, self.sigma)

    def test_summary(self):
        result = factorize_function(sample(gaussian, self.grid), self.sigma)
        summary = result.summary()
        self.assertEqual(summary.n_series, result.n_series)
        self.assertEqual(summary.exponents, result.lam.exponents)
        self.assertEqual(len(summary.log_m_table), result.log_m_table.shape[0])

    def test_partial_sums(self):
        result = factorize_function(sample(gaussian, self.grid), self.sigma)
        for gamma in (MultiIndex((0,)), MultiIndex((1,))):
            certificate = partial_sum_certificate(result, 0, 6, 1, gamma)
            self.assertTrue(certificate.passed)
            self.assertEqual(certificate.kind, "partial_sums")
        with self.assertRaises(FactorizationError):
            partial_sum_certificate(result, 0, 6, 1, MultiIndex((3,)))


class ModuleTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(8, 1/64)
        self.sigma = Scale.from_closed_form(QUADRATIC, self.grid)
        self.e = sample(gaussian, self.grid)

    def test_algebra_acting_on_itself(self):
        module = SigmaModule(self.sigma)
        result = factorize_module_element(self.e, module, self.sigma)
        self.assertTrue(result.certificate.passed)
        self.assertEqual(result.certificate.kind, "module_factorization")
        self.assertLessEqual(result.residuals["d=0,gamma=(0)"], 1e-6)
        self.assertIn("d=2,gamma=(1)", result.residuals)
        direct = factorize_function(self.e, self.sigma)
        np.testing.assert_allclose((result.theta * result.f).values, (direct.theta * direct.phi).values, rtol=0, atol=2e-6)

    def test_explicit_seminorms_include_sup(self):
        module = SigmaModule(self.sigma, seminorm_list=((1, (1,)),))
        result = factorize_module_element(self.e, module, self.sigma)
        self.assertEqual(set(result.residuals), {"d=0,gamma=(0)", "d=1,gamma=(1)"})

    def test_continuous_module(self):
        e = sample(lambda x: 1 / (1 + x ** 2), self.grid)
        result = factorize_module_element(e, ContinuousModule(), self.sigma)
        self.assertLessEqual(result.residual, 1e-6)
        self.assertEqual(list(result.residuals), ["d=0,gamma=(0)"])

    def test_odd_element(self):
        e = sample(lambda x: x * np.exp(-x ** 2), self.grid)
        result = factorize_module_element(e, SigmaModule(self.sigma), self.sigma)
        np.testing.assert_allclose((result.theta * result.f).values, result.e.values, rtol=0, atol=1e-6)


class MultiplierTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(8, 1/64)
        self.sigma = Scale.from_closed_form(QUADRATIC, self.grid)
        self.e = sample(gaussian, self.grid)
        self.module = SigmaModule(self.sigma)

    def test_sigma_square(self):
        extension = extend_multiplier(SigmaPower(k=2), self.e, self.module, self.sigma, mollify=False)
        expected = (1 + self.grid.coordinates()[0] ** 2) ** 2 * np.exp(-self.grid.coordinates()[0] ** 2)
        np.testing.assert_allclose(extension.value.values, expected, rtol=0, atol=1e-6)
        self.assertLessEqual(extension.direct_difference, extension.budget)

    def test_independent_of_lambda(self):
        first = extend_multiplier(SigmaPower(k=1), self.e, self.module, self.sigma, epsilon=1e-8, mollify=False)
        second = extend_multiplier(SigmaPower(k=1), self.e, self.module, self.sigma, epsilon=1e-11, mollify=False)
        difference = float(np.max(np.abs(first.value.values - second.value.values)))
        self.assertLessEqual(difference, first.budget + second.budget)

    def test_profile_multiplier(self):
        T = ProfileMultiplier(profile=GaussianProfile(rate=0.5))
        extension = extend_multiplier(T, self.e, ContinuousModule(), self.sigma)
        self.assertLessEqual(extension.direct_difference, extension.budget)

    def test_parse(self):
        self.assertEqual(parse_obj_as(AnyMultiplier, {"kind": "sigma_power", "k": 3}), SigmaPower(k=3))
        self.assertEqual(parse_obj_as(AnyMultiplier, {"kind": "identity"}).kind, "identity")
