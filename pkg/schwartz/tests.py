'''
Unit tests for seminorms, profiles and decay reports.
'''
import math

from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings as hypothesis_settings, strategies as st
import numpy as np

from grids.grid import Grid, MultiIndex, sample, zeros
from scales.calculus import check_proper, fit_domination
from scales.catalog import Constant, Polynomial
from scales.mollify import mollify_scale
from scales.scale import Scale
from .profiles import (
    CallableProfile,
    ConstantProfile,
    GaussianProfile,
    RationalProfile,
    SampledProfile,
    chain_rule_certificate,
    compose_scale,
    parse_profile,
)
from .reports import DecayReport, Verdict, decay_report
from .seminorms import SeminormError, SeminormIndex, multiplier_sigma, seminorm_schwartz, seminorm_sigma


QUADRATIC = Polynomial(coefficients=[1, 0, 1])


def gaussian(x):
    return np.exp(-x ** 2)


class SeminormTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(8, 1/64)
        self.sigma = Scale.from_closed_form(QUADRATIC, self.grid)
        self.f = sample(gaussian, self.grid)

    def test_zero(self):
        self.assertEqual(seminorm_sigma(zeros(self.grid), self.sigma, (3, 1)), 0.0)

    def test_gaussian_sup(self):
        self.assertAlmostEqual(seminorm_sigma(self.f, self.sigma, (0, 0)), 1.0, places=14)

    def test_weighted_gaussian(self):
        self.assertAlmostEqual(seminorm_sigma(self.f, self.sigma, SeminormIndex(1, MultiIndex((0,)))), 1.0, places=14)

    def test_index_validation(self):
        with self.assertRaises(SeminormError):
            SeminormIndex(-1, MultiIndex((0,)))
        with override_settings(REPORT_D_MAX=2):
            with self.assertRaises(SeminormError):
                SeminormIndex(3, MultiIndex((0,)))
        self.assertEqual(len(SeminormIndex.table(1, 6, 2)), 21)

    def test_monotone_in_d(self):
        values = [seminorm_sigma(self.f, self.sigma, (d, 1)) for d in range(5)]
        self.assertEqual(values, sorted(values))

    def test_product_with_bounded_function(self):
        g = sample(lambda x: np.cos(3 * x), self.grid)
        lhs = seminorm_sigma(self.f * g, self.sigma, (2, 0))
        self.assertLessEqual(lhs, seminorm_sigma(self.f, self.sigma, (2, 0)) * float(np.max(np.abs(g.values))))

    @hypothesis_settings(deadline=None, max_examples=25)
    @given(
        st.floats(-3, 3), st.floats(-3, 3), st.floats(0.5, 2), st.floats(-1, 1),
        st.integers(0, 3), st.integers(0, 2),
    )
    def test_triangle_inequality(self, a, b, width, center, d, order):
        grid = Grid.symmetric(6, 1/16)
        sigma = Scale.from_closed_form(QUADRATIC, grid)
        f = sample(lambda x: a * np.exp(-(x - center) ** 2 / width), grid)
        g = sample(lambda x: b * x * np.exp(-x ** 2), grid)
        total = seminorm_sigma(f + g, sigma, (d, order))
        bound = seminorm_sigma(f, sigma, (d, order)) + seminorm_sigma(g, sigma, (d, order))
        self.assertLessEqual(total, bound * (1 + 1e-12) + 1e-300)


class SchwartzSeminormTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(8, 1/64)

    def test_zero(self):
        self.assertEqual(seminorm_schwartz(zeros(self.grid), 2, 1), 0.0)

    def test_gaussian(self):
        phi = sample(gaussian, self.grid)
        self.assertAlmostEqual(seminorm_schwartz(phi, 0, 0), 1.0, places=14)

    def test_weighted_gaussian(self):
        phi = sample(gaussian, self.grid)
        self.assertAlmostEqual(seminorm_schwartz(phi, 2, 0), 1 / math.e, places=12)

    def test_derivative(self):
        phi = sample(gaussian, self.grid)
        # sup |2r e^{-r^2}| = sqrt(2/e) at r = 1/sqrt(2)
        self.assertAlmostEqual(seminorm_schwartz(phi, 0, 1), math.sqrt(2 / math.e), delta=1e-4)

    def test_rejects_plane(self):
        with self.assertRaises(SeminormError):
            seminorm_schwartz(zeros(Grid.symmetric(1, 0.25, dim=2)), 0, 0)


class MultiplierTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(6, 1/32)
        self.smooth = mollify_scale(Scale.from_closed_form(QUADRATIC, self.grid))

    def test_zero(self):
        product, cert = multiplier_sigma(zeros(self.grid), self.smooth.scale, [(0, 1), (1, 0)], self.smooth.derivative)
        self.assertTrue(np.all(product.values == 0))
        self.assertTrue(cert.passed)
        self.assertEqual(cert.worst_residual, 0.0)

    def test_gaussian(self):
        f = sample(gaussian, self.grid)
        product, cert = multiplier_sigma(f, self.smooth.scale, [(0, 1), (1, 1), (0, 2), (2, 0)], self.smooth.derivative)
        self.assertTrue(cert.passed)
        np.testing.assert_allclose(product.values, f.values * self.smooth.scale.values)
        bounds = cert.details["bounds"]["d=0,gamma=(1)"]
        self.assertLessEqual(bounds["lhs"], bounds["rhs"])

    def test_constant_scale(self):
        constant = mollify_scale(Scale.from_closed_form(Constant(), self.grid))
        f = sample(gaussian, self.grid)
        product, cert = multiplier_sigma(f, constant.scale, [(0, 0), (1, 2)], constant.derivative)
        np.testing.assert_allclose(product.values, f.values, rtol=1e-14)
        self.assertTrue(cert.passed)

    def test_requires_derivative_certificate(self):
        f = sample(gaussian, self.grid)
        with self.assertRaises(SeminormError):
            multiplier_sigma(f, self.smooth.scale, [(0, 1)], None)
        domination = fit_domination(self.smooth.scale, self.smooth.scale)
        with self.assertRaises(SeminormError):
            multiplier_sigma(f, self.smooth.scale, [(0, 1)], domination)

    def test_order_beyond_certificate(self):
        f = sample(gaussian, self.grid)
        with self.assertRaises(SeminormError):
            multiplier_sigma(f, self.smooth.scale, [(0, 3)], self.smooth.derivative)


class ProfileTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(4, 1/16)
        self.sigma = Scale.from_closed_form(QUADRATIC, self.grid)

    def test_constant_profile(self):
        np.testing.assert_array_equal(compose_scale(ConstantProfile(), self.sigma).values, 1.0)

    def test_inverse_profile(self):
        composed = compose_scale(RationalProfile(p=1), self.sigma)
        x = self.grid.axes[0]
        np.testing.assert_allclose(composed.values, 1 / (1 + x ** 2), rtol=1e-15)

    def test_homomorphism(self):
        phi, psi = GaussianProfile(rate=0.1), RationalProfile(p=2)
        product = CallableProfile(lambda t: phi(t) * psi(t))
        total = CallableProfile(lambda t: phi(t) + psi(t))
        np.testing.assert_array_equal(
            compose_scale(product, self.sigma).values,
            compose_scale(phi, self.sigma).values * compose_scale(psi, self.sigma).values,
        )
        np.testing.assert_array_equal(
            compose_scale(total, self.sigma).values,
            compose_scale(phi, self.sigma).values + compose_scale(psi, self.sigma).values,
        )

    def test_radial_functions_on_the_plane(self):
        grid = Grid.symmetric(3, 0.25, dim=2)
        sigma = Scale.from_closed_form(QUADRATIC, grid)
        composed = compose_scale(RationalProfile(p=1), sigma).values
        np.testing.assert_array_equal(composed, composed.T)
        np.testing.assert_array_equal(composed, np.rot90(composed))
        self.assertEqual(composed[12, 12], 1.0)

    def test_properness_certificate(self):
        composed = compose_scale(RationalProfile(p=1), self.sigma, proper=check_proper(self.sigma))
        np.testing.assert_array_equal(composed.values, compose_scale(RationalProfile(p=1), self.sigma).values)
        constant = Scale.from_closed_form(Constant(), self.grid)
        with self.assertRaises(SeminormError):
            compose_scale(RationalProfile(p=1), constant, proper=check_proper(constant))
        other = Scale.from_closed_form(QUADRATIC, Grid.symmetric(8, 1/8))
        with self.assertRaises(SeminormError):
            compose_scale(RationalProfile(p=1), self.sigma, proper=check_proper(other))

    def test_sampled_profile(self):
        t = np.linspace(1, 20, 400)
        profile = SampledProfile(t=list(t), values=list(1 / t))
        composed = compose_scale(profile, self.sigma)
        np.testing.assert_allclose(composed.values, 1 / self.sigma.values, atol=10 * profile.interpolation_error() + 1e-12)
        with self.assertRaises(SeminormError):
            compose_scale(SampledProfile(t=[1, 2], values=[1, 0.5]), self.sigma)

    def test_parse_profile(self):
        self.assertIsInstance(parse_profile({"name": "gaussian", "rate": 2}), GaussianProfile)
        with self.assertRaises(ValueError):
            parse_profile({"name": "sampled", "t": [2, 1], "values": [0, 0]})

    def test_chain_rule_certificate(self):
        smooth = mollify_scale(self.sigma)
        cert = chain_rule_certificate(RationalProfile(p=1), smooth.scale, smooth.derivative)
        self.assertTrue(cert.passed)
        weighted = chain_rule_certificate(GaussianProfile(), smooth.scale, smooth.derivative, l=3)
        self.assertTrue(weighted.passed)
        with self.assertRaises(SeminormError):
            chain_rule_certificate(CallableProfile(np.sqrt), smooth.scale, smooth.derivative)


class DecayReportTest(SimpleTestCase):

    def setUp(self):
        self.grid = Grid.symmetric(8, 1/8)
        self.sigma = Scale.from_closed_form(QUADRATIC, self.grid)

    def test_gaussian_is_consistent(self):
        report = decay_report(sample(gaussian, self.grid), self.sigma, d_max=6, l_max=2)
        self.assertEqual(report.verdict, Verdict.CONSISTENT)
        self.assertIsNone(report.witness)
        self.assertEqual(len(report.entries), 21)
        self.assertAlmostEqual(report.value(0, [0]), 1.0)
        self.assertGreater(report.decay_exponents["+x0"], 6)

    def test_rational_is_inconsistent_at_two(self):
        report = decay_report(sample(lambda x: 1 / (1 + x ** 2), self.grid), self.sigma)
        self.assertEqual(report.verdict, Verdict.INCONSISTENT)
        self.assertEqual(report.witness.d, 2)
        self.assertEqual(report.witness.gamma, [0])
        self.assertAlmostEqual(report.decay_exponents["-x0"], 1.0, places=6)

    def test_constant_is_inconsistent_at_one(self):
        report = decay_report(sample(lambda x: 1 + 0 * x, self.grid), self.sigma)
        self.assertFalse(report.consistent)
        self.assertEqual(report.witness.d, 1)

    def test_serialization(self):
        report = decay_report(sample(gaussian, self.grid), self.sigma, d_max=1, l_max=1)
        reloaded = DecayReport.parse_raw(report.to_json())
        self.assertEqual(reloaded.verdict, Verdict.CONSISTENT)
        lines = report.to_csv().splitlines()
        self.assertEqual(lines[0], "d,gamma,value,growing")
        self.assertEqual(len(lines), 1 + 4)

    def test_inconsistent_needs_witness(self):
        report = decay_report(sample(gaussian, self.grid), self.sigma, d_max=0, l_max=0)
        data = report.dict()
        data["verdict"] = "inconsistent"
        with self.assertRaises(ValueError):
            DecayReport.parse_obj(data)
