from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings as hypothesis_settings, strategies as st
import numpy as np

from .demos import check_l1_counterexample, check_l2_variant, multiplier_escape_demo
from .sequences import FiniteSequence, half_norm, l1_norm, l2_norm


entries = st.lists(st.floats(min_value=-1, max_value=1, allow_nan=False), min_size=1, max_size=20)


class SequenceTest(SimpleTestCase):

    def test_zero(self):
        self.assertEqual(half_norm(FiniteSequence.zero()), 0.0)
        self.assertEqual(l1_norm(FiniteSequence.zero()), 0.0)

    def test_delta(self):
        self.assertEqual(half_norm(FiniteSequence.delta()), 1.0)
        self.assertEqual(l1_norm(FiniteSequence.delta()), 1.0)

    def test_two_quarters(self):
        s = FiniteSequence([0.25, 0.25], 3)
        self.assertEqual(half_norm(s), 1.0)
        self.assertEqual(l1_norm(s), 0.5)

    def test_alignment(self):
        a = FiniteSequence([1, 2, 3], -1)
        b = FiniteSequence([10, 20], 1)
        total = a + b
        self.assertEqual(total.offset, -1)
        np.testing.assert_array_equal(total.values, [1, 2, 13, 20])
        product = a * b
        self.assertEqual(product.offset, 1)
        np.testing.assert_array_equal(product.values, [30])
        self.assertEqual(len((a * FiniteSequence([1], 5)).values), 0)

    @hypothesis_settings(max_examples=100, deadline=None)
    @given(entries, entries, st.integers(min_value=-10, max_value=10))
    def test_product_inequality(self, a, b, shift):
        phi, psi = FiniteSequence(a), FiniteSequence(b, shift)
        bound = l1_norm(phi) * l1_norm(psi)
        self.assertLessEqual(half_norm(phi * psi), bound * (1 + 1e-12) + 1e-300)

    @hypothesis_settings(max_examples=100, deadline=None)
    @given(entries, entries, st.integers(min_value=-10, max_value=10))
    def test_quasi_triangle(self, a, b, shift):
        phi, psi = FiniteSequence(a), FiniteSequence(b, shift)
        self.assertLessEqual(half_norm(phi + psi), 2 * (half_norm(phi) + half_norm(psi)) * (1 + 1e-12) + 1e-300)

    @hypothesis_settings(max_examples=100, deadline=None)
    @given(entries, entries)
    def test_l2_products_are_l1(self, a, b):
        phi, psi = FiniteSequence(a), FiniteSequence(b)
        self.assertLessEqual(l1_norm(phi * psi), l2_norm(phi) * l2_norm(psi) * (1 + 1e-12) + 1e-300)


class DemoTest(SimpleTestCase):

    def test_l1_counterexample(self):
        certificate = check_l1_counterexample(1000, 50, 42)
        self.assertTrue(certificate.passed)
        witness = certificate.details["witness"]
        self.assertEqual(witness["windows"], [100, 1000, 10000])
        self.assertGreaterEqual(witness["half"][-1] - witness["half"][0], 2.0)
        self.assertLessEqual(witness["l1"][-1] - witness["l1"][0], 0.02)
        self.assertLess(witness["l1"][-1], 1.645)

    def test_seeded(self):
        first = check_l1_counterexample(50, 10, 7)
        second = check_l1_counterexample(50, 10, 7)
        self.assertEqual(first.json(), second.json())

    @override_settings(DEFAULT_SEED=3)
    def test_default_seed(self):
        self.assertEqual(check_l1_counterexample(5, 5).constant("seed"), 3)

    def test_l2_variant(self):
        certificate = check_l2_variant(200, 50, 42)
        self.assertTrue(certificate.passed)
        witness = certificate.details["witness"]
        self.assertLess(witness["l2_squared"][-1], 1.645)
        self.assertGreaterEqual(witness["l1"][-1] - witness["l1"][0], 2.0)

    def test_multiplier_escape(self):
        report = multiplier_escape_demo([0, 1, 100])
        self.assertEqual(report.rows[0].inf_beyond, 0.0)
        self.assertAlmostEqual(report.rows[1].inf_beyond, 0.5, places=15)
        self.assertGreaterEqual(report.rows[2].value_at_R, 0.9999)
        self.assertGreaterEqual(report.limit, 0.9999)
        for row in report.rows:
            self.assertAlmostEqual(row.inf_beyond, row.expected, places=14)
            self.assertLessEqual(row.identity_residual, 1e-15)
