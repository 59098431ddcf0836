"""
Tests for the classification service: worked examples, degeneracy paths and
certified unit-circle counts.
"""
import mpmath
import numpy as np
import sympy
from django.test import TestCase
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.django import TestCase as PropertyTestCase

from dynamics.exceptions import ContractViolation
from dynamics.services.classify_service import (
    classify,
    classify_matrix,
    is_cyclotomic,
    is_degenerate,
    multiplicative_independence,
)
from dynamics.services.poly_service import IntPolynomial, count_unit_circle_roots, poly_parse

X = sympy.Symbol('x')


def sympy_poly(coeffs):
    return sympy.Poly(list(reversed(coeffs)), X)


def degeneracy_fixtures():
    """Irreducible monic fixtures of degree 2..8, seeded, plus the worked examples."""
    fixtures = [
        (-1, 0, -1, 0, 1),          # u^4 - u^2 - 1
        (1, -1, -1, -1, 1),
        (1, -1, -1, -1, -1, -1, 1),
        (1, -1, 1),                 # Phi_6
        (1, 0, 1),                  # Phi_4
        (-2, 0, 1),
        (-1, 0, 1, 0, 1),           # u^4 + u^2 - 1
    ]
    rng = np.random.default_rng(2024)
    quota = {2: 10, 3: 10, 4: 12, 5: 8, 6: 6, 7: 3, 8: 3}
    for degree, wanted in quota.items():
        found = 0
        while found < wanted:
            coeffs = tuple(int(v) for v in rng.integers(-3, 4, size=degree)) + (1,)
            if coeffs[0] == 0 or coeffs in fixtures:
                continue
            if not sympy_poly(coeffs).is_irreducible:
                continue
            fixtures.append(coeffs)
            found += 1
    return fixtures


class WorkedExampleTests(TestCase):
    """Tests for the classification of the worked examples"""

    def test_degree_four_example(self):
        """Test u^4 - u^3 - u^2 - u + 1"""
        report = classify(poly_parse("u^4 - u^3 - u^2 - u + 1"))
        self.assertTrue(report.irreducible)
        self.assertTrue(report.ergodic)
        self.assertFalse(report.expansive)
        self.assertTrue(report.algebraic_unit)
        self.assertTrue(report.totally_irreducible)
        self.assertEqual(report.s0_count, 1)
        self.assertEqual(report.central_real_dim, 2)
        self.assertEqual(report.real_place_count, 2)
        self.assertEqual(report.complex_place_count, 1)
        self.assertEqual(report.finite_place_primes, ())

    def test_degree_six_example(self):
        """Test u^6 - u^5 - u^4 - u^3 - u^2 - u + 1 has two unit-circle pairs"""
        report = classify(poly_parse("u^6 - u^5 - u^4 - u^3 - u^2 - u + 1"))
        self.assertTrue(report.irreducible)
        self.assertEqual(report.s0_count, 2)
        self.assertEqual(report.central_real_dim, 4)
        self.assertFalse(report.expansive)

    def test_solenoid_example(self):
        """Test 5u^2 - 6u + 5: roots 3/5 +- 4i/5, non-unit with place 5"""
        report = classify(poly_parse("5u^2 - 6u + 5"))
        self.assertTrue(report.ergodic)
        self.assertFalse(report.expansive)
        self.assertFalse(report.algebraic_unit)
        self.assertEqual(report.s0_count, 1)
        self.assertEqual(report.finite_place_primes, (5,))
        self.assertTrue(any("solenoid" in note for note in report.notes))

    def test_non_self_inversive_example(self):
        """Test 6u^4 + 3u^3 + 10u^2 + 6u + 6 has no unit-circle roots"""
        report = classify(poly_parse("6u^4 + 3u^3 + 10u^2 + 6u + 6"))
        self.assertFalse(report.is_self_inversive)
        self.assertEqual(report.s0_count, 0)
        self.assertTrue(any("not self-inversive" in note for note in report.notes))

    def test_cyclotomic_is_not_ergodic(self):
        """Test u^2 + u + 1"""
        report = classify(IntPolynomial((1, 1, 1)))
        self.assertFalse(report.ergodic)
        self.assertTrue(is_cyclotomic(IntPolynomial((1, 1, 1))))
        self.assertFalse(is_cyclotomic(IntPolynomial((1, -1, -1, -1, 1))))

    def test_hyperbolic_is_expansive(self):
        """Test the cat map polynomial u^2 - 3u + 1"""
        report = classify(IntPolynomial((1, -3, 1)))
        self.assertTrue(report.expansive)
        self.assertEqual(report.s0_count, 0)

    def test_degree_one_roots_on_circle_are_not_expansive(self):
        """Test u - 1 and u + 1 are cyclotomic and not expansive"""
        for text in ("u - 1", "u + 1"):
            report = classify(poly_parse(text))
            self.assertTrue(report.irreducible)
            self.assertFalse(report.ergodic)
            self.assertFalse(report.expansive)
            self.assertTrue(report.totally_irreducible)
            self.assertEqual(report.s0_count, 0)
            self.assertEqual(report.real_place_count, 1)

    def test_degree_one_off_circle_is_expansive(self):
        """Test u - 2 is ergodic and expansive but not a unit"""
        report = classify(poly_parse("u - 2"))
        self.assertTrue(report.ergodic)
        self.assertTrue(report.expansive)
        self.assertFalse(report.algebraic_unit)
        self.assertEqual(report.finite_place_primes, (2,))

    def test_reducible_with_real_unit_root(self):
        """Test (u - 1)(u^2 - 3u + 1) has no circle pairs yet is not expansive"""
        report = classify(poly_parse("u^3 - 4u^2 + 4u - 1"))
        self.assertFalse(report.irreducible)
        self.assertEqual(report.s0_count, 0)
        self.assertFalse(report.expansive)
        self.assertFalse(report.ergodic)

    def test_negative_leading_coefficient_normalised(self):
        """Test -f classifies like f and says so"""
        report = classify(IntPolynomial((-1, 1, 1, 1, -1)))
        self.assertEqual(report.input, IntPolynomial((1, -1, -1, -1, 1)))
        self.assertEqual(report.s0_count, 1)
        self.assertIn("leading coefficient was negative; input negated", report.notes)

    def test_reducible_input(self):
        """Test (u^2 + 1)(u^2 - 3u + 1) takes the generic path"""
        f = IntPolynomial((1, 0, 1)) * IntPolynomial((1, -3, 1))
        report = classify(f)
        self.assertFalse(report.irreducible)
        self.assertFalse(report.ergodic)
        self.assertFalse(report.totally_irreducible)
        self.assertEqual(report.s0_count, 1)

    def test_preconditions(self):
        """Test zero constant term and non-primitive input raise"""
        with self.assertRaises(ContractViolation):
            classify(IntPolynomial((0, 1, 1)))
        with self.assertRaises(ContractViolation):
            classify(IntPolynomial((2, 4, 2)))
        with self.assertRaises(ContractViolation):
            classify(IntPolynomial((3,)))

    def test_classify_matrix(self):
        """Test a companion matrix classifies like its polynomial"""
        report = classify_matrix([[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [-1, 1, 1, 1]])
        self.assertEqual(report.s0_count, 1)
        self.assertTrue(report.notes[-1].startswith("characteristic polynomial"))

    def test_classify_one_by_one_matrices(self):
        """Test the automorphisms x -> x and x -> -x of the circle"""
        for matrix in ([[1]], [[-1]]):
            report = classify_matrix(matrix)
            self.assertFalse(report.expansive)
            self.assertFalse(report.ergodic)
            self.assertEqual(report.s0_count, 0)
        self.assertTrue(classify_matrix([[3]]).expansive)

    def test_report_serialises(self):
        """Test to_dict carries every verdict"""
        data = classify(IntPolynomial((1, -1, -1, -1, 1))).to_dict()
        self.assertEqual(data['input']['coeffs'], [1, -1, -1, -1, 1])
        self.assertEqual(data['s0_count'], 1)
        self.assertIn('finite_place_primes', data)


class DegeneracyTests(TestCase):
    """Tests for the two degeneracy oracles"""

    def test_known_degenerate(self):
        """Test u^4 - u^2 - 1 has roots r and -r"""
        f = IntPolynomial((-1, 0, -1, 0, 1))
        self.assertTrue(is_degenerate(f))
        self.assertTrue(is_degenerate(f, method='graeffe'))
        self.assertFalse(classify(f).totally_irreducible)

    def test_example_not_degenerate(self):
        """Test the degree-four example is totally irreducible"""
        f = IntPolynomial((1, -1, -1, -1, 1))
        self.assertFalse(is_degenerate(f))
        self.assertTrue(multiplicative_independence(f))

    def test_paths_agree_on_fixtures(self):
        """Test the resultant and Graeffe paths agree on every fixture"""
        fixtures = degeneracy_fixtures()
        self.assertGreaterEqual(len(fixtures), 50)
        for coeffs in fixtures:
            f = IntPolynomial(coeffs)
            with self.subTest(f=str(f)):
                self.assertEqual(is_degenerate(f, 'resultant'), is_degenerate(f, 'graeffe'))

    def test_rejects_reducible_and_unknown_method(self):
        """Test preconditions"""
        with self.assertRaises(ContractViolation):
            is_degenerate(IntPolynomial((-1, 0, 0, 0, 1)))
        with self.assertRaises(ContractViolation):
            is_degenerate(IntPolynomial((1, -1, -1, -1, 1)), method='fourier')

    def test_independence_for_two_places(self):
        """Test the degree-six example rotates independently"""
        self.assertTrue(multiplicative_independence(IntPolynomial((1, -1, -1, -1, -1, -1, 1))))


class UnitCircleCertificateTests(PropertyTestCase):
    """Tests for Sturm-certified unit-circle counting"""

    # Feature: classification, Property 1: Certified count matches high-precision roots
    @given(
        half=st.lists(st.integers(min_value=-5, max_value=5), min_size=1, max_size=6),
        middle=st.integers(min_value=-5, max_value=5),
        anti=st.booleans(),
        odd=st.booleans(),
    )
    @settings(max_examples=200, deadline=None)
    def test_count_matches_numeric_roots(self, half, middle, anti, odd):
        """
        Property 1: Certified count matches high-precision roots
        For any squarefree self-inversive polynomial of degree <= 12, the
        Sturm-certified count of unit-circle pairs equals the count from
        256-bit numeric root isolation.
        """
        assume(half[0] != 0)
        sign = -1 if anti else 1
        centre = [] if odd else [0 if anti else middle]
        coeffs = half + centre + [sign * v for v in reversed(half)]
        p = sympy_poly(coeffs)
        assume(p.gcd(p.diff(X)).degree() == 0)

        with mpmath.workprec(256):
            roots = mpmath.polyroots(list(reversed(coeffs)), maxsteps=500, extraprec=256)
            tol = mpmath.mpf(10) ** -40
            numeric = sum(1 for r in roots if mpmath.im(r) > tol and abs(abs(r) - 1) < tol)

        self.assertEqual(count_unit_circle_roots(IntPolynomial(tuple(coeffs))), numeric)
