"""
Tests for the torus automorphism, central leaves, separated sets and
inverse orbits.
"""
import csv
import os
import tempfile
from fractions import Fraction

import numpy as np
from django.test import TestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.django import TestCase as PropertyTestCase

from dynamics.exceptions import ContractViolation, ConvergenceError
from dynamics.services.embedding_service import build_frame, central_rotation
from dynamics.services.poly_service import IntPolynomial
from dynamics.services.torus_service import (
    SeparatedSet,
    TorusPoint,
    apply_alpha,
    exact_inverse_orbit,
    integer_inverse,
    integer_power,
    inverse_orbit_union,
    iter_inverse_orbit_union,
    leaf_point,
    leaf_points,
    make_separated,
    pairwise_min_distance,
    periodic_orbit,
    rotation_phases,
    write_point_cloud_csv,
)

EXAMPLE_A = IntPolynomial((1, -1, -1, -1, 1))


def torus_gap(x, y):
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) % 1.0
    return float(np.max(np.minimum(d, 1.0 - d)))


rationals = st.fractions(min_value=0, max_value=1, max_denominator=97)


class FrameMixin:
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.frame = build_frame(EXAMPLE_A)


class AlphaTests(FrameMixin, PropertyTestCase):
    """Tests for exact powers of the automorphism"""

    # Feature: torus-dynamics, Property 1: Powers compose exactly
    @given(
        coords=st.lists(rationals, min_size=4, max_size=4),
        m1=st.integers(min_value=-40, max_value=40),
        m2=st.integers(min_value=-40, max_value=40),
    )
    @settings(max_examples=60, deadline=None)
    def test_group_law(self, coords, m1, m2):
        """
        Property 1: Powers compose exactly
        For any rational point x and integers m1, m2,
        alpha^m2(alpha^m1 x) = alpha^(m1 + m2) x with exact equality.
        """
        x = TorusPoint(tuple(coords))
        self.assertEqual(
            apply_alpha(self.frame, apply_alpha(self.frame, x, m1), m2),
            apply_alpha(self.frame, x, m1 + m2),
        )

    def test_inverse_matrix(self):
        """Test the integer inverse of the companion matrix"""
        A = np.array(self.frame.A, dtype=np.int64)
        inverse = np.array(integer_inverse(self.frame.A), dtype=np.int64)
        np.testing.assert_array_equal(A @ inverse, np.eye(4, dtype=np.int64))
        self.assertEqual(integer_power(self.frame.A, -1), integer_inverse(self.frame.A))

    def test_power_limit(self):
        """Test |m| above 2^20 raises"""
        with self.assertRaises(ContractViolation):
            integer_power(self.frame.A, 2**20 + 1)

    def test_dimension_mismatch(self):
        """Test a point of the wrong dimension raises"""
        with self.assertRaises(ContractViolation):
            apply_alpha(self.frame, TorusPoint((Fraction(1, 2),) * 3), 1)

    def test_float_points_reduce_once(self):
        """Test float input is moved exactly and rounded after the mod"""
        x = TorusPoint((0.1, 0.2, 0.3, 0.4))
        y = apply_alpha(self.frame, x, 1)
        self.assertFalse(y.is_exact)
        expected = np.mod(np.array(self.frame.A, dtype=float) @ x.as_array(), 1.0)
        self.assertLess(torus_gap(y.as_array(), expected), 1e-12)

    def test_exact_inverse_orbit(self):
        """Test the iterated inverse orbit matches alpha^-k"""
        x = TorusPoint((Fraction(1, 3), Fraction(2, 7), Fraction(0), Fraction(5, 11)))
        orbit = exact_inverse_orbit(self.frame, x, 12)
        for k, point in enumerate(orbit, start=1):
            self.assertEqual(point, apply_alpha(self.frame, x, -k))

    def test_periodic_orbit(self):
        """Test the orbit of (1/5, 0, 0, 0) closes and is duplicate-free"""
        x = TorusPoint((Fraction(1, 5), Fraction(0), Fraction(0), Fraction(0)))
        orbit = periodic_orbit(self.frame, x)
        self.assertEqual(orbit[0], x)
        self.assertEqual(len(set(orbit)), len(orbit))
        self.assertEqual(apply_alpha(self.frame, orbit[-1], 1), x)
        self.assertTrue(all(all(v.denominator in (1, 5) for v in p.coords) for p in orbit))

    def test_periodic_orbit_limits(self):
        """Test float points and small caps raise"""
        with self.assertRaises(ContractViolation):
            periodic_orbit(self.frame, TorusPoint((0.2, 0.0, 0.0, 0.0)))
        x = TorusPoint((Fraction(1, 97), Fraction(0), Fraction(0), Fraction(0)))
        with self.assertRaises(ConvergenceError):
            periodic_orbit(self.frame, x, max_period=1)


class LeafTests(FrameMixin, TestCase):
    """Tests for central leaves"""

    def test_equivariance(self):
        """Test alpha(x + pi(w)) = alpha(x) + pi(xi w)"""
        rng = np.random.default_rng(3)
        xi = central_rotation(self.frame, 1)
        for _ in range(50):
            x = TorusPoint.from_array(rng.uniform(size=4))
            w = rng.normal(size=1) + 1j * rng.normal(size=1)
            left = apply_alpha(self.frame, leaf_point(self.frame, x, w), 1)
            right = leaf_point(self.frame, apply_alpha(self.frame, x, 1), xi * w)
            self.assertLess(torus_gap(left.as_array(), right.as_array()), 1e-9)

    def test_leaf_points_vectorised(self):
        """Test leaf_points agrees with leaf_point row by row"""
        x = TorusPoint((0.5, 0.25, 0.125, 0.0))
        W = np.array([[0.0j], [1 + 1j], [-2.5j]])
        pts = leaf_points(self.frame, x, W)
        self.assertEqual(pts.shape, (3, 4))
        for row, w in zip(pts, W):
            self.assertLess(torus_gap(row, leaf_point(self.frame, x, w).as_array()), 1e-12)
        self.assertTrue(np.all((pts >= 0) & (pts < 1)))


class SeparatedSetTests(FrameMixin, TestCase):
    """Tests for separated point sets"""

    def test_grid_strategy(self):
        """Test the grid set has K points at least R apart"""
        A = make_separated(self.frame, 2.5, 30)
        self.assertEqual(A.K, 30)
        self.assertGreaterEqual(A.min_distance, 2.5 * (1 - 1e-12))
        self.assertAlmostEqual(pairwise_min_distance(A.points), 2.5)

    def test_greedy_random_strategy(self):
        """Test greedy-random placement is separated and seeded"""
        A = make_separated(self.frame, 1.0, 40, strategy='greedy-random', seed=9)
        B = make_separated(self.frame, 1.0, 40, strategy='greedy-random', seed=9)
        self.assertEqual(A.K, 40)
        self.assertGreaterEqual(A.min_distance, 1.0)
        np.testing.assert_array_equal(A.points, B.points)

    def test_invalid_arguments(self):
        """Test bad R, K and strategy raise"""
        with self.assertRaises(ContractViolation):
            make_separated(self.frame, 0, 5)
        with self.assertRaises(ContractViolation):
            make_separated(self.frame, 1, 0)
        with self.assertRaises(ContractViolation):
            make_separated(self.frame, 1, 5, strategy='hexagonal')
        with self.assertRaises(ContractViolation):
            SeparatedSet(points=np.array([[0j], [0.5 + 0j]]), R=1.0)

    def test_single_point(self):
        """Test one point is trivially separated"""
        self.assertEqual(pairwise_min_distance(np.array([[1j]])), np.inf)


class InverseOrbitTests(FrameMixin, TestCase):
    """Tests for inverse-orbit unions"""

    def test_union_layout(self):
        """Test rows are ordered by n then by a"""
        A = make_separated(self.frame, 3.0, 5)
        x0 = TorusPoint((Fraction(1, 7), Fraction(0), Fraction(2, 7), Fraction(0)))
        points = inverse_orbit_union(self.frame, A, x0, 6)
        self.assertEqual(points.shape, (30, 4))
        for n in (1, 4, 6):
            base = apply_alpha(self.frame, x0, -n)
            expected = leaf_points(self.frame, base, rotation_phases(self.frame, [-n])[0] * A.points)
            block = points[(n - 1) * 5:n * 5]
            for row, ref in zip(block, expected):
                self.assertLess(torus_gap(row, ref), 1e-9)

    def test_blocks_resume_from_start(self):
        """Test iteration from start > 1 continues the same union"""
        A = make_separated(self.frame, 3.0, 4)
        x0 = TorusPoint((Fraction(0),) * 4)
        full = inverse_orbit_union(self.frame, A, x0, 8)
        tail = np.concatenate([pts for _, pts in iter_inverse_orbit_union(self.frame, A, x0, 8, start=5)])
        np.testing.assert_allclose(tail, full[16:], atol=1e-12)

    def test_point_budget(self):
        """Test K*N above the budget raises"""
        A = make_separated(self.frame, 1.0, 10)
        with self.assertRaises(ContractViolation):
            inverse_orbit_union(self.frame, A, TorusPoint((0.0,) * 4), 11, point_budget=100)

    def test_point_cloud_csv(self):
        """Test the CSV export writes a header and one row per point"""
        path = os.path.join(tempfile.mkdtemp(), 'cloud.csv')
        write_point_cloud_csv(np.array([[0.1, 0.2, 0.3, 0.4], [0.5, 0.6, 0.7, 0.8]]), path)
        with open(path, newline='') as fh:
            rows = list(csv.reader(fh))
        self.assertEqual(rows[0], ['x1', 'x2', 'x3', 'x4'])
        self.assertEqual(len(rows), 3)
