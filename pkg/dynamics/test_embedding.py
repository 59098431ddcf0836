"""
Tests for central frames: places, angles, the W0 isometry and coordinate
round trips.
"""
from math import sqrt

import mpmath
import numpy as np
from django.test import TestCase
from unittest.mock import patch

from dynamics.exceptions import ContractViolation, PrecisionError
from dynamics.services.embedding_service import (
    build_frame,
    central_norm,
    central_rotation,
    companion,
    complement_coordinates,
    coordinates,
    frame_to_json,
    from_real,
    lift,
    to_real,
)
from dynamics.services.poly_service import IntPolynomial

EXAMPLE_A = IntPolynomial((1, -1, -1, -1, 1))
SALEM_SIX = IntPolynomial((1, -1, -1, -1, -1, -1, 1))


class CentralFrameTests(TestCase):
    """Tests for the degree-four example frame"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.frame = build_frame(EXAMPLE_A, precision_bits=128)

    def test_shape_and_angle(self):
        """Test one unit-circle place with 2 cos(phi) = (1 - sqrt 13)/2"""
        frame = self.frame
        self.assertEqual(frame.n, 4)
        self.assertEqual(frame.s, 1)
        self.assertEqual(frame.basis_W0.shape, (4, 2))
        self.assertEqual(frame.basis_complement.shape, (4, 2))
        self.assertAlmostEqual(2 * np.cos(frame.angles_float[0]), (1 - sqrt(13)) / 2, places=12)
        with mpmath.workprec(128):
            exact = mpmath.acos((1 - mpmath.sqrt(13)) / 4)
            self.assertLess(abs(frame.angles[0] - exact), mpmath.mpf(2) ** -100)

    def test_places(self):
        """Test place bookkeeping: one unit place, two real places"""
        self.assertEqual(self.frame.places[0], ('complex', 0))
        self.assertEqual(sum(1 for kind, _ in self.frame.places if kind == 'real'), 2)
        self.assertLess(self.frame.residual, 2.0 ** -64)

    def test_lift_is_equivariant(self):
        """Test A lift(w) = lift(xi w)"""
        rng = np.random.default_rng(1)
        w = rng.normal(size=(50, 1)) + 1j * rng.normal(size=(50, 1))
        xi = central_rotation(self.frame, 1)
        left = lift(self.frame, w) @ self.frame.matrix.T
        right = lift(self.frame, w * xi)
        np.testing.assert_allclose(left, right, atol=1e-9)

    def test_isometry_and_round_trip(self):
        """Test |A w| = |w| and coordinates(lift(w)) = w over 1000 random w"""
        rng = np.random.default_rng(5)
        w = (rng.normal(size=(1000, 1)) + 1j * rng.normal(size=(1000, 1))) * 10.0 ** rng.uniform(-3, 3, size=(1000, 1))
        y = lift(self.frame, w)
        image = coordinates(self.frame, y @ self.frame.matrix.T)
        scale = np.maximum(1.0, np.abs(w[:, 0]))
        self.assertLessEqual(
            np.max(np.abs(central_norm(self.frame, image) - central_norm(self.frame, w)) / scale), 1e-9
        )
        self.assertLessEqual(np.max(np.abs(coordinates(self.frame, y) - w)[:, 0] / scale), 1e-9)

    def test_complement_is_orthogonal_to_lift(self):
        """Test the complement coordinates of a central vector vanish"""
        w = np.array([[0.3 - 1.7j]])
        np.testing.assert_allclose(complement_coordinates(self.frame, lift(self.frame, w)), 0.0, atol=1e-9)

    def test_real_interleaving(self):
        """Test to_real and from_real are inverse"""
        w = np.array([1 + 2j, -3.5j])
        np.testing.assert_array_equal(to_real(w), [1.0, 2.0, 0.0, -3.5])
        np.testing.assert_array_equal(from_real(to_real(w)), w)

    def test_dimension_mismatch(self):
        """Test wrong central dimension raises"""
        with self.assertRaises(ContractViolation):
            lift(self.frame, np.zeros(2, dtype=complex))
        with self.assertRaises(ContractViolation):
            coordinates(self.frame, np.zeros(3))

    def test_frame_export(self):
        """Test the JSON export carries angle strings and bases"""
        data = frame_to_json(self.frame)
        self.assertEqual(data['s'], 1)
        self.assertEqual(data['matrix'], [[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [-1, 1, 1, 1]])
        self.assertEqual(len(data['basis_W0']), 2)
        self.assertTrue(data['angles'][0].startswith('2.'))


class TwoPlaceFrameTests(TestCase):
    """Tests for the degree-six frame"""

    def test_two_unit_places(self):
        """Test s = 2 and the rotation acts place by place"""
        frame = build_frame(SALEM_SIX)
        self.assertEqual(frame.s, 2)
        w = np.array([1.0 + 0.5j, -0.25 + 2j])
        xi = central_rotation(frame, 3)
        np.testing.assert_allclose(
            coordinates(frame, lift(frame, w) @ np.linalg.matrix_power(frame.matrix, 3).T), w * xi, atol=1e-9,
        )


class FramePreconditionTests(TestCase):
    """Tests for inputs that have no central frame"""

    def test_rejected_inputs(self):
        """Test hyperbolic, cyclotomic, non-unit and reducible inputs raise"""
        for coeffs in [(1, -3, 1), (1, 1, 1), (5, -6, 5), (1, 0, 2, 0, 1)]:
            with self.subTest(coeffs=coeffs):
                with self.assertRaises(ContractViolation):
                    build_frame(IntPolynomial(coeffs))

    def test_companion_requires_monic(self):
        """Test the companion matrix of a non-monic polynomial raises"""
        with self.assertRaises(ContractViolation):
            companion(IntPolynomial((1, 2)))
        self.assertEqual(companion(IntPolynomial((3, 1))), ((-3,),))

    def test_precision_retry(self):
        """Test a PrecisionError on the first attempt is retried with more bits"""
        from dynamics.services import embedding_service

        calls = []
        original = embedding_service._unit_angles

        def flaky(f, bits):
            calls.append(bits)
            if len(calls) == 1:
                raise PrecisionError("forced", 300)
            return original(f, bits)

        with patch.object(embedding_service, '_unit_angles', side_effect=flaky):
            frame = build_frame(EXAMPLE_A, precision_bits=64)
        self.assertEqual(calls, [64, 300])
        self.assertEqual(frame.precision_bits, 300)
