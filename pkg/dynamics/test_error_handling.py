"""
Unit tests for error handling: precision retries, run exit codes and input
parsing failures.
"""
import json
import os
import tempfile
from fractions import Fraction
from unittest.mock import Mock, patch

import numpy as np
from django.test import TestCase

from dynamics.exceptions import ContractViolation, PolynomialSyntaxError, PrecisionError
from dynamics.services.report_service import (
    EXIT_CONTRACT,
    EXIT_INTERNAL,
    EXIT_OK,
    RunConfig,
    load_input,
    parse_character,
    parse_torus_point,
    run,
)
from dynamics.utils import common_denominator, dump_json, retry_with_precision, stream_rng


class RetryWithPrecisionTests(TestCase):
    """Tests for the precision retry decorator"""

    def test_success_first_try(self):
        """Test no retry when the first attempt succeeds"""
        func = Mock(return_value='ok')
        func.__name__ = 'func'
        wrapped = retry_with_precision()(func)
        self.assertEqual(wrapped(1, precision_bits=64), 'ok')
        func.assert_called_once_with(1, precision_bits=64)

    def test_retries_with_more_bits(self):
        """Test bits grow by the backoff factor or to the error's estimate"""
        func = Mock(side_effect=[PrecisionError("low", 100), PrecisionError("low", 500), 'ok'])
        func.__name__ = 'func'
        wrapped = retry_with_precision(max_retries=3, backoff_factor=2)(func)
        self.assertEqual(wrapped(precision_bits=64), 'ok')
        self.assertEqual([c.kwargs['precision_bits'] for c in func.call_args_list], [64, 128, 500])

    def test_gives_up(self):
        """Test the last PrecisionError is raised after max_retries"""
        func = Mock(side_effect=PrecisionError("low", 10))
        func.__name__ = 'func'
        wrapped = retry_with_precision(max_retries=2)(func)
        with self.assertRaises(PrecisionError):
            wrapped(precision_bits=32)
        self.assertEqual(func.call_count, 2)

    def test_other_errors_pass_through(self):
        """Test non-precision errors are not retried"""
        func = Mock(side_effect=ContractViolation("bad input"))
        func.__name__ = 'func'
        with self.assertRaises(ContractViolation):
            retry_with_precision()(func)(precision_bits=64)
        func.assert_called_once()

    def test_default_bits_from_config(self):
        """Test the configured precision is used when none is given"""
        func = Mock(return_value=None)
        func.__name__ = 'func'
        retry_with_precision()(func)()
        self.assertEqual(func.call_args.kwargs['precision_bits'], 128)


class RunExitCodeTests(TestCase):
    """Tests for the exit codes of run()"""

    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def test_success(self):
        """Test a valid run exits with 0 and writes report and sidecar"""
        output = os.path.join(self.tmp, 'ok.json')
        result = run(RunConfig(command='classify', input='u^2+u+1', output=output))
        self.assertEqual(result.exit_code, EXIT_OK)
        self.assertTrue(os.path.exists(output))
        self.assertTrue(os.path.exists(output + '.meta.json'))
        self.assertIs(result.payload['result']['ergodic'], False)

    def test_contract_violation(self):
        """Test a precondition failure exits with 2 and writes nothing"""
        output = os.path.join(self.tmp, 'bad.json')
        result = run(RunConfig(command='classify', input='2u^2+4', output=output))
        self.assertEqual(result.exit_code, EXIT_CONTRACT)
        self.assertIn('content', result.error)
        self.assertFalse(os.path.exists(output))

    def test_internal_error(self):
        """Test unexpected exceptions exit with 1"""
        with patch('dynamics.services.report_service.build_frame', side_effect=MemoryError()):
            result = run(RunConfig(command='frame', input='u^4-u^3-u^2-u+1', output=os.path.join(self.tmp, 'f.json')))
        self.assertEqual(result.exit_code, EXIT_INTERNAL)
        self.assertTrue(result.error.startswith('MemoryError'))

    def test_precision_failure_is_internal(self):
        """Test an exhausted precision retry is not a contract violation"""
        with patch('dynamics.services.report_service.build_frame', side_effect=PrecisionError("roots too close", 4096)):
            result = run(RunConfig(command='frame', input='u^4-u^3-u^2-u+1', output=os.path.join(self.tmp, 'p.json')))
        self.assertEqual(result.exit_code, EXIT_INTERNAL)

    def test_config_validation(self):
        """Test unknown commands, formats and non-positive budgets raise"""
        with self.assertRaises(ContractViolation):
            RunConfig(command='plot')
        with self.assertRaises(ContractViolation):
            RunConfig(command='classify', format='xml')
        with self.assertRaises(ContractViolation):
            RunConfig(command='density', point_budget=0)

    def test_config_records_effective_budgets(self):
        """Test the envelope config carries the configured defaults"""
        config = RunConfig(command='classify', input='u-2').to_dict()
        self.assertEqual(config['point_budget'], 10**7)
        self.assertEqual(config['trials'], 120)


class InputParsingTests(TestCase):
    """Tests for polynomial, matrix, point and character inputs"""

    def test_polynomial_text(self):
        """Test plain polynomial text"""
        f, matrix = load_input('u^2-3u+1')
        self.assertEqual(f.coeffs, (1, -3, 1))
        self.assertIsNone(matrix)

    def test_json_inputs(self):
        """Test coefficient and matrix JSON objects"""
        f, _ = load_input('{"coeffs": [1, -3, 1]}')
        self.assertEqual(f.coeffs, (1, -3, 1))
        f, matrix = load_input('{"matrix": [[2, 1], [1, 1]]}')
        self.assertEqual(matrix, [[2, 1], [1, 1]])
        self.assertEqual(f.degree, 2)

    def test_bad_inputs(self):
        """Test empty, malformed and unreadable inputs raise"""
        with self.assertRaises(ContractViolation):
            load_input('  ')
        with self.assertRaises(ContractViolation):
            load_input('{"matrix": [1, 2]}')
        with self.assertRaises(ContractViolation):
            load_input('{not json')
        with self.assertRaises(ContractViolation):
            load_input(os.path.join(tempfile.mkdtemp(), 'missing.json'))
        with self.assertRaises(PolynomialSyntaxError) as ctx:
            load_input('u^2 + + 1')
        self.assertEqual(ctx.exception.position, 6)

    def test_json_file(self):
        """Test a file path is read"""
        path = os.path.join(tempfile.mkdtemp(), 'f.json')
        with open(path, 'w') as fh:
            json.dump({'coeffs': [1, -1, -1, -1, 1]}, fh)
        f, _ = load_input(path)
        self.assertEqual(f.degree, 4)

    def test_torus_points(self):
        """Test exact and float coordinates"""
        x = parse_torus_point('1/3, 0, 2/7, 1', 4)
        self.assertEqual(x.coords[0], Fraction(1, 3))
        self.assertTrue(x.is_exact)
        self.assertFalse(parse_torus_point('0.5,0.25', 2).is_exact)
        self.assertEqual(parse_torus_point(None, 3).coords, (0, 0, 0))
        with self.assertRaises(ContractViolation):
            parse_torus_point('1/2', 2)
        with self.assertRaises(ContractViolation):
            parse_torus_point('a,b', 2)

    def test_characters(self):
        """Test character parsing and length checks"""
        self.assertEqual(parse_character('1,0,-2', 3).a, (1, 0, -2))
        with self.assertRaises(ContractViolation):
            parse_character('1,0', 3)
        with self.assertRaises(ContractViolation):
            parse_character('1,x,0', 3)


class DeterminismTests(TestCase):
    """Tests for seeded streams and serialisation"""

    def test_streams_are_independent_and_reproducible(self):
        """Test equal (seed, stream) pairs agree and different streams differ"""
        a = stream_rng(7, 'torus.make_separated').random(5)
        b = stream_rng(7, 'torus.make_separated').random(5)
        c = stream_rng(7, 'measures.sample_invariant/haar').random(5)
        np.testing.assert_array_equal(a, b)
        self.assertFalse(np.array_equal(a, c))

    def test_dump_json_is_canonical(self):
        """Test key order and number formatting are fixed"""
        text = dump_json({'b': 0.1, 'a': [Fraction(1, 3), 2 + 1j, np.int64(4)], 'c': {5, 3}})
        self.assertEqual(json.loads(text), {'a': ['1/3', [2.0, 1.0], 4], 'b': 0.1, 'c': [3, 5]})
        self.assertLess(text.index('"a"'), text.index('"b"'))
        self.assertTrue(text.endswith('\n'))

    def test_common_denominator(self):
        """Test the shared denominator of exact coordinates"""
        self.assertEqual(common_denominator([Fraction(1, 4), Fraction(5, 6), Fraction(2)]), 12)
        self.assertEqual(common_denominator([]), 1)
