"""
Utility functions shared by the dynamics services.
"""
import csv
import dataclasses
import hashlib
import json
import logging
import os
from fractions import Fraction
from functools import wraps
from math import lcm

import mpmath
import numpy as np
from django.conf import settings

from dynamics.exceptions import PrecisionError

logger = logging.getLogger(__name__)


def get_config(key):
    """Read one entry of settings.DYNAMICS_CONFIG."""
    return settings.DYNAMICS_CONFIG[key]


def stream_rng(seed, stream):
    """
    Named random stream derived from the run seed.

    Every operation draws from its own stream ("module.op", optionally with a
    worker index appended), so results do not depend on the order in which
    operations or workers run.

    Args:
        seed: 64-bit run seed
        stream: stream name, e.g. "torus.make_separated"

    Returns:
        numpy.random.Generator
    """
    digest = hashlib.sha256(stream.encode('utf-8')).digest()
    stream_key = int.from_bytes(digest[:8], 'little')
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), stream_key]))


def common_denominator(fractions):
    """Least common multiple of the denominators of some Fractions (1 when empty)."""
    return lcm(1, *(v.denominator for v in fractions))


def retry_with_precision(max_retries=3, backoff_factor=2):
    """
    Decorator to retry a precision-sensitive computation with more bits.

    The wrapped function must accept a ``precision_bits`` keyword argument.
    On PrecisionError the precision is raised to the larger of
    ``precision_bits * backoff_factor`` and the error's own estimate.

    Args:
        max_retries: Maximum number of attempts (default: 3)
        backoff_factor: Multiplier for precision between attempts (default: 2)

    Raises:
        PrecisionError: If all attempts fail
    """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, precision_bits=None, **kwargs):
            bits = precision_bits or get_config('precision_bits')
            last_exception = None

            for attempt in range(max_retries):
                try:
                    return func(*args, precision_bits=bits, **kwargs)
                except PrecisionError as e:
                    last_exception = e
                    attempt_num = attempt + 1
                    if attempt_num < max_retries:
                        new_bits = max(bits * backoff_factor, e.required_bits)
                        logger.warning(
                            f"{func.__name__} failed at {bits} bits (attempt {attempt_num}/{max_retries}): {e}. "
                            f"Retrying with {new_bits} bits..."
                        )
                        bits = new_bits
                    else:
                        logger.error(
                            f"{func.__name__} failed after {max_retries} attempts: {e}"
                        )

            raise last_exception

        return wrapper
    return decorator


# -----------------------------
# Provenance wrappers
# -----------------------------

def exact(value):
    return {'value': to_jsonable(value), 'provenance': 'exact'}


def quadrature(value, error):
    return {'value': to_jsonable(value), 'provenance': f'quadrature({float(error):.3e})'}


def fitted(value, seed, samples):
    return {'value': to_jsonable(value), 'provenance': f'fitted({int(seed)},{int(samples)})'}


def sampled(value, seed, count):
    return {'value': to_jsonable(value), 'provenance': f'sampled({int(seed)},{int(count)})'}


def to_jsonable(obj):
    """
    Convert results into plain JSON types.

    Floats are kept as Python floats (repr round-trips), complex numbers
    become [re, im], mpmath numbers become decimal strings, Fractions become
    "p/q" strings unless integral.
    """
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, Fraction):
        return obj.numerator if obj.denominator == 1 else f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, mpmath.mpf):
        return mpmath.nstr(obj, mpmath.mp.dps, min_fixed=-mpmath.inf, max_fixed=mpmath.inf)
    if isinstance(obj, mpmath.mpc):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, 'to_dict'):
            return to_jsonable(obj.to_dict())
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_jsonable(v) for v in items]
    raise TypeError(f"Cannot serialise {type(obj).__name__}")


def dump_json(payload):
    """Deterministic JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(to_jsonable(payload), sort_keys=True, indent=2) + "\n"


def write_json(path, payload):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as fh:
        fh.write(dump_json(payload))


def write_csv(path, header, rows):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
