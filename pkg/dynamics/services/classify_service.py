"""
Classification service: dynamical properties of the automorphism defined by
an integer polynomial (or an integer matrix through its characteristic
polynomial), decided with exact arithmetic.
"""
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from sympy import primefactors

from dynamics.exceptions import ContractViolation
from dynamics.services.poly_service import (
    IntPolynomial,
    characteristic_polynomial,
    chebyshev_reduce,
    count_unit_circle_roots,
    cyclotomic_poly,
    divides,
    exact_divide,
    indices_with_totient,
    is_irreducible,
    poly_resultant,
    real_root_count,
    self_inversive_sign,
    squarefree_part,
    sturm_count,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClassificationReport:
    input: IntPolynomial
    irreducible: bool
    ergodic: bool
    expansive: bool
    totally_irreducible: bool
    algebraic_unit: bool
    s0_count: int
    central_real_dim: int
    real_place_count: int
    complex_place_count: int
    finite_place_primes: tuple
    is_self_inversive: bool
    notes: tuple = field(default_factory=tuple)

    def to_dict(self):
        return {
            'input': {'coeffs': list(self.input.coeffs), 'text': str(self.input)},
            'irreducible': self.irreducible,
            'ergodic': self.ergodic,
            'expansive': self.expansive,
            'totally_irreducible': self.totally_irreducible,
            'algebraic_unit': self.algebraic_unit,
            's0_count': self.s0_count,
            'central_real_dim': self.central_real_dim,
            'real_place_count': self.real_place_count,
            'complex_place_count': self.complex_place_count,
            'finite_place_primes': sorted(self.finite_place_primes),
            'is_self_inversive': self.is_self_inversive,
            'notes': list(self.notes),
        }


def normalize_sign(f):
    """Negate f when its leading coefficient is negative."""
    return -f if f.leading < 0 else f


def _require_classifiable(f):
    if f.is_zero or f.degree < 1:
        raise ContractViolation("classification needs a polynomial of degree >= 1")
    if f.constant == 0:
        raise ContractViolation("zero constant term: the matrix is not invertible")
    if f.content != 1:
        raise ContractViolation(f"non-primitive input (content {f.content})")


def _require_irreducible(f, operation):
    _require_classifiable(f)
    if not is_irreducible(normalize_sign(f)):
        raise ContractViolation(f"{operation} requires an irreducible polynomial, got {f}")


# -----------------------------
# Unit-circle roots and cyclotomic test
# -----------------------------

def unit_circle_root_pairs(f):
    """
    Exact number of conjugate pairs of roots of f on the unit circle.

    Zero when f is not self-inversive, otherwise the Sturm count of the
    Chebyshev reduction on (-2, 2). Degree 1 has no such pairs.

    Args:
        f: irreducible IntPolynomial

    Returns:
        int: s0_count
    """
    if f.degree < 2:
        logger.debug(f"{f}: degree 1, no unit-circle pairs")
        return 0
    sign = self_inversive_sign(f)
    if sign == 0:
        return 0
    if sign == -1:
        return count_unit_circle_roots(f)
    return sturm_count(chebyshev_reduce(f), -2, 2)


def _is_cyclotomic_irreducible(f):
    f = normalize_sign(f)
    if f.leading != 1:
        return False
    if f.degree == 1:
        return f in (cyclotomic_poly(1), cyclotomic_poly(2))
    if 2 * unit_circle_root_pairs(f) != f.degree:
        return False
    n = f.degree
    for k in indices_with_totient(lambda phi: phi == n, n):
        if cyclotomic_poly(k) == f:
            return True
    return False


def is_cyclotomic(f):
    """
    True iff f equals a cyclotomic polynomial Phi_k.

    Args:
        f: irreducible primitive IntPolynomial

    Raises:
        ContractViolation: reducible input
    """
    _require_irreducible(f, "is_cyclotomic")
    return _is_cyclotomic_irreducible(f)


# -----------------------------
# Degeneracy (root ratios that are roots of unity)
# -----------------------------

def interpolate_integer_polynomial(xs, ys):
    """
    Newton interpolation through (xs, ys), expanded to monomial form.

    Raises:
        ArithmeticError: if the interpolant has non-integer coefficients
    """
    n = len(xs)
    table = [Fraction(y) for y in ys]
    for level in range(1, n):
        for i in range(n - 1, level - 1, -1):
            table[i] = (table[i] - table[i - 1]) / (xs[i] - xs[i - level])
    coeffs = [table[-1]]
    for j in range(n - 2, -1, -1):
        shifted = [Fraction(0)] + coeffs
        for i in range(len(coeffs)):
            shifted[i] -= xs[j] * coeffs[i]
        shifted[0] += table[j]
        coeffs = shifted
    if any(c.denominator != 1 for c in coeffs):
        raise ArithmeticError("interpolant is not an integer polynomial")
    return IntPolynomial(tuple(int(c) for c in coeffs))


def degeneracy_polynomial(f):
    """
    D(y) = Res_x(f(x), f(x*y)), whose roots are the ratios of roots of f,
    interpolated exactly at n^2 + 1 integer points.
    """
    n = f.degree
    xs = list(range(n * n + 1))
    ys = []
    for y in xs:
        scaled = IntPolynomial(tuple(c * y ** i for i, c in enumerate(f.coeffs)))
        # formal degree n in x even where the top coefficients vanish (y = 0)
        ys.append(f.leading ** (n - scaled.degree) * poly_resultant(f, scaled))
    return interpolate_integer_polynomial(xs, ys)


def _degenerate_by_resultant(f):
    n = f.degree
    quotient = degeneracy_polynomial(f)
    linear = IntPolynomial((-1, 1))
    for _ in range(n):
        try:
            quotient = exact_divide(quotient, linear)
        except ContractViolation as e:
            raise ContractViolation(f"{f} has repeated roots: (y-1)^{n} does not divide the ratio polynomial") from e
    bound = quotient.degree
    for k in indices_with_totient(lambda phi: phi <= bound, max(bound, 1)):
        if divides(cyclotomic_poly(k), quotient):
            return True, k
    return False, None


def _degenerate_by_graeffe(f):
    n = f.degree
    lead = f.leading
    # roots lead*theta_i: same ratios, integer monic polynomial
    monic = [c * lead ** (n - 1 - i) for i, c in enumerate(f.coeffs[:-1])] + [1]
    companion = np.zeros((n, n), dtype=object)
    for i in range(n - 1):
        companion[i, i + 1] = 1
    for j in range(n):
        companion[n - 1, j] = -monic[j]

    bound = n * (n - 1)
    orders = indices_with_totient(lambda phi: phi <= bound, bound)
    power = np.identity(n, dtype=int).astype(object)
    current = 0
    for k in orders:
        while current < k:
            power = power.dot(companion)
            current += 1
        graeffe = characteristic_polynomial(power.tolist())
        if poly_resultant(graeffe, graeffe.derivative()) == 0:
            return True, k
    return False, None


def is_degenerate(f, method='resultant'):
    """
    True iff two distinct roots of f have a ratio that is a root of unity.

    Args:
        f: irreducible IntPolynomial of degree >= 2
        method: 'resultant' (cyclotomic factors of the ratio polynomial) or
            'graeffe' (squarefreeness of the polynomial with roots theta^k)

    Returns:
        bool: True means f is NOT totally irreducible

    Raises:
        ContractViolation: reducible input, degree below 2, unknown method
    """
    _require_irreducible(f, "is_degenerate")
    f = normalize_sign(f)
    if f.degree < 2:
        raise ContractViolation("is_degenerate needs degree >= 2")
    if method == 'resultant':
        degenerate, order = _degenerate_by_resultant(f)
    elif method == 'graeffe':
        degenerate, order = _degenerate_by_graeffe(f)
    else:
        raise ContractViolation(f"unknown degeneracy method {method!r}")
    if degenerate:
        logger.debug(f"{f}: root ratio of order {order} ({method} path)")
    return degenerate


def multiplicative_independence(f):
    """
    Whether the unit-circle roots of f rotate independently, i.e. the closure
    of the powers of xi is the full s-torus. True iff f is ergodic and not
    degenerate; vacuously true when s0_count < 2.
    """
    _require_irreducible(f, "multiplicative_independence")
    f = normalize_sign(f)
    if unit_circle_root_pairs(f) < 2:
        logger.info(f"{f}: fewer than two unit-circle places, independence is vacuous")
        return True
    return (not _is_cyclotomic_irreducible(f)) and not _degenerate_by_resultant(f)[0]


# -----------------------------
# Reports
# -----------------------------

def _has_cyclotomic_factor(f):
    n = f.degree
    for k in indices_with_totient(lambda phi: phi <= n, n):
        if divides(cyclotomic_poly(k), f):
            return k
    return None


def classify(f):
    """
    Classify the automorphism defined by f.

    Args:
        f: primitive IntPolynomial of degree >= 1 with nonzero constant term;
            a negative leading coefficient is normalised away

    Returns:
        ClassificationReport

    Raises:
        ContractViolation: zero constant term, non-primitive input, degree
            above the supported range
    """
    notes = []
    _require_classifiable(f)
    if f.leading < 0:
        f = -f
        notes.append("leading coefficient was negative; input negated")
    n = f.degree

    irreducible = is_irreducible(f)
    sign = self_inversive_sign(f)
    self_inversive = sign != 0
    algebraic_unit = abs(f.constant) == 1 and abs(f.leading) == 1
    finite_primes = tuple(sorted(primefactors(abs(f.constant * f.leading))))
    on_circle_real = f(1) == 0 or f(-1) == 0

    if irreducible:
        s0 = unit_circle_root_pairs(f)
        expansive = s0 == 0 and not on_circle_real
        cyclotomic = _is_cyclotomic_irreducible(f)
        ergodic = not cyclotomic
        if n == 1:
            totally_irreducible = True
            notes.append("degree 1: a single root, totally irreducible")
        else:
            degenerate, order = _degenerate_by_resultant(f)
            totally_irreducible = not degenerate
            notes.append(
                f"root ratio of order {order} found in Res_x(f(x), f(xy))" if degenerate
                else "no cyclotomic factor in Res_x(f(x), f(xy))/(y-1)^n"
            )
        notes.append("f is cyclotomic" if cyclotomic else "f is not cyclotomic")
        if not self_inversive and n >= 2:
            notes.append("an irreducible f with a unit-circle root equals its reversal up to sign, so s0_count = 0")
        elif s0:
            notes.append(f"{s0} unit-circle pair(s) certified by Sturm count of {chebyshev_reduce(f)} on (-2, 2)")
        distinct = n
        real_places = real_root_count(f)
    else:
        notes.append("f is reducible: verdicts computed for the generic automorphism")
        sqf = squarefree_part(f)
        if sqf.degree != n:
            notes.append("f has repeated roots")
        s0 = count_unit_circle_roots(f)
        expansive = s0 == 0 and not on_circle_real
        witness = _has_cyclotomic_factor(f)
        ergodic = witness is None
        if witness is not None:
            notes.append(f"cyclotomic factor Phi_{witness} divides f")
        totally_irreducible = False
        distinct = sqf.degree
        real_places = real_root_count(f)

    if not self_inversive:
        notes.append(f"f is not self-inversive: reversal {f.reversed()} differs from +-f")

    if not algebraic_unit:
        notes.append(
            f"not an algebraic unit: phase space is a solenoid, finite places over {list(finite_primes)}"
        )

    report = ClassificationReport(
        input=f,
        irreducible=irreducible,
        ergodic=ergodic,
        expansive=expansive,
        totally_irreducible=totally_irreducible,
        algebraic_unit=algebraic_unit,
        s0_count=s0,
        central_real_dim=2 * s0,
        real_place_count=real_places,
        complex_place_count=(distinct - real_places) // 2,
        finite_place_primes=finite_primes,
        is_self_inversive=self_inversive,
        notes=tuple(notes),
    )
    logger.info(
        f"Classified {f}: irreducible={irreducible} ergodic={ergodic} expansive={expansive} "
        f"unit={algebraic_unit} s0={s0}"
    )
    return report


def classify_matrix(matrix):
    """
    Classify the automorphism of the torus given by an integer matrix.

    Raises:
        ContractViolation: non-square or singular matrix
    """
    f = characteristic_polynomial(matrix)
    report = classify(f)
    return replace(report, notes=report.notes + (f"characteristic polynomial {f}",))
