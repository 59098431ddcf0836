"""
Poly service: exact arithmetic over integer and rational polynomials.

Coefficient lists are stored constant term first. Every routine here is exact
(Python integers and fractions.Fraction); floating point only enters the
fallback factor search in is_irreducible, whose candidates are verified by
exact division.
"""
import itertools
import json
import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, gcd as int_gcd

import mpmath
import numpy as np
from sympy import divisors, primerange

from dynamics.exceptions import ContractViolation, PolynomialSyntaxError
from dynamics.utils import common_denominator

logger = logging.getLogger(__name__)

MAX_IRREDUCIBILITY_DEGREE = 16
DDF_PRIMES = 12


# -----------------------------
# List helpers (index 0 = constant term)
# -----------------------------

def _trim(c):
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return c


def _deg(c):
    return len(c) - 1


def _add(a, b):
    if len(a) < len(b):
        a, b = b, a
    r = list(a)
    for i, v in enumerate(b):
        r[i] += v
    return _trim(r)


def _sub(a, b):
    return _add(a, [-v for v in b])


def _mul(a, b):
    if not a or not b:
        return []
    r = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                r[i + j] += x * y
    return _trim(r)


def _divmod_q(a, b):
    """Quotient and remainder over the rationals."""
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    r = [Fraction(v) for v in a]
    db, lb = _deg(b), Fraction(b[-1])
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    r = _trim(r)
    while r and _deg(r) >= db:
        shift = _deg(r) - db
        factor = r[-1] / lb
        q[shift] = factor
        for i, v in enumerate(b):
            r[i + shift] -= factor * v
        r = _trim(r)
    return _trim(q), r


def _prem(a, b):
    """Pseudo-remainder lead(b)^(deg a - deg b + 1) * a mod b, over the integers."""
    r = list(a)
    db, lb = _deg(b), b[-1]
    e = _deg(a) - db + 1
    while r and _deg(r) >= db:
        lr, shift = r[-1], _deg(r) - db
        r = [v * lb for v in r]
        for i, v in enumerate(b):
            r[i + shift] -= lr * v
        r = _trim(r)
        e -= 1
    scale = lb ** e
    return [v * scale for v in r]


def _exact_int_div(a, b):
    q, r = divmod(a, b)
    if r:
        raise ArithmeticError(f"inexact integer division {a} / {b}")
    return q


def _primitive_int(coeffs):
    """Clear denominators and content; positive leading coefficient."""
    coeffs = _trim(coeffs)
    if not coeffs:
        return []
    fracs = [Fraction(v) for v in coeffs]
    den = common_denominator(fracs)
    ints = [int(v * den) for v in fracs]
    content = 0
    for v in ints:
        content = int_gcd(content, v)
    ints = [v // content for v in ints]
    if ints[-1] < 0:
        ints = [-v for v in ints]
    return ints


def _horner(coeffs, x):
    acc = 0
    for v in reversed(coeffs):
        acc = acc * x + v
    return acc


# -----------------------------
# Types
# -----------------------------

@dataclass(frozen=True)
class IntPolynomial:
    """Integer polynomial, coefficients constant term first."""
    coeffs: tuple

    def __post_init__(self):
        coeffs = _trim(self.coeffs)
        for v in coeffs:
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ContractViolation(f"non-integer coefficient {v!r}")
        object.__setattr__(self, 'coeffs', tuple(int(v) for v in coeffs))

    @classmethod
    def from_coeffs(cls, coeffs):
        return cls(tuple(coeffs))

    @property
    def is_zero(self):
        return not self.coeffs

    @property
    def degree(self):
        return max(len(self.coeffs) - 1, 0)

    @property
    def leading(self):
        return self.coeffs[-1] if self.coeffs else 0

    @property
    def constant(self):
        return self.coeffs[0] if self.coeffs else 0

    @property
    def content(self):
        c = 0
        for v in self.coeffs:
            c = int_gcd(c, v)
        return c

    def __call__(self, x):
        return _horner(self.coeffs, x)

    def __neg__(self):
        return IntPolynomial(tuple(-v for v in self.coeffs))

    def __add__(self, other):
        return IntPolynomial(tuple(_add(list(self.coeffs), list(other.coeffs))))

    def __sub__(self, other):
        return IntPolynomial(tuple(_sub(list(self.coeffs), list(other.coeffs))))

    def __mul__(self, other):
        return IntPolynomial(tuple(_mul(list(self.coeffs), list(other.coeffs))))

    def derivative(self):
        return IntPolynomial(tuple(i * v for i, v in enumerate(self.coeffs))[1:])

    def reversed(self):
        """u^n f(1/u); drops the degree when f(0) = 0."""
        return IntPolynomial(tuple(reversed(self.coeffs)))

    def negated_variable(self):
        """f(-u)."""
        return IntPolynomial(tuple(v if i % 2 == 0 else -v for i, v in enumerate(self.coeffs)))

    def key(self):
        return ",".join(str(v) for v in self.coeffs)

    def to_dict(self):
        return {'coeffs': list(self.coeffs)}

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for k in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            sign = '-' if c < 0 else '+'
            mag = abs(c)
            if k == 0:
                body = str(mag)
            else:
                var = 'u' if k == 1 else f'u^{k}'
                body = var if mag == 1 else f'{mag}*{var}'
            if not parts:
                parts.append(body if sign == '+' else f'-{body}')
            else:
                parts.append(f'{sign} {body}')
        return ' '.join(parts)


@dataclass(frozen=True)
class RationalPolynomial:
    """Polynomial with Fraction coefficients, constant term first."""
    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, 'coeffs', tuple(Fraction(v) for v in _trim(self.coeffs)))

    @classmethod
    def from_int(cls, p):
        return cls(tuple(p.coeffs))

    @property
    def is_zero(self):
        return not self.coeffs

    @property
    def degree(self):
        return max(len(self.coeffs) - 1, 0)

    def __call__(self, x):
        return _horner(self.coeffs, Fraction(x))

    def __neg__(self):
        return RationalPolynomial(tuple(-v for v in self.coeffs))

    def derivative(self):
        return RationalPolynomial(tuple(i * v for i, v in enumerate(self.coeffs))[1:])

    def __divmod__(self, other):
        q, r = _divmod_q(list(self.coeffs), list(other.coeffs))
        return RationalPolynomial(tuple(q)), RationalPolynomial(tuple(r))

    def __mod__(self, other):
        return divmod(self, other)[1]


@dataclass(frozen=True)
class SturmChain:
    chain: tuple
    source: IntPolynomial

    @property
    def is_squarefree(self):
        return self.chain[-1].degree == 0

    def variations(self, x):
        """Sign changes of the chain evaluated at x, zeros skipped."""
        x = Fraction(x)
        signs = []
        for p in self.chain:
            v = p(x)
            if v:
                signs.append(v > 0)
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


# -----------------------------
# Parsing
# -----------------------------

_DIGITS = re.compile(r'\d+')
_NUMBER = re.compile(r'\d+(?:\.\d*|/\d+)?')


def _skip_ws(text, pos):
    while pos < len(text) and text[pos].isspace():
        pos += 1
    return pos


def poly_parse(text):
    """
    Parse polynomial text such as "u^4 - u^3 - u^2 - u + 1" or "6*x^4 + 3x".

    The JSON form {"coeffs": [c0, ..., cn]} is accepted as well.

    Args:
        text: polynomial text in the variable u or x

    Returns:
        IntPolynomial: canonical coefficient vector

    Raises:
        PolynomialSyntaxError: on malformed text, with the offending position
        ContractViolation: on non-integer coefficients in JSON input
    """
    if not isinstance(text, str):
        raise ContractViolation(f"polynomial text must be a string, got {type(text).__name__}")
    if text.lstrip().startswith('{'):
        return poly_from_json(text)

    terms = {}
    variable = None
    pos = _skip_ws(text, 0)
    if pos >= len(text):
        raise PolynomialSyntaxError("empty polynomial", pos)

    first = True
    while pos < len(text):
        sign = 1
        if text[pos] in '+-':
            sign = -1 if text[pos] == '-' else 1
            pos = _skip_ws(text, pos + 1)
        elif not first:
            raise PolynomialSyntaxError(f"expected '+' or '-', found {text[pos]!r}", pos)

        coeff = None
        match = _NUMBER.match(text, pos)
        if match:
            literal = match.group(0)
            if '.' in literal or '/' in literal:
                raise PolynomialSyntaxError(f"non-integer coefficient {literal!r}", pos)
            coeff = int(literal)
            pos = _skip_ws(text, match.end())
            if pos < len(text) and text[pos] == '*':
                star = pos
                pos = _skip_ws(text, pos + 1)
                if pos >= len(text) or text[pos] not in 'ux':
                    raise PolynomialSyntaxError("expected variable after '*'", star + 1)

        exponent = 0
        if pos < len(text) and text[pos] in 'ux':
            if variable is not None and text[pos] != variable:
                raise PolynomialSyntaxError(f"mixed variables {variable!r} and {text[pos]!r}", pos)
            variable = text[pos]
            exponent = 1
            pos = _skip_ws(text, pos + 1)
            if pos < len(text) and text[pos] == '^':
                pos = _skip_ws(text, pos + 1)
                match = _DIGITS.match(text, pos)
                if not match:
                    raise PolynomialSyntaxError("expected non-negative integer exponent", pos)
                exponent = int(match.group(0))
                pos = _skip_ws(text, match.end())
        elif coeff is None:
            if pos >= len(text):
                raise PolynomialSyntaxError("unexpected end of input", pos)
            raise PolynomialSyntaxError(f"expected coefficient or variable, found {text[pos]!r}", pos)

        terms[exponent] = terms.get(exponent, 0) + sign * (1 if coeff is None else coeff)
        first = False

    coeffs = [0] * (max(terms) + 1)
    for k, v in terms.items():
        coeffs[k] = v
    return IntPolynomial(tuple(coeffs))


def poly_from_json(text):
    try:
        payload = json.loads(text) if isinstance(text, str) else text
        coeffs = payload['coeffs']
    except (ValueError, TypeError, KeyError) as e:
        raise ContractViolation(f"expected JSON object {{\"coeffs\": [...]}}: {e}") from e
    if not isinstance(coeffs, list):
        raise ContractViolation("'coeffs' must be a list of integers")
    return IntPolynomial(tuple(coeffs))


# -----------------------------
# Gcd, division, squarefree part
# -----------------------------

def poly_gcd(p, q):
    """Primitive gcd with positive leading coefficient (zero if both are zero)."""
    a, b = [Fraction(v) for v in p.coeffs], [Fraction(v) for v in q.coeffs]
    while b:
        _, r = _divmod_q(a, b)
        a, b = b, r
    return IntPolynomial(tuple(_primitive_int(a)))


def exact_divide(f, g):
    """
    Divide f by g over the integers.

    Raises:
        ContractViolation: if g does not divide f in Z[u]
    """
    if g.is_zero:
        raise ContractViolation("division by the zero polynomial")
    q, r = _divmod_q(list(f.coeffs), list(g.coeffs))
    if r or any(v.denominator != 1 for v in q):
        raise ContractViolation(f"{g} does not divide {f} over the integers")
    return IntPolynomial(tuple(int(v) for v in q))


def divides(g, f):
    q, r = _divmod_q(list(f.coeffs), list(g.coeffs))
    return not r


def squarefree_part(f):
    """f / gcd(f, f'), made primitive."""
    if f.degree == 0:
        return f
    g = poly_gcd(f, f.derivative())
    q, _ = _divmod_q(list(f.coeffs), list(g.coeffs))
    return IntPolynomial(tuple(_primitive_int(q)))


def is_squarefree(f):
    return poly_gcd(f, f.derivative()).degree == 0


# -----------------------------
# Resultant
# -----------------------------

def poly_resultant(p, q):
    """
    Resultant Res(p, q) = lead(p)^deg(q) * prod q(roots of p), the Sylvester
    determinant, by the subresultant algorithm.

    Args:
        p: nonzero IntPolynomial
        q: nonzero IntPolynomial

    Returns:
        int: the resultant

    Raises:
        ContractViolation: if either input is zero
    """
    if p.is_zero or q.is_zero:
        raise ContractViolation("resultant of the zero polynomial is undefined")
    a, b = list(p.coeffs), list(q.coeffs)
    da, db = _deg(a), _deg(b)
    if da == 0:
        return a[0] ** db
    if db == 0:
        return b[0] ** da

    ca, cb = IntPolynomial(tuple(a)).content, IntPolynomial(tuple(b)).content
    a, b = [v // ca for v in a], [v // cb for v in b]
    t = ca ** db * cb ** da

    sign = 1
    if da < db:
        a, b, da, db = b, a, db, da
        if da % 2 and db % 2:
            sign = -1

    g = h = 1
    while True:
        delta = da - db
        if da % 2 and db % 2:
            sign = -sign
        r = _prem(a, b)
        if not r:
            return 0
        a = b
        divisor = g * h ** delta
        b = [_exact_int_div(v, divisor) for v in r]
        g = a[-1]
        if delta:
            h = _exact_int_div(g ** delta, h ** (delta - 1))
        da, db = _deg(a), _deg(b)
        if db == 0:
            break

    h = _exact_int_div(b[-1] ** da, h ** (da - 1))
    return sign * t * h


# -----------------------------
# Sturm sequences
# -----------------------------

def sturm_chain(p):
    """Sturm chain p, p', -rem(p, p'), ... over the rationals."""
    if p.is_zero:
        raise ContractViolation("Sturm chain of the zero polynomial")
    p0 = RationalPolynomial.from_int(p)
    chain = [p0]
    if p.degree > 0:
        p1 = p0.derivative()
        chain.append(p1)
        while True:
            r = -(chain[-2] % chain[-1])
            if r.is_zero:
                break
            chain.append(r)
    return SturmChain(chain=tuple(chain), source=p)


def sturm_count(p, lo, hi, make_squarefree=False):
    """
    Count distinct real roots of p in the half-open interval (lo, hi].

    Args:
        p: IntPolynomial, squarefree unless make_squarefree is set
        lo: rational lower end (exclusive)
        hi: rational upper end (inclusive)
        make_squarefree: divide by gcd(p, p') first

    Returns:
        int: V(lo) - V(hi)

    Raises:
        ContractViolation: zero polynomial, lo >= hi, or p not squarefree
    """
    if p.is_zero:
        raise ContractViolation("sturm_count of the zero polynomial")
    lo, hi = Fraction(lo), Fraction(hi)
    if lo >= hi:
        raise ContractViolation(f"empty interval ({lo}, {hi}]")
    if make_squarefree:
        p = squarefree_part(p)
    chain = sturm_chain(p)
    if not chain.is_squarefree:
        raise ContractViolation(f"{p} is not squarefree; pass make_squarefree=True")
    return chain.variations(lo) - chain.variations(hi)


def cauchy_bound(p):
    """1 + max |p_i / p_n|; every complex root has modulus below it."""
    lead = abs(p.leading)
    return 1 + max((Fraction(abs(v), lead) for v in p.coeffs[:-1]), default=Fraction(0))


def real_root_count(p):
    """Number of distinct real roots."""
    if p.degree == 0:
        return 0
    sqf = squarefree_part(p)
    bound = cauchy_bound(sqf)
    return sturm_count(sqf, -bound, bound)


def isolate_real_roots(p, lo, hi, width):
    """
    Disjoint rational intervals (a, b] of width <= width, each holding exactly
    one root of the squarefree p in (lo, hi].
    """
    chain = sturm_chain(p)
    stack = [(Fraction(lo), Fraction(hi))]
    found = []
    while stack:
        a, b = stack.pop()
        count = chain.variations(a) - chain.variations(b)
        if count == 0:
            continue
        if count == 1 and b - a <= width:
            found.append((a, b))
            continue
        mid = (a + b) / 2
        stack.append((mid, b))
        stack.append((a, mid))
    return sorted(found)


# -----------------------------
# Self-inversive polynomials and the Chebyshev reduction
# -----------------------------

def self_inversive_sign(f):
    """+1 if f is palindromic, -1 if anti-palindromic, 0 otherwise."""
    if f.is_zero:
        raise ContractViolation("zero polynomial")
    if f.constant == 0:
        raise ContractViolation("zero constant term")
    rev = f.reversed()
    if rev == f:
        return 1
    if rev == -f:
        return -1
    return 0


def is_self_inversive(f):
    """
    True iff the reversed coefficient vector equals f's up to a global sign.

    Raises:
        ContractViolation: zero polynomial or zero constant term
    """
    return self_inversive_sign(f) != 0


def remove_forced_factors(f):
    """
    Divide out u - 1 and u + 1 while f(1) = 0 or f(-1) = 0.

    Returns:
        tuple: (quotient, multiplicity at +1, multiplicity at -1)
    """
    at_plus, at_minus = 0, 0
    one_minus = IntPolynomial((-1, 1))
    one_plus = IntPolynomial((1, 1))
    while f.degree > 0 and f(1) == 0:
        f = exact_divide(f, one_minus)
        at_plus += 1
    while f.degree > 0 and f(-1) == 0:
        f = exact_divide(f, one_plus)
        at_minus += 1
    return f, at_plus, at_minus


def chebyshev_reduce(f):
    """
    The polynomial g of degree m with f(u) = u^m * g(u + 1/u).

    Uses u^k + u^-k = D_k(t) with D_0 = 2, D_1 = t, D_k = t*D_(k-1) - D_(k-2).

    Args:
        f: palindromic IntPolynomial of even degree 2m

    Returns:
        IntPolynomial: g

    Raises:
        ContractViolation: odd degree, anti-palindromic or non-self-inversive input
    """
    sign = self_inversive_sign(f)
    if sign == -1:
        raise ContractViolation("anti-palindromic input; remove the factors u-1, u+1 first")
    if sign == 0:
        raise ContractViolation(f"{f} is not self-inversive")
    n = len(f.coeffs) - 1
    if n % 2:
        raise ContractViolation(f"odd degree {n}; remove the factor u+1 first")
    m = n // 2
    c = f.coeffs
    g = [c[m]]
    d_prev, d_cur = [2], [0, 1]
    for k in range(1, m + 1):
        g = _add(g, [c[m + k] * v for v in d_cur])
        d_prev, d_cur = d_cur, _sub(_mul([0, 1], d_cur), d_prev)
    return IntPolynomial(tuple(g))


def count_unit_circle_roots(f):
    """
    Distinct conjugate pairs of non-real roots on the unit circle, for any
    nonzero f.
    """
    if f.is_zero:
        raise ContractViolation("zero polynomial")
    core = IntPolynomial(tuple(f.coeffs))
    while core.constant == 0 and core.degree > 0:
        core = IntPolynomial(core.coeffs[1:])
    if core.degree == 0:
        return 0
    g = squarefree_part(poly_gcd(core, core.reversed()))
    g, _, _ = remove_forced_factors(g)
    if g.degree == 0:
        return 0
    return sturm_count(chebyshev_reduce(g), -2, 2)


# -----------------------------
# Cyclotomic polynomials and totients
# -----------------------------

@lru_cache(maxsize=None)
def cyclotomic_poly(k):
    """
    Phi_k by dividing u^k - 1 by Phi_d for every proper divisor d of k.

    Raises:
        ContractViolation: k < 1
    """
    if k < 1:
        raise ContractViolation(f"cyclotomic index must be positive, got {k}")
    num = IntPolynomial(tuple([-1] + [0] * (k - 1) + [1]))
    for d in divisors(k)[:-1]:
        num = exact_divide(num, cyclotomic_poly(d))
    return num


@lru_cache(maxsize=32)
def totients_up_to(limit):
    """Euler totients of 0..limit as a numpy array (sieve)."""
    phi = np.arange(limit + 1, dtype=np.int64)
    for p in range(2, limit + 1):
        if phi[p] == p:
            phi[p::p] -= phi[p::p] // p
    return phi


def indices_with_totient(predicate, bound):
    """
    All k >= 1 with predicate(phi(k)) true, given phi(k) <= bound for every
    candidate. Uses phi(k) >= sqrt(k/2).
    """
    limit = 2 * bound * bound + 2
    phi = totients_up_to(limit)
    return [k for k in range(1, limit + 1) if predicate(int(phi[k]))]


# -----------------------------
# Irreducibility
# -----------------------------

def _gf_trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _gf_mod(a, b, p):
    a = [v % p for v in a]
    _gf_trim(a)
    inv = pow(b[-1], -1, p)
    db = len(b) - 1
    while len(a) - 1 >= db and a:
        factor = a[-1] * inv % p
        shift = len(a) - 1 - db
        for i, v in enumerate(b):
            a[i + shift] = (a[i + shift] - factor * v) % p
        _gf_trim(a)
    return a


def _gf_divmod(a, b, p):
    a = [v % p for v in a]
    _gf_trim(a)
    inv = pow(b[-1], -1, p)
    db = len(b) - 1
    q = [0] * max(len(a) - db, 0)
    while a and len(a) - 1 >= db:
        factor = a[-1] * inv % p
        shift = len(a) - 1 - db
        q[shift] = factor
        for i, v in enumerate(b):
            a[i + shift] = (a[i + shift] - factor * v) % p
        _gf_trim(a)
    return _gf_trim(q), a


def _gf_mul(a, b, p):
    if not a or not b:
        return []
    r = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                r[i + j] = (r[i + j] + x * y) % p
    return _gf_trim(r)


def _gf_gcd(a, b, p):
    a, b = _gf_trim([v % p for v in a]), _gf_trim([v % p for v in b])
    while b:
        a, b = b, _gf_mod(a, b, p)
    if a:
        inv = pow(a[-1], -1, p)
        a = [v * inv % p for v in a]
    return a


def _gf_powmod(a, n, modulus, p):
    result = [1]
    base = _gf_mod(a, modulus, p)
    while n:
        if n & 1:
            result = _gf_mod(_gf_mul(result, base, p), modulus, p)
        base = _gf_mod(_gf_mul(base, base, p), modulus, p)
        n >>= 1
    return result


def distinct_degree_pattern(f, p):
    """
    Degrees of the irreducible factors of f modulo p (with repetition), or
    None when p divides the leading coefficient or f mod p is not squarefree.
    """
    fp = _gf_trim([v % p for v in f.coeffs])
    if len(fp) - 1 != f.degree:
        return None
    dfp = _gf_trim([(i * v) % p for i, v in enumerate(fp)][1:])
    if not dfp or len(_gf_gcd(fp, dfp, p)) > 1:
        return None

    inv = pow(fp[-1], -1, p)
    rest = [v * inv % p for v in fp]
    x = [0, 1]
    h = x
    degrees = []
    i = 1
    while len(rest) - 1 >= 2 * i:
        h = _gf_powmod(h, p, rest, p)
        diff = _gf_trim([(a - b) % p for a, b in itertools.zip_longest(h, x, fillvalue=0)])
        g = _gf_gcd(rest, diff, p)
        if len(g) > 1:
            degrees.extend([i] * ((len(g) - 1) // i))
            rest, _ = _gf_divmod(rest, g, p)
            h = _gf_mod(h, rest, p)
        i += 1
    if len(rest) > 1:
        degrees.append(len(rest) - 1)
    return degrees


def _subset_sums(degrees):
    sums = {0}
    for d in degrees:
        sums |= {s + d for s in sums}
    return sums


def possible_factor_degrees(f, primes=DDF_PRIMES):
    """
    Intersection over several good primes of the degrees a factor of f over
    the integers could have. Returns (set of degrees in [1, n-1], primes used).
    """
    n = f.degree
    possible = set(range(1, n))
    used = []
    for p in primerange(2, 10**4):
        if len(used) >= primes or not possible:
            break
        pattern = distinct_degree_pattern(f, p)
        if pattern is None:
            continue
        used.append(p)
        possible &= _subset_sums(pattern)
    return possible, used


def mignotte_bound(f):
    """Bound on the coefficients of any integer factor of f."""
    norm2 = mpmath.sqrt(sum(mpmath.mpf(v) ** 2 for v in f.coeffs))
    return int(mpmath.ceil(comb(f.degree, f.degree // 2) * norm2 * abs(f.leading))) + 1


def _factor_search(f, degrees):
    """
    Exhaustive search for an integer factor whose degree lies in degrees,
    over subsets of numerically isolated roots. Candidates are rounded and
    verified by exact division.
    """
    n = f.degree
    bound = mignotte_bound(f)
    dps = len(str(bound)) + 30
    with mpmath.workdps(dps):
        roots = mpmath.polyroots(list(reversed(f.coeffs)), maxsteps=400, extraprec=4 * dps)
        leads = divisors(abs(f.leading))
        for d in sorted(d for d in degrees if d <= n // 2):
            for subset in itertools.combinations(range(n), d):
                monic = [mpmath.mpc(1)]
                for idx in subset:
                    monic = [0] + monic
                    for i in range(len(monic) - 1):
                        monic[i] -= roots[idx] * monic[i + 1]
                if any(abs(mpmath.im(v)) > 0.25 for v in monic):
                    continue
                for lead in leads:
                    candidate = [int(mpmath.nint(mpmath.re(v) * lead)) for v in monic]
                    if any(abs(v) > bound for v in candidate):
                        continue
                    g = IntPolynomial(tuple(candidate))
                    if g.degree == d and divides(g, f):
                        return g
    return None


def is_irreducible(f):
    """
    Decide irreducibility of a primitive integer polynomial over the integers.

    Distinct-degree factorisation modulo several primes certifies most inputs;
    the rest go through an exhaustive factor search bounded by Mignotte.

    Args:
        f: primitive IntPolynomial of degree 1..16

    Returns:
        bool: True iff f has no nontrivial factorisation

    Raises:
        ContractViolation: zero or constant input, non-primitive input,
            degree above the supported range
    """
    if f.is_zero or f.degree < 1:
        raise ContractViolation("irreducibility needs a polynomial of degree >= 1")
    if f.content != 1:
        raise ContractViolation(f"non-primitive input (content {f.content})")
    if f.degree > MAX_IRREDUCIBILITY_DEGREE:
        raise ContractViolation(
            f"degree {f.degree} above the supported maximum {MAX_IRREDUCIBILITY_DEGREE}"
        )
    if f.degree == 1:
        return True
    if f.constant == 0:
        return False
    if not is_squarefree(f):
        return False

    possible, used = possible_factor_degrees(f)
    if not possible:
        logger.debug(f"{f}: irreducible by factor-degree patterns modulo {used}")
        return True

    factor = _factor_search(f, possible)
    if factor is not None:
        logger.debug(f"{f}: found factor {factor}")
        return False
    return True


# -----------------------------
# Matrices
# -----------------------------

def characteristic_polynomial(matrix):
    """
    det(uI - A) by the Faddeev-LeVerrier recursion, exact over the integers.

    Args:
        matrix: square integer matrix (nested lists or array)

    Returns:
        IntPolynomial: monic characteristic polynomial

    Raises:
        ContractViolation: non-square or non-integer input
    """
    a = np.array(matrix, dtype=object)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ContractViolation(f"expected a non-empty square matrix, got shape {a.shape}")
    for v in a.flat:
        if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
            raise ContractViolation(f"non-integer matrix entry {v!r}")
    a = np.vectorize(int, otypes=[object])(a)
    n = a.shape[0]
    identity = np.zeros((n, n), dtype=object)
    for i in range(n):
        identity[i, i] = 1
    coeffs = [0] * (n + 1)
    coeffs[n] = 1
    m = np.zeros((n, n), dtype=object)
    for k in range(1, n + 1):
        m = a.dot(m) + coeffs[n - k + 1] * identity
        am = a.dot(m)
        coeffs[n - k] = _exact_int_div(-sum(am[i, i] for i in range(n)), k)
    return IntPolynomial(tuple(coeffs))
