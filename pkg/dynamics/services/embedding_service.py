"""
Embedding service: the archimedean picture of a toral automorphism.

A CentralFrame holds the companion matrix of f, its roots at working
precision grouped into places, and real bases of the central subspace W0
(unit-circle eigendirections) and of its invariant complement. Points of W0
are described by s complex coordinates w_v; the lift to R^n is
sum_v Re(w_v e_v) with e_v = (1, theta_v, ..., theta_v^(n-1)).
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from dynamics.exceptions import ContractViolation, PrecisionError
from dynamics.services.classify_service import classify
from dynamics.services.poly_service import chebyshev_reduce, isolate_real_roots
from dynamics.utils import retry_with_precision

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CentralFrame:
    f: object
    A: tuple
    roots: tuple
    places: tuple
    s0_places: tuple
    angles: tuple
    basis_W0: np.ndarray
    basis_complement: np.ndarray
    proj_W0: np.ndarray
    coord_real: np.ndarray
    coord_complex: np.ndarray
    complement_coord: np.ndarray
    precision_bits: int
    residual: float
    lift_mp: object = field(repr=False)
    coord_mp: object = field(repr=False)

    @property
    def n(self):
        return len(self.A)

    @property
    def s(self):
        return len(self.angles)

    @property
    def angles_float(self):
        return np.array([float(phi) for phi in self.angles])

    @property
    def matrix(self):
        return np.array(self.A, dtype=np.int64)


def companion(f):
    """
    Companion matrix: ones on the superdiagonal, last row (-f_0, ..., -f_(n-1)).

    Args:
        f: monic IntPolynomial of degree >= 1

    Returns:
        tuple of tuples of int

    Raises:
        ContractViolation: non-monic or constant input
    """
    if f.is_zero or f.degree < 1:
        raise ContractViolation("companion matrix needs degree >= 1")
    if f.leading != 1:
        raise ContractViolation(f"companion matrix needs a monic polynomial, got leading coefficient {f.leading}")
    n = f.degree
    rows = [[0] * n for _ in range(n)]
    for i in range(n - 1):
        rows[i][i + 1] = 1
    rows[n - 1] = [-c for c in f.coeffs[:-1]]
    return tuple(tuple(r) for r in rows)


def _mp_to_array(m, dtype=float):
    rows, cols = m.rows, m.cols
    out = np.empty((rows, cols), dtype=dtype)
    for i in range(rows):
        for j in range(cols):
            out[i, j] = complex(m[i, j]) if dtype is complex else float(m[i, j])
    return out


def _max_abs(m):
    return max((abs(v) for v in m), default=mpmath.mpf(0))


def _unit_angles(f, bits):
    """Angles phi in (0, pi) of the unit-circle roots, from the Chebyshev reduction."""
    g = chebyshev_reduce(f)
    intervals = isolate_real_roots(g, -2, 2, Fraction(1, 2**16))
    g_high = [mpmath.mpf(c) for c in reversed(g.coeffs)]

    def g_mp(t):
        return mpmath.polyval(g_high, t)

    angles = []
    for a, b in intervals:
        if g(b) == 0:
            t = mpmath.mpf(b.numerator) / b.denominator
        else:
            lo = mpmath.mpf(a.numerator) / a.denominator
            hi = mpmath.mpf(b.numerator) / b.denominator
            t = mpmath.findroot(g_mp, (lo, hi), solver='anderson', verify=False)
            if not lo <= t <= hi:
                raise PrecisionError(f"root refinement left its isolating interval ({a}, {b}]", 2 * bits)
        angles.append(mpmath.acos(t / 2))
    return sorted(angles), len(intervals)


def _required_bits(roots, bits):
    sep = min(
        (abs(r1 - r2) for i, r1 in enumerate(roots) for r2 in roots[i + 1:]),
        default=mpmath.mpf(1),
    )
    n = len(roots)
    estimate = int(n * max(1, -mpmath.log(sep, 2))) + 64 if sep > 0 else 2 * bits
    return max(2 * bits, estimate)


@retry_with_precision(max_retries=3, backoff_factor=2)
def build_frame(f, precision_bits=None):
    """
    Build the central frame of the unit polynomial f.

    Args:
        f: irreducible, ergodic IntPolynomial with |f_0| = |f_n| = 1 and at
            least one pair of unit-circle roots
        precision_bits: working precision (default from DYNAMICS_CONFIG)

    Returns:
        CentralFrame

    Raises:
        ContractViolation: reducible, cyclotomic, non-unit or hyperbolic input
        PrecisionError: precision insufficient to separate the roots
    """
    report = classify(f)
    f = report.input
    if not report.irreducible:
        raise ContractViolation(f"{f} is reducible; frames need an irreducible polynomial")
    if not report.algebraic_unit:
        raise ContractViolation(f"{f} is not an algebraic unit (solenoid case); frames are unsupported")
    if not report.ergodic:
        raise ContractViolation(f"{f} is cyclotomic; the automorphism is not ergodic")
    if report.s0_count == 0:
        raise ContractViolation(f"{f} has no unit-circle roots (s0_count = 0): hyperbolic, no central frame")

    bits = precision_bits
    n = f.degree
    A = companion(f)
    tol = mpmath.mpf(2) ** (-(bits // 2))

    with mpmath.workprec(bits):
        angles, certified = _unit_angles(f, bits)
        if certified != report.s0_count:
            raise PrecisionError(f"{certified} isolated unit roots, expected {report.s0_count}", 2 * bits)
        unit_roots = [mpmath.expj(phi) for phi in angles]

        numeric = list(mpmath.polyroots([mpmath.mpf(c) for c in reversed(f.coeffs)],
                                        maxsteps=100 + 20 * n, extraprec=bits))
        match_tol = mpmath.mpf(2) ** (-(bits // 4))
        for theta in unit_roots:
            for target in (theta, mpmath.conj(theta)):
                idx = min(range(len(numeric)), key=lambda i: abs(numeric[i] - target))
                if abs(numeric[idx] - target) > match_tol:
                    raise PrecisionError(
                        f"unit root {mpmath.nstr(target, 12)} not matched by numeric roots",
                        _required_bits(numeric, bits),
                    )
                numeric.pop(idx)

        real_roots, complex_roots = [], []
        for r in numeric:
            if abs(mpmath.im(r)) <= match_tol * max(1, abs(r)):
                real_roots.append(mpmath.re(r))
            elif mpmath.im(r) > 0:
                complex_roots.append(r)
        if len(real_roots) + 2 * len(complex_roots) + 2 * len(unit_roots) != n:
            raise PrecisionError("could not pair the non-unit roots into places", _required_bits(numeric, bits))
        real_roots.sort()
        complex_roots.sort(key=lambda r: (abs(r), mpmath.arg(r)))

        ordered = (
            unit_roots + [mpmath.conj(t) for t in unit_roots]
            + [mpmath.mpc(r) for r in real_roots]
            + complex_roots + [mpmath.conj(r) for r in complex_roots]
        )
        V = mpmath.matrix(n, n)
        for j, r in enumerate(ordered):
            for i in range(n):
                V[i, j] = r ** i
        try:
            Vinv = mpmath.inverse(V)
        except ZeroDivisionError as e:
            raise PrecisionError("Vandermonde matrix is singular at this precision", _required_bits(ordered, bits)) from e
        residual = _max_abs(V * Vinv - mpmath.eye(n))

        s = len(unit_roots)
        B = mpmath.matrix(n, 2 * s)
        Cr = mpmath.matrix(2 * s, n)
        for v in range(s):
            for i in range(n):
                e = V[i, v]
                B[i, 2 * v] = mpmath.re(e)
                B[i, 2 * v + 1] = -mpmath.im(e)
                c = 2 * Vinv[v, i]
                Cr[2 * v, i] = mpmath.re(c)
                Cr[2 * v + 1, i] = mpmath.im(c)

        A_mp = mpmath.matrix([[mpmath.mpf(x) for x in row] for row in A])
        P = B * Cr
        rotation = mpmath.matrix(2 * s, 2 * s)
        for v, phi in enumerate(angles):
            c, sn = mpmath.cos(phi), mpmath.sin(phi)
            rotation[2 * v, 2 * v], rotation[2 * v, 2 * v + 1] = c, -sn
            rotation[2 * v + 1, 2 * v], rotation[2 * v + 1, 2 * v + 1] = sn, c
        checks = {
            'vandermonde': residual,
            'coordinates': _max_abs(Cr * B - mpmath.eye(2 * s)),
            'idempotent': _max_abs(P * P - P),
            'invariance': _max_abs(A_mp * B - B * rotation),
        }
        worst = max(checks.values())
        if worst > tol:
            failed = ", ".join(f"{k}={mpmath.nstr(v, 5)}" for k, v in checks.items() if v > tol)
            raise PrecisionError(f"frame residuals above 2^-{bits // 2}: {failed}", _required_bits(ordered, bits))

        complement_raw = []
        for r in real_roots:
            complement_raw.append([float(r ** i) for i in range(n)])
        for r in complex_roots:
            powers = [r ** i for i in range(n)]
            complement_raw.append([float(mpmath.re(p)) for p in powers])
            complement_raw.append([float(mpmath.im(p)) for p in powers])

        basis = _mp_to_array(B)
        coord_real = _mp_to_array(Cr)
        coord_complex = np.array([[complex(2 * Vinv[v, i]) for i in range(n)] for v in range(s)])
        proj = _mp_to_array(P)
        if complement_raw:
            q, _ = np.linalg.qr(np.array(complement_raw).T)
        else:
            q = np.zeros((n, 0))
        complement_coord = q.T @ (np.eye(n) - proj)

        places = tuple(
            [('complex', v) for v in range(s)]
            + [('real', i) for i in range(len(real_roots))]
            + [('complex', i) for i in range(len(complex_roots))]
        )
        frame = CentralFrame(
            f=f,
            A=A,
            roots=tuple(ordered),
            places=places,
            s0_places=tuple(range(s)),
            angles=tuple(angles),
            basis_W0=basis,
            basis_complement=q,
            proj_W0=proj,
            coord_real=coord_real,
            coord_complex=coord_complex,
            complement_coord=complement_coord,
            precision_bits=bits,
            residual=float(worst),
            lift_mp=B,
            coord_mp=Cr,
        )
    logger.info(
        f"Built central frame for {f}: s={s}, angles={[mpmath.nstr(phi, 10) for phi in angles]}, "
        f"residual={float(worst):.2e} at {bits} bits"
    )
    return frame


# -----------------------------
# Coordinates on W0
# -----------------------------

def _check_central(frame, w):
    w = np.asarray(w, dtype=complex)
    if w.shape[-1:] != (frame.s,):
        raise ContractViolation(f"expected {frame.s} central coordinates, got shape {w.shape}")
    return w


def to_real(w):
    """Complex coordinates (..., s) to interleaved real (..., 2s)."""
    w = np.asarray(w, dtype=complex)
    out = np.empty(w.shape[:-1] + (2 * w.shape[-1],))
    out[..., 0::2] = w.real
    out[..., 1::2] = w.imag
    return out


def from_real(r):
    r = np.asarray(r, dtype=float)
    return r[..., 0::2] + 1j * r[..., 1::2]


def lift(frame, w):
    """W0 coordinates (..., s) to vectors of R^n (..., n)."""
    w = _check_central(frame, w)
    return to_real(w) @ frame.basis_W0.T


def coordinates(frame, y):
    """W0 coordinates of the central component of y in R^n."""
    y = np.asarray(y, dtype=float)
    if y.shape[-1:] != (frame.n,):
        raise ContractViolation(f"expected vectors of length {frame.n}, got shape {y.shape}")
    return y @ frame.coord_complex.T


def complement_coordinates(frame, y):
    """Coordinates of the complement component of y in an orthonormal basis."""
    y = np.asarray(y, dtype=float)
    return y @ frame.complement_coord.T


def lift_precise(frame, w):
    """Lift at frame precision; returns an mpmath column vector."""
    w = _check_central(frame, w)
    with mpmath.workprec(frame.precision_bits):
        r = mpmath.matrix([mpmath.mpf(float(x)) for x in to_real(w)])
        return frame.lift_mp * r


def coordinates_precise(frame, y):
    """Central coordinates at frame precision from an mpmath or float vector."""
    with mpmath.workprec(frame.precision_bits):
        col = y if isinstance(y, mpmath.matrix) else mpmath.matrix([mpmath.mpf(float(x)) for x in y])
        r = frame.coord_mp * col
        return [mpmath.mpc(r[2 * v], r[2 * v + 1]) for v in range(frame.s)]


def central_norm(frame, w):
    """
    Max over places of |w_v|.

    Args:
        frame: CentralFrame
        w: central coordinates, shape (s,) or (..., s)

    Raises:
        ContractViolation: dimension mismatch
    """
    w = _check_central(frame, w)
    return np.max(np.abs(w), axis=-1)


def central_rotation(frame, m):
    """The multipliers xi^m = (e^(i m phi_v))_v as a complex array."""
    with mpmath.workprec(frame.precision_bits):
        return np.array([complex(mpmath.expj(int(m) * phi)) for phi in frame.angles])


def frame_to_json(frame, digits=30):
    """Export the frame: f, matrix, angles as decimal strings, basis vectors."""
    with mpmath.workprec(frame.precision_bits):
        return {
            'f': list(frame.f.coeffs),
            'polynomial': str(frame.f),
            'matrix': [list(row) for row in frame.A],
            'precision_bits': frame.precision_bits,
            's': frame.s,
            'angles': [mpmath.nstr(phi, digits) for phi in frame.angles],
            'unit_roots': [
                [mpmath.nstr(mpmath.re(r), digits), mpmath.nstr(mpmath.im(r), digits)]
                for r in frame.roots[:frame.s]
            ],
            'places': [list(p) for p in frame.places],
            'basis_W0': frame.basis_W0.T.tolist(),
            'basis_complement': frame.basis_complement.T.tolist(),
            'residual': frame.residual,
        }
