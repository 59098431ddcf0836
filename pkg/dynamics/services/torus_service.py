"""
Torus service: the automorphism alpha on X = R^n / Z^n.

Exact inputs (Fractions) stay exact under alpha; float inputs are converted
to their exact binary value, moved by an exact integer matrix power and only
then reduced mod 1 and rounded back.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from dynamics.exceptions import ContractViolation, ConvergenceError
from dynamics.services.embedding_service import lift, to_real
from dynamics.utils import common_denominator, get_config, stream_rng, write_csv

logger = logging.getLogger(__name__)

MAX_POWER = 2**20
MAX_ENTRY_BITS = 4096


@dataclass(frozen=True)
class TorusPoint:
    coords: tuple

    def __post_init__(self):
        reduced = []
        for v in self.coords:
            if isinstance(v, (Fraction, int, np.integer)):
                reduced.append(Fraction(v) % 1)
            else:
                r = float(v) % 1.0
                reduced.append(0.0 if r >= 1.0 else r)
        object.__setattr__(self, 'coords', tuple(reduced))

    @classmethod
    def from_array(cls, values):
        return cls(tuple(float(v) for v in np.asarray(values, dtype=float)))

    @property
    def n(self):
        return len(self.coords)

    @property
    def is_exact(self):
        return all(isinstance(v, Fraction) for v in self.coords)

    def as_array(self):
        return np.array([float(v) for v in self.coords])

    def as_fractions(self):
        return [Fraction(v) for v in self.coords]

    def __str__(self):
        return "(" + ", ".join(str(v) for v in self.coords) + ")"


@dataclass(frozen=True, eq=False)
class SeparatedSet:
    """K points of W0 (complex coordinates) pairwise at least R apart."""
    points: np.ndarray
    R: float
    strategy: str = 'grid'
    seed: int = 0
    min_distance: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, 'points', np.atleast_2d(np.asarray(self.points, dtype=complex)))
        distance = pairwise_min_distance(self.points)
        if distance < self.R * (1 - 1e-12):
            raise ContractViolation(f"points are {distance:.6g} apart, below R = {self.R}")
        object.__setattr__(self, 'min_distance', distance)

    @property
    def K(self):
        return len(self.points)


# -----------------------------
# Exact integer matrices
# -----------------------------

def _object_matrix(rows):
    return np.array([[int(v) for v in row] for row in rows], dtype=object)


def _as_key(m):
    return tuple(tuple(int(v) for v in row) for row in m)


@lru_cache(maxsize=32)
def integer_inverse(A):
    """
    Inverse of an integer matrix with determinant +-1, by Gauss-Jordan over
    the rationals.

    Raises:
        ContractViolation: singular matrix or non-integral inverse
    """
    n = len(A)
    aug = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ContractViolation("matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        pv = aug[col][col]
        aug[col] = [v / pv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    inverse = [row[n:] for row in aug]
    if any(v.denominator != 1 for row in inverse for v in row):
        raise ContractViolation("matrix is not invertible over the integers (determinant is not +-1)")
    return tuple(tuple(int(v) for v in row) for row in inverse)


@lru_cache(maxsize=256)
def integer_power(A, m):
    """
    A^m by repeated squaring in exact integers (negative m via the inverse).

    Raises:
        ContractViolation: |m| > 2^20, or an entry grows past 4096 bits
    """
    if abs(m) > MAX_POWER:
        raise ContractViolation(f"|m| = {abs(m)} exceeds the supported maximum 2^20")
    n = len(A)
    base = _object_matrix(A if m >= 0 else integer_inverse(A))
    result = _object_matrix([[int(i == j) for j in range(n)] for i in range(n)])
    e = abs(m)
    while e:
        if e & 1:
            result = result.dot(base)
            _guard_bits(result, m)
        e >>= 1
        if e:
            base = base.dot(base)
            _guard_bits(base, m)
    return _as_key(result)


def _guard_bits(m, power):
    bits = max(int(abs(v)).bit_length() for v in m.flat)
    if bits > MAX_ENTRY_BITS:
        raise ContractViolation(
            f"entries of A^{power} exceed {MAX_ENTRY_BITS} bits; use iterated orbits instead"
        )


def _mod1_exact(M, fractions):
    return [sum((M[i][j] * fractions[j] for j in range(len(fractions))), Fraction(0)) % 1
            for i in range(len(M))]


def apply_alpha(frame, x, m):
    """
    A^m x mod 1 with exact integer matrix arithmetic before the final mod.

    Args:
        frame: CentralFrame
        x: TorusPoint (exact Fractions stay exact; floats are treated as
            their exact binary values)
        m: integer power, |m| <= 2^20

    Returns:
        TorusPoint

    Raises:
        ContractViolation: dimension mismatch or entry bit growth past 4096 bits
    """
    if x.n != frame.n:
        raise ContractViolation(f"point has {x.n} coordinates, frame dimension is {frame.n}")
    M = integer_power(frame.A, int(m))
    y = _mod1_exact(M, x.as_fractions())
    if x.is_exact:
        return TorusPoint(tuple(y))
    return TorusPoint(tuple(float(v) for v in y))


# -----------------------------
# Leaves
# -----------------------------

def leaf_point(frame, x, w):
    """
    x + pi(w): translate x along its central leaf.

    Args:
        frame: CentralFrame
        x: TorusPoint
        w: central coordinates, shape (s,)

    Raises:
        ContractViolation: dimension mismatch
    """
    if x.n != frame.n:
        raise ContractViolation(f"point has {x.n} coordinates, frame dimension is {frame.n}")
    y = x.as_array() + lift(frame, w)
    return TorusPoint.from_array(np.mod(y, 1.0))


def leaf_points(frame, x, W):
    """Vectorised leaf_point over rows of W; returns an (K, n) array in [0, 1)."""
    base = x.as_array() if isinstance(x, TorusPoint) else np.asarray(x, dtype=float)
    pts = np.mod(base + lift(frame, W), 1.0)
    pts[pts >= 1.0] = 0.0
    return pts


# -----------------------------
# Separated sets
# -----------------------------

def pairwise_min_distance(points):
    """Exhaustive minimum of max_v |w_v - w'_v| over distinct pairs (inf for one point)."""
    points = np.asarray(points, dtype=complex)
    k = len(points)
    chunk = max(1, 2**22 // max(1, k * points.shape[-1]))
    best = np.inf
    for start in range(0, k, chunk):
        block = points[start:start + chunk]
        d = np.max(np.abs(block[:, None, :] - points[None, :, :]), axis=-1)
        rows = np.arange(start, start + len(block))
        d[np.arange(len(block)), rows] = np.inf
        best = min(best, float(d.min()))
    return best


def _grid_points(s, R, K):
    side = 1
    while side ** (2 * s) < K:
        side += 1
    idx = np.arange(K)
    real = np.empty((K, 2 * s))
    for axis in range(2 * s):
        real[:, axis] = (idx // side ** axis) % side
    real *= R
    return real[:, 0::2] + 1j * real[:, 1::2]


def make_separated(frame, R, K, strategy='grid', seed=0, max_iterations=None):
    """
    K points of W0 pairwise at least R apart in the frame norm.

    The grid strategy enumerates a lattice of spacing R in the 2s real
    coordinates, first coordinate fastest. The greedy-random strategy draws
    uniform candidates in a box and rejects violators.

    Args:
        frame: CentralFrame
        R: separation, > 0
        K: number of points, >= 1
        strategy: 'grid' or 'greedy-random'
        seed: run seed
        max_iterations: candidate budget for greedy-random (default 1000*K)

    Returns:
        SeparatedSet

    Raises:
        ContractViolation: invalid R, K or strategy
        ConvergenceError: greedy-random did not reach K points
    """
    if R <= 0:
        raise ContractViolation(f"R must be positive, got {R}")
    if K < 1:
        raise ContractViolation(f"K must be at least 1, got {K}")
    s = frame.s

    if strategy == 'grid':
        points = _grid_points(s, float(R), int(K))
    elif strategy == 'greedy-random':
        rng = stream_rng(seed, "torus.make_separated")
        budget = max_iterations or 1000 * K
        side = 1
        while side ** (2 * s) < K:
            side += 1
        half = R * side
        accepted = np.empty((0, s), dtype=complex)
        tried = 0
        while len(accepted) < K:
            if tried >= budget:
                raise ConvergenceError(
                    f"greedy-random placed {len(accepted)} of {K} points within {budget} candidates"
                )
            real = rng.uniform(-half, half, size=2 * s)
            candidate = real[0::2] + 1j * real[1::2]
            tried += 1
            if len(accepted) == 0 or np.max(np.abs(accepted - candidate), axis=1).min() >= R:
                accepted = np.vstack([accepted, candidate[None, :]])
        points = accepted
    else:
        raise ContractViolation(f"unknown strategy {strategy!r}; expected 'grid' or 'greedy-random'")

    separated = SeparatedSet(points=points, R=float(R), strategy=strategy, seed=int(seed))
    logger.debug(f"Separated set: K={K}, R={R}, strategy={strategy}, min distance {separated.min_distance:.6g}")
    return separated


# -----------------------------
# Inverse orbits
# -----------------------------

def exact_inverse_orbit(frame, x, steps):
    """
    alpha^-1 x, ..., alpha^-steps x, iterated exactly.

    Returns:
        list of TorusPoint with Fraction coordinates
    """
    if x.n != frame.n:
        raise ContractViolation(f"point has {x.n} coordinates, frame dimension is {frame.n}")
    inverse = integer_inverse(frame.A)
    fr = x.as_fractions()
    q = common_denominator(fr)
    p = [int(v * q) for v in fr]
    n = len(p)
    orbit = []
    for _ in range(steps):
        p = [sum(inverse[i][j] * p[j] for j in range(n)) % q for i in range(n)]
        orbit.append(TorusPoint(tuple(Fraction(v, q) for v in p)))
    return orbit


def rotation_phases(frame, ns):
    """xi^k for each k in ns, shape (len(ns), s)."""
    ns = np.asarray(ns, dtype=float)
    return np.exp(1j * np.outer(ns, frame.angles_float))


def iter_inverse_orbit_union(frame, A, x0, N, start=1, chunk=4096):
    """
    Yield (n_values, points) blocks of the union of
    alpha^-n (pi(a) + x0) = pi(xi^-n a) + alpha^-n x0 for start <= n <= N,
    ordered by n and then by a.
    """
    if x0.n != frame.n:
        raise ContractViolation(f"point has {x0.n} coordinates, frame dimension is {frame.n}")
    inverse = integer_inverse(frame.A)
    fr = x0.as_fractions()
    q = common_denominator(fr)
    p = [int(v * q) for v in fr]
    n_dim = len(p)
    for _ in range(start - 1):
        p = [sum(inverse[i][j] * p[j] for j in range(n_dim)) % q for i in range(n_dim)]

    K = len(A.points)
    per_block = max(1, chunk // K)
    step = start
    while step <= N:
        stop = min(N, step + per_block - 1)
        ns = np.arange(step, stop + 1)
        base = np.empty((len(ns), n_dim))
        for row in range(len(ns)):
            p = [sum(inverse[i][j] * p[j] for j in range(n_dim)) % q for i in range(n_dim)]
            base[row] = [v / q for v in p]
        rotated = rotation_phases(frame, -ns)[:, None, :] * A.points[None, :, :]
        lifted = to_real(rotated) @ frame.basis_W0.T
        points = np.mod(lifted + base[:, None, :], 1.0).reshape(-1, n_dim)
        points[points >= 1.0] = 0.0
        yield np.repeat(ns, K), points
        step = stop + 1


def inverse_orbit_union(frame, A, x0, N, point_budget=None):
    """
    Points alpha^-n (pi(a) + x0) for a in A and 1 <= n <= N.

    Args:
        frame: CentralFrame
        A: SeparatedSet
        x0: TorusPoint
        N: number of inverse steps
        point_budget: cap on K*N (default DYNAMICS_CONFIG['point_budget'])

    Returns:
        numpy array of shape (K*N, n) with entries in [0, 1)

    Raises:
        ContractViolation: budget exceeded
    """
    budget = point_budget or get_config('point_budget')
    total = len(A.points) * int(N)
    if total > budget:
        raise ContractViolation(f"K*N = {total} exceeds the point budget {budget}")
    if N < 1:
        return np.empty((0, frame.n))
    blocks = [pts for _, pts in iter_inverse_orbit_union(frame, A, x0, int(N))]
    return np.concatenate(blocks, axis=0)


def periodic_orbit(frame, x, max_period=10**6):
    """
    The alpha-orbit of a rational point, iterated exactly until it closes.

    Raises:
        ContractViolation: x is not exact
        ConvergenceError: the orbit did not close within max_period steps
    """
    if not x.is_exact:
        raise ContractViolation("periodic orbits need a rational point (Fraction coordinates)")
    fr = x.as_fractions()
    q = common_denominator(fr)
    start = tuple(int(v * q) for v in fr)
    p = start
    n = len(p)
    orbit = [start]
    for _ in range(max_period):
        p = tuple(sum(frame.A[i][j] * p[j] for j in range(n)) % q for i in range(n))
        if p == start:
            return [TorusPoint(tuple(Fraction(v, q) for v in pt)) for pt in orbit]
        orbit.append(p)
    raise ConvergenceError(f"orbit of {x} did not close within {max_period} steps")


def write_point_cloud_csv(points, path):
    """One row per point, n columns."""
    points = np.asarray([p.as_array() if isinstance(p, TorusPoint) else p for p in points], dtype=float)
    header = [f"x{i + 1}" for i in range(points.shape[1] if points.ndim == 2 else 0)]
    write_csv(path, header, points.tolist())
