"""
Harmonic service: characters of the torus, oscillatory integrals of
trigonometric polynomials, averages of characters over the rotation group
Gamma, energy integrals and Cesaro averages along inverse orbits.
"""
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import ceil

import numpy as np
from scipy import integrate, optimize

from dynamics.exceptions import ContractViolation, QuadratureError
from dynamics.services.torus_service import TorusPoint, integer_inverse
from dynamics.utils import common_denominator, get_config, stream_rng

logger = logging.getLogger(__name__)

QUADRATURE_TOLERANCE = 1e-6
MIN_POINTS_PER_FREQUENCY = 64
EVAL_CHUNK = 2**20


# -----------------------------
# Types
# -----------------------------

@dataclass(frozen=True)
class TrigPolynomial:
    """p(t) = sum_k a_k cos(2 pi m_k t) + b_k sin(2 pi m_k t)."""
    terms: tuple

    def __post_init__(self):
        terms = tuple((int(m), float(a), float(b)) for m, a, b in self.terms)
        freqs = [m for m, _, _ in terms]
        if any(m <= 0 for m in freqs):
            raise ContractViolation("frequencies must be positive integers")
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ContractViolation("frequencies must be strictly increasing")
        object.__setattr__(self, 'terms', terms)

    @property
    def s(self):
        return len(self.terms)

    @property
    def M(self):
        return self.terms[-1][0] if self.terms else 0

    @property
    def norm(self):
        return max((abs(complex(a, b)) for _, a, b in self.terms), default=0.0)

    @property
    def bandwidth(self):
        """sum_k m_k |a_k + i b_k|: effective frequency extent of e^(ip)."""
        return sum(m * abs(complex(a, b)) for m, a, b in self.terms)

    def scaled(self, factor):
        return TrigPolynomial(tuple((m, factor * a, factor * b) for m, a, b in self.terms))

    def __neg__(self):
        return self.scaled(-1.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for m, a, b in self.terms:
            out += a * np.cos(2 * np.pi * m * t) + b * np.sin(2 * np.pi * m * t)
        return out

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for m, a, b in self.terms:
            out += 2 * np.pi * m * (b * np.cos(2 * np.pi * m * t) - a * np.sin(2 * np.pi * m * t))
        return out


@dataclass(frozen=True)
class Character:
    """x -> exp(2 pi i a.x) on the n-torus."""
    a: tuple

    def __post_init__(self):
        object.__setattr__(self, 'a', tuple(int(v) for v in self.a))

    @property
    def n(self):
        return len(self.a)

    @property
    def is_trivial(self):
        return not any(self.a)

    def key(self):
        return ",".join(str(v) for v in self.a)


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    error: float
    points: int


@dataclass(frozen=True)
class FitResult:
    """Empirical constant with its sweep (norm, value, bound) rows."""
    value: float
    seed: int
    samples: int
    rows: tuple = field(default_factory=tuple)


# -----------------------------
# Characters
# -----------------------------

def eval_character(a, x):
    """
    exp(2 pi i a.x).

    Args:
        a: Character
        x: TorusPoint or array of shape (n,) or (K, n)

    Raises:
        ContractViolation: dimension mismatch
    """
    if isinstance(x, TorusPoint):
        if x.n != a.n:
            raise ContractViolation(f"character has dimension {a.n}, point has {x.n}")
        if x.is_exact:
            phase = sum((ai * xi for ai, xi in zip(a.a, x.coords)), Fraction(0)) % 1
            return complex(np.exp(2j * np.pi * float(phase)))
        x = x.as_array()
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != a.n:
        raise ContractViolation(f"character has dimension {a.n}, points have {x.shape[-1]}")
    phase = np.mod(x @ np.array(a.a, dtype=float), 1.0)
    return np.exp(2j * np.pi * phase)


# -----------------------------
# Periodic trapezoid rule
# -----------------------------

def _periodic_mean(func, points):
    """Mean of func over t = j/points, evaluated in chunks."""
    total = 0.0 + 0.0j
    for start in range(0, points, EVAL_CHUNK):
        t = np.arange(start, min(points, start + EVAL_CHUNK)) / points
        total += np.sum(func(t))
    return total / points


def _trapezoid_with_doubling(func, points):
    """Trapezoid rule on N and 2N nodes; returns (value at 2N, |difference|)."""
    coarse = _periodic_mean(func, points)
    shifted = _periodic_mean(lambda t: func(t + 0.5 / points), points)
    fine = (coarse + shifted) / 2
    return fine, abs(fine - coarse)


def oscillatory_integral(p, quadrature_points=None):
    """
    The integral of e^(i p(t)) over [0, 1] by the periodic trapezoid rule.

    The node count is at least the requested one and at least
    1.25 * bandwidth + 64, so that e^(ip) is resolved; the error estimate is
    the change under doubling.

    Args:
        p: TrigPolynomial
        quadrature_points: requested nodes, at least 64 * M

    Returns:
        QuadratureResult

    Raises:
        ContractViolation: fewer than 64 * M nodes requested
        QuadratureError: doubling delta above 1e-6
    """
    if not p.terms:
        return QuadratureResult(value=1.0 + 0.0j, error=0.0, points=1)
    requested = quadrature_points or get_config('quadrature_points')
    if requested < MIN_POINTS_PER_FREQUENCY * p.M:
        raise ContractViolation(
            f"{requested} quadrature points below the minimum {MIN_POINTS_PER_FREQUENCY * p.M} for M = {p.M}"
        )
    points = max(int(requested), int(ceil(1.25 * p.bandwidth)) + 64)
    value, error = _trapezoid_with_doubling(lambda t: np.exp(1j * p(t)), points)
    if error > QUADRATURE_TOLERANCE:
        raise QuadratureError(f"doubling delta {error:.3e} above {QUADRATURE_TOLERANCE} with {points} nodes")
    return QuadratureResult(value=complex(value), error=float(error), points=2 * points)


def random_trig_polynomial(rng, s, M, norm):
    """s distinct frequencies in 1..M, random phases and moduli, max modulus = norm."""
    freqs = np.sort(rng.choice(np.arange(1, M + 1), size=s, replace=False))
    moduli = rng.uniform(0.0, 1.0, size=s)
    moduli[rng.integers(s)] = 1.0
    moduli *= norm / moduli.max()
    phases = rng.uniform(0.0, 2 * np.pi, size=s)
    return TrigPolynomial(tuple(
        (int(m), float(r * np.cos(ph)), float(r * np.sin(ph)))
        for m, r, ph in zip(freqs, moduli, phases)
    ))


def fit_c2(s, M, trials=None, seed=0, norm_range=(1.0, 1e6)):
    """
    Empirical constant c_2 with |int e^(ip)| <= c_2 * ||p||^(-1/2s).

    Samples trig polynomials with s terms and frequencies up to M, norms
    log-uniform in norm_range, one derived random stream per sample.

    Args:
        s: number of terms
        M: maximal frequency, >= s
        trials: number of samples, >= 100
        seed: run seed

    Returns:
        FitResult with rows (norm, |integral|, bound)

    Raises:
        ContractViolation: trials < 100 or s > M
    """
    trials = trials or get_config('trials')
    if trials < 100:
        raise ContractViolation(f"fit_c2 needs at least 100 trials, got {trials}")
    if s < 1 or s > M:
        raise ContractViolation(f"need 1 <= s <= M, got s={s}, M={M}")
    lo, hi = np.log(norm_range[0]), np.log(norm_range[1])
    samples = []
    for i in range(trials):
        rng = stream_rng(seed, f"harmonic.fit_c2/{s}/{M}/{i}")
        norm = float(np.exp(rng.uniform(lo, hi)))
        p = random_trig_polynomial(rng, s, M, norm)
        result = oscillatory_integral(p, quadrature_points=MIN_POINTS_PER_FREQUENCY * M)
        samples.append((p.norm, abs(result.value)))
    value = max(v * n ** (1.0 / (2 * s)) for n, v in samples)
    rows = tuple(sorted((n, v, value * n ** (-1.0 / (2 * s))) for n, v in samples))
    logger.info(f"Fitted c_2(s={s}, M={M}) = {value:.6f} from {trials} samples (seed {seed})")
    return FitResult(value=float(value), seed=int(seed), samples=int(trials), rows=rows)


def sublevel_measure(p, A, grid=10**4):
    """
    Lebesgue measure of {t in [0, 1] : |p'(t)| < A}, as a midpoint-grid fraction.

    Raises:
        ContractViolation: grid below 10^4
    """
    if grid < 10**4:
        raise ContractViolation(f"grid must be at least 10^4, got {grid}")
    t = (np.arange(grid) + 0.5) / grid
    return float(np.mean(np.abs(p.derivative(t)) < A))


def decomposition_bound(p, A, grid=10**4):
    """(8M + 4)/A + the sublevel measure at A: bounds |int e^(ip)| for any A > 0."""
    if A <= 0:
        raise ContractViolation(f"A must be positive, got {A}")
    return (8 * p.M + 4) / A + sublevel_measure(p, A, grid)


def segment_integral(phase, a, b, points=20001):
    """Composite Simpson rule for the integral of e^(i phase(t)) over [a, b]."""
    if points % 2 == 0:
        points += 1
    t = np.linspace(a, b, points)
    values = np.exp(1j * np.asarray(phase(t)))
    return complex(integrate.simpson(values.real, x=t) + 1j * integrate.simpson(values.imag, x=t))


def van_der_corput_check(B, a, b, points=200001):
    """
    For phi(t) = B t^2 on [a, b] with 0 < a, phi' = 2Bt is monotone and
    exceeds A = 2Ba; returns (|integral|, 4/A, holds).
    """
    if not 0 < a < b or B <= 0:
        raise ContractViolation("need 0 < a < b and B > 0")
    value = abs(segment_integral(lambda t: B * t * t, a, b, points))
    bound = 4.0 / (2 * B * a)
    return value, bound, value <= bound + 1e-9


# -----------------------------
# Polynomial sup constant
# -----------------------------

def _exact_sup(coeffs):
    """sup over (-1, 1) of |sum a_l t^l| via critical points and endpoints."""
    poly = np.polynomial.Polynomial(coeffs)
    candidates = [-1.0, 1.0]
    crit = poly.deriv().roots() if len(coeffs) > 1 else []
    candidates.extend(float(r.real) for r in np.atleast_1d(crit)
                      if abs(r.imag) < 1e-12 and -1.0 < r.real < 1.0)
    return float(np.max(np.abs(poly(np.array(candidates)))))


def estimate_A_s(s, coeff_grid=4, refine=False):
    """
    Upper estimate of the largest A_s with sup_(-1,1) |p| >= A_s max_l |a_l| for
    polynomials p of degree 2s - 1.

    Minimises the sup over coefficient vectors with entries k/coeff_grid and
    max |a_l| = 1. A sampled sup (a lower bound) prunes candidates before the
    exact sup is taken, so the grid minimum is exact and refining the grid
    never increases it.

    Args:
        s: 1..3
        coeff_grid: grid denominator
        refine: polish the best candidate with Nelder-Mead

    Raises:
        ContractViolation: s outside 1..3
    """
    if not 1 <= s <= 3:
        raise ContractViolation(f"estimate_A_s supports s in 1..3, got {s}")
    g = int(coeff_grid)
    dim = 2 * s
    t = np.cos(np.linspace(0.0, np.pi, 129))
    powers = np.vstack([t ** l for l in range(dim)])
    values = np.arange(-g, g + 1)

    best, best_coeffs = np.inf, None
    candidates = []
    for block in _batched(itertools.product(values, repeat=dim), 2**15):
        coeffs = np.array(block, dtype=float)
        coeffs = coeffs[np.max(np.abs(coeffs), axis=1) == g] / g
        if len(coeffs) == 0:
            continue
        sampled = np.max(np.abs(coeffs @ powers), axis=1)
        order = np.argsort(sampled, kind='stable')
        for idx in order:
            if sampled[idx] >= best:
                break
            exact = _exact_sup(coeffs[idx])
            if exact < best:
                best, best_coeffs = exact, coeffs[idx]
        candidates.append(len(coeffs))

    if refine and best_coeffs is not None:
        pinned = int(np.argmax(np.abs(best_coeffs)))
        sign = np.sign(best_coeffs[pinned])

        def objective(free):
            coeffs = np.insert(np.clip(free, -1.0, 1.0), pinned, sign)
            return _exact_sup(coeffs)

        start = np.delete(best_coeffs, pinned)
        result = optimize.minimize(objective, start, method='Nelder-Mead',
                                   options={'xatol': 1e-10, 'fatol': 1e-12, 'maxiter': 4000})
        best = min(best, float(result.fun))
    logger.info(f"A_{s} estimate {best:.6f} over {sum(candidates)} grid polynomials (grid 1/{g})")
    return float(best)


def _batched(iterable, size):
    it = iter(iterable)
    while True:
        block = list(itertools.islice(it, size))
        if not block:
            return
        yield block


# -----------------------------
# Averages over Gamma
# -----------------------------

@lru_cache(maxsize=64)
def _independent(f):
    from dynamics.services.classify_service import multiplicative_independence
    return multiplicative_independence(f)


def character_weights(frame, a):
    """alpha_v = a . e_v, so that a . lift(w) = sum_v Re(w_v alpha_v)."""
    if a.n != frame.n:
        raise ContractViolation(f"character has dimension {a.n}, frame dimension is {frame.n}")
    vec = np.array(a.a, dtype=float)
    proj = vec @ frame.basis_W0
    return proj[0::2] - 1j * proj[1::2]


def circle_average(radii, quadrature_points=None):
    """
    int_0^1 exp(2 pi i r cos 2 pi t) dt for every r in radii (= J_0(2 pi r)),
    trapezoid rule with a doubling check.

    Returns:
        (values, worst doubling delta)
    """
    radii = np.asarray(radii, dtype=float)
    flat = radii.ravel()
    if flat.size == 0:
        return radii.astype(complex), 0.0
    points = max(int(quadrature_points or 64), int(ceil(1.25 * 2 * np.pi * float(flat.max()))) + 64)
    rows = max(1, 2**22 // points)
    out = np.empty(flat.size, dtype=complex)
    worst = 0.0
    for start in range(0, flat.size, rows):
        r = flat[start:start + rows, None]
        coarse = np.zeros(r.shape[0], dtype=complex)
        shifted = np.zeros(r.shape[0], dtype=complex)
        for c0 in range(0, points, max(1, 2**22 // r.shape[0])):
            t = np.arange(c0, min(points, c0 + max(1, 2**22 // r.shape[0]))) / points
            coarse += np.exp(2j * np.pi * r * np.cos(2 * np.pi * t)).sum(axis=1)
            shifted += np.exp(2j * np.pi * r * np.cos(2 * np.pi * (t + 0.5 / points))).sum(axis=1)
        coarse /= points
        fine = (coarse + shifted / points) / 2
        worst = max(worst, float(np.max(np.abs(fine - coarse))))
        out[start:start + rows] = fine
    if worst > QUADRATURE_TOLERANCE:
        raise QuadratureError(f"circle average doubling delta {worst:.3e} above {QUADRATURE_TOLERANCE}")
    return out.reshape(radii.shape), worst


def gamma_character_average(frame, a, w, quadrature_points=None):
    """
    Average of gamma -> <a, pi(M_gamma w)> over Gamma modelled as the full
    s-torus: a product of one-dimensional circle averages, one per place.

    Args:
        frame: CentralFrame with multiplicatively independent rotations
        a: Character
        w: central coordinates (s,) or (K, s)
        quadrature_points: minimum nodes per angle

    Returns:
        complex (or complex array for several w)

    Raises:
        ContractViolation: rotations not independent, dimension mismatch
        QuadratureError: doubling delta above 1e-6
    """
    if not _independent(frame.f):
        raise ContractViolation(f"{frame.f}: rotations are not independent; Gamma is a proper subgroup")
    w = np.asarray(w, dtype=complex)
    if w.shape[-1:] != (frame.s,):
        raise ContractViolation(f"expected {frame.s} central coordinates, got shape {w.shape}")
    if a.is_trivial:
        return np.ones(w.shape[:-1], dtype=complex) if w.ndim > 1 else 1.0 + 0.0j
    radii = np.abs(w * character_weights(frame, a))
    values, _ = circle_average(radii, quadrature_points)
    result = np.prod(values, axis=-1)
    return result if w.ndim > 1 else complex(result)


def fit_ca(frame, a, samples=None, seed=0, norm_range=(1.0, 1e4)):
    """
    Empirical c_a with |gamma average at w| <= c_a * min(1, ||w||^(-1/2s)).

    Norms log-uniform in norm_range, uniformly random directions; includes
    the bound 1 forced by w = 0.

    Raises:
        ContractViolation: trivial character
    """
    if a.is_trivial:
        raise ContractViolation("fit_ca needs a nonzero character")
    samples = samples or get_config('fit_samples')
    s = frame.s
    lo, hi = np.log(norm_range[0]), np.log(norm_range[1])
    ws, norms = [], []
    for i in range(samples):
        rng = stream_rng(seed, f"harmonic.fit_ca/{a.key()}/{i}")
        norm = float(np.exp(rng.uniform(lo, hi)))
        moduli = rng.uniform(0.0, 1.0, size=s)
        moduli[rng.integers(s)] = 1.0
        moduli *= norm / moduli.max()
        phases = rng.uniform(0.0, 2 * np.pi, size=s)
        ws.append(moduli * np.exp(1j * phases))
        norms.append(norm)
    values = np.abs(gamma_character_average(frame, a, np.array(ws)))
    norms = np.array(norms)
    scaled = values * np.maximum(1.0, norms ** (1.0 / (2 * s)))
    value = max(1.0, float(scaled.max()))
    bounds = value * np.minimum(1.0, norms ** (-1.0 / (2 * s)))
    rows = tuple(sorted(zip(norms.tolist(), values.tolist(), bounds.tolist())))
    logger.info(f"Fitted c_a for a=({a.key()}) on {frame.f}: {value:.6f} from {samples} samples (seed {seed})")
    return FitResult(value=value, seed=int(seed), samples=int(samples), rows=rows)


# -----------------------------
# Energy integrals
# -----------------------------

def _require_probability(tau):
    total = float(np.sum(tau.weights))
    if abs(total - 1.0) > 1e-12:
        raise ContractViolation(f"measure has total mass {total!r}, expected a probability measure")


def energy_integral(tau, s):
    """
    sum_(i,j) tau_i tau_j min(1, ||w_i - w_j||^(-1/2s)) over the support of tau,
    with the max-of-moduli norm; diagonal pairs contribute 1.

    Args:
        tau: probability WeightedPointMeasure on central coordinates
        s: number of places

    Raises:
        ContractViolation: weights do not sum to 1
    """
    _require_probability(tau)
    pts = tau.central_points()
    wts = np.asarray(tau.weights, dtype=float)
    k = len(pts)
    rows = max(1, 2**22 // max(1, k * pts.shape[-1]))
    total = 0.0
    for start in range(0, k, rows):
        block = pts[start:start + rows]
        dist = np.max(np.abs(block[:, None, :] - pts[None, :, :]), axis=-1)
        with np.errstate(divide='ignore'):
            kernel = np.minimum(1.0, dist ** (-1.0 / (2 * s)))
        kernel[dist == 0] = 1.0
        total += float(wts[start:start + rows] @ kernel @ wts)
    return total


def gamma_energy_average(frame, a, tau, quadrature_points=None):
    """
    int_Gamma |int <a, pi(M_gamma w)> dtau(w)|^2 dgamma, as the pair sum of
    Gamma averages at w_i - w_j.
    """
    _require_probability(tau)
    pts = tau.central_points()
    wts = np.asarray(tau.weights, dtype=float)
    diffs = pts[:, None, :] - pts[None, :, :]
    averages = gamma_character_average(frame, a, diffs.reshape(-1, frame.s), quadrature_points)
    pair = np.real(averages).reshape(len(pts), len(pts))
    return float(wts @ pair @ wts)


def harmonic_estimate_check(frame, a, tau, c_a):
    """
    Energy estimate: the Gamma-averaged squared character integral against
    c_a times the energy integral. Returns (lhs, rhs, holds).
    """
    lhs = gamma_energy_average(frame, a, tau)
    rhs = c_a * energy_integral(tau, frame.s)
    return lhs, rhs, lhs <= rhs * (1 + 1e-9)


# -----------------------------
# Cesaro averages along inverse orbits
# -----------------------------

@dataclass(frozen=True, eq=False)
class CesaroResult:
    average: complex
    mean_square: float
    N: int
    running_square: np.ndarray = field(repr=False)


def cesaro_character_average(frame, a, tau, x0, N, point_budget=None, chunk=4096):
    """
    (1/N) sum_(i<N) int <a, x> d(rho alpha^i)(x) for rho the image of tau
    under w -> pi(w) + x0, so each support point is moved by alpha^-i.

    Also returns (1/N) sum_i |int <a,.> d(rho alpha^i)|^2 and the running
    squared averages |(1/k) sum_(i<k) ...|^2 for k = 1..N.

    Raises:
        ContractViolation: tau not a probability, K*N above the point budget
    """
    _require_probability(tau)
    budget = point_budget or get_config('point_budget')
    pts = tau.central_points()
    wts = np.asarray(tau.weights, dtype=float)
    if len(pts) * int(N) > budget:
        raise ContractViolation(f"K*N = {len(pts) * int(N)} exceeds the point budget {budget}")
    if x0.n != frame.n:
        raise ContractViolation(f"point has {x0.n} coordinates, frame dimension is {frame.n}")

    if a.is_trivial:
        running = np.ones(int(N))
        return CesaroResult(average=1.0 + 0.0j, mean_square=1.0, N=int(N), running_square=running)

    beta = pts * character_weights(frame, a)
    angles = frame.angles_float
    inverse = integer_inverse(frame.A)
    fr = x0.as_fractions()
    q = common_denominator(fr)
    p = [int(v * q) for v in fr]
    avec = list(a.a)
    n = frame.n

    per_step = np.empty(int(N), dtype=complex)
    for start in range(0, int(N), chunk):
        ks = np.arange(start, min(int(N), start + chunk))
        base_phase = np.empty(len(ks))
        for row in range(len(ks)):
            base_phase[row] = (sum(ai * pi for ai, pi in zip(avec, p)) % q) / q
            p = [sum(inverse[i][j] * p[j] for j in range(n)) % q for i in range(n)]
        rot = np.exp(-1j * np.outer(ks, angles))
        phase = np.real(rot[:, None, :] * beta[None, :, :]).sum(axis=-1)
        values = np.exp(2j * np.pi * phase) @ wts
        per_step[ks] = values * np.exp(2j * np.pi * base_phase)

    cumulative = np.cumsum(per_step) / np.arange(1, int(N) + 1)
    return CesaroResult(
        average=complex(cumulative[-1]),
        mean_square=float(np.mean(np.abs(per_step) ** 2)),
        N=int(N),
        running_square=np.abs(cumulative) ** 2,
    )
