"""
Density service: epsilon-density of truncated inverse-orbit unions of
separated central sets.

The lemma-faithful recipe builds a tent partition of unity, certifies a
truncated Fourier expansion of each tent, fits c_a for the low characters
and derives K = R^(2s). The practical mode takes (R, K) from the caller.
"""
import itertools
import logging
from dataclasses import dataclass, field, replace
from math import ceil, floor, pi, sqrt

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import polygamma

from dynamics.exceptions import ContractViolation, ConvergenceError
from dynamics.services.constant_cache import ConstantCacheService
from dynamics.services.harmonic_service import Character, fit_ca
from dynamics.services.torus_service import (
    TorusPoint, iter_inverse_orbit_union, make_separated,
)
from dynamics.utils import exact, fitted, get_config, sampled

logger = logging.getLogger(__name__)

FIT_NORM_CEILING = 1e4
MODES = ('practical', 'lemma')


# -----------------------------
# Partition of unity
# -----------------------------

@dataclass(frozen=True)
class PartitionOfUnity:
    """
    Tensor-product tents on the grid (j_1, ..., j_n)/G.

    Each tent has half-width h = 1/G per axis, so its support is a cube of
    side 2h <= epsilon (sup-norm diameter) and the tents sum to 1.
    """
    n: int
    grid: int

    @property
    def h(self):
        return 1.0 / self.grid

    @property
    def k(self):
        return self.grid ** self.n

    @property
    def support_diameter(self):
        return 2.0 * self.h if self.grid > 1 else 1.0

    @property
    def l1_norm(self):
        """||f_i||_1, the same for every tent."""
        return self.h ** self.n

    def center(self, index):
        """Center of tent number index, first axis fastest."""
        return np.array([((index // self.grid ** m) % self.grid) / self.grid for m in range(self.n)])

    def axis_values(self, t):
        """
        Per-axis tent weights: for coordinates t (..., n) returns the left
        grid index (..., n) and the weight (..., n) of that tent; the next
        tent gets 1 - weight.
        """
        scaled = np.mod(t, 1.0) * self.grid
        left = np.floor(scaled).astype(np.int64) % self.grid
        frac = scaled - np.floor(scaled)
        return left, 1.0 - frac

    def evaluate(self, index, x):
        """f_index at points x (..., n)."""
        c = self.center(index)
        d = np.abs(np.mod(np.asarray(x, dtype=float) - c + 0.5, 1.0) - 0.5)
        if self.grid == 1:
            return np.ones(d.shape[:-1])
        return np.prod(np.clip(1.0 - d * self.grid, 0.0, None), axis=-1)

    def masses(self, points):
        """Mean of each tent over the rows of points; array of length k."""
        points = np.asarray(points, dtype=float)
        out = np.zeros(self.k)
        if len(points) == 0:
            return out
        left, weight = self.axis_values(points)
        strides = self.grid ** np.arange(self.n)
        for corner in itertools.product((0, 1), repeat=self.n):
            corner = np.array(corner)
            idx = ((left + corner) % self.grid) @ strides
            w = np.prod(np.where(corner == 0, weight, 1.0 - weight), axis=-1)
            np.add.at(out, idx, w)
        return out / len(points)


def build_partition(frame, epsilon, n=None, cap=None):
    """
    Tent partition of unity on T^n.

    Each tent is supported in a cube of side 2/G, so its support has
    sup-norm diameter at most epsilon. The density checks measure gaps in
    the Euclidean metric; the tents only enter the density experiment
    through their masses.

    Args:
        frame: CentralFrame whose dimension fixes n, or None when n is given
        epsilon: in (0, 1/2)
        n: torus dimension; must agree with frame.n when both are given
        cap: largest allowed tent count (default DYNAMICS_CONFIG['partition_cap'])

    Returns:
        PartitionOfUnity with G = ceil(2/epsilon) tents per axis

    Raises:
        ContractViolation: epsilon out of range, missing or inconsistent
            dimension, too many tents
    """
    if frame is not None:
        if n is not None and int(n) != frame.n:
            raise ContractViolation(f"dimension {n} does not match the frame dimension {frame.n}")
        n = frame.n
    if n is None or int(n) < 1:
        raise ContractViolation(f"a partition needs a positive dimension, got {n}")
    if not 0 < epsilon < 0.5:
        raise ContractViolation(f"epsilon must lie in (0, 1/2), got {epsilon}")
    cap = cap or get_config('partition_cap')
    grid = int(ceil(2.0 / epsilon - 1e-12))
    partition = PartitionOfUnity(n=int(n), grid=grid)
    if partition.k > cap:
        raise ContractViolation(f"{grid}^{n} = {partition.k} tents exceed the cap {cap}")
    return partition


# -----------------------------
# Fourier approximation
# -----------------------------

@dataclass(frozen=True, eq=False)
class FourierApproximation:
    """
    Truncated Fourier series of the tents of a partition over the box
    Xi = {a : |a_m| <= cutoff}. Coefficients are separable:
    u_(i,a) = prod_m h sinc^2(a_m h) e^(-2 pi i a_m c_m).
    """
    partition: PartitionOfUnity
    cutoff: int
    axis_error: float
    sup_bound: float
    probe_error: float = None

    @property
    def size(self):
        return (2 * self.cutoff + 1) ** self.partition.n

    @property
    def axis_total(self):
        """sum_(|k| <= cutoff) h sinc^2(kh); the full series sums to 1."""
        return 1.0 - self.axis_error

    def magnitudes(self, ks):
        ks = np.asarray(ks)
        if np.any(np.abs(ks) > self.cutoff):
            raise ContractViolation(f"frequency outside the cutoff {self.cutoff}")
        return self.partition.h * np.sinc(ks * self.partition.h) ** 2

    def magnitude(self, a):
        return float(np.prod(self.magnitudes(np.asarray(a, dtype=float))))

    def coefficient(self, index, a):
        c = self.partition.center(index)
        phase = np.exp(-2j * pi * np.dot(np.asarray(a, dtype=float), c))
        return complex(self.magnitude(a) * phase)

    def frequencies(self):
        """All of Xi; only for small boxes."""
        if self.size > 2**20:
            raise ContractViolation(f"Xi has {self.size} frequencies; use the separable form")
        axis = range(-self.cutoff, self.cutoff + 1)
        return list(itertools.product(axis, repeat=self.partition.n))

    def evaluate_axis(self, t, center=0.0):
        """One-dimensional truncated series at points t."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for start in range(-self.cutoff, self.cutoff + 1, 4096):
            kk = np.arange(start, min(self.cutoff + 1, start + 4096))
            out += np.cos(2 * pi * np.outer(t - center, kk)) @ self.magnitudes(kk)
        return out

    def evaluate(self, index, x):
        """Truncated series of tent index at points x (..., n)."""
        x = np.asarray(x, dtype=float)
        c = self.partition.center(index)
        out = np.ones(x.shape[:-1])
        for m in range(self.partition.n):
            out *= self.evaluate_axis(x[..., m].ravel(), c[m]).reshape(x.shape[:-1])
        return out


def axis_tail(grid, cutoff):
    """
    sum_(|k| > cutoff) h sinc^2(kh) for h = 1/grid, summed exactly per residue
    class r = k mod grid with the trigamma function.
    """
    if grid == 1:
        return 0.0
    h = 1.0 / grid
    r = np.arange(1, grid)
    first = cutoff + 1 + np.mod(r - (cutoff + 1), grid)
    per_class = np.sin(pi * r / grid) ** 2 * polygamma(1, first / grid) / grid ** 2
    return float(2 * per_class.sum() / (pi ** 2 * h))


def _probe_error(approx, probes=None):
    partition = approx.partition
    per_axis = probes or max(8, int(floor((2**20) ** (1.0 / partition.n))))
    if (2 * approx.cutoff + 1) * per_axis > 2**26:
        return None
    t = (np.arange(per_axis) + 0.5) / per_axis
    d = np.abs(np.mod(t + 0.5, 1.0) - 0.5)
    tent = np.clip(1.0 - d * partition.grid, 0.0, None) if partition.grid > 1 else np.ones_like(t)
    series = approx.evaluate_axis(t)
    exact_values = np.ones(1)
    approx_values = np.ones(1)
    for _ in range(partition.n):
        exact_values = np.multiply.outer(exact_values, tent).ravel()
        approx_values = np.multiply.outer(approx_values, series).ravel()
    return float(np.max(np.abs(exact_values - approx_values)))


def fourier_approximate(partition, cutoff=16, tolerance=None, cap=None):
    """
    Certified truncated Fourier expansion of the tents.

    The cutoff doubles until the sup-norm bound n e (1 + e)^(n-1), with e the
    one-axis coefficient tail, falls below tolerance (default ||f_i||_1 / 100).
    When Xi is small enough the error is also measured on a probe grid.

    Args:
        partition: PartitionOfUnity
        cutoff: starting cutoff, >= 1
        tolerance: sup-norm target
        cap: largest cutoff (default DYNAMICS_CONFIG['fourier_cutoff_cap'])

    Returns:
        FourierApproximation

    Raises:
        ContractViolation: cutoff < 1
        ConvergenceError: cap reached before the bound holds
    """
    if cutoff < 1:
        raise ContractViolation(f"cutoff must be at least 1, got {cutoff}")
    n = partition.n
    tolerance = tolerance or partition.l1_norm / 100
    cap = cap or get_config('fourier_cutoff_cap')

    if partition.grid == 1:
        return FourierApproximation(partition=partition, cutoff=0, axis_error=0.0, sup_bound=0.0, probe_error=0.0)

    C = int(cutoff)
    while True:
        e = axis_tail(partition.grid, C)
        bound = n * e * (1 + e) ** (n - 1)
        if bound < tolerance:
            break
        if 2 * C > cap:
            raise ConvergenceError(
                f"Fourier cutoff cap {cap} reached with sup bound {bound:.3e} above {tolerance:.3e}"
            )
        C *= 2

    approx = FourierApproximation(partition=partition, cutoff=C, axis_error=e, sup_bound=bound)
    probe = _probe_error(approx)
    if probe is not None and probe >= tolerance:
        raise ConvergenceError(f"measured sup error {probe:.3e} above {tolerance:.3e} at cutoff {C}")
    logger.info(f"Fourier cutoff {C} for {partition.k} tents (sup bound {bound:.3e}, tolerance {tolerance:.3e})")
    return replace(approx, probe_error=probe)


# -----------------------------
# R and K
# -----------------------------

def head_characters(n, head=1):
    """Nonzero characters with |a_m| <= head."""
    axis = range(-head, head + 1)
    return [Character(a) for a in itertools.product(axis, repeat=n) if any(a)]


def fit_character_constants(frame, characters, seed=0, samples=None):
    """c_a for each character, through the constant cache."""
    samples = samples or get_config('fit_samples')
    polynomial = frame.f.key()
    constants = {}
    for a in characters:
        constants[a.key()] = ConstantCacheService.get_or_fit(
            'ca',
            {'polynomial': polynomial, 'character': a.key(), 'seed': seed, 'samples': samples},
            lambda a=a: fit_ca(frame, a, samples=samples, seed=seed).value,
        )
    return constants


@dataclass(frozen=True, eq=False)
class RKResult:
    R: float
    K: int
    R_floor: int
    ratio: float
    head: int
    tail_cap: float
    tail_mass: float
    constants: dict
    approximation: FourierApproximation = field(repr=False)
    seed: int = 0
    samples: int = 0

    def to_dict(self):
        approx = self.approximation
        return {
            'R': fitted(self.R, self.seed, self.samples),
            'K': fitted(self.K, self.seed, self.samples),
            'R_floor': fitted(self.R_floor, self.seed, self.samples),
            'Xi': {
                'cutoff': approx.cutoff,
                'size': approx.size,
                'head': self.head,
                'sup_bound': exact(approx.sup_bound),
                'probe_error': approx.probe_error,
                'tail_mass': exact(self.tail_mass),
                'tail_cap': exact(self.tail_cap),
            },
            'tents': {
                'per_axis': approx.partition.grid,
                'count': approx.partition.k,
                'l1_norm': exact(approx.partition.l1_norm),
            },
            'c_a': {k: fitted(v, self.seed, self.samples) for k, v in sorted(self.constants.items())},
        }


def compute_R_K(frame, epsilon, seed=0, head=1, samples=None, cutoff=16):
    """
    K = ceil(100 max_i sum_(a in Xi, a != 0) |u_(i,a)| c_a / ||f_i||_1) and R = K^(1/2s).

    c_a is fitted for |a_m| <= head; beyond the head box the fitted constant
    is majorised by max(1, 10^4^(1/2s)), which bounds fit_ca for every
    character, times the remaining Fourier mass of Xi.

    Returns:
        RKResult; R is exact before rounding, R_floor^(2s) <= K < (R_floor+1)^(2s)

    Raises:
        ContractViolation: rotations not independent, epsilon out of range
    """
    s = frame.s
    n = frame.n
    samples = samples or get_config('fit_samples')
    partition = build_partition(frame, epsilon)
    approx = fourier_approximate(partition, cutoff=max(cutoff, head))
    characters = head_characters(n, head)
    constants = fit_character_constants(frame, characters, seed, samples)

    head_sum = sum(approx.magnitude(a.a) * constants[a.key()] for a in characters)
    total_axis = approx.axis_total
    head_axis = float(approx.magnitudes(np.arange(-head, head + 1)).sum())
    tail_mass = max(0.0, total_axis ** n - head_axis ** n)
    tail_cap = max(1.0, FIT_NORM_CEILING ** (1.0 / (2 * s)))

    ratio = (head_sum + tail_cap * tail_mass) / partition.l1_norm
    K = int(ceil(100 * ratio))
    R = K ** (1.0 / (2 * s))
    R_floor = int(floor(R))
    while (R_floor + 1) ** (2 * s) <= K:
        R_floor += 1
    while R_floor ** (2 * s) > K:
        R_floor -= 1
    logger.info(f"epsilon={epsilon}: K={K}, R={R:.6g} (head {head}, {len(characters)} fitted characters)")
    return RKResult(
        R=R, K=K, R_floor=R_floor, ratio=ratio, head=head, tail_cap=tail_cap, tail_mass=tail_mass,
        constants=constants, approximation=approx, seed=int(seed), samples=int(samples),
    )


# -----------------------------
# Density checks
# -----------------------------

def _probe_grid(n, epsilon, refine=1):
    return int(ceil(2 * sqrt(n) / epsilon)) * int(refine)


def _as_array(points):
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
    else:
        arr = np.array([p.as_array() if isinstance(p, TorusPoint) else p for p in points], dtype=float)
    arr = np.mod(arr, 1.0)
    arr[arr >= 1.0] = 0.0
    return arr


class GapTracker:
    """
    Nearest-point distances from every probe-cell center, updated as points
    arrive; worst_gap can only decrease.
    """

    def __init__(self, n, epsilon, refine=1, probe_cap=None):
        if not 0 < epsilon < 1:
            raise ContractViolation(f"epsilon must lie in (0, 1), got {epsilon}")
        self.n = int(n)
        self.epsilon = float(epsilon)
        self.grid = _probe_grid(self.n, self.epsilon, refine)
        cap = probe_cap or get_config('probe_cap')
        if self.grid ** self.n > cap:
            raise ContractViolation(f"{self.grid}^{self.n} probe cells exceed the cap {cap}")
        axis = (np.arange(self.grid) + 0.5) / self.grid
        self.probes = np.stack(np.meshgrid(*([axis] * self.n), indexing='ij'), axis=-1).reshape(-1, self.n)
        self.distances = np.full(len(self.probes), np.inf)
        self.count = 0

    @property
    def half_diagonal(self):
        return sqrt(self.n) / (2 * self.grid)

    @property
    def worst_gap(self):
        return float(self.distances.max())

    @property
    def dense(self):
        """Every point of X is within worst_gap + half the cell diagonal <= epsilon of the set."""
        return self.worst_gap <= self.epsilon - self.half_diagonal

    def update(self, points):
        points = _as_array(points)
        if len(points) == 0:
            return self.worst_gap
        tree = cKDTree(points, boxsize=1.0)
        dist, _ = tree.query(self.probes, k=1, distance_upper_bound=float(self.distances.max()))
        np.minimum(self.distances, dist, out=self.distances)
        self.count += len(points)
        return self.worst_gap


def check_epsilon_density(points, epsilon, refine=1):
    """
    Probe-grid epsilon-density check on the torus (Euclidean metric mod 1).

    A positive verdict certifies density: every point is within the worst
    probe gap plus half a cell diagonal of the set.

    Args:
        points: TorusPoints or an (K, n) array
        epsilon: density radius
        refine: probe-grid refinement factor

    Returns:
        (dense, worst_gap)

    Raises:
        ContractViolation: no points, probe grid above the cap
    """
    arr = _as_array(points)
    if len(arr) == 0:
        raise ContractViolation("density check needs at least one point")
    tracker = GapTracker(arr.shape[1], epsilon, refine)
    tracker.update(arr)
    return tracker.dense, tracker.worst_gap


# -----------------------------
# Experiment
# -----------------------------

@dataclass(frozen=True, eq=False)
class DensityReport:
    epsilon: float
    s: int
    R: float
    K: int
    mode: str
    seed: int
    strategy: str
    x0: TorusPoint
    N_used: int
    dense: bool
    worst_gap: float
    trace: tuple
    probe_grid: int
    min_tent_mass: float
    character_energy: dict
    lemma: RKResult = None
    budget_exhausted: bool = False
    points: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        count = self.K * self.N_used
        return {
            'epsilon': exact(self.epsilon),
            's': exact(self.s),
            'mode': self.mode,
            'R': (fitted(self.R, self.seed, self.lemma.samples) if self.mode == 'lemma' else exact(self.R)),
            'K': (fitted(self.K, self.seed, self.lemma.samples) if self.mode == 'lemma' else exact(self.K)),
            'R_pow_2s': exact(self.R ** (2 * self.s)),
            'seed': self.seed,
            'strategy': self.strategy,
            'x0': [str(v) for v in self.x0.coords],
            'N_used': exact(self.N_used),
            'dense': self.dense,
            'worst_gap': sampled(self.worst_gap, self.seed, count),
            'budget_exhausted': self.budget_exhausted,
            'probe_grid': self.probe_grid,
            'trace': [
                {'N': N, 'points': pts, 'worst_gap': sampled(gap, self.seed, pts)}
                for N, pts, gap in self.trace
            ],
            'min_tent_mass': sampled(self.min_tent_mass, self.seed, count),
            'character_energy': {
                k: {'measured': sampled(v['measured'], self.seed, count),
                    'bound': None if v['bound'] is None else fitted(v['bound'], self.seed, v['samples'])}
                for k, v in sorted(self.character_energy.items())
            },
            'lemma': self.lemma.to_dict() if self.lemma is not None else None,
        }


def _character_sums(points, matrix):
    """sum over points of <a, x> for every row a of matrix."""
    return np.exp(2j * pi * np.mod(points @ matrix.T, 1.0)).sum(axis=0)


def _character_energy(sums, count, characters, constants, R, K, s, samples):
    out = {}
    for a, total in zip(characters, sums):
        mean = total / count
        c_a = constants.get(a.key()) if constants else None
        bound = None if c_a is None else 2 * c_a * (1.0 / K + R ** (-1.0 / (2 * s))) * 1.5
        out[a.key()] = {'measured': float(abs(mean) ** 2), 'bound': bound, 'samples': samples}
    return out


def density_experiment(frame, epsilon, N_max, x0=None, seed=0, mode='practical', R=None, K=None,
                       strategy='grid', head=1, samples=None, point_budget=None, with_lemma=False,
                       keep_points=False):
    """
    Grow the union of alpha^-n(pi(A) + x0), 1 <= n <= N, for N = 1, 2, 4, ...
    up to N_max and stop at the first epsilon-dense union.

    Args:
        frame: CentralFrame
        epsilon: density radius in (0, 1/2)
        N_max: largest N tried
        x0: base point (default 0)
        seed: run seed
        mode: 'practical' uses the given R and K, 'lemma' computes them
        R, K: separation and size of A in practical mode
        strategy: separated-set strategy
        head: |a_m| bound of the fitted characters
        samples: c_a fitting samples
        point_budget: cap on K*N (default DYNAMICS_CONFIG['point_budget'])
        with_lemma: in practical mode, also compute the lemma values
        keep_points: keep the final union on the report

    Returns:
        DensityReport

    Raises:
        ContractViolation: bad mode or parameters, K above the point budget
    """
    if mode not in MODES:
        raise ContractViolation(f"unknown mode {mode!r}; expected one of {MODES}")
    if N_max < 1:
        raise ContractViolation(f"N_max must be at least 1, got {N_max}")
    budget = point_budget or get_config('point_budget')
    samples = samples or get_config('fit_samples')
    x0 = x0 or TorusPoint((0,) * frame.n)
    s = frame.s

    lemma = None
    if mode == 'lemma' or with_lemma:
        lemma = compute_R_K(frame, epsilon, seed=seed, head=head, samples=samples)
    if mode == 'lemma':
        R, K = lemma.R, lemma.K
    elif R is None or K is None:
        raise ContractViolation("practical mode needs R and K")
    K = int(K)
    if K > budget:
        raise ContractViolation(f"K = {K} exceeds the point budget {budget}")

    A = make_separated(frame, float(R), K, strategy=strategy, seed=seed)
    tracker = GapTracker(frame.n, epsilon)
    partition = build_partition(frame, epsilon)
    tent_mass = np.zeros(partition.k)
    characters = head_characters(frame.n, head)
    char_matrix = np.array([a.a for a in characters], dtype=float)
    char_sums = np.zeros(len(characters), dtype=complex)

    trace = []
    chunks = []
    N_done = 0
    N = 1
    budget_exhausted = False
    while True:
        if K * N > budget:
            budget_exhausted = True
            logger.warning(f"Point budget {budget} reached before N = {N}")
            break
        for _, block in iter_inverse_orbit_union(frame, A, x0, N, start=N_done + 1):
            tracker.update(block)
            tent_mass += partition.masses(block) * len(block)
            char_sums += _character_sums(block, char_matrix)
            if keep_points:
                chunks.append(block)
        N_done = N
        trace.append((N, K * N, tracker.worst_gap))
        logger.debug(f"N={N}: worst gap {tracker.worst_gap:.6f}")
        if tracker.dense or N >= N_max:
            break
        N = min(2 * N, int(N_max))

    points = np.concatenate(chunks) if chunks else None
    constants = lemma.constants if lemma is not None else None
    energy = _character_energy(char_sums, K * N_done, characters, constants, float(R), K, s, samples)

    report = DensityReport(
        epsilon=float(epsilon), s=s, R=float(R), K=K, mode=mode, seed=int(seed), strategy=strategy,
        x0=x0, N_used=N_done, dense=tracker.dense, worst_gap=tracker.worst_gap, trace=tuple(trace),
        probe_grid=tracker.grid, min_tent_mass=float(tent_mass.min() / (K * N_done)),
        character_energy=energy, lemma=lemma, budget_exhausted=budget_exhausted, points=points,
    )
    if report.dense:
        logger.info(f"{frame.f}: epsilon={epsilon} dense at N={N_done} with K={K}, R={R:.6g}")
    else:
        logger.info(f"{frame.f}: epsilon={epsilon} not dense by N={N_done} (worst gap {report.worst_gap:.6f})")
    return report
