"""
Measure service: finitely supported measures, empirical leaf measures, the
finiteness diagnostic, the center-of-mass map and the map tau.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from dynamics.exceptions import ContractViolation
from dynamics.services.embedding_service import (
    complement_coordinates, coordinates, from_real, to_real,
)
from dynamics.services.torus_service import (
    TorusPoint, leaf_point, leaf_points, periodic_orbit, rotation_phases,
)
from dynamics.utils import get_config, stream_rng, write_csv

logger = logging.getLogger(__name__)

MERGE_TOLERANCE = 1e-12
SPACES = ('torus', 'central', 'euclidean')
LATTICE_CAP = 4 * 10**6


@dataclass(frozen=True, eq=False)
class WeightedPointMeasure:
    """
    A finite positive combination of point masses.

    Support points closer than 1e-12 (sup norm) are merged and their
    weights added. Central supports are complex (K, s) arrays, torus and
    euclidean supports are real (K, d) arrays.
    """
    support: np.ndarray
    weights: np.ndarray
    space: str = 'euclidean'

    def __post_init__(self):
        if self.space not in SPACES:
            raise ContractViolation(f"unknown space {self.space!r}; expected one of {SPACES}")
        dtype = complex if self.space == 'central' else float
        support = np.asarray(self.support, dtype=dtype)
        if support.ndim == 1:
            support = support[:, None]
        weights = np.asarray(self.weights, dtype=float).ravel()
        if len(weights) != len(support):
            raise ContractViolation(f"{len(support)} support points but {len(weights)} weights")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise ContractViolation("weights must be positive and finite")
        support, weights = _merge(support, weights)
        object.__setattr__(self, 'support', support)
        object.__setattr__(self, 'weights', weights)

    @classmethod
    def uniform(cls, support, space='euclidean'):
        support = np.asarray(support)
        k = len(support)
        if k == 0:
            raise ContractViolation("a uniform measure needs at least one point")
        return cls(support=support, weights=np.full(k, 1.0 / k), space=space)

    @classmethod
    def dirac(cls, point, space='euclidean'):
        return cls(support=np.asarray(point)[None, ...], weights=np.ones(1), space=space)

    @property
    def total(self):
        return float(np.sum(self.weights))

    @property
    def size(self):
        return len(self.weights)

    @property
    def dim(self):
        return self.support.shape[1]

    def real_support(self):
        """Support as a real array; central coordinates are interleaved (re, im)."""
        return to_real(self.support) if self.space == 'central' else self.support

    def central_points(self):
        if self.space != 'central':
            raise ContractViolation(f"measure lives on {self.space}, not on central coordinates")
        return self.support

    def scaled(self, factor):
        return WeightedPointMeasure(self.support, self.weights * factor, self.space)

    def normalized(self):
        return self.scaled(1.0 / self.total)

    def pushforward(self, func):
        """Image under a map acting on rows of the support."""
        return WeightedPointMeasure(func(self.support), self.weights, self.space)

    def to_dict(self):
        return {'space': self.space, 'support': self.support, 'weights': self.weights}


def _merge(support, weights):
    if len(weights) < 2:
        return support, weights
    real = to_real(support) if np.iscomplexobj(support) else support
    pairs = cKDTree(real).query_pairs(MERGE_TOLERANCE, p=np.inf, output_type='ndarray')
    if len(pairs) == 0:
        return support, weights
    k = len(weights)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(k, k))
    count, labels = connected_components(graph, directed=False)
    _, first = np.unique(labels, return_index=True)
    return support[first], np.bincount(labels, weights=weights, minlength=count)


# -----------------------------
# Invariant samples on the torus
# -----------------------------

def sample_invariant(frame, kind, count, seed=0, params=None):
    """
    Finitely supported alpha-invariant (or nearly invariant) probability on X.

    Args:
        frame: CentralFrame
        kind: 'haar', 'central_orbit_closure' or 'periodic_orbit'
        count: number of samples (orbit length for central_orbit_closure,
            period budget for periodic_orbit)
        seed: run seed
        params: for central_orbit_closure {'x0': TorusPoint, 'w0': central
            coordinates}; for periodic_orbit {'point': exact TorusPoint}

    Returns:
        WeightedPointMeasure on the torus

    Raises:
        ContractViolation: unknown kind, bad parameters
        ConvergenceError: periodic orbit longer than count
    """
    params = params or {}
    n = frame.n
    if count < 1:
        raise ContractViolation(f"count must be positive, got {count}")

    if kind == 'haar':
        rng = stream_rng(seed, "measures.sample_invariant/haar")
        points = rng.random((int(count), n))
    elif kind == 'central_orbit_closure':
        x0 = params.get('x0') or TorusPoint((0,) * n)
        w0 = np.asarray(params.get('w0', np.ones(frame.s)), dtype=complex)
        orbit = rotation_phases(frame, np.arange(int(count))) * w0[None, :]
        points = leaf_points(frame, x0, orbit)
    elif kind == 'periodic_orbit':
        point = params.get('point') or TorusPoint((Fraction(1, 5),) + (0,) * (n - 1))
        orbit = periodic_orbit(frame, point, max_period=int(count))
        points = np.array([p.as_array() for p in orbit])
    else:
        raise ContractViolation(
            f"unknown sample kind {kind!r}; expected haar, central_orbit_closure or periodic_orbit"
        )
    logger.debug(f"Sampled {len(points)} points of kind {kind} on {frame.f}")
    return WeightedPointMeasure.uniform(points, space='torus')


# -----------------------------
# Leaf mass profiles
# -----------------------------

@dataclass(frozen=True, eq=False)
class LeafMassProfile:
    radii: np.ndarray
    masses: np.ndarray
    sample_size: int
    normalization_radius: float
    tube_eps: float
    raw_masses: np.ndarray = field(repr=False)
    sensitivity: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {
            'radii': self.radii,
            'masses': self.masses,
            'raw_masses': self.raw_masses,
            'sample_size': self.sample_size,
            'normalization_radius': self.normalization_radius,
            'tube_eps': self.tube_eps,
            'sensitivity_half_tube': self.sensitivity,
        }


def _lattice_box(frame, r_max, tube_eps):
    """Integer vectors that can carry a tube point of central radius <= r_max."""
    B = frame.basis_W0
    row_bound = np.sqrt(B[:, 0::2] ** 2 + B[:, 1::2] ** 2).sum(axis=1).max()
    L = int(ceil(r_max * row_bound + 1 + tube_eps * np.abs(frame.basis_complement).sum(axis=1).max()))
    size = (2 * L + 1) ** frame.n
    if size > LATTICE_CAP:
        raise ContractViolation(
            f"central radius {r_max} needs {size} lattice vectors, above the cap {LATTICE_CAP}"
        )
    axes = [np.arange(-L, L + 1)] * frame.n
    grid = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, frame.n).astype(float)
    return grid


def _leaf_distances(frame, sample, x, r_max, tube_eps):
    """
    For every sample point y, the smallest central norm of w such that
    y - x = lift(w) + c mod Z^n with |c| < tube_eps in complement coordinates
    (inf if there is none within r_max).
    """
    d = np.mod(sample.support - x.as_array()[None, :] + 0.5, 1.0) - 0.5
    lattice = _lattice_box(frame, r_max, tube_eps)
    span = r_max + np.abs(frame.coord_complex).sum(axis=1).max() * 0.5
    lattice_central = np.max(np.abs(coordinates(frame, lattice)), axis=-1)
    lattice = lattice[lattice_central <= span]
    tree = cKDTree(complement_coordinates(frame, lattice))

    best = np.full(len(d), np.inf)
    chunk = 2**16
    for start in range(0, len(d), chunk):
        block = d[start:start + chunk]
        hits = tree.query_ball_point(-complement_coordinates(frame, block), tube_eps, p=np.inf)
        for row, idx in enumerate(hits):
            if not idx:
                continue
            w = coordinates(frame, block[row][None, :] + lattice[idx])
            best[start + row] = np.max(np.abs(w), axis=-1).min()
    return best


def _profile_masses(frame, sample, x, radii, tube_eps):
    dist = _leaf_distances(frame, sample, x, float(radii[-1]), tube_eps)
    order = np.argsort(dist, kind='stable')
    cumulative = np.concatenate([[0.0], np.cumsum(sample.weights[order])])
    counts = np.searchsorted(dist[order], radii, side='right')
    return cumulative[counts]


def estimate_leaf_profile(frame, sample, x, radii, tube_eps=None, sensitivity=True):
    """
    Empirical leaf measure through x: sample mass in tubes of complement
    width tube_eps around central balls of each radius, normalised so the
    first radius carries mass 1.

    Args:
        frame: CentralFrame
        sample: WeightedPointMeasure on the torus
        x: TorusPoint
        radii: increasing positive radii, radii[0] is the normalisation radius
        tube_eps: complement tolerance (default DYNAMICS_CONFIG['tube_eps'])
        sensitivity: also estimate at tube_eps/2

    Returns:
        LeafMassProfile

    Raises:
        ContractViolation: bad radii or tube_eps, empty tube at radii[0]
    """
    if sample.space != 'torus':
        raise ContractViolation("leaf profiles need a sample on the torus")
    tube_eps = float(tube_eps or get_config('tube_eps'))
    if tube_eps <= 0:
        raise ContractViolation(f"tube_eps must be positive, got {tube_eps}")
    radii = np.asarray(radii, dtype=float)
    if len(radii) == 0 or radii[0] <= 0 or np.any(np.diff(radii) <= 0):
        raise ContractViolation("radii must be positive and strictly increasing")

    raw = _profile_masses(frame, sample, x, radii, tube_eps)
    if raw[0] <= 0:
        raise ContractViolation(
            f"empty tube at r0 = {radii[0]}: {x} is not on a charged leaf of this sample"
        )
    half = None
    if sensitivity:
        half_raw = _profile_masses(frame, sample, x, radii, tube_eps / 2)
        if half_raw[0] > 0:
            half = half_raw / half_raw[0]
        else:
            logger.warning(f"Sensitivity rerun at tube_eps={tube_eps / 2} found an empty r0 tube")

    profile = LeafMassProfile(
        radii=radii,
        masses=raw / raw[0],
        sample_size=sample.size,
        normalization_radius=float(radii[0]),
        tube_eps=tube_eps,
        raw_masses=raw,
        sensitivity=half,
    )
    logger.info(
        f"Leaf profile at {x}: {sample.size} samples, mass {profile.masses[-1]:.4g} at r={radii[-1]:g}"
    )
    return profile


def write_profile_csv(profile, path):
    rows = [(r, m) for r, m in zip(profile.radii, profile.masses)]
    write_csv(path, ['r', 'mass'], rows)


@dataclass(frozen=True)
class FinitenessVerdict:
    verdict: str
    exponent: float
    r_squared: float
    plateau_change: float

    def to_dict(self):
        return {
            'verdict': self.verdict,
            'exponent': self.exponent,
            'fit_r_squared': self.r_squared,
            'plateau_change': self.plateau_change,
        }


def finiteness_diagnostic(profile, growth_threshold=0.5, min_r_squared=0.9, plateau=0.05):
    """
    Classify a leaf mass profile as finite, infinite-growth or inconclusive.

    A log-log fit with exponent above growth_threshold and R^2 at least
    min_r_squared means infinite growth; otherwise the last two masses within
    5% of each other mean finite.

    Raises:
        ContractViolation: fewer than 5 radii or a span below a factor 10
    """
    radii = np.asarray(profile.radii, dtype=float)
    masses = np.asarray(profile.masses, dtype=float)
    if len(radii) < 5 or radii[-1] / radii[0] < 10:
        raise ContractViolation("the diagnostic needs at least 5 radii spanning a factor of 10")

    lx, ly = np.log(radii), np.log(masses)
    slope, intercept = np.polyfit(lx, ly, 1)
    residual = ly - (slope * lx + intercept)
    total = np.sum((ly - ly.mean()) ** 2)
    r_squared = 1.0 if total == 0 else float(1 - np.sum(residual ** 2) / total)
    change = float((masses[-1] - masses[-2]) / masses[-1])

    if slope > growth_threshold and r_squared >= min_r_squared:
        verdict = 'infinite-growth'
    elif change <= plateau:
        verdict = 'finite'
    else:
        verdict = 'inconclusive'
    logger.info(f"Finiteness diagnostic: {verdict} (exponent {slope:.3f}, R^2 {r_squared:.3f})")
    return FinitenessVerdict(verdict=verdict, exponent=float(slope), r_squared=r_squared, plateau_change=change)


# -----------------------------
# Center of mass and tau
# -----------------------------

CENTER_RULES = ('relative', 'reciprocal', 'moment')


def _ball_masses(points, weights, r):
    tree = cKDTree(points)
    neighbours = tree.query_ball_point(points, r)
    return np.array([weights[idx].sum() for idx in neighbours])


def center_of_mass(rho, r=1.0, rule='relative'):
    """
    Isometry-equivariant center of a finite measure on R^d.

    With M the largest mass rho(B(x, r)) over support atoms x, the relative
    rule keeps the atoms whose ball mass is at least M/2 and returns their
    weighted mean. The reciprocal rule uses the threshold 1/n for the least n
    with 1/n <= M instead; it is not invariant under rescaling rho. The
    moment rule is the plain weighted mean.

    Args:
        rho: WeightedPointMeasure (central measures use interleaved real coordinates)
        r: ball radius, > 0
        rule: 'relative', 'reciprocal' or 'moment'

    Returns:
        numpy array of length d (complex of length s for central measures)

    Raises:
        ContractViolation: zero measure, r <= 0, unknown rule
    """
    if rho.size == 0 or rho.total <= 0:
        raise ContractViolation("center of mass of the zero measure")
    if r <= 0:
        raise ContractViolation(f"radius must be positive, got {r}")
    if rule not in CENTER_RULES:
        raise ContractViolation(f"unknown rule {rule!r}; expected one of {CENTER_RULES}")

    points = rho.real_support()
    weights = rho.weights
    if rule == 'moment':
        keep = np.ones(len(weights), dtype=bool)
    else:
        masses = _ball_masses(points, weights, r)
        M = masses.max()
        threshold = M / 2 if rule == 'relative' else 1.0 / ceil(1.0 / M)
        keep = masses >= threshold
    center = weights[keep] @ points[keep] / weights[keep].sum()
    return from_real(center) if rho.space == 'central' else center


def translate_fixture(frame, x, rho, shifts):
    """
    Leaf measures along one leaf: rho at x and rho shifted by -w at
    x + pi(w) for every row w of shifts.
    """
    fixture = {x: rho}
    for w in np.atleast_2d(np.asarray(shifts, dtype=complex)):
        fixture[leaf_point(frame, x, w)] = rho.pushforward(lambda pts, w=w: pts - w)
    return fixture


def tau_map(frame, leaf_measures, x, r=1.0, rule='relative'):
    """
    x + pi(center of mass of rho_x).

    Args:
        frame: CentralFrame
        leaf_measures: mapping TorusPoint -> WeightedPointMeasure on central coordinates
        x: TorusPoint

    Raises:
        ContractViolation: no leaf measure for x
    """
    try:
        rho = leaf_measures[x]
    except KeyError:
        raise ContractViolation(f"no leaf measure for {x}") from None
    if rho.space != 'central':
        raise ContractViolation("leaf measures must live on central coordinates")
    return leaf_point(frame, x, center_of_mass(rho, r, rule))
