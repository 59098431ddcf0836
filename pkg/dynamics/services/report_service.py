"""
Report service: one entry point per experiment command, shared input
parsing and the JSON report envelope.

Reports are deterministic for a fixed configuration; the generation
timestamp goes to a separate <output>.meta.json file.
"""
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from django.utils import timezone

from dynamics import __version__
from dynamics.exceptions import ContractViolation
from dynamics.services.classify_service import classify, classify_matrix
from dynamics.services.constant_cache import ConstantCacheService
from dynamics.services.density_service import density_experiment
from dynamics.services.embedding_service import (
    build_frame, central_norm, coordinates, frame_to_json, lift,
)
from dynamics.services.harmonic_service import (
    Character, cesaro_character_average, energy_integral, estimate_A_s, fit_c2, fit_ca,
    harmonic_estimate_check, oscillatory_integral, TrigPolynomial,
)
from dynamics.services.measure_service import (
    WeightedPointMeasure, estimate_leaf_profile, finiteness_diagnostic, sample_invariant,
    tau_map, translate_fixture, write_profile_csv,
)
from dynamics.services.poly_service import characteristic_polynomial, poly_from_json, poly_parse
from dynamics.services.torus_service import TorusPoint, make_separated, write_point_cloud_csv
from dynamics.utils import (
    exact, fitted, get_config, quadrature, sampled, stream_rng, write_csv, write_json,
)

logger = logging.getLogger(__name__)

COMMANDS = ('classify', 'frame', 'density', 'oscillatory', 'energy', 'leafsim', 'tau')
FORMATS = ('json', 'csv')
SCHEMA_VERSION = 'v1'

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONTRACT = 2


@dataclass(frozen=True)
class RunConfig:
    command: str
    input: str = ''
    seed: int = 0
    precision_bits: int = None
    point_budget: int = None
    quadrature_points: int = None
    trials: int = None
    output: str = None
    format: str = 'json'
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ContractViolation(f"unknown command {self.command!r}; expected one of {COMMANDS}")
        if self.format not in FORMATS:
            raise ContractViolation(f"unknown format {self.format!r}; expected json or csv")
        object.__setattr__(self, 'seed', int(self.seed if self.seed is not None else 0))
        for name in ('precision_bits', 'point_budget', 'quadrature_points', 'trials'):
            value = getattr(self, name)
            if value is not None and int(value) <= 0:
                raise ContractViolation(f"{name} must be positive, got {value}")

    def budget(self, name):
        value = getattr(self, name)
        return int(value) if value is not None else get_config(name)

    def to_dict(self):
        data = asdict(self)
        for name in ('precision_bits', 'point_budget', 'quadrature_points', 'trials'):
            data[name] = self.budget(name)
        return data


@dataclass(frozen=True)
class RunResult:
    exit_code: int
    output: str = None
    payload: dict = None
    error: str = None


# -----------------------------
# Input parsing
# -----------------------------

def load_input(text):
    """
    Polynomial text, a JSON object ({"coeffs": [...]} or {"matrix": [[...]]})
    or the path of a JSON file holding one of them.

    Returns:
        (IntPolynomial, matrix or None)
    """
    text = (text or '').strip()
    if not text:
        raise ContractViolation("no input polynomial or matrix given")
    if not text.startswith('{') and text.endswith('.json'):
        try:
            with open(text, encoding='utf-8') as fh:
                text = fh.read().strip()
        except OSError as e:
            raise ContractViolation(f"cannot read input file {text}: {e}") from e
    if text.startswith('{'):
        try:
            payload = json.loads(text)
        except ValueError as e:
            raise ContractViolation(f"invalid JSON input: {e}") from e
        if 'matrix' in payload:
            matrix = payload['matrix']
            if not isinstance(matrix, list) or not all(isinstance(row, list) for row in matrix):
                raise ContractViolation("'matrix' must be a list of integer rows")
            return characteristic_polynomial(matrix), matrix
        return poly_from_json(payload), None
    return poly_parse(text), None


def parse_torus_point(text, n):
    """Comma-separated coordinates; integers and p/q stay exact."""
    if not text:
        return TorusPoint((0,) * n)
    parts = [p.strip() for p in str(text).split(',')]
    if len(parts) != n:
        raise ContractViolation(f"expected {n} coordinates, got {len(parts)}")
    try:
        coords = [Fraction(p) if ('.' not in p and 'e' not in p.lower()) else float(p) for p in parts]
    except ValueError as e:
        raise ContractViolation(f"invalid coordinate in {text!r}: {e}") from e
    return TorusPoint(tuple(coords))


def parse_character(text, n):
    try:
        a = tuple(int(v) for v in str(text).split(','))
    except ValueError as e:
        raise ContractViolation(f"invalid character {text!r}: {e}") from e
    if len(a) != n:
        raise ContractViolation(f"character needs {n} entries, got {len(a)}")
    return Character(a)


def _wrap_exact(data):
    """Mark every numeric leaf of an exact result with exact provenance."""
    if isinstance(data, dict):
        return {k: _wrap_exact(v) for k, v in data.items()}
    if isinstance(data, bool) or data is None or isinstance(data, str):
        return data
    if isinstance(data, (int, Fraction)):
        return exact(data)
    if isinstance(data, list):
        return [_wrap_exact(v) for v in data]
    return data


# -----------------------------
# Commands
# -----------------------------

def _classify(config):
    f, matrix = load_input(config.input)
    report = classify_matrix(matrix) if matrix is not None else classify(f)
    result = report.to_dict()
    if matrix is not None:
        result['matrix'] = matrix
    return {key: (value if key in ('input', 'notes', 'matrix') else _wrap_exact(value))
            for key, value in result.items()}, None


def _frame(config):
    f, _ = load_input(config.input)
    frame = build_frame(f, precision_bits=config.budget('precision_bits'))
    count = int(config.params.get('samples', 1000))
    rng = stream_rng(config.seed, "report.frame/isometry")
    w = rng.normal(size=(count, frame.s)) + 1j * rng.normal(size=(count, frame.s))
    moved = lift(frame, w) @ np.asarray(frame.A, dtype=float).T
    isometry = float(np.max(np.abs(central_norm(frame, coordinates(frame, moved)) - central_norm(frame, w))))
    roundtrip = float(np.max(np.abs(coordinates(frame, lift(frame, w)) - w)))
    data = frame_to_json(frame)
    result = {
        'polynomial': data['polynomial'],
        'f': exact(data['f']),
        'matrix': exact(data['matrix']),
        's': exact(data['s']),
        'precision_bits': exact(data['precision_bits']),
        'places': exact(data['places']),
        'angles': quadrature(data['angles'], frame.residual),
        'unit_roots': quadrature(data['unit_roots'], frame.residual),
        'basis_W0': quadrature(data['basis_W0'], frame.residual),
        'basis_complement': quadrature(data['basis_complement'], frame.residual),
        'residual': exact(frame.residual),
        'isometry_error': sampled(isometry, config.seed, count),
        'roundtrip_error': sampled(roundtrip, config.seed, count),
    }
    return result, None


def _density(config):
    f, _ = load_input(config.input)
    frame = build_frame(f, precision_bits=config.budget('precision_bits'))
    p = config.params
    x0 = parse_torus_point(p.get('x0'), frame.n)
    report = density_experiment(
        frame,
        float(p.get('eps', 0.25)),
        int(p.get('n_max', 2**14)),
        x0=x0,
        seed=config.seed,
        mode=p.get('mode', 'practical'),
        R=p.get('R', 5.0),
        K=p.get('K', 100),
        strategy=p.get('strategy', 'grid'),
        head=int(p.get('head', 1)),
        point_budget=config.budget('point_budget'),
        with_lemma=bool(p.get('with_lemma', False)),
        keep_points=bool(p.get('points_csv')),
    )
    if p.get('points_csv'):
        write_point_cloud_csv(report.points, p['points_csv'])
    rows = [(N, pts, gap) for N, pts, gap in report.trace]
    return report.to_dict(), (['N', 'points', 'worst_gap'], rows)


def _oscillatory(config):
    p = config.params
    s, M = int(p.get('s', 1)), int(p.get('M', 1))
    trials = config.budget('trials')
    result = fit_c2(s, M, trials=trials, seed=config.seed)
    c2 = ConstantCacheService.get_or_fit(
        'c2', {'character': f"{s},{M}", 'seed': config.seed, 'samples': trials}, lambda: result.value,
    )
    norms = np.array([r[0] for r in result.rows])
    values = np.array([r[1] for r in result.rows])
    scaled = values * norms ** (1.0 / (2 * s))
    top = norms >= norms.max() / 10
    slope = 0.0
    if np.count_nonzero(top) >= 2:
        running = np.maximum.accumulate(scaled[top])
        slope = float(np.polyfit(np.log(norms[top]), np.log(running), 1)[0])
    out = {
        's': exact(s),
        'M': exact(M),
        'c2': fitted(c2, config.seed, trials),
        'top_decade_slope': fitted(slope, config.seed, trials),
        'samples': [
            {'norm': fitted(n, config.seed, trials), 'value': fitted(v, config.seed, trials),
             'bound': fitted(b, config.seed, trials)}
            for n, v, b in result.rows
        ],
    }
    if p.get('bessel') is not None:
        a = float(p['bessel'])
        q = oscillatory_integral(TrigPolynomial(((1, a, 0.0),)), config.budget('quadrature_points'))
        out['bessel'] = {'a': exact(a), 'integral': quadrature(q.value, q.error)}
    if p.get('A_s') and s <= 3:
        grid = int(p.get('A_s_grid', 4))
        A_s = ConstantCacheService.get_or_fit(
            'A_s', {'character': f"{s},{grid}", 'seed': 0, 'samples': grid},
            lambda: estimate_A_s(s, grid),
        )
        out['A_s'] = fitted(A_s, 0, grid)
    return out, (['norm', 'value', 'bound'], list(result.rows))


def _energy(config):
    f, _ = load_input(config.input)
    frame = build_frame(f, precision_bits=config.budget('precision_bits'))
    p = config.params
    a = parse_character(p.get('a') or ','.join(['1'] + ['0'] * (frame.n - 1)), frame.n)
    R, K = float(p.get('R', 10.0)), int(p.get('K', 100))
    N = int(p.get('N', 10**5))
    samples = get_config('fit_samples')
    A = make_separated(frame, R, K, strategy=p.get('strategy', 'grid'), seed=config.seed)
    tau = WeightedPointMeasure.uniform(A.points, space='central')
    x0 = parse_torus_point(p.get('x0'), frame.n)

    c_a = ConstantCacheService.get_or_fit(
        'ca', {'polynomial': frame.f.key(), 'character': a.key(), 'seed': config.seed, 'samples': samples},
        lambda: fit_ca(frame, a, samples=samples, seed=config.seed).value,
    )
    energy = energy_integral(tau, frame.s)
    lhs, rhs, holds = harmonic_estimate_check(frame, a, tau, c_a)
    cesaro = cesaro_character_average(frame, a, tau, x0, N, point_budget=config.budget('point_budget'))
    tail = cesaro.running_square[N // 2:]
    limsup = float(tail.max()) if len(tail) else float(cesaro.running_square[-1])
    bound = 2 * c_a * (1.0 / K + R ** (-1.0 / (2 * frame.s)))

    result = {
        'a': list(a.a),
        'R': exact(R),
        'K': exact(K),
        'N': exact(N),
        'c_a': fitted(c_a, config.seed, samples),
        'energy_integral': exact(energy),
        'energy_bound': exact(1.0 / K + R ** (-1.0 / (2 * frame.s))),
        'gamma_energy': quadrature(lhs, 1e-6),
        'estimate_rhs': fitted(rhs, config.seed, samples),
        'estimate_holds': holds,
        'cesaro_average': sampled(cesaro.average, config.seed, K * N),
        'cesaro_mean_square': sampled(cesaro.mean_square, config.seed, K * N),
        'limsup_proxy': sampled(limsup, config.seed, K * N),
        'limsup_bound': fitted(bound, config.seed, samples),
    }
    step = max(1, N // 1000)
    rows = [(k + 1, float(cesaro.running_square[k])) for k in range(step - 1, N, step)]
    return result, (['N', 'running_square'], rows)


def _leafsim(config):
    f, _ = load_input(config.input)
    frame = build_frame(f, precision_bits=config.budget('precision_bits'))
    p = config.params
    kind = p.get('kind', 'central_orbit_closure')
    count = int(p.get('count', 10**4))
    x = parse_torus_point(p.get('x'), frame.n)
    params = {'x0': x}
    if kind == 'periodic_orbit':
        params = {'point': x if x.is_exact and any(x.coords) else None}
    sample = sample_invariant(frame, kind, count, seed=config.seed, params=params)
    if kind == 'periodic_orbit':
        x = TorusPoint.from_array(sample.support[0])
    radii = [float(r) for r in p.get('radii', [1.5, 3, 6, 12, 16])]
    profile = estimate_leaf_profile(frame, sample, x, radii, tube_eps=p.get('tube_eps'))
    verdict = finiteness_diagnostic(profile) if len(radii) >= 5 and radii[-1] / radii[0] >= 10 else None
    if p.get('profile_csv'):
        write_profile_csv(profile, p['profile_csv'])
    result = {
        'kind': kind,
        'sample_size': exact(sample.size),
        'x': [str(v) for v in x.coords],
        'profile': {
            'radii': exact(profile.radii),
            'masses': sampled(profile.masses, config.seed, sample.size),
            'raw_masses': sampled(profile.raw_masses, config.seed, sample.size),
            'normalization_radius': exact(profile.normalization_radius),
            'tube_eps': exact(profile.tube_eps),
            'sensitivity_half_tube': (
                None if profile.sensitivity is None
                else sampled(profile.sensitivity, config.seed, sample.size)
            ),
        },
        'diagnostic': None if verdict is None else {
            'verdict': verdict.verdict,
            'exponent': sampled(verdict.exponent, config.seed, sample.size),
            'fit_r_squared': sampled(verdict.r_squared, config.seed, sample.size),
            'plateau_change': sampled(verdict.plateau_change, config.seed, sample.size),
        },
    }
    return result, (['r', 'mass'], list(zip(profile.radii.tolist(), profile.masses.tolist())))


def _tau(config):
    f, _ = load_input(config.input)
    frame = build_frame(f, precision_bits=config.budget('precision_bits'))
    p = config.params
    count = int(p.get('count', 16))
    translates = int(p.get('translates', 8))
    radius = float(p.get('radius', 1.0))
    rule = p.get('rule', 'relative')
    n_atoms = int(p.get('atoms', 5))
    rng = stream_rng(config.seed, "report.tau/fixture")
    rows, spreads = [], []
    for j in range(count):
        x = TorusPoint.from_array(rng.random(frame.n))
        atoms = rng.normal(size=(n_atoms, frame.s)) + 1j * rng.normal(size=(n_atoms, frame.s))
        rho = WeightedPointMeasure(atoms, rng.uniform(0.1, 1.0, size=len(atoms)), space='central')
        shifts = 3.0 * (rng.normal(size=(translates, frame.s)) + 1j * rng.normal(size=(translates, frame.s)))
        fixture = translate_fixture(frame, x, rho, shifts)
        images = np.array([tau_map(frame, fixture, y, r=radius, rule=rule).as_array() for y in fixture])
        spread = float(np.max(np.abs(np.mod(images - images[0] + 0.5, 1.0) - 0.5)))
        spreads.append(spread)
        rows.append((j, *images[0].tolist(), spread))
    result = {
        'rule': rule,
        'radius': exact(radius),
        'base_points': exact(count),
        'translates': exact(translates),
        'max_spread': sampled(max(spreads), config.seed, count * (translates + 1)),
        'leaf_constant': bool(max(spreads) <= 1e-9),
    }
    header = ['index'] + [f"tau{i + 1}" for i in range(frame.n)] + ['spread']
    return result, (header, rows)


HANDLERS = {
    'classify': _classify,
    'frame': _frame,
    'density': _density,
    'oscillatory': _oscillatory,
    'energy': _energy,
    'leafsim': _leafsim,
    'tau': _tau,
}


# -----------------------------
# Entry point
# -----------------------------

def default_output(config):
    ext = 'csv' if config.format == 'csv' else 'json'
    return os.path.join(get_config('report_dir'), f"{config.command}-{config.seed}.{ext}")


def envelope(config, result):
    return {
        'schema': f"dynamics.{config.command}/{SCHEMA_VERSION}",
        'version': __version__,
        'config': config.to_dict(),
        'result': result,
    }


def run(config):
    """
    Run one command and write its report.

    Returns:
        RunResult with exit code 0 on success, 2 on a contract violation and
        1 on any other failure
    """
    try:
        result, table = HANDLERS[config.command](config)
        payload = envelope(config, result)
        output = config.output or default_output(config)
        if config.format == 'csv':
            if table is None:
                raise ContractViolation(f"{config.command} has no CSV form")
            write_csv(output, *table)
        else:
            write_json(output, payload)
        write_json(output + '.meta.json', {
            'generated_at': timezone.now().isoformat(),
            'version': __version__,
            'report': os.path.basename(output),
        })
        logger.info(f"{config.command} report written to {output}")
        return RunResult(exit_code=EXIT_OK, output=output, payload=payload)
    except ContractViolation as e:
        logger.warning(f"{config.command}: contract violation: {e}")
        return RunResult(exit_code=EXIT_CONTRACT, error=str(e))
    except Exception as e:
        logger.error(f"{config.command} failed: {e}", exc_info=True)
        return RunResult(exit_code=EXIT_INTERNAL, error=f"{type(e).__name__}: {e}")
