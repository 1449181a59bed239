# stability.py: the orbital-stability experiment
#
#   q^S --perturb--> q0 --scatter--> (z'_j, c'_j) --> params' --> q^S'(t) closed form
#                    q0 --undress--> q~0 (soliton-free residual)
#                    q0 --evolve---> q(t),  distance(t) = ||q(t) - q^S'(t)||_L2
#
# Reports are immutable; sweeps run independent experiments on a thread pool.

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import linear_sum_assignment

import scattering
from dressing import undress
from errors import (SolitonLabError, StageError, ConfigError, CountMismatch, InsufficientData)
from evolver import EvolveConfig, evolve, l2Norm, weightedNorm
from fieldio import checkKeys
from fields import Grid, SolitonParams
from solitons import nSoliton
from utils import edgeLevel, wrapHalfPi

logger = logging.getLogger(__name__)

SHAPES = ('gaussian', 'random-band')
MAX_EPSILON = 0.05
HORIZON = 20.0
CADENCE = 0.5
# constants spreading more than this factor across a sweep are flagged
UNIFORM_BAND = 5.0
EIGENFUNCTION_TOL = 1e-4


@dataclass(frozen=True)
class PerturbationConfig:
    '''
    shape 'gaussian':    exp(-((x - center)/width)^2) exp(i (kick x + phase))
    shape 'random-band': seeded white noise cut to |k| <= band, under the same envelope
    The result is rescaled so that ||<x>^weight dq||_L2 = epsilon.
    '''
    shape: str = 'gaussian'
    epsilon: float = 0.0
    seed: int = 0
    weight: float = 1.0
    center: float = 0.0
    width: float = 2.0
    band: float = 2.0
    kick: float = 0.0
    phase: float = 0.0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ConfigError(f'Unknown perturbation shape {self.shape}; use one of {SHAPES}')
        if not self.epsilon >= 0:
            raise ConfigError(f'epsilon must be >= 0, got {self.epsilon}')
        if not self.weight > 0.5:
            raise ConfigError(f'Weight exponent must exceed 1/2, got {self.weight}')
        if not (self.width > 0 and self.band > 0):
            raise ConfigError('Perturbation width and band must be > 0')

    @classmethod
    def fromDict(cls, d):
        checkKeys(d, cls)
        return cls(**d)


def _shape(grid, cfg):
    x = grid.x
    envelope = np.exp(-((x - cfg.center) / cfg.width) ** 2)
    if cfg.shape == 'gaussian':
        return envelope * np.exp(1j * (cfg.kick * x + cfg.phase))
    rng = np.random.default_rng(cfg.seed)
    noise = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    k = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.dx)
    noise = np.fft.ifft(np.fft.fft(noise) * (np.abs(k) <= cfg.band))
    return envelope * noise * np.exp(1j * cfg.phase)


def perturb(qS, cfg):
    '''
    qS plus a perturbation of weighted norm exactly cfg.epsilon.
    '''
    if cfg.epsilon == 0:
        return qS.withValues(qS.values.copy())
    dq = qS.withValues(_shape(qS.grid, cfg))
    scale = cfg.epsilon / weightedNorm(dq, cfg.weight)
    return qS.withValues(qS.values + scale * dq.values)


@dataclass(frozen=True)
class ExperimentConfig:
    params: Tuple[SolitonParams, ...]
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    evolve: EvolveConfig = field(default_factory=lambda: EvolveConfig(tEnd=HORIZON, scheme='yoshida4'))
    search: scattering.SearchRegion = None
    sampleTimes: Tuple[float, ...] = ()
    undress: bool = True
    eigenfunctionTolerance: float = EIGENFUNCTION_TOL
    name: str = 'experiment'

    def __post_init__(self):
        if not self.params:
            raise ConfigError('An experiment needs at least one soliton')
        if self.perturbation.epsilon > MAX_EPSILON:
            raise ConfigError(f'epsilon = {self.perturbation.epsilon} is outside the small-data '
                              f'regime (<= {MAX_EPSILON})')
        if self.search is None:
            raise ConfigError('An experiment needs a search region')
        times = tuple(float(t) for t in self.sampleTimes)
        if not times:
            times = tuple(np.arange(0.0, self.evolve.tEnd + 0.5 * CADENCE, CADENCE).tolist())
        if min(times) < 0:
            raise ConfigError('Sample times must be >= 0')
        object.__setattr__(self, 'params', tuple(self.params))
        object.__setattr__(self, 'sampleTimes', times)
        object.__setattr__(self, 'evolve', replace(self.evolve, sampleTimes=times,
                                                   tEnd=max(self.evolve.tEnd, max(times))))

    @property
    def grid(self):
        return Grid.centered(self.evolve.n, self.evolve.length)

    @classmethod
    def fromDict(cls, d):
        checkKeys(d, cls)
        d = dict(d)
        try:
            d['params'] = tuple(SolitonParams(**p) for p in d['params'])
        except KeyError:
            raise ConfigError('Experiment config needs a "params" list')
        except TypeError as e:
            raise ConfigError(f'Bad soliton parameters: {e}') from e
        if 'perturbation' in d:
            d['perturbation'] = PerturbationConfig.fromDict(d['perturbation'])
        if 'evolve' in d:
            ev = {'tEnd': HORIZON, 'scheme': 'yoshida4'}
            ev.update(d['evolve'])
            d['evolve'] = EvolveConfig.fromDict(ev)
        if 'search' in d:
            d['search'] = scattering.SearchRegion.fromDict(d['search'])
        return cls(**d)

    def withEpsilon(self, epsilon):
        return replace(self, perturbation=replace(self.perturbation, epsilon=float(epsilon)))


@dataclass(frozen=True)
class StabilityReport:
    name: str
    epsilon: float
    base: List[SolitonParams]
    recovered: List[SolitonParams]
    paramDeviation: float
    paramConstant: float
    distanceSeries: List[Tuple[float, float, float, float]]
    supDistance: float
    constantEstimate: float
    residualNorm: float = None
    residualEigenvalues: List[complex] = field(default_factory=list)

    def seriesFrame(self):
        return pd.DataFrame(self.distanceSeries, columns=['t', 'distance', 'l2_of_q', 'boundary_level'])

    def document(self):
        return {
            'name': self.name,
            'epsilon': self.epsilon,
            'base': [p.asList() for p in self.base],
            'recovered': [p.asList() for p in self.recovered],
            'param_deviation': self.paramDeviation,
            'param_constant': self.paramConstant,
            'sup_distance': self.supDistance,
            'constant_estimate': self.constantEstimate,
            'residual_norm': self.residualNorm,
            'residual_eigenvalues': [[z.real, z.imag] for z in self.residualEigenvalues],
            'distance_series': [list(row) for row in self.distanceSeries],
        }


@dataclass(frozen=True)
class ConstantFit:
    constant: float
    nonUniform: bool
    estimates: List[float]


class _Stage:
    '''
    Re-raise library errors inside the block as StageError(label).
    '''
    def __init__(self, label):
        self.label = label

    def __enter__(self):
        logger.debug(f'Stage {self.label}')
        return self

    def __exit__(self, excType, exc, tb):
        if exc is not None and isinstance(exc, SolitonLabError) and not isinstance(exc, StageError):
            raise StageError(self.label, exc) from exc
        return False


def matchOrder(baseZ, foundZ):
    '''
    Indices into foundZ, one per entry of baseZ, minimizing the total eigenvalue distance.
    '''
    if len(baseZ) != len(foundZ):
        raise CountMismatch(f'{len(foundZ)} eigenvalues recovered for {len(baseZ)} solitons')
    cost = np.abs(np.subtract.outer(np.asarray(baseZ), np.asarray(foundZ)))
    rows, cols = linear_sum_assignment(cost)
    return [int(c) for c in cols[np.argsort(rows)]]


def paramDeviation(base, recovered):
    '''
    max_j max(|dxi|, |deta|, |dx0|, |dtheta mod pi|)
    '''
    worst = 0.0
    for p, r in zip(base, recovered):
        dev = max(abs(r.xi - p.xi), abs(r.eta - p.eta), abs(r.x0 - p.x0),
                  abs(wrapHalfPi(r.theta - p.theta)))
        worst = max(worst, dev)
    return float(worst)


def _recover(q0, cfg):
    data = scattering.scatter(q0, cfg.search)
    index = matchOrder([p.point.z for p in cfg.params], [p.z for p in data.eigenvalues])
    data = replace(data, eigenvalues=[data.eigenvalues[i] for i in index],
                   norming=[data.norming[i] for i in index])
    return data


def runExperiment(cfg):
    grid = cfg.grid
    eps = cfg.perturbation.epsilon
    logger.info(f'{cfg.name}: {len(cfg.params)} solitons, epsilon = {eps:g}, '
                f'{grid.n} samples over L = {grid.length:g}')
    with _Stage('build'):
        qS = nSoliton(list(cfg.params), grid, 0.0)
    with _Stage('perturb'):
        q0 = perturb(qS, cfg.perturbation)
    with _Stage('scatter'):
        data = _recover(q0, cfg)
    with _Stage('params'):
        recovered = scattering.paramsFromScattering(data, thetaRef=[p.theta for p in cfg.params])
        deviation = paramDeviation(cfg.params, recovered)
    logger.info(f'Recovered parameters deviate by {deviation:.3e}')

    residualNorm, residualEigenvalues = None, []
    if cfg.undress:
        with _Stage('undress'):
            op = scattering.ZsOperator(q0)
            eigendata = [(p, op.boundState(p)) for p in data.eigenvalues]
            qt = undress(q0, eigendata, cfg.eigenfunctionTolerance)
            residualNorm = l2Norm(qt)
            residualEigenvalues = [p.z for p in scattering.findEigenvalues(qt, cfg.search)]
        logger.info(f'Soliton-free residual: ||q~0|| = {residualNorm:.3e}, '
                    f'{len(residualEigenvalues)} eigenvalues left')

    with _Stage('evolve'):
        trajectory = evolve(q0, cfg.evolve)
    with _Stage('compare'):
        wanted = set(cfg.sampleTimes)
        series = []
        for q in trajectory:
            if q.t not in wanted:
                continue
            target = nSoliton(recovered, grid, q.t)
            distance = l2Norm(q.withValues(q.values - target.values))
            series.append((q.t, distance, l2Norm(q), edgeLevel(q.values)))
            logger.debug(f't = {q.t:g}: distance {distance:.3e}')
    sup = max(d for _, d, _, _ in series)
    report = StabilityReport(
        name=cfg.name, epsilon=eps, base=list(cfg.params), recovered=recovered,
        paramDeviation=deviation, paramConstant=deviation / eps if eps > 0 else 0.0,
        distanceSeries=series, supDistance=sup, constantEstimate=sup / eps if eps > 0 else 0.0,
        residualNorm=residualNorm, residualEigenvalues=residualEigenvalues)
    logger.info(f'{cfg.name}: sup distance {sup:.3e}, C estimate {report.constantEstimate:.3f}')
    return report


def fitConstant(reports):
    '''
    Largest C = sup distance / epsilon over a sweep; flagged when the estimates
    spread by more than UNIFORM_BAND.
    '''
    used = [r for r in reports if r.epsilon > 0]
    if len({r.epsilon for r in used}) < 2:
        raise InsufficientData(f'Need reports at two or more distinct epsilon > 0, got {len(used)}')
    estimates = [r.constantEstimate for r in used]
    constant = max(estimates)
    lo = min(estimates)
    nonUniform = lo <= 0 or constant / lo > UNIFORM_BAND
    if nonUniform:
        logger.warning(f'Constant estimates {estimates} spread more than {UNIFORM_BAND:g}x')
    return ConstantFit(constant, nonUniform, estimates)


def workerCount():
    env = os.environ.get('NLSF_THREADS')
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f'NLSF_THREADS must be an integer, got {env!r}')
    return os.cpu_count() or 1


def runSweep(cfg, epsilons):
    '''
    One experiment per epsilon, in the order given.
    '''
    configs = [cfg.withEpsilon(e) for e in epsilons]
    workers = min(workerCount(), len(configs))
    logger.info(f'Sweeping {len(configs)} epsilons on {workers} threads')
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(runExperiment, configs))
