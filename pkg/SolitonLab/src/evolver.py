# evolver.py: split-step Fourier integration of i q_t + q_xx + 2|q|^2 q = 0
# on the periodic grid, and the norms the stability bounds are stated in.
#
# One Strang step of size h:  N(h/2) L(h) N(h/2) with
#   L: q^(k) -> exp(-i k^2 h) q^(k)      (exact in Fourier space)
#   N: q -> exp(2i |q|^2 h) q            (exact, |q| is frozen by N)

import logging
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from errors import CFLViolation, BoundaryContamination, ConfigError, GridMismatch
from fieldio import checkKeys
from fields import ComplexField
from utils import isPowerOfTwo, wavenumbers, edgeLevel

logger = logging.getLogger(__name__)

DEFAULT_LENGTH = 80.0
DEFAULT_N = 2048
START_EDGE_TOL = 1e-6
EDGE_TOL = 1e-4
SCHEMES = ('strang', 'yoshida4')

# triple-jump weights of the fourth-order composition
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = -(2.0 ** (1.0 / 3.0)) * _W1


@dataclass(frozen=True)
class EvolveConfig:
    length: float = DEFAULT_LENGTH
    n: int = DEFAULT_N
    dt: float = 1e-3
    tEnd: float = 1.0
    dealias: bool = True
    scheme: str = 'strang'
    sampleTimes: Tuple[float, ...] = ()
    edgeTolerance: float = EDGE_TOL

    def __post_init__(self):
        object.__setattr__(self, 'sampleTimes', tuple(float(t) for t in self.sampleTimes))
        if not isPowerOfTwo(self.n):
            raise ConfigError(f'Sample count must be a power of two, got {self.n}')
        if self.scheme not in SCHEMES:
            raise ConfigError(f'Unknown splitting scheme {self.scheme}; use one of {SCHEMES}')
        if not (self.dt > 0 and self.tEnd >= 0 and self.length > 0):
            raise ConfigError(f'Need dt > 0, tEnd >= 0, length > 0: {self}')
        if self.dt > self.maxStep:
            raise CFLViolation(f'dt = {self.dt:g} exceeds (L/N)/(2 pi) = {self.maxStep:.3e}')

    @property
    def maxStep(self):
        return (self.length / self.n) / (2.0 * np.pi)

    @classmethod
    def fromDict(cls, d):
        checkKeys(d, cls)
        return cls(**d)

    def times(self):
        '''
        Output times: 0, the requested samples inside [0, tEnd], and tEnd.
        '''
        ts = {0.0, float(self.tEnd)}
        ts.update(t for t in self.sampleTimes if 0.0 <= t <= self.tEnd)
        return sorted(ts)


class SplitStepSolver:
    def __init__(self, grid, cfg):
        if abs(grid.length - cfg.length) > 1e-9 * cfg.length or grid.n != cfg.n:
            raise GridMismatch(f'Field grid (n={grid.n}, L={grid.length:g}) does not match the config '
                               f'(n={cfg.n}, L={cfg.length:g})')
        self.cfg = cfg
        self.k = wavenumbers(grid.n, grid.dx)
        self.mask = np.ones(grid.n)
        if cfg.dealias:
            kmax = np.abs(self.k).max()
            self.mask[np.abs(self.k) > (2.0 / 3.0) * kmax] = 0.0

    def nonlinear(self, q, h):
        return q * np.exp(2j * np.abs(q) ** 2 * h)

    def linear(self, q, h):
        return np.fft.ifft(np.fft.fft(q) * np.exp(-1j * self.k ** 2 * h) * self.mask)

    def strang(self, q, h):
        q = self.nonlinear(q, 0.5 * h)
        q = self.linear(q, h)
        return self.nonlinear(q, 0.5 * h)

    def step(self, q, h):
        if self.cfg.scheme == 'yoshida4':
            q = self.strang(q, _W1 * h)
            q = self.strang(q, _W0 * h)
            return self.strang(q, _W1 * h)
        return self.strang(q, h)

    def checkEdges(self, q, t):
        level = edgeLevel(q)
        if level > self.cfg.edgeTolerance:
            raise BoundaryContamination(f'Edge level {level:.2e} at t = {t:g} exceeds {self.cfg.edgeTolerance:g}')
        return level

    def advance(self, q, span, t0=0.0):
        '''
        Whole steps of dt, the last one shortened to land exactly on `span`.
        The edge level is checked after every step.
        '''
        dt = self.cfg.dt
        steps = int(np.floor(span / dt + 1e-9))
        for i in range(steps):
            q = self.step(q, dt)
            self.checkEdges(q, t0 + (i + 1) * dt)
        rest = span - steps * dt
        if rest > 1e-12 * max(1.0, span):
            q = self.step(q, rest)
            self.checkEdges(q, t0 + span)
        return q


def evolve(q0, cfg):
    '''
    Trajectory of q0 at cfg.times(). Raises BoundaryContamination as soon as the field
    reaches the grid edges, since the periodic grid would then wrap it around.
    '''
    level = edgeLevel(q0.values)
    if level > START_EDGE_TOL:
        raise BoundaryContamination(f'Initial field is {level:.2e} of its peak at the edges')
    solver = SplitStepSolver(q0.grid, cfg)
    q = q0.values.copy()
    t = 0.0
    trajectory = [q0.withValues(q, t=q0.t)]
    for target in cfg.times()[1:]:
        q = solver.advance(q, target - t, t)
        t = target
        level = edgeLevel(q)
        trajectory.append(q0.withValues(q, t=q0.t + t))
        logger.debug(f't = {t:g}: ||q|| = {l2Norm(trajectory[-1]):.12f}, edge level {level:.1e}')
    logger.info(f'Evolved {q0.n} samples to t = {cfg.tEnd:g} ({cfg.scheme}, dt = {cfg.dt:g})')
    return trajectory


def reverse(q, cfg):
    '''
    Evolve backwards by conjugating, evolving forward and conjugating again.
    '''
    back = evolve(q.withValues(np.conj(q.values)), replace(cfg, sampleTimes=()))[-1]
    return q.withValues(np.conj(back.values), t=q.t - cfg.tEnd)


def l2Norm(q):
    return float(np.sqrt(trapezoid(np.abs(q.values) ** 2, dx=q.dx)))


def weightedNorm(q, s):
    '''
    || <x>^s q ||_{L2},  <x> = sqrt(1 + x^2)
    '''
    if s < 0:
        raise ConfigError(f'Weight exponent must be >= 0, got {s}')
    w = (1.0 + q.x ** 2) ** s
    return float(np.sqrt(trapezoid(w * np.abs(q.values) ** 2, dx=q.dx)))


def diagnostics(trajectory):
    '''
    Per-sample table: t, l2 norm, edge level.
    '''
    return pd.DataFrame({
        't': [f.t for f in trajectory],
        'l2': [l2Norm(f) for f in trajectory],
        'boundary_level': [edgeLevel(f.values) for f in trajectory],
    })
