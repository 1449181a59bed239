# fields.py: sampled fields and soliton parameter records
#
# A grid is uniform: x_i = x0 + i*dx, i = 0..N-1, periodic when used by the evolver.

from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import InvalidField, GridMismatch, InvalidSpectralPoint
from lax import SpectralPoint

MIN_SAMPLES = 8
# mantissas of log-scaled vector fields stay below this
MANTISSA_BOUND = 1e3
GRID_TOL = 1e-12


@dataclass(frozen=True)
class Grid:
    n: int
    dx: float
    x0: float

    @classmethod
    def centered(cls, n, length):
        '''
        Periodic grid of n samples covering [-length/2, length/2).
        '''
        return cls(int(n), float(length) / n, -0.5 * float(length))

    @property
    def length(self):
        return self.n * self.dx

    @property
    def x(self):
        return self.x0 + self.dx * np.arange(self.n)

    def matches(self, other):
        return (self.n == other.n
                and abs(self.dx - other.dx) <= GRID_TOL * self.dx
                and abs(self.x0 - other.x0) <= GRID_TOL * max(1.0, abs(self.x0)))


@dataclass(frozen=True, eq=False)
class ComplexField:
    x0: float
    dx: float
    t: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.complex128).ravel()
        if not self.dx > 0:
            raise InvalidField(f'dx must be > 0, got {self.dx}')
        if values.size < MIN_SAMPLES:
            raise InvalidField(f'Need at least {MIN_SAMPLES} samples, got {values.size}')
        if not np.all(np.isfinite(values)):
            raise InvalidField('Field has non-finite samples')
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'x0', float(self.x0))
        object.__setattr__(self, 'dx', float(self.dx))
        object.__setattr__(self, 't', float(self.t))

    @classmethod
    def onGrid(cls, grid, values, t=0.0):
        return cls(grid.x0, grid.dx, t, values)

    @classmethod
    def zeros(cls, grid, t=0.0):
        return cls(grid.x0, grid.dx, t, np.zeros(grid.n, dtype=np.complex128))

    @property
    def n(self):
        return self.values.size

    @property
    def grid(self):
        return Grid(self.n, self.dx, self.x0)

    @property
    def x(self):
        return self.grid.x

    def withValues(self, values, t=None):
        return ComplexField(self.x0, self.dx, self.t if t is None else t, values)

    def checkSameGrid(self, other):
        if not self.grid.matches(other.grid):
            raise GridMismatch(f'Grids differ: {self.grid} vs {other.grid}')

    def __repr__(self):
        return f'ComplexField(n={self.n}, x0={self.x0:g}, dx={self.dx:g}, t={self.t:g})'


@dataclass(frozen=True, eq=False)
class ZsVectorField:
    '''
    C^2-valued samples stored as mantissa * exp(logScale), so that
    e^{+-eta x} growth never overflows. `point` is the spectral point the field belongs to.
    '''
    x0: float
    dx: float
    t: float
    first: np.ndarray
    second: np.ndarray
    logScale: np.ndarray
    point: Optional[SpectralPoint] = None

    def __post_init__(self):
        first = np.array(self.first, dtype=np.complex128).ravel()
        second = np.array(self.second, dtype=np.complex128).ravel()
        logScale = np.array(self.logScale, dtype=np.float64).ravel()
        if not (first.size == second.size == logScale.size):
            raise InvalidField('Component and scale arrays must have equal length')
        if max(np.abs(first).max(), np.abs(second).max()) > MANTISSA_BOUND:
            raise InvalidField(f'Mantissa exceeds {MANTISSA_BOUND:g}; renormalize first')
        for a in (first, second, logScale):
            a.flags.writeable = False
        object.__setattr__(self, 'first', first)
        object.__setattr__(self, 'second', second)
        object.__setattr__(self, 'logScale', logScale)

    @classmethod
    def fromScaled(cls, grid, t, first, second, logScale, point=None):
        '''
        Build from arbitrary mantissas, moving their magnitude into the log scale.
        '''
        first = np.asarray(first, dtype=np.complex128)
        second = np.asarray(second, dtype=np.complex128)
        m = np.maximum(np.abs(first), np.abs(second))
        safe = np.where(m > 0, m, 1.0)
        return cls(grid.x0, grid.dx, t, first / safe, second / safe,
                   np.asarray(logScale, dtype=np.float64) + np.log(safe), point)

    @property
    def n(self):
        return self.first.size

    @property
    def grid(self):
        return Grid(self.n, self.dx, self.x0)

    @property
    def x(self):
        return self.grid.x

    def mantissa(self):
        return np.stack([self.first, self.second], axis=1)

    def values(self):
        '''
        Unscaled (N, 2) samples. Overflows to inf where the scale is huge.
        '''
        with np.errstate(over='ignore'):
            return self.mantissa() * np.exp(self.logScale)[:, None]

    def valueAt(self, xEval):
        i = int(round((xEval - self.x0) / self.dx))
        if not 0 <= i < self.n:
            raise InvalidField(f'x = {xEval} is outside the grid')
        return np.array([self.first[i], self.second[i]]) * np.exp(self.logScale[i])


@dataclass(frozen=True)
class JostPair:
    f: ZsVectorField
    g: ZsVectorField


@dataclass(frozen=True)
class PhasePair:
    phi: np.ndarray
    psi: np.ndarray


@dataclass(frozen=True)
class SolitonParams:
    xi: float
    eta: float
    x0: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        vals = (self.xi, self.eta, self.x0, self.theta)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidSpectralPoint(f'Non-finite soliton parameters {vals}')
        if not self.eta > 0:
            raise InvalidSpectralPoint(f'eta must be > 0, got {self.eta}')

    @property
    def point(self):
        return SpectralPoint(self.xi, self.eta)

    def phases(self, x, t):
        '''
        phi = x + 4 xi t - x0,  psi = theta - xi (x + 2 xi t - x0) + 2 eta^2 t
        '''
        x = np.asarray(x, dtype=np.float64)
        phi = x + 4.0 * self.xi * t - self.x0
        psi = self.theta - self.xi * (x + 2.0 * self.xi * t - self.x0) + 2.0 * self.eta ** 2 * t
        return PhasePair(phi, psi)

    def asList(self):
        return [self.xi, self.eta, self.x0, self.theta]
