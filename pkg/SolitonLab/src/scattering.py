# scattering.py: direct scattering for the ZS system
#
# Jost solutions:  psi^- ~ (1, 0) e^{-izx} as x -> -inf,  psi^+ ~ (0, 1) e^{izx} as x -> +inf.
# a(z) = lim psi^-_1 e^{izx} at +inf; bound states are zeros of a in the upper half-plane
# where psi^- = c psi^+. For exact solitons c_j = -exp(-2i theta_j - 2i z_j x_j) at t = 0,
# for every soliton count; the map used in paramsFromScattering is the calibrated one.

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.ndimage import minimum_filter
from scipy.special import logsumexp

import kernels
from errors import (EdgeDecay, CountMismatch, NotAnEigenvalue, DegenerateEigenvalues,
                    InvalidSpectralPoint, ConfigError)
from fieldio import checkKeys
from fields import ComplexField, Grid, SolitonParams, ZsVectorField
from lax import SpectralPoint
from solitons import oneSoliton
from utils import refineSamples, wrapHalfPi

logger = logging.getLogger(__name__)

SCHEME = 'tes4'
ETA_FLOOR = 1e-3
EDGE_TOL = 1e-6
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 50
EIGENVALUE_TOL = 1e-8
DEDUPE_TOL = 1e-7
CONTOUR_POINTS = 256
CONTOUR_MAX_POINTS = 1 << 14
SCAN_RETRIES = 2
REAL_AXIS_SAMPLES = 64
# widest transfer cell; coarser samples are refined by band-limited interpolation
CELL_WIDTH = 5e-3
# only scan minima below this level are polished
SCAN_LEVEL = 0.9


@dataclass(frozen=True)
class SearchRegion:
    xiMin: float
    xiMax: float
    etaMin: float
    etaMax: float
    nXi: int = 40
    nEta: int = 40

    def __post_init__(self):
        if not self.etaMin > 0:
            raise ConfigError(f'Search region must sit in the upper half-plane, etaMin = {self.etaMin}')
        if not (self.xiMax > self.xiMin and self.etaMax > self.etaMin):
            raise ConfigError(f'Empty search region {self}')
        if self.nXi < 3 or self.nEta < 3:
            raise ConfigError('Scan resolution must be at least 3 x 3')

    @classmethod
    def fromDict(cls, d):
        checkKeys(d, cls)
        return cls(**d)

    def contains(self, z):
        return self.xiMin <= z.real <= self.xiMax and self.etaMin <= z.imag <= self.etaMax

    def scanGrid(self, factor=1):
        xi = np.linspace(self.xiMin, self.xiMax, self.nXi * factor)
        eta = np.linspace(self.etaMin, self.etaMax, self.nEta * factor)
        return xi[None, :] + 1j * eta[:, None]

    def boundary(self, perSide):
        '''
        Closed counterclockwise contour, first point repeated at the end.
        '''
        t = np.linspace(0.0, 1.0, perSide, endpoint=False)
        lo, hi = complex(self.xiMin, self.etaMin), complex(self.xiMax, self.etaMin)
        hiTop, loTop = complex(self.xiMax, self.etaMax), complex(self.xiMin, self.etaMax)
        sides = [lo + (hi - lo) * t, hi + (hiTop - hi) * t,
                 hiTop + (loTop - hiTop) * t, loTop + (lo - loTop) * t]
        path = np.concatenate(sides)
        return np.append(path, path[0])


@dataclass(frozen=True, eq=False)
class ScatteringData:
    eigenvalues: list
    norming: list
    aSamples: list = field(default_factory=list)
    x0: float = 0.0
    dx: float = 1.0
    n: int = 0
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.eigenvalues) != len(self.norming):
            raise ConfigError(f'{len(self.eigenvalues)} eigenvalues but {len(self.norming)} norming constants')
        for p in self.eigenvalues:
            if p.eta <= ETA_FLOOR:
                raise InvalidSpectralPoint(f'Eigenvalue {p} is below eta_floor {ETA_FLOOR}')

    @property
    def grid(self):
        return Grid(self.n, self.dx, self.x0)


@dataclass(frozen=True)
class NormingCalibration:
    cRef: complex
    xSign: float
    thetaSign: float


class ZsOperator:
    '''
    Transfer-matrix data of one sampled potential. The samples are refined by band-limited
    interpolation until cells are at most `cellWidth` wide; the potential is taken at the
    cell midpoints. Jost solutions are reported on the original samples.
    '''
    def __init__(self, q, scheme=SCHEME, cellWidth=CELL_WIDTH):
        if scheme not in ('tes4', 'bo'):
            raise ConfigError(f'Unknown transfer scheme {scheme}')
        a = np.abs(q.values)
        peak = a.max()
        if peak > 0 and max(a[0], a[-1]) > EDGE_TOL * peak:
            raise EdgeDecay(f'|q| at the grid edge is {max(a[0], a[-1]) / peak:.2e} of its peak')
        self.q = q
        self.scheme = scheme
        self.factor = 1
        while q.dx / self.factor > cellWidth:
            self.factor *= 2
        self.dx = q.dx / self.factor
        cells = (q.n - 1) * self.factor
        self.qm = refineSamples(q.values, 2 * self.factor)[1::2][:cells]
        self.cX, self.sX, self.cY, self.sY = kernels.cellCorrections(self.qm, self.dx, scheme)
        self.x0 = q.x0
        self.xR = q.x0 + (q.n - 1) * q.dx
        if self.factor > 1:
            logger.debug(f'Transfer cells refined {self.factor}x to width {self.dx:.3g}')

    def a(self, zs):
        zs = np.atleast_1d(np.asarray(zs, dtype=np.complex128))
        with kernels.PARALLEL_LOCK:
            return kernels.aCoefficients(self.qm, self.cX, self.sX, self.cY, self.sY,
                                         self.dx, self.x0, self.xR, zs)

    def aAt(self, z):
        return complex(self.a([z])[0])

    def jostSolutions(self, z):
        z = complex(z)
        mL, lL = kernels.sweepLeft(self.qm, self.cX, self.sX, self.cY, self.sY, self.dx, self.x0, z)
        mR, lR = kernels.sweepRight(self.qm, self.cX, self.sX, self.cY, self.sY, self.dx, self.xR, z)
        f = self.factor
        return mL[::f], lL[::f], mR[::f], lR[::f]

    def polishEigenvalue(self, z0, tol=NEWTON_TOL):
        '''
        Newton on a(z) with a centered-difference derivative. None when no zero is reached.
        '''
        z = complex(z0)
        for it in range(NEWTON_MAX_ITER):
            h = 1e-6 * max(1.0, abs(z))
            a0, ap, am = self.a([z, z + h, z - h])
            da = (ap - am) / (2.0 * h)
            if not (np.isfinite(a0) and np.isfinite(da)) or da == 0:
                return None
            step = a0 / da
            z -= step
            if abs(step) < 1e-13 * max(1.0, abs(z)):
                break
        if z.imag <= 0:
            return None
        res = abs(self.aAt(z))
        logger.debug(f'Newton from {complex(z0):.4f} -> {z:.10f}, |a| = {res:.2e}, {it + 1} iterations')
        return z if res <= tol else None

    def windingNumber(self, region):
        '''
        Zeros of a inside the region by the argument principle; the contour is refined
        until consecutive phase steps stay below pi/2, and CountMismatch is raised when
        CONTOUR_MAX_POINTS is not enough for that.
        '''
        perSide = CONTOUR_POINTS
        while True:
            path = region.boundary(perSide)
            a = self.a(path)
            if np.any(a == 0) or not np.all(np.isfinite(a)):
                raise CountMismatch('a(z) vanishes or is undefined on the search contour')
            steps = np.angle(a[1:] / a[:-1])
            worst = np.abs(steps).max()
            if worst < 0.5 * np.pi:
                break
            if 8 * perSide > CONTOUR_MAX_POINTS:
                raise CountMismatch(f'Winding contour unresolved at {4 * perSide} points, '
                                    f'phase step {worst:.3f}')
            perSide *= 2
            logger.debug(f'Refining winding contour to {perSide} points per side')
        return int(round(steps.sum() / (2.0 * np.pi)))

    def findEigenvalues(self, region):
        wind = None
        for attempt in range(SCAN_RETRIES):
            Z = region.scanGrid(2 ** attempt)
            mag = np.abs(self.a(Z.ravel()).reshape(Z.shape))
            minima = (minimum_filter(mag, size=3, mode='nearest') == mag) & (mag < SCAN_LEVEL)
            roots = []
            for z0 in Z[minima]:
                z = self.polishEigenvalue(z0)
                if z is None or not region.contains(z) or z.imag <= ETA_FLOOR:
                    continue
                if all(abs(z - r) > DEDUPE_TOL for r in roots):
                    roots.append(z)
            if wind is None:
                wind = self.windingNumber(region)
            if len(roots) == wind:
                break
            logger.warning(f'Scan found {len(roots)} zeros, winding number says {wind}; refining scan')
        else:
            raise CountMismatch(f'Newton found {len(roots)} zeros but the winding number is {wind}')
        roots.sort(key=lambda z: (z.real, z.imag))
        logger.info(f'Eigenvalues: {", ".join(f"{z:.8f}" for z in roots) or "none"}')
        return [SpectralPoint.fromComplex(z) for z in roots]

    def _checkEigenvalue(self, point, tolerance):
        a = abs(self.aAt(point.z))
        if a > tolerance:
            raise NotAnEigenvalue(f'|a({point.z})| = {a:.2e} exceeds {tolerance:g}')

    def _matchIndex(self, mL, lL, mR, lR):
        # both Jost solutions are well scaled where the product of their sizes peaks
        with np.errstate(divide='ignore'):
            size = (lL + np.log(np.abs(mL).max(axis=1))) + (lR + np.log(np.abs(mR).max(axis=1)))
        return int(np.argmax(size))

    def normingConstant(self, point, tolerance=EIGENVALUE_TOL):
        self._checkEigenvalue(point, tolerance)
        mL, lL, mR, lR = self.jostSolutions(point.z)
        m = self._matchIndex(mL, lL, mR, lR)
        ratio = np.vdot(mR[m], mL[m]) / np.vdot(mR[m], mR[m])
        return complex(ratio * np.exp(lL[m] - lR[m]))

    def boundState(self, point, tolerance=EIGENVALUE_TOL):
        '''
        psi^- left of the matching point, c psi^+ right of it, L2-normalized.
        '''
        self._checkEigenvalue(point, tolerance)
        mL, lL, mR, lR = self.jostSolutions(point.z)
        m = self._matchIndex(mL, lL, mR, lR)
        c = np.vdot(mR[m], mL[m]) / np.vdot(mR[m], mR[m]) * np.exp(lL[m] - lR[m])
        mant = mL.copy()
        logs = lL.copy()
        mant[m + 1:] = mR[m + 1:] * (c / abs(c))
        logs[m + 1:] = lR[m + 1:] + np.log(abs(c))
        with np.errstate(divide='ignore'):
            u = 2.0 * logs + np.log(np.sum(np.abs(mant) ** 2, axis=1))
        logNorm = 0.5 * (logsumexp(u) + np.log(self.q.dx))
        return ZsVectorField.fromScaled(self.q.grid, self.q.t, mant[:, 0], mant[:, 1], logs - logNorm, point)


# module-level API

def scatteringCoefficientA(q, z, scheme=SCHEME):
    if np.imag(z) < 0:
        raise InvalidSpectralPoint(f'a(z) is evaluated for Im z >= 0 only, got {z}')
    return ZsOperator(q, scheme).aAt(z)


def polishEigenvalue(q, z0):
    return ZsOperator(q).polishEigenvalue(z0)


def findEigenvalues(q, region):
    return ZsOperator(q).findEigenvalues(region)


def normingConstant(q, point, tolerance=EIGENVALUE_TOL):
    return ZsOperator(q).normingConstant(point, tolerance)


def boundState(q, point, tolerance=EIGENVALUE_TOL):
    return ZsOperator(q).boundState(point, tolerance)


def blaschkeProduct(z, points):
    z = np.asarray(z, dtype=np.complex128)
    out = np.ones_like(z)
    for p in points:
        out = out * (z - p.z) / (z - p.zbar)
    return out


def evolveNorming(c, point, t):
    '''
    Norming constants of a solution of the NLS move as c(t) = c(0) e^{4 i z^2 t}.
    '''
    return complex(c * np.exp(4j * point.z ** 2 * t))


def scatter(q, region, withSamples=False):
    op = ZsOperator(q)
    eigenvalues = op.findEigenvalues(region)
    norming = [op.normingConstant(p) for p in eigenvalues]
    samples = []
    if withSamples:
        zs = np.linspace(region.xiMin, region.xiMax, REAL_AXIS_SAMPLES).astype(np.complex128)
        samples = list(zip(zs, op.a(zs)))
    return ScatteringData(eigenvalues, norming, samples, q.x0, q.dx, q.n,
                          {'newton': NEWTON_TOL, 'eigenvalue': EIGENVALUE_TOL, 'etaFloor': ETA_FLOOR})


# analytic dictionary c = -exp(-2i theta - 2i z x0), used when the data carries no grid
ANALYTIC_CALIBRATION = NormingCalibration(-1.0 + 0.0j, 1.0, -1.0)
# calibration solitons sit at the grid centre with sech(eta L) below this
CALIBRATION_EDGE = 1e-8


@lru_cache(maxsize=16)
def calibrateNorming(n, dx):
    '''
    Fix the (x0, theta) <-> c dictionary from forward-built 1-solitons on a centred grid with
    the caller's sample count and spacing: the reference c* at x0 = theta = 0, and the signs
    of the shifts in x0 and theta. c* depends only on the sample count and spacing.
    '''
    grid = Grid(n, dx, -(n // 2) * dx)
    eta = max(0.5, np.arccosh(1.0 / CALIBRATION_EDGE) / grid.length)
    delta = 0.25 / eta

    def measure(p):
        q = ComplexField.onGrid(grid, oneSoliton(p, grid.x, 0.0))
        op = ZsOperator(q)
        z = op.polishEigenvalue(p.point.z)
        if z is None:
            raise NotAnEigenvalue(f'Calibration soliton {p} lost its eigenvalue on this grid')
        return op.normingConstant(SpectralPoint.fromComplex(z))

    cRef = measure(SolitonParams(0.0, eta))
    cShift = measure(SolitonParams(0.0, eta, delta, 0.0))
    cTurn = measure(SolitonParams(0.0, eta, 0.0, delta))
    xSign = float(np.sign(np.log(abs(cShift / cRef))))
    thetaSign = float(np.sign(np.angle(cTurn / cRef)))
    logger.debug(f'Norming calibration (eta {eta:.3g}): c* = {cRef:.8f}, '
                 f'x sign {xSign:+.0f}, theta sign {thetaSign:+.0f}')
    return NormingCalibration(cRef, xSign, thetaSign)


def paramsFromScattering(data, calibration=None, thetaRef=None):
    '''
    xi = Re z, eta = Im z, x0 = s_x log|c/c*| / (2 eta), theta = s_t arg(c/c*) / 2 - xi x0,
    theta on the branch of width pi nearest thetaRef (default 0). Without a calibration, data
    with grid metadata is calibrated on a grid of the same resolution and data without it
    uses the analytic c* = -1.
    '''
    zs = [p.z for p in data.eigenvalues]
    for i in range(len(zs)):
        for j in range(i):
            if abs(zs[i] - zs[j]) <= DEDUPE_TOL:
                raise DegenerateEigenvalues(f'Eigenvalues {zs[j]} and {zs[i]} coincide')
    if not zs:
        return []
    if calibration is None:
        calibration = calibrateNorming(data.n, data.dx) if data.n else ANALYTIC_CALIBRATION
    params = []
    for j, (p, c) in enumerate(zip(data.eigenvalues, data.norming)):
        ratio = c / calibration.cRef
        x0 = calibration.xSign * np.log(abs(ratio)) / (2.0 * p.eta)
        theta = calibration.thetaSign * np.angle(ratio) / 2.0 - p.xi * x0
        ref = 0.0 if thetaRef is None else thetaRef[j]
        theta = ref + wrapHalfPi(theta - ref)
        params.append(SolitonParams(p.xi, p.eta, float(x0), float(theta)))
    return params
