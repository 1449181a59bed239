# dressing.py: seeds, the dressing map q0 -> q and its inverse (undressing)
#
# Seeds s_k solve the ZS system of the background q0 at conj(z_k). All vector
# fields carry (mantissa, logScale); the Gramian at each x is assembled from
# mantissas only, so  M~ = L M L  with L = diag(exp(-logScale_k)).  The potential
# only needs products r_k conj(s_k), in which the scales cancel.

import logging

import numpy as np

import kernels
from errors import DegenerateParams, EdgeDecay, GridMismatch, SeedTooLarge, SingularGramian, NotAnEigenfunction
from fields import ZsVectorField, JostPair, ComplexField
from lax import cauchyKernel, SpectralPoint, GramianSystem, gramianMatrix, cofactorMatrix, SINGULAR_TOL
from utils import firstDerivative4, secondDerivative4, spectralDerivative

logger = logging.getLogger(__name__)

# small-data radius for Jost seeds
EPS0 = 0.1
JOST_EDGE_TOL = 1e-8
JOST_MAX_ITER = 200
JOST_TOL = 1e-14
DEGENERATE_TOL = 1e-10
EIGENFUNCTION_TOL = 1e-6
# det G is positive up to this phase error
SIGN_TOL = 1e-3
# plain cumulative integrals through the Jost kernels
ONE = 1.0 + 0.0j


def checkDistinct(params):
    pts = [p.point if hasattr(p, 'point') else p for p in params]
    for i in range(len(pts)):
        for j in range(i):
            if abs(pts[i].z - pts[j].z) <= DEGENERATE_TOL * max(1.0, abs(pts[i].z)):
                raise DegenerateParams(f'Soliton {j} and {i} share (xi, eta) = ({pts[i].xi}, {pts[i].eta})')


def _seedExponentials(p, x, t):
    '''
    exp(-eta phi + i psi) and exp(eta phi - i psi), both divided by exp(eta |phi|).
    '''
    ph = p.phases(x, t)
    ell = p.eta * np.abs(ph.phi)
    ePlus = np.exp(-p.eta * ph.phi - ell + 1j * ph.psi)
    eMinus = np.exp(p.eta * ph.phi - ell - 1j * ph.psi)
    return ePlus, eMinus, ell


def vacuumSeed(params, t, grid):
    '''
    s_k(x) = exp(-i conj(z_k)(x - x_k) sigma3 - 2i conj(z_k)^2 t sigma3 + i theta_k sigma3) sigma3 (1, 1)
    '''
    checkDistinct(params)
    x = grid.x
    seeds = []
    for p in params:
        ePlus, eMinus, ell = _seedExponentials(p, x, t)
        seeds.append(ZsVectorField(grid.x0, grid.dx, t, ePlus, -eMinus, ell, p.point))
    return seeds


# Jost seeds over a small background

def _checkEdges(q0, tol):
    a = np.abs(q0.values)
    peak = a.max()
    if peak > 0 and max(a[0], a[-1]) > tol * peak:
        raise EdgeDecay(f'|q0| at the grid edge is {max(a[0], a[-1]) / peak:.2e} of its peak (limit {tol:g})')


def _jostComponents(q, dx, zbar):
    '''
    Picard iteration for f = (a1, a2), g = (b1, b2):
      a1 = 1 + int_{-inf}^x q a2,   a2 = int_x^{inf} e^{2i zbar (x-y)} conj(q) a1 dy
      b2 = 1 + int_x^{inf} conj(q) b1,   b1 = int_{-inf}^x e^{-2i zbar (x-y)} q b2 dy
    '''
    lam = np.exp(-2j * zbar * dx)
    qc = np.conj(q)
    a1 = np.ones_like(q)
    b2 = np.ones_like(q)
    for it in range(JOST_MAX_ITER):
        a2 = kernels.kernelFromRight(qc * a1, lam, dx)
        b1 = kernels.kernelFromLeft(q * b2, lam, dx)
        a1New = 1.0 + kernels.kernelFromLeft(q * a2, ONE, dx)
        b2New = 1.0 + kernels.kernelFromRight(qc * b1, ONE, dx)
        change = max(np.abs(a1New - a1).max(), np.abs(b2New - b2).max())
        a1, b2 = a1New, b2New
        if not np.isfinite(change):
            break
        if change <= JOST_TOL:
            logger.debug(f'Jost iteration for zbar={zbar:.4g} converged after {it + 1} sweeps')
            a2 = kernels.kernelFromRight(qc * a1, lam, dx)
            b1 = kernels.kernelFromLeft(q * b2, lam, dx)
            return a1, a2, b1, b2
    raise SeedTooLarge(f'Jost iteration for zbar={zbar:.4g} did not converge; background too large')


def jostPairs(q0, params):
    '''
    The (f_j, g_j) pairs of the separable seed form for every soliton.
    '''
    _checkEdges(q0, JOST_EDGE_TOL)
    norm = np.sqrt(np.sum(np.abs(q0.values) ** 2) * q0.dx)
    if norm > EPS0:
        raise SeedTooLarge(f'||q0|| = {norm:.3g} exceeds the small-data radius {EPS0}')
    grid = q0.grid
    zero = np.zeros(grid.n)
    pairs = []
    for p in params:
        a1, a2, b1, b2 = _jostComponents(q0.values, q0.dx, p.point.zbar)
        f = ZsVectorField(grid.x0, grid.dx, q0.t, a1, a2, zero, p.point)
        g = ZsVectorField(grid.x0, grid.dx, q0.t, b1, b2, zero, p.point)
        pairs.append(JostPair(f, g))
    return pairs


def jostSeed(q0, params, t):
    '''
    s_j = E+ f_j - E- g_j with the same phase factors as the vacuum seeds.
    '''
    checkDistinct(params)
    x = q0.x
    seeds = []
    for p, pair in zip(params, jostPairs(q0, params)):
        ePlus, eMinus, ell = _seedExponentials(p, x, t)
        first = ePlus * pair.f.first - eMinus * pair.g.first
        second = ePlus * pair.f.second - eMinus * pair.g.second
        seeds.append(ZsVectorField(q0.x0, q0.dx, t, first, second, ell, p.point))
    return seeds


def jostResidual(pair, q0):
    '''
    Max residual of the ODEs obeyed by f and g (fourth-order differences, interior points).
    '''
    q = q0.values
    zbar = pair.f.point.zbar
    dx = q0.dx
    a1, a2 = pair.f.first, pair.f.second
    b1, b2 = pair.g.first, pair.g.second
    res = [
        firstDerivative4(a1, dx) - q * a2,
        firstDerivative4(a2, dx) - 2j * zbar * a2 + np.conj(q) * a1,
        firstDerivative4(b1, dx) + 2j * zbar * b1 - q * b2,
        firstDerivative4(b2, dx) + np.conj(q) * b1,
    ]
    return float(max(np.abs(r[2:-2]).max() for r in res))


def jostDeviation(pair):
    '''
    ||a1 - 1|| + ||a2|| + ||b1|| + ||b2 - 1||, sup norms.
    '''
    return float(np.abs(pair.f.first - 1).max() + np.abs(pair.f.second).max()
                 + np.abs(pair.g.first).max() + np.abs(pair.g.second - 1).max())


# dressing

def _stack(fields):
    mant = np.stack([np.stack([f.first, f.second], axis=-1) for f in fields], axis=1)
    scale = np.stack([f.logScale for f in fields], axis=1)
    return mant, scale


def _scaledSolve(kernel, mant, what):
    '''
    Per grid point: G = kernel * <v_j, v_k> from mantissas, solve G w = v.
    Returns (w, log|det G|). G is Hermitian positive definite, so det G must come out
    real and positive at every point.
    '''
    inner = np.einsum('ikc,ijc->ikj', mant, mant.conj())
    G = kernel[None, :, :] * inner
    sign, logAbs = np.linalg.slogdet(G)
    diagLog = np.sum(np.log(np.abs(np.diagonal(G, axis1=1, axis2=2))), axis=1)
    bad = ~np.isfinite(logAbs) | (logAbs < np.log(SINGULAR_TOL) + diagLog)
    if bad.any():
        raise SingularGramian(f'{what} is singular', index=int(np.argmax(bad)))
    negative = np.abs(sign - 1.0) > SIGN_TOL
    if negative.any():
        i = int(np.argmax(negative))
        raise SingularGramian(f'{what} determinant has phase {np.angle(sign[i]):.3g} instead of 0', index=i)
    return np.linalg.solve(G, mant), logAbs


def _checkSeeds(q0, seeds, zs):
    if len(seeds) != len(zs):
        raise DegenerateParams(f'{len(seeds)} seeds for {len(zs)} spectral points')
    for s in seeds:
        if not q0.grid.matches(s.grid):
            raise GridMismatch('Seed grid differs from the background grid')


def dressWithLogDet(q0, seeds, zs):
    '''
    q = q0 - sum_k (r_k1 conj(s_k2) + s_k1 conj(r_k2)), r = M^{-1} s pointwise.
    Also returns log D(x) with the common scale put back.
    '''
    _checkSeeds(q0, seeds, zs)
    if not seeds:
        return q0, np.zeros(q0.n)
    S, ell = _stack(seeds)
    R, logAbs = _scaledSolve(cauchyKernel(zs), S, 'Gramian')
    q = q0.values - np.sum(R[..., 0] * S[..., 1].conj() + S[..., 0] * R[..., 1].conj(), axis=1)
    logD = logAbs + 2.0 * ell.sum(axis=1)
    logger.debug(f'Dressed {len(seeds)} solitons onto a {q0.n}-point background')
    return q0.withValues(q), logD


def dress(q0, seeds, zs):
    q, _ = dressWithLogDet(q0, seeds, zs)
    return q


def dressingEigendata(seeds, zs):
    '''
    The r_k of a dressing, i.e. the bound states of the dressed potential at z_k.
    '''
    S, ell = _stack(seeds)
    R, _ = _scaledSolve(cauchyKernel(zs), S, 'Gramian')
    grid = seeds[0].grid
    t = seeds[0].t
    pts = [p if isinstance(p, SpectralPoint) else SpectralPoint.fromComplex(p) for p in zs]
    return [(p, ZsVectorField.fromScaled(grid, t, R[:, k, 0], R[:, k, 1], -ell[:, k], p))
            for k, p in enumerate(pts)]


def gramianAt(seeds, zs, index):
    '''
    Full GramianSystem (M, D, cofactors, F, Sigma) at one grid index, every entry
    divided by the common factor exp(2 sum_k logScale_k). q = 2 Sigma / D there.
    '''
    s = np.array([[f.first[index], f.second[index]] for f in seeds])
    ell = np.array([f.logScale[index] for f in seeds])
    M = gramianMatrix(s, zs)
    D = float(np.linalg.det(M).real)
    cof = cofactorMatrix(M)
    F = np.outer(s[:, 0], s[:, 1].conj())
    Sigma = complex(-np.sum(cof * F))
    return GramianSystem(n=len(seeds), M=M, D=D, cof=cof, F=F, Sigma=Sigma, logScale=2.0 * ell.sum())


def modulusIdentityResidual(q, q0, logD):
    '''
    max | |q|^2 - |q0|^2 - d^2/dx^2 log D | over interior points (five-point stencil).
    '''
    q.checkSameGrid(q0)
    logD = np.asarray(logD, dtype=np.float64)
    res = np.abs(q.values) ** 2 - np.abs(q0.values) ** 2 - secondDerivative4(logD, q.dx)
    return float(np.abs(res[2:-2]).max())


def _pairProducts(rFields, sFields):
    # r_k,c conj(s_k,c) with the scales put back, shape (N, n, 2)
    R, lr = _stack(rFields)
    S, ls = _stack(sFields)
    return R * S.conj() * np.exp(lr + ls)[..., None]


def traceIdentityResidual(rFields, sFields, zs):
    '''
    Relative deviation of sum_k 2 Re(r_k . conj(s_k)) from 4 sum eta_k.
    '''
    P = _pairProducts(rFields, sFields)
    total = 2.0 * np.sum(P.real, axis=(1, 2))
    target = 4.0 * sum(p.eta for p in zs)
    return float(np.abs(total - target).max() / target)


def logDetIdentityResidual(rFields, sFields, logD, dx):
    '''
    max | sum_k 2 Re(r_k1 conj(s_k1) - r_k2 conj(s_k2)) + 2 d/dx log D | over interior points.
    '''
    P = _pairProducts(rFields, sFields)
    lhs = 2.0 * np.sum(P[..., 0].real - P[..., 1].real, axis=1)
    res = lhs + 2.0 * firstDerivative4(np.asarray(logD, dtype=np.float64), dx)
    return float(np.abs(res[2:-2]).max())


# undressing

def zsResidual(r, q, z):
    '''
    Relative residual of dr/dx = (-i z sigma3 + Q(q)) r, spectral derivative.
    Meaningful only for fields decaying at both edges.
    '''
    v = r.values()
    peak = np.abs(v).max()
    if not np.isfinite(peak) or peak == 0:
        return np.inf
    d1 = spectralDerivative(v[:, 0], r.dx)
    d2 = spectralDerivative(v[:, 1], r.dx)
    qv = q.values
    res1 = d1 - (-1j * z * v[:, 0] + qv * v[:, 1])
    res2 = d2 - (1j * z * v[:, 1] - np.conj(qv) * v[:, 0])
    return float(max(np.abs(res1).max(), np.abs(res2).max()) / peak)


def undress(q, eigendata, tolerance=EIGENFUNCTION_TOL):
    '''
    Remove the bound states (z_k, r_k) from q. s_k come from the dual system
    r = N s, then  q~0 = q + sum_k (r_k1 conj(s_k2) + s_k1 conj(r_k2)).
    '''
    if not eigendata:
        return q
    pts = [p for p, _ in eigendata]
    rFields = [r for _, r in eigendata]
    for p, r in eigendata:
        if not q.grid.matches(r.grid):
            raise GridMismatch('Eigenfunction grid differs from the field grid')
        res = zsResidual(r, q, p.z)
        if res > tolerance:
            raise NotAnEigenfunction(f'ZS residual {res:.2e} at {p} exceeds {tolerance:g}')
    R, _ = _stack(rFields)
    S, _ = _scaledSolve(cauchyKernel(pts).T, R, 'Dual Gramian')
    qt = q.values + np.sum(R[..., 0] * S[..., 1].conj() + S[..., 0] * R[..., 1].conj(), axis=1)
    logger.info(f'Removed {len(pts)} bound states')
    return q.withValues(qt)
