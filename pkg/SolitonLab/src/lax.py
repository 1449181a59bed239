# lax.py: 2x2 algebra of the Zakharov-Shabat Lax pair and the Gramian systems
# behind the dressing transformation.
#
# Conventions: x-equation  d/dx phi = U phi,  U = -i z sigma3 + Q(q)
#              t-equation  d/dt phi = V phi,  V = i(|q|^2 - 2z^2) sigma3 + 2z Q(q) - i Q(q_x) sigma3
# A ZsVector is a length-2 complex array, a Mat2 a (2, 2) complex array.

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from errors import InvalidSpectralPoint, SingularGramian, PoleEvaluation

SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=np.complex128)
IDENTITY = np.eye(2, dtype=np.complex128)

# |D| below this times the product of |M_kk| counts as singular
SINGULAR_TOL = 1e-12
POLE_TOL = 1e-10


@dataclass(frozen=True)
class SpectralPoint:
    xi: float
    eta: float

    def __post_init__(self):
        if not np.isfinite(self.xi) or not np.isfinite(self.eta):
            raise InvalidSpectralPoint(f'Non-finite spectral point ({self.xi}, {self.eta})')
        if not self.eta > 0:
            raise InvalidSpectralPoint(f'eta must be > 0, got {self.eta}')

    @property
    def z(self):
        return complex(self.xi, self.eta)

    @property
    def zbar(self):
        return complex(self.xi, -self.eta)

    @classmethod
    def fromComplex(cls, z):
        return cls(float(np.real(z)), float(np.imag(z)))

    def __repr__(self):
        return f'SpectralPoint({self.xi:+.6g}{self.eta:+.6g}i)'


@dataclass(frozen=True, eq=False)
class GramianSystem:
    '''
    Gramian data at one spatial point. Entries may carry a common scale
    (see dressing.gramianAt); `logScale` is the log of the factor D was divided by.
    '''
    n: int
    M: np.ndarray
    D: float
    cof: np.ndarray
    F: Optional[np.ndarray] = None
    Sigma: Optional[complex] = None
    logScale: float = 0.0

    @property
    def logD(self):
        return float(np.log(self.D)) + self.logScale


def pauliQ(qval):
    q = complex(qval)
    return np.array([[0.0, q], [-q.conjugate(), 0.0]], dtype=np.complex128)


def laxU(qval, z):
    return -1j * complex(z) * SIGMA3 + pauliQ(qval)


def laxV(qval, qx, z):
    z = complex(z)
    q = complex(qval)
    return (1j * (abs(q) ** 2 - 2.0 * z * z) * SIGMA3
            + 2.0 * z * pauliQ(q)
            - 1j * pauliQ(qx) @ SIGMA3)


# Gramians

def _points(zs):
    return [p if isinstance(p, SpectralPoint) else SpectralPoint.fromComplex(p) for p in zs]


def cauchyKernel(zs):
    '''
    C[k, j] = -i / (conj(z_k) - z_j); positive definite Hermitian.
    '''
    z = np.array([p.z for p in _points(zs)])
    return -1j / (np.conj(z)[:, None] - z[None, :])


def gramianMatrix(svals, zs):
    '''
    M[k, j] = -i <s_j, s_k> / (conj(z_k) - z_j), with <a, b> = conj(a) . b
    '''
    s = np.asarray(svals, dtype=np.complex128).reshape(len(zs), 2)
    inner = s @ s.conj().T  # inner[k, j] = <s_j, s_k>
    return cauchyKernel(zs) * inner


def gramianDual(rvals, zs):
    '''
    N[k, j] = -i <r_j, r_k> / (conj(z_j) - z_k); the inverse of M for a consistent (r, s) set.
    '''
    r = np.asarray(rvals, dtype=np.complex128).reshape(len(zs), 2)
    inner = r @ r.conj().T
    return cauchyKernel(zs).T * inner


def _det2(a):
    return a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]


def cofactorMatrix(M):
    '''
    Cofactors D_{j,k}. Direct minors for n <= 3, det * inv(M).T above that.
    '''
    n = M.shape[0]
    if n == 1:
        return np.ones((1, 1), dtype=np.complex128)
    if n <= 3:
        cof = np.empty_like(M)
        for j in range(n):
            for k in range(n):
                minor = np.delete(np.delete(M, j, axis=0), k, axis=1)
                m = minor[0, 0] if n == 2 else _det2(minor)
                cof[j, k] = (-1) ** (j + k) * m
        return cof
    return np.linalg.det(M) * np.linalg.inv(M).T


def _checkSingular(M, det):
    scale = np.prod(np.abs(np.diag(M)))
    if not np.isfinite(det) or scale == 0 or abs(det) < SINGULAR_TOL * scale:
        raise SingularGramian(f'Gramian determinant {abs(det):.3e} below tolerance (scale {scale:.3e})')


def gramian(svals, zs):
    pts = _points(zs)
    z = [p.z for p in pts]
    if len(set(z)) != len(z):
        raise SingularGramian('Spectral points must be distinct')
    M = gramianMatrix(svals, pts)
    det = np.linalg.det(M)
    _checkSingular(M, det)
    return GramianSystem(n=len(pts), M=M, D=float(det.real), cof=cofactorMatrix(M))


def solveRFromS(svals, zs):
    '''
    r from  s_k = sum_j M[k, j] r_j  (LU with partial pivoting).
    '''
    M = gramianMatrix(svals, zs)
    _checkSingular(M, np.linalg.det(M))
    s = np.asarray(svals, dtype=np.complex128).reshape(len(zs), 2)
    return lu_solve(lu_factor(M), s)


def solveSFromR(rvals, zs):
    '''
    s from  r_k = sum_j N[k, j] s_j.
    '''
    N = gramianDual(rvals, zs)
    _checkSingular(N, np.linalg.det(N))
    r = np.asarray(rvals, dtype=np.complex128).reshape(len(zs), 2)
    return lu_solve(lu_factor(N), r)


def solveRByCofactors(svals, zs):
    '''
    r_k = sum_j (D_{j,k} / D) s_j; reference formula, slower and less stable than solveRFromS.
    '''
    g = gramian(svals, zs)
    s = np.asarray(svals, dtype=np.complex128).reshape(len(zs), 2)
    return (g.cof.T / g.D) @ s


# dressing factor

def _sampleVectors(vals, xEval):
    # accepts plain (n, 2) data or a list of ZsVectorField sampled at xEval
    if len(vals) and hasattr(vals[0], 'valueAt'):
        return np.array([f.valueAt(xEval) for f in vals])
    return np.asarray(vals, dtype=np.complex128).reshape(-1, 2)


def _checkPoles(zEval, pts):
    for p in pts:
        if abs(zEval - p.z) < POLE_TOL or abs(zEval - p.zbar) < POLE_TOL:
            raise PoleEvaluation(f'z = {zEval} sits on the pole {p}')


def buildChi(xEval, zEval, rvals, svals, zs):
    '''
    chi(x, z) = I + sum_k i r_k (x) conj(s_k) / (z - z_k)
    '''
    pts = _points(zs)
    zEval = complex(zEval)
    _checkPoles(zEval, pts)
    r = _sampleVectors(rvals, xEval)
    s = _sampleVectors(svals, xEval)
    chi = IDENTITY.copy()
    for k, p in enumerate(pts):
        chi += 1j * np.outer(r[k], s[k].conj()) / (zEval - p.z)
    return chi


def buildChiAdjoint(xEval, zEval, rvals, svals, zs):
    '''
    chi+(x, z) = I - sum_k i s_k (x) conj(r_k) / (z - conj(z_k)), the inverse of chi(x, z).
    '''
    pts = _points(zs)
    zEval = complex(zEval)
    _checkPoles(zEval, pts)
    r = _sampleVectors(rvals, xEval)
    s = _sampleVectors(svals, xEval)
    chi = IDENTITY.copy()
    for k, p in enumerate(pts):
        chi -= 1j * np.outer(s[k], r[k].conj()) / (zEval - p.zbar)
    return chi
