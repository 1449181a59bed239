# solitons.py: closed-form 1-, 2- and n-soliton solutions of
#   i q_t + q_xx + 2 |q|^2 q = 0
# plus a finite-difference residual of the equation for checking them.
#
# The sech argument moves with x + 4 xi t (speed -4 xi); the variant with 2 xi t
# leaves an O(1) residual, see oneSoliton(speedFactor=2).

import numpy as np

from dressing import checkDistinct, dress, vacuumSeed
from errors import GridMismatch, DegenerateParams
from fields import ComplexField
from utils import sechSafe, secondDerivative2

SECH_SPEED = 4.0


def oneSoliton(p, x, t, speedFactor=SECH_SPEED):
    '''
    q = 2 eta sech(2 eta (x + 4 xi t - x0)) exp(2i psi)
    '''
    x = np.asarray(x, dtype=np.float64)
    u = 2.0 * p.eta * (x + speedFactor * p.xi * t - p.x0)
    psi = p.phases(x, t).psi
    q = 2.0 * p.eta * sechSafe(u) * np.exp(2j * psi)
    return complex(q) if q.ndim == 0 else q


def _twoSolitonScaled(p1, p2, x, t):
    '''
    Sigma^S and D^S, both multiplied by exp(-2 eta1|phi1| - 2 eta2|phi2|).
    Returns (Sigma~, D~, log of the removed factor).
    '''
    if abs(p1.xi - p2.xi) <= 1e-12 and abs(p1.eta - p2.eta) <= 1e-12:
        raise DegenerateParams(f'Both solitons have (xi, eta) = ({p1.xi}, {p1.eta}); the solution vanishes')
    ph1, ph2 = p1.phases(x, t), p2.phases(x, t)
    a = p1.eta * ph1.phi
    b = p2.eta * ph2.phi
    aa, bb = np.abs(a), np.abs(b)
    E = 2.0 * (aa + bb)
    e1 = np.exp(2j * ph1.psi)
    e2 = np.exp(2j * ph2.psi)
    dxi = p1.xi - p2.xi
    etaSum = p1.eta + p2.eta

    sigma = ((np.exp(-2 * b - E) + np.exp(2 * b - E)) * e1 / (2 * p2.eta)
             + (np.exp(-2 * a - E) + np.exp(2 * a - E)) * e2 / (2 * p1.eta)
             - (np.exp(-2 * b - E) * e1 + np.exp(2 * a - E) * e2) / (etaSum + 1j * dxi)
             - (np.exp(-2 * a - E) * e2 + np.exp(2 * b - E) * e1) / (etaSum - 1j * dxi))

    dpsi = ph1.psi - ph2.psi
    cross = (np.exp(-a - b - aa - bb + 1j * dpsi) + np.exp(a + b - aa - bb - 1j * dpsi))
    det = ((np.exp(-2 * a - 2 * aa) + np.exp(2 * a - 2 * aa))
           * (np.exp(-2 * b - 2 * bb) + np.exp(2 * b - 2 * bb)) / (4 * p1.eta * p2.eta)
           - np.abs(cross) ** 2 / (etaSum ** 2 + dxi ** 2))
    return sigma, det, E


def twoSoliton(p1, p2, x, t):
    '''
    q^S = 2 Sigma^S / D^S with the phases phi_j, psi_j of SolitonParams.phases.
    '''
    sigma, det, _ = _twoSolitonScaled(p1, p2, np.asarray(x, dtype=np.float64), t)
    q = 2.0 * sigma / det
    return complex(q) if np.ndim(q) == 0 else q


def twoSolitonLogDeterminant(p1, p2, x, t):
    _, det, E = _twoSolitonScaled(p1, p2, np.asarray(x, dtype=np.float64), t)
    return np.log(det) + E


def nSoliton(params, grid, t):
    '''
    n-soliton on a grid: the dressing of the zero field by vacuum seeds.
    '''
    checkDistinct(params)
    background = ComplexField.zeros(grid, t)
    return dress(background, vacuumSeed(params, t, grid), [p.point for p in params])


def solitonSurface(params, grid, times):
    '''
    |q|^2 on the (t, x) lattice, one row per time.
    '''
    return np.array([np.abs(nSoliton(params, grid, t).values) ** 2 for t in times])


def nlsResidual(fields, dt):
    '''
    max over interior points of |i q_t + q_xx + 2|q|^2 q| for snapshots at t - dt, t, t + dt.
    '''
    before, now, after = fields
    for f in (before, after):
        if not now.grid.matches(f.grid):
            raise GridMismatch(f'Snapshot grids differ: {f.grid} vs {now.grid}')
    q = now.values
    res = (1j * (after.values - before.values) / (2.0 * dt)
           + secondDerivative2(q, now.dx) + 2.0 * np.abs(q) ** 2 * q)
    return float(np.abs(res[1:-1]).max())
