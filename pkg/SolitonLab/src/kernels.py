# kernels.py: compiled inner loops (numba)
#
# Transfer-matrix sweeps of the ZS system d/dx v = (-i z sigma3 + Q(q)) v over cells
# [x_n, x_{n+1}] with the potential qm[n] at the cell midpoint. Vectors are
# renormalized every cell; the log of the removed factor is accumulated.
#
# Fourth-order scheme per cell:  T_n = exp(X_n) exp(dx U_n) exp(Y_n), where X_n, Y_n
# are Q(.) of derivative corrections (see cellCorrections). With zero corrections
# this is the plain product of per-cell exponentials (second order).

import cmath
import math
import threading

import numpy as np
from numba import njit, prange

# parallel kernels are launched one at a time; the default workqueue layer
# does not accept concurrent launches from several Python threads
PARALLEL_LOCK = threading.Lock()

# cubic-interpolation weights for one cell: the centered stencil (-1, 0, 1, 2) and
# the one-sided stencil (0, 1, 2, 3) used next to the ends
W_MID = (-1.0 / 24.0, 13.0 / 24.0, 13.0 / 24.0, -1.0 / 24.0)
W_END = (9.0 / 24.0, 19.0 / 24.0, -5.0 / 24.0, 1.0 / 24.0)


@njit(cache=True)
def _cellIntegral(h, lam, dx, i, d):
    # int from x_i to x_{i+d} of lam^k h(x_i + k d dx), fourth order; d = +1 or -1
    n = h.shape[0]
    j = i + d
    if 0 <= i - d < n and 0 <= j + d < n:
        return dx * (W_MID[0] / lam * h[i - d] + W_MID[1] * h[i]
                     + W_MID[2] * lam * h[j] + W_MID[3] * lam * lam * h[j + d])
    if 0 <= j + 2 * d < n:
        return dx * (W_END[0] * h[i] + W_END[1] * lam * h[j]
                     + W_END[2] * lam * lam * h[j + d] + W_END[3] * lam ** 3 * h[j + 2 * d])
    return dx * (W_END[0] * lam * h[j] + W_END[1] * h[i]
                 + W_END[2] / lam * h[i - d] + W_END[3] / (lam * lam) * h[i - 2 * d])


@njit(cache=True)
def kernelFromRight(h, lam, dx):
    # y_i = int_{x_i}^{inf} e^{2i zbar (x_i - y)} h(y) dy,  lam = e^{-2i zbar dx}
    n = h.shape[0]
    y = np.zeros(n, dtype=np.complex128)
    for i in range(n - 2, -1, -1):
        y[i] = lam * y[i + 1] + _cellIntegral(h, lam, dx, i, 1)
    return y


@njit(cache=True)
def kernelFromLeft(h, lam, dx):
    # y_i = int_{-inf}^{x_i} e^{-2i zbar (x_i - y)} h(y) dy
    n = h.shape[0]
    y = np.zeros(n, dtype=np.complex128)
    for i in range(1, n):
        y[i] = lam * y[i - 1] + _cellIntegral(h, lam, dx, i, -1)
    return y


def cellCorrections(qm, dx, scheme):
    '''
    Closed-form exp(Q(w)) = [[c, s], [-conj(s), c]] for the outer factors of every cell.
    Returns (cX, sX, cY, sY).
    '''
    m = qm.shape[0]
    if scheme == 'bo':
        one = np.ones(m)
        zero = np.zeros(m, dtype=np.complex128)
        return one, zero, one, zero
    padded = np.concatenate(([0.0 + 0.0j], qm, [0.0 + 0.0j]))
    d1 = padded[2:] - padded[:-2]
    d2 = padded[2:] - 2.0 * padded[1:-1] + padded[:-2]
    wX = dx / 24.0 * d1 + dx / 48.0 * d2
    wY = -dx / 24.0 * d1 + dx / 48.0 * d2

    def expQ(w):
        r = np.abs(w)
        return np.cos(r), w * np.sinc(r / np.pi)

    cX, sX = expQ(wX)
    cY, sY = expQ(wY)
    return cX, sX, cY, sY


@njit(cache=True)
def _middle(qc, z, h):
    # exp(h U) = ch I + sh U,  U^2 = k^2 I,  k^2 = -z^2 - |q|^2
    k = cmath.sqrt(-z * z - (qc.real * qc.real + qc.imag * qc.imag))
    kh = k * h
    ch = cmath.cosh(kh)
    if abs(kh) < 1e-8:
        sh = h * (1.0 + kh * kh / 6.0)
    else:
        sh = cmath.sinh(kh) / k
    return ch, sh


@njit(cache=True)
def _stepForward(v1, v2, qc, z, dx, cX, sX, cY, sY):
    a1 = cY * v1 + sY * v2
    a2 = -sY.conjugate() * v1 + cY * v2
    ch, sh = _middle(qc, z, dx)
    b1 = (ch - 1j * z * sh) * a1 + qc * sh * a2
    b2 = -qc.conjugate() * sh * a1 + (ch + 1j * z * sh) * a2
    return cX * b1 + sX * b2, -sX.conjugate() * b1 + cX * b2


@njit(cache=True)
def _stepBackward(v1, v2, qc, z, dx, cX, sX, cY, sY):
    # inverse of the forward step: exp(-Y) exp(-dx U) exp(-X)
    a1 = cX * v1 - sX * v2
    a2 = sX.conjugate() * v1 + cX * v2
    ch, sh = _middle(qc, z, -dx)
    b1 = (ch - 1j * z * sh) * a1 + qc * sh * a2
    b2 = -qc.conjugate() * sh * a1 + (ch + 1j * z * sh) * a2
    return cY * b1 - sY * b2, sY.conjugate() * b1 + cY * b2


@njit(cache=True)
def sweepLeft(qm, cX, sX, cY, sY, dx, x0, z):
    '''
    psi^- with psi^- ~ (1, 0) e^{-izx} at the left edge, at every node.
    Returns (mantissa (N, 2), logScale (N,)).
    '''
    cells = qm.shape[0]
    mant = np.zeros((cells + 1, 2), dtype=np.complex128)
    logs = np.zeros(cells + 1)
    v1 = cmath.exp(-1j * z.real * x0)
    v2 = 0.0j
    acc = z.imag * x0
    mant[0, 0] = v1
    logs[0] = acc
    for n in range(cells):
        v1, v2 = _stepForward(v1, v2, qm[n], z, dx, cX[n], sX[n], cY[n], sY[n])
        m = max(abs(v1), abs(v2))
        if m > 0.0:
            v1 = v1 / m
            v2 = v2 / m
            acc += math.log(m)
        mant[n + 1, 0] = v1
        mant[n + 1, 1] = v2
        logs[n + 1] = acc
    return mant, logs


@njit(cache=True)
def sweepRight(qm, cX, sX, cY, sY, dx, xR, z):
    '''
    psi^+ with psi^+ ~ (0, 1) e^{izx} at the right edge, at every node.
    '''
    cells = qm.shape[0]
    mant = np.zeros((cells + 1, 2), dtype=np.complex128)
    logs = np.zeros(cells + 1)
    v1 = 0.0j
    v2 = cmath.exp(1j * z.real * xR)
    acc = -z.imag * xR
    mant[cells, 1] = v2
    logs[cells] = acc
    for n in range(cells - 1, -1, -1):
        v1, v2 = _stepBackward(v1, v2, qm[n], z, dx, cX[n], sX[n], cY[n], sY[n])
        m = max(abs(v1), abs(v2))
        if m > 0.0:
            v1 = v1 / m
            v2 = v2 / m
            acc += math.log(m)
        mant[n, 0] = v1
        mant[n, 1] = v2
        logs[n] = acc
    return mant, logs


@njit(cache=True)
def _aOne(qm, cX, sX, cY, sY, dx, x0, xR, z):
    v1 = cmath.exp(-1j * z.real * x0)
    v2 = 0.0j
    acc = z.imag * x0
    for n in range(qm.shape[0]):
        v1, v2 = _stepForward(v1, v2, qm[n], z, dx, cX[n], sX[n], cY[n], sY[n])
        m = max(abs(v1), abs(v2))
        if m > 0.0:
            v1 = v1 / m
            v2 = v2 / m
            acc += math.log(m)
    # a = psi1(xR) e^{i z xR}
    return v1 * cmath.exp(complex(acc - z.imag * xR, z.real * xR))


@njit(parallel=True, cache=True)
def aCoefficients(qm, cX, sX, cY, sY, dx, x0, xR, zs):
    out = np.empty(zs.shape[0], dtype=np.complex128)
    for i in prange(zs.shape[0]):
        out[i] = _aOne(qm, cX, sX, cY, sY, dx, x0, xR, zs[i])
    return out
