# utils.py: small numeric helpers shared by the field modules

import numpy as np


# overflow-safe special functions

def sechSafe(u):
    '''
    sech(u) without overflow for large |u|.
    '''
    a = np.abs(u)
    e = np.exp(-a)
    return 2.0 * e / (1.0 + e * e)


def wrapHalfPi(angle):
    '''
    Map an angle defined mod pi into (-pi/2, pi/2].
    '''
    w = np.mod(np.asarray(angle) + 0.5 * np.pi, np.pi) - 0.5 * np.pi
    # np.mod puts +pi/2 onto -pi/2
    w = np.where(np.isclose(w, -0.5 * np.pi, rtol=0.0, atol=1e-15), 0.5 * np.pi, w)
    return float(w) if np.ndim(w) == 0 else w


def isPowerOfTwo(n):
    return n > 0 and (n & (n - 1)) == 0


# derivatives on a uniform grid

def firstDerivative4(values, dx):
    '''
    Fourth-order centered first derivative. The two points at each edge are left as 0.
    '''
    v = np.asarray(values)
    d = np.zeros_like(v)
    d[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * dx)
    return d


def secondDerivative2(values, dx):
    '''
    Three-point centered second derivative, edges left as 0.
    '''
    v = np.asarray(values)
    d = np.zeros_like(v)
    d[1:-1] = (v[:-2] - 2.0 * v[1:-1] + v[2:]) / (dx * dx)
    return d


def secondDerivative4(values, dx):
    '''
    Five-point (fourth-order) centered second derivative, edges left as 0.
    '''
    v = np.asarray(values)
    d = np.zeros_like(v)
    d[2:-2] = (-v[:-4] + 16.0 * v[1:-3] - 30.0 * v[2:-2] + 16.0 * v[3:-1] - v[4:]) / (12.0 * dx * dx)
    return d


def wavenumbers(n, dx):
    return 2.0 * np.pi * np.fft.fftfreq(n, d=dx)


def spectralDerivative(values, dx):
    '''
    d/dx by FFT. Only meaningful for samples that decay at both grid edges.
    '''
    k = wavenumbers(len(values), dx)
    return np.fft.ifft(1j * k * np.fft.fft(values))


def refineSamples(values, factor):
    '''
    Band-limited interpolation onto a grid `factor` times finer: sample j of the result
    sits at x_0 + j dx / factor. The Nyquist mode of an even-length input is split evenly.
    '''
    v = np.asarray(values, dtype=np.complex128)
    if factor == 1:
        return v.copy()
    n = v.shape[0]
    spec = np.fft.fft(v)
    out = np.zeros(n * factor, dtype=np.complex128)
    h = n // 2
    if n % 2:
        out[:h + 1] = spec[:h + 1]
        out[-h:] = spec[h + 1:]
    else:
        out[:h] = spec[:h]
        out[-h + 1:] = spec[h + 1:]
        out[h] = out[-h] = 0.5 * spec[h]
    return np.fft.ifft(out) * factor


def edgeLevel(values, width=1):
    '''
    Largest magnitude over the `width` outermost samples on each side, relative to the peak.
    '''
    a = np.abs(np.asarray(values))
    peak = a.max() if a.size else 0.0
    if peak == 0.0:
        return 0.0
    edge = max(a[:width].max(), a[-width:].max())
    return float(edge / peak)
