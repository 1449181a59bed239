import numpy as np
import pytest

import dressing
import kernels
from dressing import (vacuumSeed, jostSeed, jostPairs, jostResidual, jostDeviation, dress,
                      dressWithLogDet, dressingEigendata, gramianAt, modulusIdentityResidual,
                      traceIdentityResidual, logDetIdentityResidual, undress, zsResidual)
from errors import DegenerateParams, EdgeDecay, SeedTooLarge, SingularGramian, NotAnEigenfunction
from evolver import l2Norm
from fields import ComplexField, Grid, SolitonParams
from lax import SpectralPoint, cauchyKernel
from scattering import SearchRegion, findEigenvalues
from solitons import oneSoliton, twoSoliton

GRID = Grid.centered(2048, 80.0)
FINE = Grid(4000, 0.01, -20.0)
WIDE = Grid.centered(4096, 160.0)
COLLIDING = [SolitonParams(1.0, 1.0), SolitonParams(-1.0, 1.5)]
MIXED = [SolitonParams(0.3, 0.5, -4.0, 0.2), SolitonParams(-0.2, 0.8, 1.0, -0.4),
         SolitonParams(0.1, 0.6, 5.0, 1.1)]


def zeroField(grid):
    return ComplexField.zeros(grid)


def dressed(params, grid, t=0.0):
    return dress(zeroField(grid), vacuumSeed(params, t, grid), [p.point for p in params])


def test_vacuum_seed_values():
    p = SolitonParams(0.0, 0.5)
    (s,) = vacuumSeed([p], 0.0, GRID)
    x = GRID.x
    inside = np.abs(x) < 20
    v = s.values()
    assert np.allclose(v[inside, 0], np.exp(-0.5 * x[inside]), rtol=1e-12)
    assert np.allclose(v[inside, 1], -np.exp(0.5 * x[inside]), rtol=1e-12)


def test_duplicate_params():
    with pytest.raises(DegenerateParams):
        vacuumSeed([SolitonParams(0.1, 0.5), SolitonParams(0.1, 0.5, 2.0, 1.0)], 0.0, GRID)


@pytest.mark.parametrize('p', [SolitonParams(0.0, 0.5), SolitonParams(0.4, 1.2, 3.0, 0.7),
                               SolitonParams(-1.0, 2.0, -5.0, -2.0)])
@pytest.mark.parametrize('t', [0.0, 1.5])
def test_dress_one_soliton(p, t):
    q = dressed([p], GRID, t)
    assert np.abs(q.values - oneSoliton(p, GRID.x, t)).max() < 1e-12


@pytest.mark.parametrize('t', [0.0, 0.5, 2.0])
def test_dress_two_soliton(t):
    q = dressed(COLLIDING, GRID, t)
    assert np.abs(q.values - twoSoliton(*COLLIDING, GRID.x, t)).max() < 1e-10


def test_far_apart_solitons_do_not_overflow():
    params = [SolitonParams(0.0, 2.0, -30.0), SolitonParams(0.0, 2.5, 30.0)]
    q = dressed(params, GRID)
    assert np.all(np.isfinite(q.values))
    assert 4.9 < np.abs(q.values).max() < 5.0 + 1e-9


def test_gramian_at_matches_field():
    seeds = vacuumSeed(COLLIDING, 0.3, GRID)
    q = dressed(COLLIDING, GRID, 0.3)
    i = GRID.n // 2 + 7
    g = gramianAt(seeds, [p.point for p in COLLIDING], i)
    assert abs(2 * g.Sigma / g.D - q.values[i]) < 1e-10
    assert g.D > 0


def seedLogNorms(seeds):
    # log |s_k(x)|^2 per grid point, shape (N, n)
    return np.stack([2.0 * s.logScale + np.log(np.sum(np.abs(s.mantissa()) ** 2, axis=1)) for s in seeds],
                    axis=1)


@pytest.mark.parametrize('params', [COLLIDING, MIXED])
@pytest.mark.parametrize('background', ['vacuum', 'jost'])
def test_determinant_positive_with_growth_bound(params, background):
    # det(C o G) >= det(C) prod_k G_kk for positive definite C and G
    zs = [p.point for p in params]
    if background == 'vacuum':
        q0 = zeroField(GRID)
        seeds = vacuumSeed(params, 0.5, GRID)
    else:
        q0 = backgroundWithNorm(1e-2, ROOMY)
        seeds = jostSeed(q0, params, 0.5)
    _, logD = dressWithLogDet(q0, seeds, zs)
    _, logDetC = np.linalg.slogdet(cauchyKernel(zs))
    bound = logDetC + seedLogNorms(seeds).sum(axis=1)
    assert np.all(np.isfinite(logD))
    assert np.all(logD >= bound - 1e-9 * np.maximum(1.0, np.abs(bound)))


def test_vacuum_growth_is_exponential():
    zs = [p.point for p in MIXED]
    _, logD = dressWithLogDet(zeroField(GRID), vacuumSeed(MIXED, 0.0, GRID), zs)
    exponent = 2.0 * sum(p.eta * np.abs(p.phases(GRID.x, 0.0).phi) for p in MIXED)
    _, logDetC = np.linalg.slogdet(cauchyKernel(zs))
    assert np.all(logD - exponent >= logDetC - 1e-9 * np.maximum(1.0, exponent))


@pytest.mark.parametrize('n', [1, 3])
def test_indefinite_kernel_is_rejected(n):
    params = MIXED[:n]
    S = np.stack([np.stack([s.first, s.second], axis=-1) for s in vacuumSeed(params, 0.0, GRID)], axis=1)
    with pytest.raises(SingularGramian, match='determinant has phase'):
        dressing._scaledSolve(-cauchyKernel([p.point for p in params]), S, 'Gramian')


@pytest.mark.parametrize('params, tol', [([SolitonParams(0.0, 0.5)], 1e-6), (COLLIDING, 1e-5)])
def test_modulus_identity(params, tol):
    q0 = zeroField(FINE)
    q, logD = dressWithLogDet(q0, vacuumSeed(params, 0.0, FINE), [p.point for p in params])
    assert modulusIdentityResidual(q, q0, logD) < tol


@pytest.mark.parametrize('params', [[SolitonParams(0.0, 0.5)], COLLIDING, MIXED])
def test_trace_and_logdet_identities(params):
    zs = [p.point for p in params]
    seeds = vacuumSeed(params, 0.0, FINE)
    _, logD = dressWithLogDet(zeroField(FINE), seeds, zs)
    rFields = [r for _, r in dressingEigendata(seeds, zs)]
    assert traceIdentityResidual(rFields, seeds, zs) < 1e-8
    assert logDetIdentityResidual(rFields, seeds, logD, FINE.dx) < 1e-6


def test_dressing_eigendata_solves_zs():
    q = dressed(MIXED, WIDE)
    for p, r in dressingEigendata(vacuumSeed(MIXED, 0.0, WIDE), [p.point for p in MIXED]):
        assert zsResidual(r, q, p.z) < 1e-6


# Jost seeds

SMALL = Grid(4096, 40.0 / 4096, -20.0)
ROOMY = Grid.centered(4096, 80.0)


def smallBackground(amplitude, grid=SMALL):
    return ComplexField.onGrid(grid, amplitude * np.exp(-grid.x ** 2) * np.exp(0.3j * grid.x))


def backgroundWithNorm(eps, grid=SMALL):
    q = smallBackground(1.0, grid)
    return q.withValues(q.values * (eps / l2Norm(q)))


@pytest.mark.parametrize('zbar', [None, 0.4 - 0.7j])
def test_kernel_recursions_are_fourth_order(zbar):
    def sweeps(n):
        x = np.linspace(-6.0, 6.0, n)
        dx = x[1] - x[0]
        h = np.exp(-x ** 2) * np.exp(0.3j * x)
        lam = 1.0 + 0.0j if zbar is None else np.exp(-2j * zbar * dx)
        return kernels.kernelFromLeft(h, lam, dx), kernels.kernelFromRight(h, lam, dx)

    fineL, fineR = sweeps(8 * 1200 + 1)
    errors = []
    for k in (1, 2):
        left, right = sweeps(k * 1200 + 1)
        step = 8 // k
        errors.append(max(np.abs(left - fineL[::step]).max(), np.abs(right - fineR[::step]).max()))
    assert errors[0] / errors[1] > 12.0
    assert errors[1] < 1e-8


def test_jost_seed_on_zero_background():
    params = [SolitonParams(0.2, 0.5, 1.0, 0.3), SolitonParams(-0.3, 0.7)]
    jost = jostSeed(zeroField(SMALL), params, 0.4)
    vac = vacuumSeed(params, 0.4, SMALL)
    for a, b in zip(jost, vac):
        assert np.abs(a.mantissa() - b.mantissa()).max() < 1e-12
        assert np.abs(a.logScale - b.logScale).max() < 1e-12


@pytest.mark.parametrize('eps', [1e-3, 1e-2])
def test_jost_pairs_small_background(eps):
    q0 = backgroundWithNorm(eps)
    for pair in jostPairs(q0, [SolitonParams(0.3, 0.5), SolitonParams(-0.1, 0.9)]):
        assert jostResidual(pair, q0) < 1e-8
        assert jostDeviation(pair) <= 10 * eps


def test_dressing_small_background_stays_close():
    p = SolitonParams(0.0, 0.5)
    distances = []
    for eps in (1e-3, 1e-2):
        q0 = backgroundWithNorm(eps)
        q = dress(q0, jostSeed(q0, [p], 0.0), [p.point])
        distances.append(l2Norm(q.withValues(q.values - oneSoliton(p, SMALL.x, 0.0))))
        assert distances[-1] <= 10 * eps
    assert distances[0] < distances[1]


@pytest.mark.parametrize('params', [[SolitonParams(0.0, 0.5)], [SolitonParams(0.3, 0.6, -2.0, 0.4),
                                                                 SolitonParams(-0.2, 0.8, 2.0)]])
def test_undress_jost_dressed_field(params):
    q0 = backgroundWithNorm(1e-2, ROOMY)
    zs = [p.point for p in params]
    seeds = jostSeed(q0, params, 0.0)
    q = dress(q0, seeds, zs)
    qt = undress(q, dressingEigendata(seeds, zs), tolerance=1e-5)
    assert l2Norm(qt) <= 10 * l2Norm(q0)
    assert l2Norm(qt.withValues(qt.values - q0.values)) < 1e-8
    assert findEigenvalues(qt, SearchRegion(-1.0, 1.0, 0.1, 1.5)) == []


def test_jost_seed_rejects_large_background():
    with pytest.raises(SeedTooLarge):
        jostSeed(smallBackground(1.0), [SolitonParams(0.0, 0.5)], 0.0)


def test_jost_seed_rejects_slow_decay():
    q0 = ComplexField.onGrid(SMALL, np.full(SMALL.n, 1e-3, dtype=complex))
    with pytest.raises(EdgeDecay):
        jostSeed(q0, [SolitonParams(0.0, 0.5)], 0.0)


# undressing

@pytest.mark.parametrize('params', [[SolitonParams(0.0, 0.5)], COLLIDING, MIXED])
def test_undress_round_trip(params):
    seeds = vacuumSeed(params, 0.0, WIDE)
    q = dressed(params, WIDE)
    qt = undress(q, dressingEigendata(seeds, [p.point for p in params]))
    assert np.abs(qt.values).max() < 1e-8


def test_undress_keeps_background_without_eigendata():
    q = smallBackground(0.01)
    assert undress(q, []) is q


def test_undress_rejects_wrong_eigenfunction():
    p = SolitonParams(0.0, 0.5)
    q = dressed([p], WIDE)
    (_, r), = dressingEigendata(vacuumSeed([p], 0.0, WIDE), [p.point])
    with pytest.raises(NotAnEigenfunction):
        undress(q, [(SpectralPoint(0.2, 0.5), r)])
