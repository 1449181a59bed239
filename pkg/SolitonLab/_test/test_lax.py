import numpy as np
import pytest

from errors import InvalidSpectralPoint, PoleEvaluation, SingularGramian
from lax import (SIGMA3, IDENTITY, SpectralPoint, pauliQ, laxU, laxV, cauchyKernel, gramian,
                 gramianMatrix, gramianDual, solveRFromS, solveSFromR, solveRByCofactors,
                 buildChi, buildChiAdjoint)
from fields import SolitonParams
from solitons import oneSoliton

ALGEBRA_TOL = 1e-9
POINTS = [complex(-0.8, 0.5), complex(0.3, 1.0), complex(-0.2, 1.4), complex(0.9, 0.8)]


def randomSeeds(n, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, 2)) + 1j * rng.standard_normal((n, 2))


def randomPoints(n, rng, gap=0.3):
    zs = []
    while len(zs) < n:
        z = complex(rng.uniform(-1.0, 1.0), rng.uniform(0.4, 1.5))
        if all(abs(z - w) >= gap for w in zs):
            zs.append(z)
    return zs


def test_pauli_and_u():
    q = 1.0 + 2.0j
    assert np.allclose(pauliQ(q), [[0, q], [-np.conj(q), 0]])
    z = 0.3 + 0.7j
    assert np.allclose(laxU(0.0, z), -1j * z * SIGMA3)
    assert np.allclose(laxU(q, 0.0), pauliQ(q))
    assert np.allclose(laxV(0.0, 0.0, z), -2j * z * z * SIGMA3)


def test_zero_curvature_on_one_soliton():
    # U_t - V_x + [U, V] = 0 along an exact solution
    p = SolitonParams(0.2, 0.5, 0.3, 0.1)
    x, t, h, z = 0.4, 0.7, 1e-4, 0.1 + 0.6j

    def q(x, t):
        return oneSoliton(p, x, t)

    qx = (q(x + h, t) - q(x - h, t)) / (2 * h)
    qt = (q(x, t + h) - q(x, t - h)) / (2 * h)
    Ut = pauliQ(qt)
    qxPlus = (q(x + 2 * h, t) - q(x, t)) / (2 * h)
    qxMinus = (q(x, t) - q(x - 2 * h, t)) / (2 * h)
    Vx = (laxV(q(x + h, t), qxPlus, z) - laxV(q(x - h, t), qxMinus, z)) / (2 * h)
    U, V = laxU(q(x, t), z), laxV(q(x, t), qx, z)
    assert np.abs(Ut - Vx + U @ V - V @ U).max() < 1e-5


@pytest.mark.parametrize('xi, eta', [(0.0, 0.0), (0.1, -0.5), (np.nan, 1.0), (0.0, np.inf)])
def test_invalid_spectral_point(xi, eta):
    with pytest.raises(InvalidSpectralPoint):
        SpectralPoint(xi, eta)


def test_one_soliton_gramian_example():
    s = np.array([[1.0, -1.0]])
    zs = [SpectralPoint(0.0, 0.5)]
    g = gramian(s, zs)
    assert g.D == pytest.approx(2.0)
    r = solveRFromS(s, zs)
    assert np.allclose(r, [[0.5, -0.5]])
    assert np.allclose(solveSFromR(r, zs), s)


@pytest.mark.parametrize('n', [1, 2, 3, 4])
def test_gramian_hermitian_positive(n):
    zs = POINTS[:n]
    M = gramianMatrix(randomSeeds(n, n), zs)
    assert np.abs(M - M.conj().T).max() < ALGEBRA_TOL
    assert np.all(np.linalg.eigvalsh(M) > 0)
    C = cauchyKernel(zs)
    assert np.abs(C - C.conj().T).max() < ALGEBRA_TOL


@pytest.mark.parametrize('n', [2, 3, 4])
def test_cofactors_are_conjugate_symmetric(n):
    g = gramian(randomSeeds(n, 10 + n), POINTS[:n])
    assert np.abs(g.cof - g.cof.conj().T).max() < ALGEBRA_TOL * np.abs(g.cof).max()


@pytest.mark.parametrize('n', [1, 2, 3, 4])
@pytest.mark.parametrize('trial', range(25))
def test_duality(n, trial):
    rng = np.random.default_rng(100 * n + trial)
    s = randomSeeds(n, rng)
    zs = randomPoints(n, rng)
    r = solveRFromS(s, zs)
    assert np.abs(solveSFromR(r, zs) - s).max() < 1e-8 * np.abs(s).max()
    assert np.abs(solveRByCofactors(s, zs) - r).max() < 1e-8 * np.abs(r).max()
    # N = M^{-1}
    M = gramianMatrix(s, zs)
    N = gramianDual(r, zs)
    assert np.abs(M @ N - np.eye(n)).max() < 1e-8


@pytest.mark.parametrize('n', [1, 2, 3, 4])
@pytest.mark.parametrize('trial', range(25))
def test_chi_inverse_and_unit_determinant(n, trial):
    rng = np.random.default_rng(7000 + 100 * n + trial)
    s = randomSeeds(n, rng)
    zs = randomPoints(n, rng)
    r = solveRFromS(s, zs)
    poles = zs + [np.conj(z) for z in zs]
    for _ in range(3):
        z = complex(*rng.uniform(-2.0, 2.0, 2))
        if min(abs(z - p) for p in poles) < 0.1:
            continue
        chi = buildChi(0.0, z, r, s, zs)
        chiInv = buildChiAdjoint(0.0, z, r, s, zs)
        assert np.abs(chi @ chiInv - IDENTITY).max() < ALGEBRA_TOL * max(1.0, np.abs(chi).max()) ** 2
    for z in rng.uniform(-4.0, 4.0, 3):
        assert abs(abs(np.linalg.det(buildChi(0.0, z, r, s, zs))) - 1.0) < ALGEBRA_TOL


def test_chi_determinant_is_blaschke_ratio():
    s = randomSeeds(2, 3)
    zs = POINTS[:2]
    r = solveRFromS(s, zs)
    z = 0.25 + 0.4j
    expected = np.prod([(z - np.conj(p)) / (z - p) for p in zs])
    assert abs(np.linalg.det(buildChi(0.0, z, r, s, zs)) - expected) < ALGEBRA_TOL


def test_chi_at_pole():
    s = randomSeeds(1, 0)
    zs = [POINTS[0]]
    r = solveRFromS(s, zs)
    with pytest.raises(PoleEvaluation):
        buildChi(0.0, POINTS[0], r, s, zs)
    with pytest.raises(PoleEvaluation):
        buildChiAdjoint(0.0, np.conj(POINTS[0]), r, s, zs)


def test_singular_gramian():
    with pytest.raises(SingularGramian):
        gramian(randomSeeds(2, 1), [POINTS[0], POINTS[0]])
    with pytest.raises(SingularGramian):
        solveRFromS(np.zeros((1, 2)), POINTS[:1])
