import numpy as np
from hypothesis import given, strategies as st

from hexlap.symbol import (band_energies, beta, critical_points, dispersion_grid, eigendecomposition,
                           grad_sqrt_beta, symbol_matrix, thresholds)

angles = st.floats(-np.pi, np.pi, allow_nan=False)
K = 2 * np.pi / 3


def test_beta_values():
    assert np.isclose(beta(0, 0), 9)
    assert np.isclose(beta(np.pi, 0), 1)
    assert abs(beta(K, -K)) < 1e-14


@given(angles, angles)
def test_beta_matches_modulus(x1, x2):
    assert abs(beta(x1, x2) - abs(1 + np.exp(1j * x1) + np.exp(1j * x2)) ** 2) < 1e-12
    assert np.isclose(beta(x1, x2), beta(x2, x1))
    assert np.isclose(beta(x1, x2), beta(-x1, -x2))


def test_symbol_matrix_examples():
    assert np.allclose(symbol_matrix(0, 0), [[0, 1], [1, 0]])
    assert np.allclose(symbol_matrix(K, -K), 0)
    assert np.allclose(np.linalg.eigvalsh(symbol_matrix(np.pi, 0)), [-1 / 3, 1 / 3])


@given(angles, angles)
def test_symbol_hermitian_tracefree(x1, x2):
    F = symbol_matrix(x1, x2)
    assert np.allclose(F, F.conj().T)
    assert abs(np.trace(F)) < 1e-15
    assert abs(np.linalg.det(F) + beta(x1, x2) / 9) < 1e-12


@given(angles, angles)
def test_eigendecomposition_reconstructs(x1, x2):
    e = eigendecomposition(x1, x2)
    if e.dirac_flag:
        return
    F = symbol_matrix(x1, x2)
    assert np.abs(F - e.P @ np.diag(e.D) @ e.Pinv).max() < 1e-12
    assert np.abs(e.P @ e.Pinv - np.eye(2)).max() < 1e-12
    for k in range(2):
        assert np.abs(F @ e.P[:, k] - e.D[k] * e.P[:, k]).max() < 1e-10


def test_eigendecomposition_examples():
    assert np.allclose(eigendecomposition(0, 0).D, [1, -1])
    d = eigendecomposition(K, -K)
    assert d.dirac_flag and np.all(d.D == 0)
    e = eigendecomposition(0.7, -1.3)
    assert np.abs(symbol_matrix(0.7, -1.3) - e.P @ np.diag(e.D) @ e.Pinv).max() < 1e-12


def test_critical_points():
    pts, values = critical_points()
    assert len(set(pts)) == 9
    assert (0.0, 0.0) in pts and (np.pi, 0.0) in pts
    assert values == {1.0, 3.0}
    assert np.isclose(np.sqrt(beta(0, 0)), 3) and np.isclose(np.sqrt(beta(np.pi, 0)), 1)
    h = 1e-4
    for a, b in pts:
        assert np.linalg.norm(grad_sqrt_beta(a, b)) < 1e-10
        fd = [(np.sqrt(beta(a + h, b)) - np.sqrt(beta(a - h, b))) / (2 * h),
              (np.sqrt(beta(a, b + h)) - np.sqrt(beta(a, b - h))) / (2 * h)]
        assert np.linalg.norm(fd) < 1e-6


def test_thresholds():
    t = thresholds()
    assert t == sorted(t)
    assert np.allclose(t, [-1, -1 / 3, 0, 1 / 3, 1])
    _, values = critical_points()
    assert set(np.round(t, 12)) == set(np.round([v / 3 for v in values] + [-v / 3 for v in values] + [0], 12))


def test_dispersion_grid():
    g = dispersion_grid(2)
    vals = np.sort(np.concatenate([g[:, 3], g[:, 4]]))
    assert np.allclose(vals, sorted([1, -1] + [1 / 3] * 3 + [-1 / 3] * 3))
    big = dispersion_grid(64)
    assert np.abs(big[:, 3:]).max() <= 1 + 1e-15
    i = np.flatnonzero((big[:, 0] == 0) & (big[:, 1] == 0))
    assert np.isclose(big[i, 3], 1)


def test_band_energies_count():
    assert band_energies(4).size == 32
