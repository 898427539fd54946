"""Momentum-space picture of the hexagonal Laplacian.

With the transform ``f(n) -> (1/2pi) sum_n f(n) exp(-i n.x)`` the Laplacian
becomes multiplication by

    F(x) = (1/3) [[0, conj(c)], [c, 0]],   c(x) = 1 + exp(i x1) + exp(i x2),

whose eigenvalues are ``+-sqrt(beta)/3`` with ``beta = |c|^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL_DIRAC = 1e-12

# beta vanishes exactly at these two momenta (mod 2pi).
DIRAC_POINTS = ((2 * np.pi / 3, -2 * np.pi / 3), (-2 * np.pi / 3, 2 * np.pi / 3))


def wrap(x):
    """Map angles to [-pi, pi)."""
    return (np.asarray(x, dtype=float) + np.pi) % (2 * np.pi) - np.pi


def c_factor(x1, x2):
    return 1 + np.exp(1j * np.asarray(x1)) + np.exp(1j * np.asarray(x2))


def beta(x1, x2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return 3 + 2 * (np.cos(x1) + np.cos(x2) + np.cos(x1 - x2))


def grad_beta(x1, x2):
    """Analytic gradient of beta, stacked along the first axis."""
    d = np.sin(np.asarray(x1) - np.asarray(x2))
    return np.stack([-2 * (np.sin(x1) + d), -2 * (np.sin(x2) - d)])


def laplacian_beta(x1, x2):
    return -2 * (np.cos(x1) + np.cos(x2) + 2 * np.cos(np.asarray(x1) - np.asarray(x2)))


def grad_sqrt_beta(x1, x2):
    """Gradient of sqrt(beta); set to zero where beta vanishes."""
    b = beta(x1, x2)
    g = grad_beta(x1, x2)
    root = np.sqrt(np.maximum(b, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(b > TOL_DIRAC, g / (2 * np.where(root > 0, root, 1.0)), 0.0)
    return out


def symbol_matrix(x1: float, x2: float) -> np.ndarray:
    c = complex(c_factor(x1, x2))
    return np.array([[0, np.conj(c)], [c, 0]]) / 3


@dataclass(frozen=True)
class EigenData:
    D: np.ndarray
    P: np.ndarray
    Pinv: np.ndarray
    dirac_flag: bool


def eigendecomposition(x1: float, x2: float) -> EigenData:
    """``F = P diag(D) P^-1`` in closed form.

    Columns of ``P`` are ``(1, u)`` and ``(1, -u)`` with ``u = c/sqrt(beta)``, a
    unit complex number. At zeros of beta, ``F`` vanishes and we return the
    identity frame with ``D = 0``.
    """
    b = float(beta(x1, x2))
    if b <= TOL_DIRAC:
        eye = np.eye(2, dtype=complex)
        return EigenData(np.zeros(2), eye, eye, True)
    root = np.sqrt(b)
    c = complex(c_factor(x1, x2))
    u = c / root
    P = np.array([[1, 1], [u, -u]], dtype=complex)
    w = np.conj(c) / (2 * root)
    Pinv = np.array([[0.5, w], [0.5, -w]], dtype=complex)
    return EigenData(np.array([root / 3, -root / 3]), P, Pinv, False)


def critical_points() -> tuple[list[tuple[float, float]], set[float]]:
    """The nine points of {-pi, 0, pi}^2 and the critical values of sqrt(beta)."""
    axis = (-np.pi, 0.0, np.pi)
    pts = [(a, b) for a in axis for b in axis]
    values = {float(np.round(np.sqrt(beta(a, b)), 12)) for a, b in pts}
    return pts, values


def thresholds() -> list[float]:
    _, values = critical_points()
    levels = {0.0}
    for v in values:
        levels.update((v / 3, -v / 3))
    return sorted(levels)


def momentum_grid(M: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid ``x_m = -pi + 2 pi m / M`` on both axes, ``indexing='ij'``."""
    x = -np.pi + 2 * np.pi * np.arange(M) / M
    return np.meshgrid(x, x, indexing="ij")


def dispersion_grid(M: int) -> np.ndarray:
    """Rows ``(x1, x2, beta, lambda_plus, lambda_minus)`` on the ``M x M`` grid."""
    if M < 2:
        raise ValueError("M must be at least 2")
    X1, X2 = momentum_grid(M)
    b = beta(X1, X2)
    lam = np.sqrt(np.maximum(b, 0.0)) / 3
    return np.column_stack([X1.ravel(), X2.ravel(), b.ravel(), lam.ravel(), -lam.ravel()])


def dirac_mask(x1, x2, tol: float = TOL_DIRAC):
    return beta(x1, x2) <= tol


def band_energies(N: int) -> np.ndarray:
    """Sorted ``+-sqrt(beta)/3`` over the periodic momenta ``2 pi m / N``."""
    k = 2 * np.pi * np.arange(N) / N
    K1, K2 = np.meshgrid(k, k, indexing="ij")
    lam = np.sqrt(np.maximum(beta(K1, K2), 0.0)).ravel() / 3
    return np.sort(np.concatenate([lam, -lam]))
