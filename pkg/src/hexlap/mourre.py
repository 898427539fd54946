"""Commutators with the conjugate operator and numerical Mourre estimates.

Two sides are checked. On the torus, the commutator of the symbol with
``A_F`` is the scalar ``(5/12) beta |grad beta|^2``; its infimum over the
preimage of an energy window is ``c_symbol``. On a Dirichlet box, the
projected commutator ``E [H, iA] E`` is diagonalized directly to give
``c_matrix``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .conjugate import A_F_apply, conjugate_matrix, hat_A_apply, interior_mask, spectral_grad
from .lattice import Box
from .operators import AssembledOperator, MetricField, PotentialField, hamiltonian, laplacian_hex
from .symbol import beta, grad_beta, grad_sqrt_beta, momentum_grid, thresholds

COMMUTATOR_MARGIN = 4
FINITE_SIZE_FACTOR = 0.5
DENSE_LIMIT = 8192


class EmptyPreimage(ValueError):
    """No grid momentum has its band energy inside the interval."""


class DegenerateProjection(ValueError):
    """The spectral projection onto the interval is zero."""


@dataclass(frozen=True)
class EnergyInterval:
    a: float
    b: float
    threshold_margin: float = 0.05

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"empty interval [{self.a}, {self.b}]")
        if self.a < -1 or self.b > 1:
            raise ValueError(f"[{self.a}, {self.b}] leaves [-1, 1]")
        if self.threshold_margin <= 0:
            raise ValueError("threshold_margin must be positive")

    def distance_to_thresholds(self) -> float:
        d = []
        for t in thresholds():
            d.append(0.0 if self.a <= t <= self.b else min(abs(t - self.a), abs(t - self.b)))
        return min(d)

    @property
    def respects_margin(self) -> bool:
        return self.distance_to_thresholds() >= self.threshold_margin

    def mirrored(self) -> "EnergyInterval":
        return EnergyInterval(-self.b, -self.a, self.threshold_margin)

    def as_list(self) -> list:
        return [self.a, self.b]


def _as_interval(I) -> EnergyInterval:
    return I if isinstance(I, EnergyInterval) else EnergyInterval(*I)


def _csr(H) -> sp.csr_matrix:
    if isinstance(H, AssembledOperator):
        return H.matrix.tocsr()
    return sp.csr_matrix(H)


# ---------------------------------------------------------------------------
# torus side


def commutator_density(x1, x2) -> np.ndarray:
    """``(5/12) beta |grad beta|^2``: the scalar value of ``[F, iA_F]``."""
    g = grad_beta(x1, x2)
    return (5.0 / 12.0) * beta(x1, x2) * (g**2).sum(0)


def _test_functions(X1, X2) -> list:
    return [np.ones_like(X1, dtype=complex),
            np.exp(1j * (X1 + 2 * X2)),
            np.exp(-1j * (3 * X1 - X2)) + 0.5 * np.cos(X2)]


def commutator_symbol_check(M: int, tests: Optional[Sequence[Callable]] = None) -> float:
    """Largest pointwise defect of ``[sqrt(beta), iA_hat] g = (5/4) beta |grad beta|^2 g``.

    ``tests`` are callables ``g(x1, x2)`` returning trigonometric polynomials.
    The gradient of ``sqrt(beta) g`` is formed with the product rule so that
    only the smooth factor ``g`` is differentiated spectrally.
    """
    if M < 64:
        raise ValueError("M must be at least 64")
    X1, X2 = momentum_grid(M)
    gs = [t(X1, X2) for t in tests] if tests else _test_functions(X1, X2)
    root = np.sqrt(np.maximum(beta(X1, X2), 0.0))
    dsq = grad_sqrt_beta(X1, X2)
    gb = grad_beta(X1, X2)
    rhs_density = 1.25 * beta(X1, X2) * (gb**2).sum(0)
    worst = 0.0
    for g in gs:
        dg = spectral_grad(g)
        Ag = hat_A_apply(g, X1, X2, dg)
        Arg = hat_A_apply(root * g, X1, X2, dsq * g + root * dg)
        lhs = 1j * (root * Ag - Arg)
        worst = max(worst, float(np.abs(lhs - rhs_density * g).max()))
    return worst


def commutator_F_check(M: int) -> float:
    """Largest defect of ``[F, iA_F] g = (5/12) beta |grad beta|^2 g`` on C^2-valued g."""
    X1, X2 = momentum_grid(M)
    c = 1 + np.exp(1j * X1) + np.exp(1j * X2)
    G = commutator_density(X1, X2)
    fs = _test_functions(X1, X2)
    worst = 0.0
    for g1, g2 in ((fs[0], fs[1]), (fs[1], fs[2]), (fs[2], np.zeros_like(fs[2]))):
        Ag1, Ag2 = A_F_apply(g1, g2, X1, X2)
        FAg = (np.conj(c) * Ag2 / 3, c * Ag1 / 3)
        AFg = A_F_apply(np.conj(c) * g2 / 3, c * g1 / 3, X1, X2)
        for k, g in enumerate((g1, g2)):
            lhs = 1j * (FAg[k] - AFg[k])
            worst = max(worst, float(np.abs(lhs - G * g).max()))
    return worst


def mourre_constant(I, M: int = 512) -> float:
    """``min (5/12) beta |grad beta|^2`` over grid momenta whose band energy lies in ``I``.

    Both bands are scanned, so a momentum counts when ``sqrt(beta)/3`` or its
    negative falls inside ``I``.
    """
    I = _as_interval(I)
    X1, X2 = momentum_grid(M)
    lam = np.sqrt(np.maximum(beta(X1, X2), 0.0)) / 3
    sel = ((lam >= I.a) & (lam <= I.b)) | ((-lam >= I.a) & (-lam <= I.b))
    if not sel.any():
        raise EmptyPreimage(f"no momentum on the {M}x{M} grid has energy in [{I.a}, {I.b}]")
    return float(commutator_density(X1, X2)[sel].min())


def degeneration_curve(threshold: float, distances=(0.2, 0.1, 0.05, 0.025), side: int = 1,
                       width: float = 0.05, M: int = 512) -> list[tuple[float, float]]:
    """``c_symbol`` of windows of fixed ``width`` at decreasing distance from ``threshold``."""
    out = []
    for d in distances:
        if side > 0:
            a, b = threshold + d, threshold + d + width
        else:
            a, b = threshold - d - width, threshold - d
        out.append((d, mourre_constant(EnergyInterval(a, b, threshold_margin=d / 2), M)))
    return out


# ---------------------------------------------------------------------------
# box side


def commutator_matrix(H, A, box: Box, margin: int = COMMUTATOR_MARGIN) -> tuple[np.ndarray, np.ndarray]:
    """Interior compression of ``i(HA - AH)``.

    Returns the dense block and the flat indices of the interior sites.
    """
    if box.periodic:
        raise ValueError("commutators with A need a Dirichlet box")
    Hm, Am = _csr(H), sp.csr_matrix(A)
    C = (1j * (Hm @ Am - Am @ Hm)).tocsr()
    idx = np.flatnonzero(interior_mask(box, margin).ravel())
    return C[idx][:, idx].toarray(), idx


def spectral_projection(H, I) -> np.ndarray:
    """Orthogonal projector onto the eigenvectors of ``H`` with eigenvalues in ``I``."""
    a, b = (I.a, I.b) if isinstance(I, EnergyInterval) else (float(I[0]), float(I[1]))
    w, V = _eigh(H)
    S = V[:, (w >= a) & (w <= b)]
    return S @ S.conj().T


def _eigh(H) -> tuple[np.ndarray, np.ndarray]:
    Hd = H.toarray() if sp.issparse(H) else (H.dense() if isinstance(H, AssembledOperator) else np.asarray(H))
    if Hd.shape[0] > DENSE_LIMIT:
        raise ValueError(f"dense eigensolve limited to dimension {DENSE_LIMIT}")
    return np.linalg.eigh(Hd)


@dataclass
class MourreReport:
    interval: list
    c_symbol: float
    c_matrix: float
    rank: int
    N: int
    M: int

    @property
    def passes(self) -> bool:
        return self.c_matrix >= FINITE_SIZE_FACTOR * self.c_symbol

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def projected_commutator(H, A, I, box: Box, margin: int = COMMUTATOR_MARGIN) -> np.ndarray:
    """Eigenvalues of ``E [H, iA] E`` on ``range(E)``.

    ``H`` and the commutator are both compressed to the interior sites, and
    ``E`` is the spectral projection of the compressed ``H``, so every vector
    in its range stays clear of the truncated edge of ``A``.
    """
    I = _as_interval(I)
    C, idx = commutator_matrix(H, A, box, margin)
    Hi = _csr(H)[idx][:, idx]
    w, V = _eigh(Hi)
    S = V[:, (w >= I.a) & (w <= I.b)]
    if S.shape[1] == 0:
        raise DegenerateProjection(f"no eigenvalue of H in [{I.a}, {I.b}]")
    return np.linalg.eigvalsh(S.conj().T @ C @ S)


def mourre_check(H, A, I, box: Box, M: int = 512, margin: int = COMMUTATOR_MARGIN) -> MourreReport:
    I = _as_interval(I)
    ev = projected_commutator(H, A, I, box, margin)
    return MourreReport(I.as_list(), mourre_constant(I, M), float(ev.min()), int(ev.size), box.N, M)


def laplacian_mourre(N: int, I, M: int = 512) -> MourreReport:
    box = Box(N, "dirichlet")
    return mourre_check(laplacian_hex().assemble(box), conjugate_matrix(box), I, box, M)


def theta_sweep(mf: MetricField, V: Optional[PotentialField], I, N: int,
                thetas=(1.0, 0.5, 0.25, 0.125)) -> list[dict]:
    """Projected-commutator minimum as the perturbation is scaled by ``theta``.

    Also records how many eigenvalues are negative, which should stay bounded
    (the compact remainder has finite rank up to small errors).
    """
    I = _as_interval(I)
    box = Box(N, "dirichlet")
    A = conjugate_matrix(box)
    out = []
    for t in thetas:
        H = hamiltonian(mf.scaled(t), V.scaled(t) if V is not None else None, box)
        ev = projected_commutator(H, A, I, box)
        out.append({"theta": t, "c_matrix": float(ev.min()), "rank": int(ev.size),
                    "negative": int((ev < 0).sum())})
    return out
