"""Position-side operators on a truncation box.

A :class:`Stencil` stores, for every ``(d1, d2, src, dst)``, a coefficient
such that

    (S f)_dst(n) = sum coef(n, n + d) * f_src(n + d).

Coefficients are either numbers or callables ``coef(t1, t2, s1, s2)`` taking
arrays of target and source cell labels. Labels are centred (cell ``N//2``
is the origin) and, on periodic boxes, sources are wrapped back into the box
before the callable sees them, so edge weights stay symmetric across the
seam.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import NEIGHBOR_OFFSETS, Box, Tag

Coef = Union[complex, float, Callable]
Key = tuple  # (d1, d2, src Tag, dst Tag)


@dataclass(frozen=True)
class Stencil:
    entries: dict = field(default_factory=dict)

    def __add__(self, other: "Stencil") -> "Stencil":
        merged = dict(self.entries)
        for key, coef in other.entries.items():
            if key in merged:
                merged[key] = _sum_coef(merged[key], coef)
            else:
                merged[key] = coef
        return Stencil(merged)

    def scaled(self, s: complex) -> "Stencil":
        return Stencil({k: _scale_coef(c, s) for k, c in self.entries.items()})

    def __sub__(self, other: "Stencil") -> "Stencil":
        return self + other.scaled(-1.0)

    def restrict(self, offsets) -> "Stencil":
        """Keep only entries whose cell offset is in ``offsets``."""
        wanted = {tuple(o) for o in offsets}
        return Stencil({k: c for k, c in self.entries.items() if (k[0], k[1]) in wanted})

    def _coef_values(self, key, box: Box):
        d1, d2, _, _ = key
        N = box.N
        i1, i2 = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
        j1, j2 = i1 + d1, i2 + d2
        if box.periodic:
            j1, j2 = j1 % N, j2 % N
            valid = np.ones_like(i1, dtype=bool)
        else:
            valid = (j1 >= 0) & (j1 < N) & (j2 >= 0) & (j2 < N)
        c = N // 2
        coef = self.entries[key]
        if callable(coef):
            vals = np.broadcast_to(coef(i1 - c, i2 - c, j1 - c, j2 - c), i1.shape)
        else:
            vals = np.full(i1.shape, coef, dtype=complex)
        return i1, i2, j1, j2, valid, np.asarray(vals, dtype=complex)

    def apply(self, f: np.ndarray, box: Box) -> np.ndarray:
        """Matrix-free action on a ``(2, N, N)`` field."""
        f = np.asarray(f)
        out = np.zeros(box.shape, dtype=complex)
        for key in self.entries:
            _, _, src, dst = key
            i1, i2, j1, j2, valid, vals = self._coef_values(key, box)
            shifted = np.zeros(i1.shape, dtype=complex)
            shifted[valid] = f[Tag(src).slot][j1[valid], j2[valid]]
            out[Tag(dst).slot] += vals * shifted
        return out

    def assemble(self, box: Box, hermitian_hint: bool = False) -> "AssembledOperator":
        N = box.N
        rows, cols, data = [], [], []
        for key in sorted(self.entries, key=_key_order):
            _, _, src, dst = key
            i1, i2, j1, j2, valid, vals = self._coef_values(key, box)
            rows.append(Tag(dst).slot * N * N + (i1 * N + i2)[valid])
            cols.append(Tag(src).slot * N * N + (j1 * N + j2)[valid])
            data.append(vals[valid])
        if rows:
            mat = sp.coo_matrix(
                (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                shape=(box.dim, box.dim),
            ).tocsr()
        else:
            mat = sp.csr_matrix((box.dim, box.dim), dtype=complex)
        mat.sum_duplicates()
        return AssembledOperator(box, mat, hermitian_hint)


def _key_order(key):
    d1, d2, src, dst = key
    return (int(dst), int(src), d1, d2)


def _sum_coef(a: Coef, b: Coef) -> Coef:
    if not callable(a) and not callable(b):
        return a + b
    fa = a if callable(a) else (lambda *args, v=a: v)
    fb = b if callable(b) else (lambda *args, v=b: v)
    return lambda *args: fa(*args) + fb(*args)


def _scale_coef(a: Coef, s: complex) -> Coef:
    if callable(a):
        return lambda *args: s * a(*args)
    return s * a


@dataclass(frozen=True)
class AssembledOperator:
    box: Box
    matrix: sp.csr_matrix
    hermitian_hint: bool = False

    def __matmul__(self, f):
        f = np.asarray(f)
        if f.shape == self.box.shape:
            return (self.matrix @ f.ravel()).reshape(self.box.shape)
        return self.matrix @ f

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def hermiticity_defect(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def norm_estimate(self) -> float:
        """Spectral norm by Lanczos on the Hermitian part (or on A*A otherwise)."""
        if self.box.dim <= 2:
            return float(np.linalg.norm(self.dense(), 2))
        if self.hermitian_hint:
            val = spla.eigsh(self.matrix, k=1, which="LM", return_eigenvectors=False)
            return float(abs(val[0]))
        return float(spla.svds(self.matrix, k=1, return_singular_vectors=False)[0])

    def triplets(self) -> np.ndarray:
        coo = self.matrix.tocoo()
        return np.column_stack([coo.row, coo.col, coo.data.real, coo.data.imag])

    def export_triplets(self, path) -> None:
        np.savetxt(path, self.triplets(), delimiter=",", header="row,col,re,im",
                   comments="", fmt=["%d", "%d", "%.17g", "%.17g"])


# ---------------------------------------------------------------------------
# fields


def _const(value):
    return lambda n1, n2, tag: np.full(np.shape(n1), value, dtype=float)


@dataclass(frozen=True)
class MetricField:
    """``m = 1 + eta`` on sites and ``E = 1 + eps`` on edges.

    ``eta(n1, n2, tag)`` and ``eps(a1, a2, atag, b1, b2, btag)`` are vectorised
    callables. ``eps`` must be symmetric in its two endpoints.
    """

    eta: Callable = field(default_factory=lambda: _const(0.0))
    eps: Callable = field(default_factory=lambda: (lambda a1, a2, at, b1, b2, bt: np.zeros(np.broadcast(a1, b1).shape)))

    @classmethod
    def trivial(cls) -> "MetricField":
        return cls()

    def m(self, n1, n2, tag):
        return 1.0 + np.asarray(self.eta(n1, n2, Tag(tag)), dtype=float)

    def E(self, a1, a2, atag, b1, b2, btag):
        return 1.0 + np.asarray(self.eps(a1, a2, Tag(atag), b1, b2, Tag(btag)), dtype=float)

    def scaled(self, theta: float) -> "MetricField":
        eta, eps = self.eta, self.eps
        return MetricField(
            lambda n1, n2, t: theta * np.asarray(eta(n1, n2, t)),
            lambda *args: theta * np.asarray(eps(*args)),
        )

    def m_field(self, box: Box) -> np.ndarray:
        n1, n2 = box.coords(centered=True)
        return np.stack([self.m(n1, n2, Tag.P1), self.m(n1, n2, Tag.P2)])


@dataclass(frozen=True)
class PotentialField:
    V: Callable = field(default_factory=lambda: _const(0.0))

    def values(self, box: Box) -> np.ndarray:
        n1, n2 = box.coords(centered=True)
        return np.stack([np.asarray(self.V(n1, n2, Tag.P1), dtype=float),
                         np.asarray(self.V(n1, n2, Tag.P2), dtype=float)])

    def scaled(self, theta: float) -> "PotentialField":
        V = self.V
        return PotentialField(lambda n1, n2, t: theta * np.asarray(V(n1, n2, t)))


# ---------------------------------------------------------------------------
# Laplacians


def _hopping(weight) -> Stencil:
    """Nearest-neighbour stencil with coefficient ``weight(dst, src, t1, t2, s1, s2)``."""
    entries = {}
    for dst in Tag:
        src = dst.other
        for d1, d2 in NEIGHBOR_OFFSETS[dst]:
            entries[(d1, d2, src, dst)] = (
                lambda t1, t2, s1, s2, dst=dst, src=src: weight(dst, src, t1, t2, s1, s2)
            )
    return Stencil(entries)


def laplacian_hex() -> Stencil:
    entries = {}
    for dst in Tag:
        for d1, d2 in NEIGHBOR_OFFSETS[dst]:
            entries[(d1, d2, dst.other, dst)] = 1.0 / 3.0
    return Stencil(entries)


def weighted_laplacian(mf: MetricField) -> Stencil:
    def w(dst, src, t1, t2, s1, s2):
        return mf.E(t1, t2, dst, s1, s2, src) / (3.0 * mf.m(t1, t2, dst))

    return _hopping(w)


def tilde_delta(mf: MetricField) -> Stencil:
    def w(dst, src, t1, t2, s1, s2):
        return mf.E(t1, t2, dst, s1, s2, src) / (
            3.0 * np.sqrt(mf.m(t1, t2, dst) * mf.m(s1, s2, src)))

    return _hopping(w)


@dataclass(frozen=True)
class Perturbation:
    """``D = Delta_H - tilde Delta`` split by hop: same cell, along e1, along e2."""

    L: Stencil
    T: Stencil
    S: Stencil

    @property
    def total(self) -> Stencil:
        return self.L + self.T + self.S

    def block(self, dst: Tag) -> Stencil:
        return Stencil({k: c for k, c in self.total.entries.items() if k[3] == dst})


def perturbation_Di(mf: MetricField) -> Perturbation:
    def w(dst, src, t1, t2, s1, s2):
        return (1.0 - mf.E(t1, t2, dst, s1, s2, src)
                / np.sqrt(mf.m(t1, t2, dst) * mf.m(s1, s2, src))) / 3.0

    D = _hopping(w)
    return Perturbation(
        D.restrict([(0, 0)]),
        D.restrict([(1, 0), (-1, 0)]),
        D.restrict([(0, 1), (0, -1)]),
    )


def row_norms(st: Stencil, box: Box) -> np.ndarray:
    """Euclidean norm of each assembled row, as a ``(2, N, N)`` array."""
    mat = st.assemble(box).matrix
    sq = np.asarray(abs(mat).power(2).sum(axis=1)).ravel()
    return np.sqrt(sq).reshape(box.shape)


@dataclass(frozen=True)
class GaugeTransform:
    """``T f = f / sqrt(m)``, unitary from weight 1 to weight ``m``."""

    m: np.ndarray

    def apply(self, f):
        return np.asarray(f) / np.sqrt(self.m)

    def inverse(self, f):
        return np.asarray(f) * np.sqrt(self.m)

    def matrix(self) -> sp.dia_matrix:
        return sp.diags(1.0 / np.sqrt(self.m.ravel()))

    def inverse_matrix(self) -> sp.dia_matrix:
        return sp.diags(np.sqrt(self.m.ravel()))


def gauge_transform(mf: MetricField, box: Box) -> GaugeTransform:
    m = mf.m_field(box)
    if np.min(m) <= 0:
        raise ValueError("metric m must be positive")
    return GaugeTransform(m)


def weighted_inner(f, g, m) -> complex:
    return complex(np.vdot(np.asarray(f).ravel(), (np.asarray(m) * np.asarray(g)).ravel()))


def potential_stencil(V: PotentialField) -> Stencil:
    return Stencil({(0, 0, t, t): (lambda t1, t2, s1, s2, t=t: V.V(t1, t2, t)) for t in Tag})


def hamiltonian(mf: MetricField, V: Optional[PotentialField], box: Box) -> AssembledOperator:
    """Gauge-fixed Hamiltonian ``tilde Delta + V`` on the weight-1 space."""
    H = tilde_delta(mf).assemble(box).matrix
    if V is not None:
        H = H + sp.diags(V.values(box).ravel().astype(complex))
    return AssembledOperator(box, sp.csr_matrix(H), hermitian_hint=True)
