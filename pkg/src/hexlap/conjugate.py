"""The conjugate operator on the torus and on the lattice.

Torus side::

    A_hat g = (i/2) (V . grad g + div(V g)),      V = grad beta^(5/2),

and ``A_F = P diag(A_hat, -A_hat) P^-1`` which works out to
``[[0, A_hat(conj(u) .)], [u A_hat, 0]]`` with ``u = c / sqrt(beta)``.

Lattice side, ``A_H = [[0, A_2], [A_1, 0]]`` with ``A_2 = A_1^*``. Writing
``c = 1 + U1^* + U2^*`` for the shift polynomial behind ``1 + e^{ix1} + e^{ix2}``,

    A_1 = (5i/2) (X1 Q1 + X2 Q2) - (5i/8) R,

with ``X_k = c^2 conj(c) W_k`` and ``R`` the bracket of the ``Q``-free term.
The position operators ``Q_k`` act before the shifts, which is what the
Fourier picture forces (``d/dx_k`` corresponds to ``-i Q_k``).

Shift polynomials are dicts ``{(i, j): coefficient}`` standing for
``sum a_ij U1^i U2^j`` with ``U1^-1 = U1^*``; ``(U1 f)(n) = f(n1 - 1, n2)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .lattice import Box
from .symbol import TOL_DIRAC, beta, c_factor, grad_beta, laplacian_beta, momentum_grid

TABLE_KEYS = ((0, 0), (1, 0), (0, 1), (1, 1))
PREFACTOR = {(0, 0): -5j / 8, (1, 0): 5j / 2, (0, 1): 5j / 2, (1, 1): 5j / 2}

# ---------------------------------------------------------------------------
# shift-polynomial algebra over Z[U1^{+-1}, U2^{+-1}]


def poly(*terms) -> dict:
    """Build a polynomial from ``(coef, i, j)`` triples."""
    out: dict = {}
    for coef, i, j in terms:
        out[(i, j)] = out.get((i, j), 0) + coef
    return _clean(out)


def _clean(p: dict) -> dict:
    return {k: v for k, v in p.items() if v != 0}


def padd(*ps) -> dict:
    out: dict = {}
    for p in ps:
        for k, v in p.items():
            out[k] = out.get(k, 0) + v
    return _clean(out)


def pscale(p: dict, s) -> dict:
    return _clean({k: s * v for k, v in p.items()})


def pmul(*ps) -> dict:
    out = {(0, 0): 1}
    for p in ps:
        nxt: dict = {}
        for (a, b), u in out.items():
            for (c, d), v in p.items():
                nxt[(a + c, b + d)] = nxt.get((a + c, b + d), 0) + u * v
        out = _clean(nxt)
    return out


def padjoint(p: dict) -> dict:
    return {(-i, -j): np.conj(v) if isinstance(v, complex) else v for (i, j), v in p.items()}


ONE = poly((1, 0, 0))
U1, U2 = poly((1, 1, 0)), poly((1, 0, 1))
U1s, U2s = poly((1, -1, 0)), poly((1, 0, -1))


def long_form() -> dict:
    """Integer bracket polynomials of the long form of ``A_1``.

    Keys: ``'Q1'`` and ``'Q2'`` (coefficients of the position operators, to
    be multiplied by 5i/2) and ``'R'`` (the Q-free bracket, multiplied by
    -5i/8).
    """
    c = padd(ONE, U1s, U2s)
    cbar = padd(ONE, U1, U2)
    ccc = pmul(c, c, cbar)
    D = padd(pmul(U1s, U2), pscale(pmul(U1, U2s), -1))
    d1 = padd(U1s, pscale(U1, -1))
    d2 = padd(U2s, pscale(U2, -1))
    W1 = padd(d1, D)
    W2 = padd(d2, pscale(D, -1))
    B1 = padd(pmul(d1, d1), pmul(d2, d2), pscale(pmul(D, D), 2),
              pscale(pmul(D, padd(d1, pscale(d2, -1))), 2))
    B2 = padd(U1s, U1, U2s, U2, pscale(padd(pmul(U1s, U2), pmul(U1, U2s)), 2))
    return {
        "Q1": pmul(ccc, W1),
        "Q2": pmul(ccc, W2),
        "R": padd(pscale(pmul(c, B1), 3), pscale(pmul(ccc, B2), 2)),
    }


# ---------------------------------------------------------------------------
# coefficient tables


class MismatchError(AssertionError):
    def __init__(self, key, ij, expected, found, label=""):
        self.key, self.ij, self.expected, self.found = key, ij, expected, found
        l1, l2 = key
        what = f" ({label})" if label else ""
        super().__init__(
            f"alpha mismatch at (l1,l2,i,j)=({l1},{l2},{ij[0]},{ij[1]}){what}: "
            f"expansion gives {expected}, table has {found}")


@dataclass(frozen=True)
class CoeffTable:
    """Four integer tables ``alpha[(l1, l2)][(i, j)]`` plus their prefactors."""

    alpha: dict

    def __getitem__(self, key) -> dict:
        return self.alpha[key]

    @property
    def prefactor(self) -> dict:
        return dict(PREFACTOR)

    def support(self, key) -> set:
        return {ij for ij, v in self.alpha[key].items() if v != 0}

    def value(self, key, ij) -> int:
        return self.alpha[key].get(ij, 0)

    def mutated(self, key, ij, delta: int) -> "CoeffTable":
        tables = {k: dict(v) for k, v in self.alpha.items()}
        tables[key][ij] = tables[key].get(ij, 0) + delta
        tables[key] = _clean(tables[key])
        return CoeffTable(tables)

    def rows(self):
        for key in TABLE_KEYS:
            for ij in sorted(self.alpha[key]):
                yield (*key, *ij, self.alpha[key][ij])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["l1", "l2", "i", "j", "alpha"])
            w.writerows(self.rows())

    @classmethod
    def from_csv(cls, path_or_file) -> "CoeffTable":
        tables = {k: {} for k in TABLE_KEYS}
        fh = open(path_or_file) if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__") else path_or_file
        with fh:
            for row in csv.DictReader(fh):
                key = (int(row["l1"]), int(row["l2"]))
                tables[key][(int(row["i"]), int(row["j"]))] = int(row["alpha"])
        return cls(tables)


def alpha_tables() -> CoeffTable:
    """The four coefficient tables as printed (golden data)."""
    ref = resources.files("hexlap") / "data" / "alpha_tables.csv"
    with ref.open() as fh:
        return CoeffTable.from_csv(fh)


def expansion_checks(table: CoeffTable) -> list:
    """Pairs ``(label, key, expected poly, table poly)`` compared by :func:`verify_alpha`.

    The long form fixes the Q-free part and the two Q coefficients. In the
    tabulated decomposition the Q1 coefficient is ``alpha^{1,0} + alpha^{1,1}``
    and the Q2 coefficient is ``alpha^{0,1} - alpha^{1,1}``.
    """
    lf = long_form()
    a = table.alpha
    return [
        ("Q-free part", (0, 0), lf["R"], dict(a[(0, 0)])),
        ("Q1 coefficient", (1, 0), lf["Q1"], padd(a[(1, 0)], a[(1, 1)])),
        ("Q2 coefficient", (0, 1), lf["Q2"], padd(a[(0, 1)], pscale(a[(1, 1)], -1))),
    ]


def alpha_mismatches(table: CoeffTable) -> list[MismatchError]:
    out = []
    for label, key, want, have in expansion_checks(table):
        for ij in sorted(set(want) | set(have)):
            if want.get(ij, 0) != have.get(ij, 0):
                out.append(MismatchError(key, ij, want.get(ij, 0), have.get(ij, 0), label))
    return out


def verify_alpha(table: Optional[CoeffTable] = None) -> None:
    """Raise :class:`MismatchError` at the first disagreement with the long form."""
    bad = alpha_mismatches(table or alpha_tables())
    if bad:
        raise bad[0]


# ---------------------------------------------------------------------------
# lattice side


class SupportError(ValueError):
    pass


MARGIN = 3


def operator_polys(source: str = "long_form", table: Optional[CoeffTable] = None) -> dict:
    """Complex shift polynomials ``{'R': ..., 'Q1': ..., 'Q2': ...}`` of ``A_1``.

    ``source='long_form'`` expands the closed-form products. ``source='table'``
    assembles the same three pieces from the printed alpha lists, which is
    useful for seeing the effect of the tables on the operator.
    """
    if source == "long_form":
        lf = long_form()
        R, X1, X2 = lf["R"], lf["Q1"], lf["Q2"]
    elif source == "table":
        a = (table or alpha_tables()).alpha
        R = a[(0, 0)]
        X1 = padd(a[(1, 0)], a[(1, 1)])
        X2 = padd(a[(0, 1)], pscale(a[(1, 1)], -1))
    else:
        raise ValueError(f"unknown source {source!r}")
    return {
        "R": pscale(R, PREFACTOR[(0, 0)]),
        "Q1": pscale(X1, PREFACTOR[(1, 0)]),
        "Q2": pscale(X2, PREFACTOR[(1, 0)]),
    }


def shift_matrix(p: dict, box: Box) -> sp.csr_matrix:
    """Shift polynomial on one sublattice of a Dirichlet (or periodic) box."""
    N = box.N
    n = N * N
    i1, i2 = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    rows, cols, vals = [], [], []
    for (a, b), v in sorted(p.items()):
        j1, j2 = i1 - a, i2 - b  # (U1^a U2^b f)(n) = f(n1 - a, n2 - b)
        if box.periodic:
            j1, j2 = j1 % N, j2 % N
            ok = np.ones_like(i1, dtype=bool)
        else:
            ok = (j1 >= 0) & (j1 < N) & (j2 >= 0) & (j2 < N)
        rows.append((i1 * N + i2)[ok])
        cols.append((j1 * N + j2)[ok])
        vals.append(np.full(ok.sum(), v, dtype=complex))
    m = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    m.sum_duplicates()
    return m


def position_diag(box: Box) -> tuple[sp.dia_matrix, sp.dia_matrix]:
    n1, n2 = box.coords(centered=True)
    return sp.diags(n1.ravel().astype(float)), sp.diags(n2.ravel().astype(float))


def a1_matrix(box: Box, source: str = "long_form", table: Optional[CoeffTable] = None) -> sp.csr_matrix:
    """``A_1`` (P1 -> P2 block) truncated to the box; ``Q`` acts first."""
    P = operator_polys(source, table)
    Q1, Q2 = position_diag(box)
    A = (shift_matrix(P["R"], box)
         + shift_matrix(P["Q1"], box) @ Q1
         + shift_matrix(P["Q2"], box) @ Q2)
    return sp.csr_matrix(A)


def a2_matrix(box: Box, source: str = "long_form", table: Optional[CoeffTable] = None) -> sp.csr_matrix:
    """``A_2`` (P2 -> P1 block) built from the adjoint shift polynomials, ``Q`` acting last.

    Independent of :func:`a1_matrix` apart from the polynomials, so the
    pairing against ``A_1`` is a genuine check on interior data.
    """
    P = {k: padjoint(v) for k, v in operator_polys(source, table).items()}
    Q1, Q2 = position_diag(box)
    A = (shift_matrix(P["R"], box)
         + Q1 @ shift_matrix(P["Q1"], box)
         + Q2 @ shift_matrix(P["Q2"], box))
    return sp.csr_matrix(A)


def adjointness_defect(box: Box, trials: int = 5, seed: int = 0, source: str = "long_form") -> float:
    """Largest relative gap between ``<f2, A_1 g1>`` and ``<A_2 f2, g1>`` on interior data."""
    rng = np.random.default_rng(seed)
    A1, A2 = a1_matrix(box, source), a2_matrix(box, source)
    mask = interior_mask(box)[0].ravel()
    worst = 0.0
    for _ in range(trials):
        f2, g1 = (np.where(mask, rng.normal(size=mask.size) + 1j * rng.normal(size=mask.size), 0)
                  for _ in range(2))
        lhs, rhs = np.vdot(f2, A1 @ g1), np.vdot(A2 @ f2, g1)
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-300))
    return float(worst)


def intertwining_defect(box: Box, M: int = 64, seed: int = 0, source: str = "long_form") -> float:
    """Relative sup-gap between ``F(A_H f)`` and ``A_F (F f)`` for random data near the centre."""
    rng = np.random.default_rng(seed)
    c, r = box.N // 2, 3
    if c - r <= MARGIN:
        raise ValueError("box too small for the test support")
    f = np.zeros(box.shape, dtype=complex)
    f[:, c - r:c + r + 1, c - r:c + r + 1] = (rng.normal(size=(2, 2 * r + 1, 2 * r + 1))
                                             + 1j * rng.normal(size=(2, 2 * r + 1, 2 * r + 1)))
    X1, X2 = momentum_grid(M)
    lhs = fourier_transform(conjugate_position_apply(f, box, source), box, X1, X2)
    g = fourier_transform(f, box, X1, X2)
    rhs = np.stack(A_F_apply(g[0], g[1], X1, X2))
    return float(np.abs(lhs - rhs).max() / np.abs(rhs).max())


def conjugate_matrix(box: Box, source: str = "long_form", table: Optional[CoeffTable] = None) -> sp.csr_matrix:
    """``A_H = [[0, A_1^*], [A_1, 0]]`` on the flat layout of ``box``."""
    if box.periodic:
        raise ValueError("the position operator needs a Dirichlet box")
    A1 = a1_matrix(box, source, table)
    return sp.csr_matrix(sp.bmat([[None, A1.conj().T], [A1, None]]))


def interior_mask(box: Box, margin: int = MARGIN) -> np.ndarray:
    """Boolean ``(2, N, N)`` mask of sites at distance > ``margin`` from the edge."""
    N = box.N
    r = np.arange(N)
    inside = (r >= margin) & (r < N - margin)
    m = inside[:, None] & inside[None, :]
    return np.stack([m, m])


def conjugate_position_apply(f: np.ndarray, box: Box, source: str = "long_form") -> np.ndarray:
    """Apply ``A_H`` to a field supported away from the Dirichlet edge.

    The output P2 component is ``A_1 f_1`` and the P1 component is ``A_2 f_2``.
    """
    f = np.asarray(f)
    if box.periodic:
        raise ValueError("the position operator needs a Dirichlet box")
    if np.any(f[~interior_mask(box)] != 0):
        raise SupportError(f"field touches the {MARGIN}-cell boundary margin")
    A = conjugate_matrix(box, source)
    return (A @ f.ravel()).reshape(box.shape)


def weight(n1, n2):
    """``Lambda(n) = <n1> + <n2>`` with ``<x> = sqrt(1/2 + x^2)``."""
    return np.sqrt(0.5 + np.asarray(n1, float) ** 2) + np.sqrt(0.5 + np.asarray(n2, float) ** 2)


def weight_field(box: Box, s: float = 1.0) -> np.ndarray:
    n1, n2 = box.coords(centered=True)
    w = weight(n1, n2) ** s
    return np.stack([w, w])


def weight_apply(s: float, f: np.ndarray, box: Box) -> np.ndarray:
    return weight_field(box, s) * np.asarray(f)


# ---------------------------------------------------------------------------
# torus side


def spectral_grad(g: np.ndarray) -> np.ndarray:
    """Spectral gradient of samples on the grid ``-pi + 2 pi m / M``."""
    M = g.shape[0]
    k = np.fft.fftfreq(M, d=1.0 / M)
    if M % 2 == 0:
        k[M // 2] = 0.0  # drop the unresolved Nyquist mode
    G = np.fft.fft2(g)
    d1 = np.fft.ifft2(1j * k[:, None] * G)
    d2 = np.fft.ifft2(1j * k[None, :] * G)
    return np.stack([d1, d2])


def field_V(x1, x2) -> np.ndarray:
    """``V = grad beta^(5/2) = (5/2) beta^(3/2) grad beta``."""
    b = np.maximum(beta(x1, x2), 0.0)
    return 2.5 * b**1.5 * grad_beta(x1, x2)


def div_V(x1, x2) -> np.ndarray:
    b = np.maximum(beta(x1, x2), 0.0)
    g = grad_beta(x1, x2)
    return 3.75 * np.sqrt(b) * (g**2).sum(0) + 2.5 * b**1.5 * laplacian_beta(x1, x2)


def hat_A_apply(g: np.ndarray, x1, x2, grad: Optional[np.ndarray] = None) -> np.ndarray:
    """``A_hat g = i V . grad g + (i/2) div V g``.

    ``grad`` may be supplied for functions that are not smooth enough for
    spectral differentiation (products with ``sqrt(beta)`` or ``u``).
    """
    if grad is None:
        grad = spectral_grad(g)
    V = field_V(x1, x2)
    return 1j * (V * grad).sum(0) + 0.5j * div_V(x1, x2) * g


def hat_A_display(g: np.ndarray, x1, x2) -> np.ndarray:
    """Closed form with the multiplicative part doubled, as it is sometimes
    written; differs from :func:`hat_A_apply` by ``(i/2) div V g``."""
    return hat_A_apply(g, x1, x2) + 0.5j * div_V(x1, x2) * g


def u_factor(x1, x2) -> np.ndarray:
    """``u = c / sqrt(beta)``, set to 0 at zeros of beta."""
    b = beta(x1, x2)
    c = c_factor(x1, x2)
    safe = np.where(b > TOL_DIRAC, b, 1.0)
    return np.where(b > TOL_DIRAC, c / np.sqrt(safe), 0.0)


def V_dot_grad_u(x1, x2) -> np.ndarray:
    """``V . grad u`` in the smooth form ``(5/2)(beta grad beta . grad c - c |grad beta|^2 / 2)``."""
    gb = grad_beta(x1, x2)
    gc = np.stack([1j * np.exp(1j * np.asarray(x1)), 1j * np.exp(1j * np.asarray(x2))])
    c = c_factor(x1, x2)
    b = beta(x1, x2)
    return 2.5 * (b * (gb * gc).sum(0) - 0.5 * c * (gb**2).sum(0))


def A_F_apply(g1: np.ndarray, g2: np.ndarray, x1, x2) -> tuple[np.ndarray, np.ndarray]:
    """``A_F (g1, g2) = (A_hat(conj(u) g2), u A_hat g1)``; zero at Dirac points."""
    u = u_factor(x1, x2)
    out2 = u * hat_A_apply(g1, x1, x2)
    grad_ubar_g2 = np.conj(V_dot_grad_u(x1, x2)) * g2
    V = field_V(x1, x2)
    h = np.conj(u) * g2
    out1 = 1j * (grad_ubar_g2 + np.conj(u) * (V * spectral_grad(g2)).sum(0)) + 0.5j * div_V(x1, x2) * h
    dirac = beta(x1, x2) <= TOL_DIRAC
    out1 = np.where(dirac, 0.0, out1)
    out2 = np.where(dirac, 0.0, out2)
    return out1, out2


def fourier_transform(f: np.ndarray, box: Box, x1, x2) -> np.ndarray:
    """``(1/2pi) sum_n f(n) exp(-i n.x)`` per sublattice, with centred labels."""
    n1, n2 = box.coords(centered=True)
    out = []
    for comp in np.asarray(f):
        nz = np.nonzero(comp)
        vals = comp[nz]
        a, b = n1[nz], n2[nz]
        phase = np.exp(-1j * (np.multiply.outer(np.ravel(x1), a) + np.multiply.outer(np.ravel(x2), b)))
        out.append((phase @ vals).reshape(np.shape(x1)) / (2 * np.pi))
    return np.stack(out)
