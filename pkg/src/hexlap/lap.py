"""Limiting absorption probes: weighted resolvents, Chebyshev propagation,
propagation integrals and pointwise decay on Dirichlet boxes."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import jv

from .conjugate import weight_field
from .lattice import Box, Site, Tag
from .operators import AssembledOperator
from .symbol import grad_sqrt_beta, momentum_grid

RESIDUAL_TOL = 1e-10
SVD_TOL = 1e-4
FLOOR_CONSTANT = 4.0
RHO_MIN = 1e-3
# a curve "levels off" when its local log-log slope falls to this value
PLATEAU_SLOPE = 0.1
OUTLIER_DELTA = 0.05
EIGENVALUE_MARGIN = 0.02
SATURATION_FRACTION = 0.05
CHEB_PAD = 40
CHEB_TAIL = 1e-16
DECAY_THRESHOLD = 0.2


class SolverStall(RuntimeError):
    """The requested residual was not reached."""


def _csc(H) -> sp.csc_matrix:
    M = H.matrix if isinstance(H, AssembledOperator) else H
    return sp.csc_matrix(M, dtype=complex)


def _box(H) -> Optional[Box]:
    return H.box if isinstance(H, AssembledOperator) else None


class ShiftedSolver:
    """Sparse LU of ``H - z`` with a residual check on every solve."""

    def __init__(self, H, z: complex):
        if complex(z).imag == 0 and not _off_spectrum(H, z):
            raise ValueError("real z must lie outside the spectrum")
        self.M = _csc(H) - complex(z) * sp.identity(_csc(H).shape[0], format="csc", dtype=complex)
        self.lu = spla.splu(self.M)

    def solve(self, rhs, adjoint: bool = False) -> np.ndarray:
        b = np.ravel(np.asarray(rhs, dtype=complex))
        x = self.lu.solve(b, trans="H" if adjoint else "N")
        A = self.M.conj().T if adjoint else self.M
        nb = np.linalg.norm(b)
        for _ in range(3):
            r = b - A @ x
            if np.linalg.norm(r) <= RESIDUAL_TOL * nb:
                return x
            x = x + self.lu.solve(r, trans="H" if adjoint else "N")
        raise SolverStall(f"relative residual {np.linalg.norm(b - A @ x) / nb:.2e}")


def _off_spectrum(H, z) -> bool:
    return abs(complex(z).real) > gershgorin_bound(H)


def gershgorin_bound(H) -> float:
    M = _csc(H)
    return float(abs(M).sum(axis=1).max())


def resolvent_solve(H, z: complex, rhs) -> np.ndarray:
    """``(H - z)^{-1} rhs`` with relative residual at most ``1e-10``.

    Real ``z`` is accepted only outside the Gershgorin disc of ``H``.
    """
    shape = np.shape(rhs)
    return ShiftedSolver(H, z).solve(rhs).reshape(shape)


def weighted_resolvent_norm(H, lam: float, rho: float, s: float, box: Optional[Box] = None) -> float:
    """Largest singular value of ``Lambda^{-s} (H - lam - i rho)^{-1} Lambda^{-s}``."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    if s <= 0.5:
        raise ValueError("s must exceed 1/2")
    box = box or _box(H)
    w = weight_field(box, -s).ravel()
    solver = ShiftedSolver(H, lam + 1j * rho)
    n = w.size
    op = spla.LinearOperator(
        (n, n), dtype=complex,
        matvec=lambda x: w * solver.solve(w * np.ravel(x)),
        rmatvec=lambda x: w * solver.solve(w * np.ravel(x), adjoint=True))
    return float(spla.svds(op, k=1, tol=SVD_TOL, return_singular_vectors=False, random_state=0)[0])


def rho_floor(N: int) -> float:
    return max(RHO_MIN, FLOOR_CONSTANT / N)


def rho_grid(N: int, points: int = 6, start: float = 0.1) -> np.ndarray:
    """Log-spaced ``rho`` from ``start`` down to the finite-size floor."""
    return np.logspace(math.log10(start), math.log10(rho_floor(N)), points)


def local_slope(rhos, norms) -> float:
    """``-d log(norm) / d log(rho)`` over the last segment of the sweep."""
    r, v = np.log(np.asarray(rhos[-2:])), np.log(np.asarray(norms[-2:]))
    return float(-(v[1] - v[0]) / (r[1] - r[0]))


@dataclass
class ResolventCurve:
    lam: float
    s: float
    rhos: list
    norms: list
    plateau_flag: bool
    slope: float
    N: int = 0

    def __post_init__(self):
        if np.any(np.diff(self.rhos) >= 0):
            raise ValueError("rho values must strictly decrease")
        if min(self.norms) <= 0:
            raise ValueError("norms must be positive")

    def rows(self) -> list[dict]:
        return [{"lambda": self.lam, "s": self.s, "rho": r, "norm": v}
                for r, v in zip(self.rhos, self.norms)]

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("rhos"), d.pop("norms")
        return d


def rho_sweep(H, lam: float, s: float, rhos: Optional[Sequence[float]] = None,
              box: Optional[Box] = None, jobs: int = 1) -> ResolventCurve:
    box = box or _box(H)
    rhos = [float(r) for r in (rhos if rhos is not None else rho_grid(box.N))]
    floor = rho_floor(box.N)
    rhos = [r for r in rhos if r >= floor * (1 - 1e-12)]
    if len(rhos) < 2:
        raise ValueError("need at least two rho values above the floor")
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as ex:
        norms = list(ex.map(lambda r: weighted_resolvent_norm(H, lam, r, s, box), rhos))
    slope = local_slope(rhos, norms)
    return ResolventCurve(lam, s, rhos, norms, bool(slope <= PLATEAU_SLOPE), slope, box.N)


def lap_contrast(H, bulk=(0.5, 0.6, 0.7), threshold=(1 / 3 - 0.01, 1 / 3 + 0.01), s: float = 0.6,
                 rhos=None, jobs: int = 1) -> dict:
    """Plateau flags for bulk energies against energies next to the threshold 1/3."""
    curves = {"bulk": [rho_sweep(H, l, s, rhos, jobs=jobs) for l in bulk],
              "threshold": [rho_sweep(H, l, s, rhos, jobs=jobs) for l in threshold]}
    curves["contrast"] = (all(c.plateau_flag for c in curves["bulk"])
                          and not any(c.plateau_flag for c in curves["threshold"]))
    return curves


def curves_to_csv(curves: Sequence[ResolventCurve]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, ["lambda", "s", "rho", "norm"], lineterminator="\n")
    w.writeheader()
    for c in curves:
        for row in c.rows():
            w.writerow({k: repr(float(v)) for k, v in row.items()})
    return buf.getvalue()


# ---------------------------------------------------------------------------
# discrete spectrum outside the band


def outlier_eigenvalues(H, delta: float = OUTLIER_DELTA) -> np.ndarray:
    M = H.dense() if isinstance(H, AssembledOperator) else np.asarray(sp.csr_matrix(H).toarray())
    w = np.linalg.eigvalsh(M)
    return w[np.abs(w) > 1 + delta]


def outlier_count(H, delta: float = OUTLIER_DELTA) -> int:
    return int(outlier_eigenvalues(H, delta).size)


def avoid_eigenvalues(lams, eigenvalues, margin: float = EIGENVALUE_MARGIN) -> list[float]:
    ev = np.asarray(eigenvalues, float)
    return [float(l) for l in lams if ev.size == 0 or np.min(np.abs(ev - l)) >= margin]


# ---------------------------------------------------------------------------
# Chebyshev propagation


def spectral_bound(H) -> float:
    """Upper bound on ``||H||``: Lanczos estimate with a small margin, capped by Gershgorin."""
    g = gershgorin_bound(H)
    M = _csc(H)
    if M.shape[0] <= 64:
        return min(g, float(np.abs(np.linalg.eigvalsh(M.toarray())).max()) * (1 + 1e-3) + 1e-12)
    val = spla.eigsh(M, k=1, which="LM", return_eigenvectors=False, tol=1e-8, v0=np.ones(M.shape[0]))
    return min(g, float(abs(val[0])) * (1 + 1e-3))


def chebyshev_degree(bound: float, t: float) -> int:
    return math.ceil(1.1 * bound * abs(t)) + CHEB_PAD


def _cheb_coeffs(x: float, degree: int) -> np.ndarray:
    k = np.arange(degree + 1)
    c = 2.0 * (-1j) ** k * jv(k, x)
    c[0] /= 2
    return c


def evolve(H, f, t: float, bound: Optional[float] = None) -> np.ndarray:
    """``exp(-i t H) f`` by a Chebyshev series on ``[-bound, bound]``."""
    f = np.asarray(f, dtype=complex)
    if t == 0:
        return f.copy()
    M = sp.csr_matrix(_csc(H))
    a = bound if bound is not None else spectral_bound(H)
    deg = chebyshev_degree(a, t)
    c = _cheb_coeffs(a * t, deg)
    while np.abs(c[-3:]).max() > CHEB_TAIL:
        deg += CHEB_PAD
        c = _cheb_coeffs(a * t, deg)
    v0 = f.ravel()
    v1 = (M @ v0) / a
    out = c[0] * v0 + c[1] * v1
    for k in range(2, deg + 1):
        v0, v1 = v1, 2 * (M @ v1) / a - v0
        out += c[k] * v1
    return out.reshape(f.shape)


def unitarity_defect(H, f, t: float) -> float:
    return abs(np.linalg.norm(evolve(H, f, t)) / np.linalg.norm(f) - 1)


def _jackson(deg: int) -> np.ndarray:
    k = np.arange(deg + 1)
    q = np.pi / (deg + 2)
    return ((deg + 2 - k) * np.cos(k * q) + np.sin(k * q) / np.tan(q)) / (deg + 2)


def chebyshev_projection(H, interval, f, degree: int = 600, bound: Optional[float] = None) -> np.ndarray:
    """Jackson-damped Chebyshev approximation of ``E_I(H) f``.

    The damping keeps the filter between 0 and 1 and smears the edges of
    ``I`` over a width of order ``pi bound / degree``.
    """
    a = bound if bound is not None else spectral_bound(H)
    lo, hi = (float(interval[0]) / a, float(interval[1]) / a)
    ta, tb = np.arccos(np.clip([lo, hi], -1, 1))
    k = np.arange(1, degree + 1)
    mu = np.empty(degree + 1)
    mu[0] = (ta - tb) / np.pi
    mu[1:] = 2 * (np.sin(k * ta) - np.sin(k * tb)) / (np.pi * k)
    mu *= _jackson(degree)
    M = sp.csr_matrix(_csc(H))
    f = np.asarray(f, dtype=complex)
    v0 = f.ravel()
    v1 = (M @ v0) / a
    out = mu[0] * v0 + mu[1] * v1
    for j in range(2, degree + 1):
        v0, v1 = v1, 2 * (M @ v1) / a - v0
        out += mu[j] * v1
    return out.reshape(f.shape)


def dense_projection(H, interval, f) -> np.ndarray:
    w, V = np.linalg.eigh(_csc(H).toarray())
    S = V[:, (w >= interval[0]) & (w <= interval[1])]
    f = np.asarray(f, dtype=complex)
    return (S @ (S.conj().T @ f.ravel())).reshape(f.shape)


# ---------------------------------------------------------------------------
# propagation integral


def max_group_velocity(M: int = 512) -> float:
    """Largest cell-coordinate component of the band group velocity ``grad sqrt(beta) / 3``."""
    X1, X2 = momentum_grid(M)
    g = grad_sqrt_beta(X1, X2)
    return float(np.nanmax(np.abs(g)) / 3)


def return_time(box: Box) -> float:
    """Time for the fastest wavefront to travel from the centre to the wall and back.

    The front was watched directly on ``N = 96``: edge mass rises sharply
    between ``t = 120`` and ``t = 150``, matching ``N / (2 v_max) = 144``.
    """
    return box.N / max_group_velocity()


@dataclass
class PropagationRecord:
    interval: list
    horizon: float
    checkpoints: list
    partials: list
    saturation_flag: bool
    tail_fraction: float
    window: float
    s: float = 0.6
    norm_defect: float = 0.0

    def __post_init__(self):
        if np.any(np.diff(self.partials) < -1e-14):
            raise ValueError("partial integrals must be non-decreasing")

    def at(self, T: float) -> float:
        return float(np.interp(T, self.checkpoints, self.partials))

    def rows(self) -> list[dict]:
        return [{"T": T, "integral": v} for T, v in zip(self.checkpoints, self.partials)]

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("checkpoints"), d.pop("partials")
        return d


def propagation_integral(H, interval, f, s: float, T: float, dt: float,
                         box: Optional[Box] = None, projector: str = "chebyshev",
                         window: Optional[float] = None) -> PropagationRecord:
    """Trapezoidal ``int_0^T ||Lambda^{-s} exp(-itH) E_I f||^2 dt``.

    ``window`` (default: the boundary-return time, capped at ``T``) is the
    horizon on which saturation is judged; beyond it reflected waves are a
    finite-volume artefact.
    """
    box = box or _box(H)
    f = np.asarray(f, dtype=complex)
    g = chebyshev_projection(H, interval, f) if projector == "chebyshev" else dense_projection(H, interval, f)
    w = weight_field(box, -s).reshape(f.shape)
    bound = spectral_bound(H)
    steps = int(round(T / dt))
    ts = np.arange(steps + 1) * dt
    dens = np.empty(steps + 1)
    psi = g
    n0 = np.linalg.norm(g)
    defect = 0.0
    for k in range(steps + 1):
        if k:
            psi = evolve(H, psi, dt, bound)
        dens[k] = np.linalg.norm(w * psi) ** 2
        if n0 > 0:
            defect = max(defect, abs(np.linalg.norm(psi) / n0 - 1))
    partials = np.concatenate([[0.0], np.cumsum(0.5 * dt * (dens[1:] + dens[:-1]))])
    win = min(T, window if window is not None else return_time(box))
    total = float(np.interp(win, ts, partials))
    early = float(np.interp(0.75 * win, ts, partials))
    tail = (total - early) / total if total > 0 else 0.0
    return PropagationRecord([float(interval[0]), float(interval[1])], float(T), ts.tolist(),
                             partials.tolist(), bool(tail < SATURATION_FRACTION), float(tail),
                             float(win), float(s), float(defect))


def records_to_csv(rec: PropagationRecord) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, ["T", "integral"], lineterminator="\n")
    w.writeheader()
    for row in rec.rows():
        w.writerow({k: repr(float(v)) for k, v in row.items()})
    return buf.getvalue()


# ---------------------------------------------------------------------------
# pointwise decay


@dataclass
class DecayTrace:
    site: tuple
    times: list
    values: list
    early_max: float
    late_max: float
    decays: bool

    def rows(self) -> list[dict]:
        return [{"t": t, "amplitude": v} for t, v in zip(self.times, self.values)]


def pointwise_decay(H, f, site: Site, times: Sequence[float], box: Optional[Box] = None,
                    early: float = 0.25, threshold: float = DECAY_THRESHOLD) -> DecayTrace:
    """``|exp(-itH) f (site)|`` on ``times`` (uniform, sorted).

    The early window is the first ``early`` fraction of the samples and the
    late window the last quarter; ``decays`` asks for the late maximum to
    be below ``threshold`` times the initial amplitude.
    """
    box = box or _box(H)
    f = np.asarray(f, dtype=complex)
    times = np.asarray(times, float)
    idx = box.index(site)
    bound = spectral_bound(H)
    vals = np.empty(times.size)
    psi = evolve(H, f, times[0], bound)
    vals[0] = abs(psi.ravel()[idx])
    for k in range(1, times.size):
        psi = evolve(H, psi, times[k] - times[k - 1], bound)
        vals[k] = abs(psi.ravel()[idx])
    n = times.size
    e = float(vals[: max(1, int(early * n))].max())
    l = float(vals[-max(1, n // 4):].max())
    ref = abs(f.ravel()[idx])
    return DecayTrace(tuple(site), times.tolist(), vals.tolist(), e, l, bool(l < threshold * ref))


def time_reversal_defect(H, f, site: Site, times: Sequence[float], box: Optional[Box] = None) -> float:
    """``max_t | |exp(-itH) f (site)| - |exp(itH) conj(f) (site)| |``."""
    box = box or _box(H)
    idx = box.index(site)
    f = np.asarray(f, dtype=complex)
    bound = spectral_bound(H)
    out = 0.0
    for t in times:
        a = evolve(H, f, t, bound).ravel()[idx]
        b = evolve(H, np.conj(f), -t, bound).ravel()[idx]
        out = max(out, abs(abs(a) - abs(b)), abs(a - np.conj(b)))
    return float(out)


def centre(box: Box, tag: Tag = Tag.P1) -> Site:
    return Site(box.N // 2, box.N // 2, tag)


def localized_state(box: Box, site: Site = None, width: float = 0.0) -> np.ndarray:
    """Delta at ``site`` (default: the centre cell, P1) or a normalized Gaussian of the given width."""
    site = site or centre(box)
    if width <= 0:
        return box.delta(site)
    n1, n2 = box.coords()
    g = np.exp(-((n1 - site.n1) ** 2 + (n2 - site.n2) ** 2) / (2 * width**2))
    f = np.stack([g, g]).astype(complex)
    return f / np.linalg.norm(f)


def summary_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)
