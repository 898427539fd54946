"""Windowed checks of the decay hypotheses on eta, eps and V.

A function ``G`` of ``k`` sites is passed as a callable taking a tuple of
``k`` triples ``(n1, n2, tag)`` with array-valued coordinates and a scalar
tag. Suprema over Z^2 are replaced by maxima over the window
``|n1|, |n2| <= R`` together with the trend of maxima over square annuli.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .conjugate import weight
from .lattice import Site, Tag
from .operators import MetricField, PotentialField

KINDS = ("PowerLaw", "CompactBump", "Oscillatory")
TREND_FACTOR = 10.0
N_ANNULI = 8


def bracket(x):
    return np.sqrt(0.5 + np.asarray(x, dtype=float) ** 2)


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class ProfileSpec:
    """Scalar profile on sites.

    ``PowerLaw``: ``a Lambda^-delta``. ``CompactBump``: ``a (1 - r^2/delta^2)^2``
    inside the disc of radius ``delta``. ``Oscillatory``: ``a Lambda^-delta
    cos(w . n + phase[tag])`` with ``w`` and the phases drawn from ``seed``
    unless ``frequency`` is given.
    """

    kind: str
    a: float
    delta: float
    gamma: float = 0.5
    seed: int = 0
    frequency: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")

    def _oscillation(self):
        rng = np.random.default_rng(self.seed)
        w = self.frequency if self.frequency is not None else tuple(rng.uniform(-np.pi, np.pi, 2))
        phase = (0.0, 0.0) if self.frequency is not None else tuple(rng.uniform(0, 2 * np.pi, 2))
        return np.asarray(w, float), phase

    def __call__(self, n1, n2, tag=Tag.P1):
        n1 = np.asarray(n1, dtype=float)
        n2 = np.asarray(n2, dtype=float)
        if self.kind == "PowerLaw":
            return self.a * weight(n1, n2) ** (-self.delta)
        if self.kind == "CompactBump":
            r2 = (n1**2 + n2**2) / self.delta**2
            return self.a * np.where(r2 < 1, (1 - r2) ** 2, 0.0)
        w, phase = self._oscillation()
        return self.a * weight(n1, n2) ** (-self.delta) * np.cos(w[0] * n1 + w[1] * n2 + phase[Tag(tag).slot])

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["frequency"] is None:
            del d["frequency"]
        else:
            d["frequency"] = list(d["frequency"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProfileSpec":
        known = {"kind", "a", "delta", "gamma", "seed", "frequency"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown profile keys {sorted(extra)}")
        d = dict(d)
        if d.get("frequency") is not None:
            d["frequency"] = tuple(float(x) for x in d["frequency"])
        return cls(**d)


def golden_specs(gamma: float = 0.5, a_eta: float = 0.3, a_V: float = 0.3) -> dict:
    """Power laws with ``delta = 1 + gamma + 0.1`` for eta and V."""
    delta = 1 + gamma + 0.1
    return {"eta": ProfileSpec("PowerLaw", a_eta, delta, gamma),
            "V": ProfileSpec("PowerLaw", a_V, delta, gamma)}


def edge_average(eta: Callable, factor: float = 0.5) -> Callable:
    """``eps(a, b) = factor * (eta(a) + eta(b)) / 2``."""
    def eps(a1, a2, at, b1, b2, bt):
        return factor * 0.5 * (np.asarray(eta(a1, a2, at)) + np.asarray(eta(b1, b2, bt)))
    return eps


def fields_from_specs(eta: Optional[ProfileSpec], V: Optional[ProfileSpec],
                      eps_factor: float = 0.5) -> tuple[MetricField, Optional[PotentialField]]:
    mf = MetricField(eta, edge_average(eta, eps_factor)) if eta is not None else MetricField.trivial()
    return mf, (PotentialField(V) if V is not None else None)


def golden_profile(gamma: float = 0.5, a_eta: float = 0.3, a_V: float = 0.3):
    specs = golden_specs(gamma, a_eta, a_V)
    return fields_from_specs(specs["eta"], specs["V"])


def site_function(f: Callable) -> Callable:
    """Wrap a site field ``f(n1, n2, tag)`` as a function of 1-tuples."""
    return lambda sites: f(*sites[0])


def edge_function(eps: Callable) -> Callable:
    """Wrap an edge field ``eps(a1, a2, at, b1, b2, bt)`` as a function of 2-tuples."""
    return lambda sites: eps(*sites[0], *sites[1])


# ---------------------------------------------------------------------------
# J map


def _J(k: int, h: int, b: int, n1, n2, tag: Tag):
    tag = Tag(tag)
    s = (-1) ** int(tag) * b
    first = (n1 - s * (h == 1), n2 - s * (h == 2), tag.other)
    return (first,) + ((n1, n2, tag),) * (k - 1)


def J_map(k: int, h: int, b: int, site: Site) -> tuple:
    """``J_{k,h,b}(n, p_i)``: the first entry is shifted by ``b`` along ``e_h``
    (sign ``-(-1)^i``) and moved to the other sublattice; ``k - 1`` copies of
    the input follow. ``h = 0`` never shifts."""
    if k < 1 or h not in (0, 1, 2) or b < 0:
        raise ValueError("need k >= 1, h in {0,1,2}, b >= 0")
    site = Site(*site)
    return tuple(Site(int(a), int(c), Tag(t)) for a, c, t in _J(k, h, b, site.n1, site.n2, site.tag))


# ---------------------------------------------------------------------------
# window machinery


def window(R: int) -> tuple[np.ndarray, np.ndarray]:
    r = np.arange(-R, R + 1)
    return np.meshgrid(r, r, indexing="ij")


def annulus_maxima(values: np.ndarray, R: int, n_annuli: int = N_ANNULI) -> list[float]:
    n1, n2 = window(R)
    rad = np.maximum(np.abs(n1), np.abs(n2))
    edges = np.linspace(0, R + 1, n_annuli + 1)
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (rad >= lo) & (rad < hi)
        out.append(float(values[sel].max()) if sel.any() else 0.0)
    return out


def trend_consistent(trend: list[float], factor: float = TREND_FACTOR) -> bool:
    """Non-increasing over the outer half and never above ``factor`` times the innermost value."""
    t = np.asarray(trend, dtype=float)
    tol = 1e-12 * max(1.0, float(np.abs(t).max()))
    outer = t[len(t) // 2:]
    monotone = bool(np.all(np.diff(outer) <= tol))
    bounded = bool(t.max() <= factor * t[0] + tol)
    return monotone and bounded


@dataclass
class HypothesisReport:
    hypothesis: str
    k: int
    gamma: float
    R: int
    sup: float
    trend: list
    consistent: bool
    extra: dict = field(default_factory=dict)

    def line(self) -> str:
        state = "consistent" if self.consistent else "inconsistent"
        return f"{self.hypothesis} k={self.k} gamma={self.gamma} R={self.R}: sup={self.sup:.6g} {state}"

    def to_dict(self) -> dict:
        return asdict(self)


def _report(name: str, values: np.ndarray, k: int, gamma: float, R: int, **extra) -> HypothesisReport:
    trend = annulus_maxima(values, R)
    return HypothesisReport(name, k, gamma, R, float(values.max()), trend, trend_consistent(trend), extra)


LS = ((0, 0), (1, 0), (0, 1), (1, 1))


def _weights(n1, n2, gamma):
    lam = weight(n1, n2) ** gamma
    return [lam * bracket(n1 * l1 - n2 * l2) for l1, l2 in LS]


def _maxdiff(G, gamma, n1, n2, pairs) -> np.ndarray:
    """Max over ``(l1, l2)`` and the given ``(J-args, J-args)`` pairs of the weighted difference."""
    ws = _weights(n1, n2, gamma)
    out = np.zeros(n1.shape)
    for left, right in pairs:
        d = np.abs(np.asarray(G(left)) - np.asarray(G(right)))
        for w in ws:
            out = np.maximum(out, w * d)
    return out


def h3_values(G: Callable, k: int, gamma: float, R: int, display: str = "A") -> np.ndarray:
    """Window values of the (H_{3,k}) quantity, maximised over ``h`` and ``(l1, l2)``.

    Display ``A`` compares ``J_{k,h,1}(n, p1)`` with ``J_{k,h,0}(n, p2)``;
    display ``B`` swaps the tags.
    """
    n1, n2 = window(R)
    a, b = (Tag.P1, Tag.P2) if display == "A" else (Tag.P2, Tag.P1)
    pairs = [(_J(k, h, 1, n1, n2, a), _J(k, h, 0, n1, n2, b)) for h in (1, 2)]
    return _maxdiff(G, gamma, n1, n2, pairs)


def check_H3k(G: Callable, k: int, gamma: float, R: int) -> dict:
    """Both displays of (H_{3,k}), reported separately."""
    if R < 8:
        raise ValueError("window radius must be at least 8")
    return {d: _report(f"H3,{k}[{d}]", h3_values(G, k, gamma, R, d), k, gamma, R) for d in ("A", "B")}


def h3_consistent(reports: dict) -> bool:
    return all(r.consistent for r in reports.values())


# ---------------------------------------------------------------------------
# basic hypotheses


def _edges(R: int):
    """Geometric edges ``(n, P1) -- (n - d, P2)`` with ``n`` in the window."""
    n1, n2 = window(R)
    for d1, d2 in ((0, 0), (1, 0), (0, 1)):
        yield (n1, n2, Tag.P1), (n1 - d1, n2 - d2, Tag.P2)


def check_basic(mf: MetricField, V: Optional[PotentialField], R: int) -> dict:
    """(H0), (H1), (H2) on the window: infima above -1 and decaying annulus maxima."""
    n1, n2 = window(R)
    eta = [np.asarray(mf.eta(n1, n2, t), dtype=float) * np.ones(n1.shape) for t in Tag]
    eps = [np.asarray(mf.eps(*a, *b), dtype=float) * np.ones(n1.shape) for a, b in _edges(R)]
    pot = ([np.asarray(V.V(n1, n2, t), dtype=float) * np.ones(n1.shape) for t in Tag]
           if V is not None else [np.zeros(n1.shape)])

    def rep(name, arrs, need_inf):
        absmax = np.max([np.abs(x) for x in arrs], axis=0)
        inf = float(np.min([x.min() for x in arrs]))
        r = _report(name, absmax, 0, 0.0, R, inf=inf)
        if need_inf:
            r.consistent = r.consistent and inf > -1
        return r

    return {"H0": rep("H0", eta, True), "H1": rep("H1", eps, True), "H2": rep("H2", pot, False)}


# ---------------------------------------------------------------------------
# derived hypotheses


def h7_rays(G: Callable, k: int, R: int, max_power: int = 14, tol: float = 1e-3) -> HypothesisReport:
    """``G(J_{k,h,b}(n, p_j))`` along ``b = 2^m`` from a few base points."""
    base = [(0, 0), (R, 0), (0, R), (-R, R), (R, -R)]
    bs = [0] + [2**m for m in range(max_power + 1)]
    worst = 0.0
    tails = []
    for n in base:
        a1, a2 = np.array([n[0]]), np.array([n[1]])
        for h in (1, 2):
            for t in Tag:
                vals = np.array([float(np.abs(G(_J(k, h, b, a1, a2, t)))[0]) for b in bs])
                scale = vals.max()
                ratio = 0.0 if scale == 0 else vals[-1] / scale
                worst = max(worst, ratio)
                tails.append(float(vals[-1]))
    return HypothesisReport(f"H7,{k}", k, 0.0, R, worst, tails, worst <= tol,
                            {"b_max": bs[-1], "tail_ratio": worst})


def derived_values(G: Callable, k: int, gamma: float, R: int) -> dict:
    n1, n2 = window(R)
    J = lambda h, b, t, m1=n1, m2=n2: _J(k, h, b, m1, m2, t)
    out = {}
    out["H4"] = _maxdiff(G, gamma, n1, n2,
                         [(J(h, 0, i), J(h, 0, i.other)) for h in (1, 2) for i in Tag])
    pairs5 = []
    for i in Tag:
        j = i.other
        s = (-1) ** int(j)
        for h in (1, 2):
            hp = 3 - h
            pairs5.append((J(h, 0, i), _J(k, h, 1, n1 - s * (hp == 1), n2 - s * (hp == 2), j)))
    out["H5"] = _maxdiff(G, gamma, n1, n2, pairs5)
    out["H6"] = _maxdiff(G, gamma, n1, n2, [(J(h, 0, i), J(h, 1, i)) for h in (1, 2) for i in Tag])
    lam = weight(n1, n2) ** gamma
    h8 = np.zeros(n1.shape)
    for h in (1, 2):
        for i in Tag:
            h8 = np.maximum(h8, lam * np.abs(np.asarray(G(J(h, 0, i)))))
    out["H8"] = h8
    # constants M_{k,h,sigma,i,j} entering the telescoping bound
    out["M"] = _maxdiff(G, gamma, n1, n2, [(J(h, 0, i), J(h, sg, j)) for h in (1, 2)
                                           for sg in (0, 1) for i in Tag for j in Tag])
    return out


def telescoping_factor(gamma: float) -> float:
    return 3 + (2 * np.sqrt(2)) ** gamma / gamma


def check_derived(G: Callable, k: int, gamma: float, R: int) -> dict:
    """(H_{4,k}), (H_{5,k}), (H_{6,k}), (H_{8,k}) on the window, the (H_{7,k}) ray
    check, and the telescoping bound ``sup Lambda^gamma |G| <= M (3 + (2 sqrt 2)^gamma / gamma)``."""
    vals = derived_values(G, k, gamma, R)
    reps = {name: _report(f"{name},{k}", vals[name], k, gamma, R) for name in ("H4", "H5", "H6", "H8")}
    reps["H7"] = h7_rays(G, k, R)
    M = float(vals["M"].max())
    bound = M * telescoping_factor(gamma)
    sup8 = float(vals["H8"].max())
    reps["bound"] = HypothesisReport(f"H8-bound,{k}", k, gamma, R, sup8, annulus_maxima(vals["H8"], R),
                                     sup8 <= bound + 1e-15, {"M": M, "bound": bound})
    return reps


def reports_json(reports: dict) -> str:
    return json.dumps({k: v.to_dict() for k, v in reports.items()}, indent=2)
