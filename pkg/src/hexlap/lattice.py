"""Hexagonal lattice geometry and truncation boxes.

A site is a cell index ``(n1, n2)`` plus a sublattice tag. The Euclidean
position of ``(n1, n2, tag)`` is ``p_tag + n1 * v1 + n2 * v2`` with unit
nearest-neighbour distance.

Flat layout for a box of side ``N``: ``index = tag_offset + n1 * N + n2``
with ``tag_offset = 0`` for P1 and ``N**2`` for P2. A field on the box is
therefore an array of shape ``(2, N, N)`` in C order.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

SQRT3 = np.sqrt(3.0)

V1 = np.array([1.5, SQRT3 / 2])
V2 = np.array([0.0, SQRT3])


class Tag(enum.IntEnum):
    P1 = 1
    P2 = 2

    @property
    def position(self) -> np.ndarray:
        if self is Tag.P1:
            return np.array([0.5, -SQRT3 / 2])
        return np.array([1.0, 0.0])

    @property
    def other(self) -> "Tag":
        return Tag.P2 if self is Tag.P1 else Tag.P1

    @property
    def slot(self) -> int:
        """Row of this sublattice in a ``(2, N, N)`` field."""
        return int(self) - 1


class Site(NamedTuple):
    n1: int
    n2: int
    tag: Tag


class OutOfBox(ValueError):
    pass


# Cell offsets of the three neighbours, seen from each sublattice.
NEIGHBOR_OFFSETS = {
    Tag.P1: ((0, 0), (-1, 0), (0, -1)),
    Tag.P2: ((0, 0), (1, 0), (0, 1)),
}


def embed(site: Site) -> np.ndarray:
    """Euclidean position of a site."""
    tag = Tag(site.tag)
    return tag.position + site.n1 * V1 + site.n2 * V2


def neighbors(site: Site) -> list[Site]:
    """The three nearest neighbours, all on the other sublattice."""
    tag = Tag(site.tag)
    return [Site(site.n1 + a, site.n2 + b, tag.other) for a, b in NEIGHBOR_OFFSETS[tag]]


@dataclass(frozen=True)
class Box:
    """Square truncation ``{0..N-1}^2`` of the cell lattice."""

    N: int
    bc: str = "periodic"

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"box size must be positive, got {self.N}")
        if self.bc not in ("periodic", "dirichlet"):
            raise ValueError(f"bc must be 'periodic' or 'dirichlet', got {self.bc!r}")

    @property
    def periodic(self) -> bool:
        return self.bc == "periodic"

    @property
    def dim(self) -> int:
        return 2 * self.N * self.N

    @property
    def shape(self) -> tuple[int, int, int]:
        return (2, self.N, self.N)

    def contains(self, site: Site) -> bool:
        return 0 <= site.n1 < self.N and 0 <= site.n2 < self.N

    def canonical(self, site: Site) -> Site:
        if self.periodic:
            return Site(site.n1 % self.N, site.n2 % self.N, Tag(site.tag))
        if not self.contains(site):
            raise OutOfBox(f"{site} lies outside the Dirichlet box of size {self.N}")
        return Site(site.n1, site.n2, Tag(site.tag))

    def index(self, site: Site) -> int:
        s = self.canonical(site)
        return s.tag.slot * self.N**2 + s.n1 * self.N + s.n2

    def site(self, index: int) -> Site:
        if not 0 <= index < self.dim:
            raise OutOfBox(f"index {index} outside 0..{self.dim - 1}")
        slot, rest = divmod(index, self.N**2)
        n1, n2 = divmod(rest, self.N)
        return Site(n1, n2, Tag(slot + 1))

    def sites(self) -> Iterator[Site]:
        for i in range(self.dim):
            yield self.site(i)

    def coords(self, centered: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Cell coordinate grids ``(n1, n2)`` of shape ``(N, N)``.

        With ``centered`` the origin is moved to cell ``(N//2, N//2)``; this is
        the labelling used for position operators and decay weights on
        Dirichlet boxes.
        """
        r = np.arange(self.N) - (self.N // 2 if centered else 0)
        return np.meshgrid(r, r, indexing="ij")

    def delta(self, site: Site) -> np.ndarray:
        f = np.zeros(self.shape, dtype=complex)
        s = self.canonical(site)
        f[s.tag.slot, s.n1, s.n2] = 1.0
        return f
