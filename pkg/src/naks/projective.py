"""The finite projective space P^{d-1}(R_n).

Points are stored by their canonical representative: the first unit
coordinate (the pivot) is 1 and every earlier coordinate is a non-unit.

Enumeration order (public contract, stable): points are sorted by pivot
first, then by the level-0 digits of all coordinates (lexicographically,
first coordinate most significant), then by the level-1 digits, and so on.
Truncating a key to its first ``m`` digit layers gives the key of the
level-``m`` specialization, so the order refines the fibres of every
specialization map and ``index_m(sp(a)) == index_n(a) // p^{(d-1)(n-m)}``.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import (
    IndexOutOfRange,
    InvalidInput,
    InvalidLevel,
    MixedRings,
    NotOnSphere,
    WrongDimension,
)
from .residue_ring import Ring, RingElement


@functools.total_ordering
@dataclass(frozen=True, eq=True)
class ProjectivePoint:
    """A point of P^{d-1}(R_n).

    ``piv`` is the 0-based index of the pivot coordinate.
    """

    ring: Ring
    can: tuple[RingElement, ...]
    piv: int

    @property
    def d(self) -> int:
        return len(self.can)

    @property
    def level(self) -> int:
        return self.ring.n

    @property
    def values(self) -> tuple[int, ...]:
        return tuple(c.value for c in self.can)

    def order_key(self) -> tuple:
        layers = tuple(
            tuple(c.digits[i] for c in self.can) for i in range(self.ring.n)
        )
        return (self.piv, layers)

    def __lt__(self, other: ProjectivePoint) -> bool:
        if self.ring != other.ring or self.d != other.d:
            raise MixedRings("cannot compare points of different projective spaces")
        return self.order_key() < other.order_key()

    def __str__(self) -> str:
        return "[" + ":".join(str(c) for c in self.can) + f"]@{self.ring.n}"

    def __repr__(self) -> str:
        return f"ProjectivePoint({self.ring}, {self})"


def projective_cardinality(q: int, d: int, n: int) -> int:
    """Card P^{d-1}(R_n) = q^{(d-1)(n-1)} (q^d - 1) / (q - 1)."""
    if q < 2 or d < 2 or n < 1:
        raise InvalidInput(f"need q >= 2, d >= 2, n >= 1 (got {q}, {d}, {n})")
    return q ** ((d - 1) * (n - 1)) * ((q ** d - 1) // (q - 1))


def canonicalize(ring: Ring, vector: Sequence[RingElement | int]) -> ProjectivePoint:
    """Canonical representative of the class of ``vector``.

    Integers are taken as packed codes.  Raises ``NotOnSphere`` when no
    coordinate is a unit.
    """
    coords = tuple(c if isinstance(c, RingElement) else ring.element(c) for c in vector)
    if len(coords) < 2:
        raise WrongDimension("projective points need d >= 2 coordinates")
    for c in coords:
        if c.ring != ring:
            raise MixedRings(f"coordinate in {c.ring}, expected {ring}")
    for piv, c in enumerate(coords):
        if ring.is_unit(c):
            inv = ring.inverse(c)
            return ProjectivePoint(ring, tuple(ring.mul(x, inv) for x in coords), piv)
    raise NotOnSphere(f"no unit coordinate in {[str(c) for c in coords]}")


def _block_sizes(p: int, d: int, n: int) -> list[int]:
    tail = p ** ((d - 1) * (n - 1))
    return [p ** (d - 1 - k) * tail for k in range(d)]


def point_at(ring: Ring, d: int, index: int) -> ProjectivePoint:
    p, n = ring.p, ring.n
    total = projective_cardinality(p, d, n)
    if not 0 <= index < total:
        raise IndexOutOfRange(f"index {index} outside [0, {total})")
    rank = index
    for k, size in enumerate(_block_sizes(p, d, n)):
        if rank < size:
            break
        rank -= size
    digits = [[0] * n for _ in range(d)]
    digits[k][0] = 1
    others = [j for j in range(d) if j != k]
    for layer in reversed(range(1, n)):
        for j in reversed(others):
            rank, digits[j][layer] = divmod(rank, p)
    for j in reversed(range(k + 1, d)):
        rank, digits[j][0] = divmod(rank, p)
    return ProjectivePoint(ring, tuple(ring.from_digits(ds) for ds in digits), k)


def point_index(point: ProjectivePoint) -> int:
    ring, d, k = point.ring, point.d, point.piv
    p, n = ring.p, ring.n
    digits = [c.digits for c in point.can]
    rank = 0
    for j in range(k + 1, d):
        rank = rank * p + digits[j][0]
    others = [j for j in range(d) if j != k]
    for layer in range(1, n):
        for j in others:
            rank = rank * p + digits[j][layer]
    return sum(_block_sizes(p, d, n)[:k]) + rank


def enumerate_projective(ring: Ring, d: int) -> list[ProjectivePoint]:
    return list(iter_projective(ring, d))


def iter_projective(ring: Ring, d: int) -> Iterator[ProjectivePoint]:
    for i in range(projective_cardinality(ring.p, d, ring.n)):
        yield point_at(ring, d, i)


def specialize(point: ProjectivePoint, m: int) -> ProjectivePoint:
    ring = point.ring
    if not 1 <= m <= ring.n:
        raise InvalidLevel(f"cannot specialize level {ring.n} to level {m}")
    if m == ring.n:
        return point
    return ProjectivePoint(ring.at_level(m), tuple(ring.reduce(c, m) for c in point.can), point.piv)


def valuation_distance(a: ProjectivePoint, b: ProjectivePoint) -> int:
    """Largest v in [0, n] such that a and b agree modulo m^v."""
    if a.ring != b.ring or a.d != b.d:
        raise MixedRings("points live in different projective spaces")
    ring = a.ring
    if a.piv != b.piv:
        return 0
    return min(ring.valuation(ring.sub(x, y)) for x, y in zip(a.can, b.can))


def parse_point(text: str, ring: Ring) -> ProjectivePoint:
    """Parse ``"[c_1:...:c_d]@n"`` and canonicalize it."""
    text = text.strip()
    body, _, level = text.partition("@")
    if level and int(level) != ring.n:
        raise InvalidLevel(f"point at level {level} parsed in {ring}")
    if not (body.startswith("[") and body.endswith("]")):
        raise InvalidInput(f"malformed point {text!r}")
    return canonicalize(ring, [ring.parse(c) for c in body[1:-1].split(":")])


class ProjectiveSpace:
    """Array view of P^{d-1}(R_n) used by the vectorised code paths."""

    def __init__(self, ring: Ring, d: int):
        if d < 2:
            raise WrongDimension(f"dimension must be >= 2, got {d}")
        self.ring = ring
        self.d = d
        self.size = projective_cardinality(ring.p, d, ring.n)

    def __repr__(self) -> str:
        return f"ProjectiveSpace({self.ring}, d={self.d})"

    @functools.cached_property
    def can_values(self) -> np.ndarray:
        """Packed canonical representatives, shape ``(size, d)``, in enumeration order."""
        p, n, d = self.ring.p, self.ring.n, self.d
        blocks = []
        for k, size in enumerate(_block_sizes(p, d, n)):
            rank = np.arange(size, dtype=np.int64)
            vals = np.zeros((size, d), dtype=np.int64)
            vals[:, k] = 1
            others = [j for j in range(d) if j != k]
            for layer in reversed(range(1, n)):
                for j in reversed(others):
                    vals[:, j] += (rank % p) * p ** layer
                    rank //= p
            for j in reversed(range(k + 1, d)):
                vals[:, j] += rank % p
                rank //= p
            blocks.append(vals)
        out = np.concatenate(blocks)
        out.setflags(write=False)
        return out

    @functools.cached_property
    def pivots(self) -> np.ndarray:
        sizes = _block_sizes(self.ring.p, self.d, self.ring.n)
        return np.repeat(np.arange(self.d), sizes)

    def parent_indices(self, m: int) -> np.ndarray:
        """Index of sp_{n,m}(a) at level m, for every point a at level n."""
        if not 1 <= m <= self.ring.n:
            raise InvalidLevel(f"cannot specialize level {self.ring.n} to level {m}")
        fibre = self.ring.p ** ((self.d - 1) * (self.ring.n - m))
        return np.arange(self.size, dtype=np.int64) // fibre

    def level_sizes(self) -> list[int]:
        return [projective_cardinality(self.ring.p, self.d, i) for i in range(1, self.ring.n + 1)]

    def point(self, index: int) -> ProjectivePoint:
        return point_at(self.ring, self.d, index)

    def points(self) -> list[ProjectivePoint]:
        return enumerate_projective(self.ring, self.d)


@functools.lru_cache(maxsize=64)
def projective_space(ring: Ring, d: int) -> ProjectiveSpace:
    return ProjectiveSpace(ring, d)
