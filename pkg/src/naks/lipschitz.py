"""Torsion 1-Lipschitz maps P^{d-1}(R_n) -> R_n^d (the space Omega_n).

A map is stored as a dense table of packed ring values, one row per point in
enumeration order.  Every element of Omega_n decomposes uniquely as

    f(a) = sum_{i=1..n} pi^{i-1} * g_i(sp_{n,i}(a)),

with ``g_i`` an arbitrary function P^{d-1}(R_i) -> {0..p-1}^d.  Since layer
``i`` only touches digit ``i-1`` this holds verbatim on packed codes for both
ring families, and it is the representation used for sampling and
enumeration.

Draw layout
-----------
A map is determined by ``D = d * sum_i Card P^{d-1}(R_i)`` digits in
``[0, p)``, laid out layer by layer (level 1 first), points in enumeration
order inside a layer, coordinates innermost.  Random maps take these digits
from ``Generator(Philox(key=seed, counter=[0, 0, n, sample_index]))`` with a
single ``integers(0, p, size=D)`` call, so sample ``i`` is the same whatever
the number of workers.  Enumeration reads the digits of the map index in base
``p``, least significant digit first.
"""
from __future__ import annotations

import csv
import io
from typing import Iterator, Sequence

import numpy as np

from .errors import EnumerationTooLarge, InvalidInput, InvalidLevel, MixedRings
from .projective import ProjectivePoint, ProjectiveSpace, point_index, projective_space
from .residue_ring import Ring, RingElement, parse_ring

DEFAULT_ENUMERATION_CAP = 2 ** 24


class LipschitzMap:
    """A (claimed) element of Omega_n; use :func:`validate_lipschitz` to check."""

    def __init__(self, ring: Ring, d: int, table):
        table = np.array(table, dtype=np.int64)
        space = projective_space(ring, d)
        if table.shape != (space.size, d):
            raise InvalidInput(f"table shape {table.shape}, expected {(space.size, d)}")
        if table.size and (table.min() < 0 or table.max() >= ring.size):
            raise InvalidInput("table entries must be packed codes in [0, p^n)")
        table.setflags(write=False)
        self.ring = ring
        self.d = d
        self.table = table

    @property
    def space(self) -> ProjectiveSpace:
        return projective_space(self.ring, self.d)

    @classmethod
    def zero(cls, ring: Ring, d: int) -> LipschitzMap:
        return cls(ring, d, np.zeros((projective_space(ring, d).size, d), dtype=np.int64))

    @classmethod
    def from_values(cls, ring: Ring, d: int, values: dict) -> LipschitzMap:
        """Build from ``{point_or_index: vector}``; unspecified points map to 0."""
        table = np.zeros((projective_space(ring, d).size, d), dtype=np.int64)
        for key, vec in values.items():
            idx = point_index(key) if isinstance(key, ProjectivePoint) else int(key)
            table[idx] = [v.value if isinstance(v, RingElement) else int(v) for v in vec]
        return cls(ring, d, table)

    def __call__(self, point: ProjectivePoint | int) -> tuple[RingElement, ...]:
        idx = point_index(point) if isinstance(point, ProjectivePoint) else int(point)
        return tuple(RingElement(self.ring, int(v)) for v in self.table[idx])

    def __eq__(self, other) -> bool:
        if not isinstance(other, LipschitzMap):
            return NotImplemented
        return self.ring == other.ring and self.d == other.d and np.array_equal(self.table, other.table)

    def __hash__(self) -> int:
        return hash((self.ring, self.d, self.table.tobytes()))

    def __add__(self, other: LipschitzMap) -> LipschitzMap:
        if self.ring != other.ring or self.d != other.d:
            raise MixedRings("maps live on different spaces")
        return LipschitzMap(self.ring, self.d, self.ring.add_packed(self.table, other.table))

    def __repr__(self) -> str:
        return f"LipschitzMap({self.ring}, d={self.d}, points={self.space.size})"


# -- cardinalities --------------------------------------------------------

def omega_cardinality(q: int, d: int, n: int) -> int:
    if q < 2 or d < 2 or n < 1:
        raise InvalidInput(f"need q >= 2, d >= 2, n >= 1 (got {q}, {d}, {n})")
    points_1 = (q ** d - 1) // (q - 1)
    levels = (q ** (n * (d - 1)) - 1) // (q ** (d - 1) - 1)
    return q ** (d * points_1 * levels)


def draw_count(space: ProjectiveSpace) -> int:
    """Number of base-p digits that determine one map."""
    return space.d * sum(space.level_sizes())


# -- layers <-> tables ----------------------------------------------------

def layers_to_table(space: ProjectiveSpace, draws: np.ndarray) -> np.ndarray:
    """Assemble tables from layer digits.

    ``draws`` has shape ``(D,)`` or ``(batch, D)``; the result has shape
    ``(size, d)`` or ``(batch, size, d)``.
    """
    draws = np.asarray(draws, dtype=np.int64)
    single = draws.ndim == 1
    if single:
        draws = draws[None, :]
    p, d = space.ring.p, space.d
    table = np.zeros((draws.shape[0], space.size, d), dtype=np.int64)
    offset = 0
    for level, count in enumerate(space.level_sizes(), start=1):
        g = draws[:, offset:offset + count * d].reshape(-1, count, d)
        offset += count * d
        table += g[:, space.parent_indices(level), :] * p ** (level - 1)
    if offset != draws.shape[1]:
        raise InvalidInput(f"expected {offset} layer digits, got {draws.shape[1]}")
    return table[0] if single else table


def table_to_layers(f: LipschitzMap) -> list[np.ndarray]:
    """Inverse of :func:`layers_to_table`: the layer functions g_1..g_n."""
    space, p = f.space, f.ring.p
    layers = []
    for level in range(1, f.ring.n + 1):
        fibre = p ** ((f.d - 1) * (f.ring.n - level))
        reps = f.table[::fibre]
        layers.append((reps // p ** (level - 1)) % p)
    return layers


def layers_to_map(ring: Ring, d: int, layers: Sequence[np.ndarray]) -> LipschitzMap:
    draws = np.concatenate([np.asarray(g, dtype=np.int64).reshape(-1) for g in layers])
    return LipschitzMap(ring, d, layers_to_table(projective_space(ring, d), draws))


# -- validation -----------------------------------------------------------

def validate_lipschitz(f: LipschitzMap) -> bool:
    """Check f(a) == f(b) mod m^{v_n(a,b)} for every pair of points.

    Pairs at distance >= v are exactly the pairs sharing a level-v
    specialization, so it is enough to check that every fibre of sp_{n,v}
    is constant modulo m^v, for v = 1..n-1.
    """
    p, n = f.ring.p, f.ring.n
    table = f.table
    for v in range(1, n):
        fibre = p ** ((f.d - 1) * (n - v))
        low = (table % p ** v).reshape(-1, fibre, f.d)
        if not np.all(low == low[:, :1, :]):
            return False
    return True


# -- sampling -------------------------------------------------------------

def sample_generator(seed: int, index: int = 0, stream: int = 0) -> np.random.Generator:
    """Independent counter-based stream for sample ``index`` under ``seed``.

    ``stream`` separates families of samples sharing a seed (the sampler
    uses the level n).
    """
    if seed < 0 or index < 0 or stream < 0:
        raise InvalidInput("seed, stream and sample index must be non-negative")
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, stream, index]))


def random_draws(space: ProjectiveSpace, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, space.ring.p, size=draw_count(space), dtype=np.int64)


def random_lipschitz(ring: Ring, d: int, rng: np.random.Generator | int | None = None,
                     index: int = 0) -> LipschitzMap:
    """Uniform random element of Omega_n.

    ``rng`` may be a Generator, or an integer seed; an integer seed selects
    sample ``index`` of the stream the Monte Carlo sampler uses at level n.
    """
    if rng is None or isinstance(rng, (int, np.integer)):
        rng = sample_generator(int(rng or 0), index, stream=ring.n)
    space = projective_space(ring, d)
    return LipschitzMap(ring, d, layers_to_table(space, random_draws(space, rng)))


# -- enumeration ----------------------------------------------------------

def index_draws(space: ProjectiveSpace, indices: np.ndarray) -> np.ndarray:
    """Layer digits of the maps with the given enumeration indices."""
    p = space.ring.p
    idx = np.asarray(indices, dtype=np.int64)
    digits = np.empty((idx.size, draw_count(space)), dtype=np.int64)
    rest = idx.copy()
    for j in range(digits.shape[1]):
        digits[:, j] = rest % p
        rest //= p
    return digits


def check_enumerable(ring: Ring, d: int, cap: int = DEFAULT_ENUMERATION_CAP) -> int:
    total = omega_cardinality(ring.p, d, ring.n)
    if total > cap:
        raise EnumerationTooLarge(f"Omega_n has {total} elements, cap is {cap}")
    return total


def enumerate_omega(ring: Ring, d: int, cap: int = DEFAULT_ENUMERATION_CAP) -> Iterator[LipschitzMap]:
    total = check_enumerable(ring, d, cap)
    space = projective_space(ring, d)
    chunk = 4096
    for start in range(0, total, chunk):
        tables = layers_to_table(space, index_draws(space, np.arange(start, min(total, start + chunk))))
        for table in tables:
            yield LipschitzMap(ring, d, table)


# -- projection -----------------------------------------------------------

def project_map(f: LipschitzMap, m: int) -> LipschitzMap:
    n = f.ring.n
    if not 1 <= m <= n:
        raise InvalidLevel(f"cannot project level {n} to level {m}")
    if m == n:
        return f
    fibre = f.ring.p ** ((f.d - 1) * (n - m))
    return LipschitzMap(f.ring.at_level(m), f.d, f.table[::fibre] % f.ring.p ** m)


# -- CSV ------------------------------------------------------------------

def map_to_csv(f: LipschitzMap, seed: int | None = None) -> str:
    buf = io.StringIO()
    buf.write(f"# ring={f.ring} d={f.d} seed={'' if seed is None else seed}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["point_index", "point"] + [f"value_{i + 1}" for i in range(f.d)])
    space = f.space
    for idx in range(space.size):
        writer.writerow([idx, str(space.point(idx))] + [str(v) for v in f(idx)])
    return buf.getvalue()


def map_from_csv(text: str) -> tuple[LipschitzMap, int | None]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise InvalidInput("missing map CSV header line")
    meta = dict(item.split("=", 1) for item in lines[0][1:].split())
    ring = parse_ring(meta["ring"])
    d = int(meta["d"])
    seed = int(meta["seed"]) if meta.get("seed") else None
    rows = list(csv.DictReader(lines[1:]))
    table = np.zeros((projective_space(ring, d).size, d), dtype=np.int64)
    for row in rows:
        idx = int(row["point_index"])
        table[idx] = [ring.parse(row[f"value_{i + 1}"]).value for i in range(d)]
    if len(rows) != table.shape[0]:
        raise InvalidInput(f"map CSV has {len(rows)} rows, expected {table.shape[0]}")
    return LipschitzMap(ring, d, table), seed
