"""Kakeya sets N(f) in R_n^d stored as dense bit arrays.

Cell addressing: the point ``(x_1, ..., x_d)`` has index
``sum_i packed(x_i) * p^{n(i-1)}``.  Bits are packed little-endian (bit ``k``
of byte ``j`` is cell ``8j + k``).
"""
from __future__ import annotations

import csv
import functools
import io
import struct
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import EmptySubset, InvalidInput, MixedRings, SetTooLarge
from .lipschitz import LipschitzMap
from .projective import ProjectivePoint, ProjectiveSpace, point_index, projective_space
from .residue_ring import Family, Ring, RingElement

DEFAULT_MEMORY_CAP = 2 * 1024 ** 3
HEADER = struct.Struct("<4sBBHII")
MAGIC = b"NAKS"
FORMAT_VERSION = 1
_FLAG_SERIES = 0x01

# Above this many (direction, t, coordinate) entries the offset table is
# rebuilt chunk by chunk instead of being cached.
_OFFSET_CACHE_ENTRIES = 2 ** 24
_CHUNK_ENTRIES = 2 ** 21


def check_memory(ring: Ring, d: int, cap: int = DEFAULT_MEMORY_CAP) -> int:
    """Return the number of cells of R_n^d, or raise if one byte per cell exceeds ``cap``."""
    cells = ring.size ** d
    if cells > cap:
        raise SetTooLarge(f"{cells} cells in {ring}^{d} exceed the {cap}-byte working cap")
    return cells


def cell_index(ring: Ring, coords: Sequence[RingElement | int]) -> int:
    idx = 0
    for c in reversed(coords):
        value = c.value if isinstance(c, RingElement) else int(c)
        idx = idx * ring.size + value
    return idx


def cell_coords(ring: Ring, d: int, index: int) -> tuple[RingElement, ...]:
    out = []
    for _ in range(d):
        index, v = divmod(index, ring.size)
        out.append(RingElement(ring, v))
    return tuple(out)


def _encode(ring: Ring, coords: np.ndarray) -> np.ndarray:
    """Cell indices from packed coordinates (last axis is the coordinate axis)."""
    idx = coords[..., -1].copy()
    for i in range(coords.shape[-1] - 2, -1, -1):
        idx *= ring.size
        idx += coords[..., i]
    return idx


def _line_offsets(ring: Ring, can: np.ndarray) -> np.ndarray:
    """t * can for every t in R_n, indexed by the packed code of t.

    Built with additions only: t = sum s_i pi^i, and pi^i * c packs to
    (c * p^i) mod p^n in both ring families.
    """
    p = ring.p
    out = np.zeros(can.shape[:-1] + (1, can.shape[-1]), dtype=np.int64)
    for i in range(ring.n):
        step = (can * p ** i) % ring.size
        layers = [out]
        current = out
        for _ in range(1, p):
            current = ring.add_packed(current, step[..., None, :])
            layers.append(current)
        out = np.concatenate(layers, axis=-2)
    return out


class SegmentTable:
    """Offsets t * can(a) for all directions a and all t, produced in chunks."""

    def __init__(self, space: ProjectiveSpace):
        self.space = space
        self.ring = space.ring
        per_direction = self.ring.size * space.d
        self.chunk = max(1, _CHUNK_ENTRIES // per_direction)
        self.cached = space.size * per_direction <= _OFFSET_CACHE_ENTRIES

    @functools.cached_property
    def _full(self) -> np.ndarray:
        return self._build(0, self.space.size)

    def _build(self, start: int, stop: int) -> np.ndarray:
        offsets = _line_offsets(self.ring, self.space.can_values[start:stop])
        return np.ascontiguousarray(np.moveaxis(offsets, -1, 0))

    def offsets(self, start: int, stop: int) -> np.ndarray:
        """Coordinate-major offsets, shape ``(d, stop - start, p^n)``."""
        if self.cached:
            return self._full[:, start:stop]
        return self._build(start, stop)

    def chunks(self, chunk: int | None = None) -> Iterator[tuple[int, int, np.ndarray]]:
        chunk = chunk or self.chunk
        for start in range(0, self.space.size, chunk):
            stop = min(self.space.size, start + chunk)
            yield start, stop, self.offsets(start, stop)


def _cells_of_lines(ring: Ring, offsets: np.ndarray, bases: np.ndarray) -> np.ndarray:
    """Cell indices of t * can(a) + base(a).

    ``offsets`` is coordinate-major ``(d, k, p^n)``; ``bases`` is
    ``(..., k, d)``.  The result has shape ``(..., k, p^n)``.
    """
    d = offsets.shape[0]
    idx = None
    for i in range(d - 1, -1, -1):
        coord = ring.add_packed(offsets[i], bases[..., :, i, None])
        if idx is None:
            idx = coord
        else:
            idx *= ring.size
            idx += coord
    return idx


@functools.lru_cache(maxsize=16)
def segment_table(ring: Ring, d: int) -> SegmentTable:
    return SegmentTable(projective_space(ring, d))


class KakeyaSet:
    """Dense bit array over R_n^d with a cached population count."""

    def __init__(self, ring: Ring, d: int, bits: np.ndarray, seed: int | None = None):
        cells = ring.size ** d
        bits = np.asarray(bits)
        if bits.dtype == bool:
            if bits.size != cells:
                raise InvalidInput(f"expected {cells} cells, got {bits.size}")
            bits = np.packbits(bits, bitorder="little")
        if bits.dtype != np.uint8 or bits.size != (cells + 7) // 8:
            raise InvalidInput("bits must be a bool mask or little-endian packed uint8 array")
        bits = bits.copy()
        bits.setflags(write=False)
        self.ring = ring
        self.d = d
        self.bits = bits
        self.seed = seed
        self.card = int(np.bitwise_count(bits).sum(dtype=np.int64))

    @property
    def cells(self) -> int:
        return self.ring.size ** self.d

    @classmethod
    def empty(cls, ring: Ring, d: int) -> KakeyaSet:
        return cls(ring, d, np.zeros(ring.size ** d, dtype=bool))

    @classmethod
    def from_indices(cls, ring: Ring, d: int, indices: Iterable[int]) -> KakeyaSet:
        mask = np.zeros(ring.size ** d, dtype=bool)
        mask[np.fromiter(indices, dtype=np.int64)] = True
        return cls(ring, d, mask)

    def mask(self) -> np.ndarray:
        return np.unpackbits(self.bits, bitorder="little", count=self.cells).astype(bool)

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.mask())

    def __contains__(self, coords) -> bool:
        idx = coords if isinstance(coords, (int, np.integer)) else cell_index(self.ring, coords)
        return bool((self.bits[idx >> 3] >> (idx & 7)) & 1)

    def __len__(self) -> int:
        return self.card

    def __eq__(self, other) -> bool:
        if not isinstance(other, KakeyaSet):
            return NotImplemented
        return self.ring == other.ring and self.d == other.d and np.array_equal(self.bits, other.bits)

    def __repr__(self) -> str:
        return f"KakeyaSet({self.ring}, d={self.d}, card={self.card})"

    def measure(self) -> Fraction:
        return measure(self)


def build_kakeya(f: LipschitzMap, memory_cap: int = DEFAULT_MEMORY_CAP) -> KakeyaSet:
    """N(f): the union over all directions a of the lines t * can(a) + f(a)."""
    cells = check_memory(f.ring, f.d, memory_cap)
    mask = np.zeros(cells, dtype=bool)
    table = segment_table(f.ring, f.d)
    for start, stop, offsets in table.chunks():
        mask[_cells_of_lines(f.ring, offsets, f.table[start:stop]).ravel()] = True
    return KakeyaSet(f.ring, f.d, mask)


def batch_cards(space: ProjectiveSpace, tables: np.ndarray,
                memory_cap: int = DEFAULT_MEMORY_CAP) -> np.ndarray:
    """Card N(f) for a stack of map tables of shape ``(batch, size, d)``."""
    ring, d = space.ring, space.d
    cells = check_memory(ring, d, memory_cap)
    tables = np.asarray(tables, dtype=np.int64)
    out = np.empty(tables.shape[0], dtype=np.int64)
    seg = segment_table(ring, d)
    per_map = space.size * ring.size
    batch = int(max(1, min(_CHUNK_ENTRIES // per_map, (memory_cap // 8) // cells, 4096)))
    for lo in range(0, tables.shape[0], batch):
        block = tables[lo:lo + batch]
        b = block.shape[0]
        mask = np.zeros(b * cells, dtype=bool)
        base = (np.arange(b, dtype=np.int64) * cells)[:, None]
        for start, stop, offsets in seg.chunks():
            cells_idx = _cells_of_lines(ring, offsets[:, None], block[:, start:stop])
            mask[(cells_idx.reshape(b, -1) + base).ravel()] = True
        out[lo:lo + b] = np.count_nonzero(mask.reshape(b, cells), axis=1)
    return out


def measure(kset: KakeyaSet) -> Fraction:
    """Haar measure of the (p^{-n})-neighbourhood: card / p^{nd}."""
    return Fraction(kset.card, kset.cells)


def _direction_values(point: ProjectivePoint | Sequence[RingElement]) -> tuple[Ring, np.ndarray]:
    if isinstance(point, ProjectivePoint):
        return point.ring, np.array(point.values, dtype=np.int64)
    ring = point[0].ring
    return ring, np.array([c.value for c in point], dtype=np.int64)


def _base_values(ring: Ring, base) -> np.ndarray:
    return np.array([c.value if isinstance(c, RingElement) else int(c) for c in base], dtype=np.int64)


def segment(a: ProjectivePoint, base: Sequence[RingElement | int], ell: int) -> list[int]:
    """Cell indices of {t * can(a) + base : t in m^ell}, in order of increasing t."""
    ring, can = _direction_values(a)
    if not 0 <= ell <= ring.n:
        raise InvalidInput(f"segment length exponent {ell} outside [0, {ring.n}]")
    b = _base_values(ring, base)
    if b.size != can.size:
        raise MixedRings("base point and direction have different dimensions")
    offsets = _line_offsets(ring, can)[:: ring.p ** ell]
    coords = ring.add_packed(offsets, b[None, :])
    return [int(i) for i in _encode(ring, coords)]


def segment_intersection_card(a: ProjectivePoint, base_a, b: ProjectivePoint, base_b, ell: int) -> int:
    if a == b:
        raise InvalidInput("segment intersection needs two distinct directions")
    if a.ring != b.ring or a.d != b.d:
        raise MixedRings("directions live in different projective spaces")
    return len(set(segment(a, base_a, ell)) & set(segment(b, base_b, ell)))


def intersection_card_C_A(f: LipschitzMap, subset: Iterable[ProjectivePoint | int]) -> int:
    """Card of the intersection of the unit segments S_a(f), a in ``subset``."""
    space = f.space
    idxs = sorted({point_index(a) if isinstance(a, ProjectivePoint) else int(a) for a in subset})
    if not idxs:
        raise EmptySubset("C_A needs a nonempty set of directions")
    segs = [segment(space.point(i), f.table[i], 0) for i in idxs]
    segs.sort(key=len)
    others = [set(s) for s in segs[1:]]
    return sum(1 for x in segs[0] if all(x in s for s in others))


# -- file formats ---------------------------------------------------------

def write_kakeya(kset: KakeyaSet, path: str | Path) -> None:
    """Raw export: 16-byte header then the packed little-endian bit array.

    Header layout (little-endian): magic ``b"NAKS"``, format version (u8),
    flags (u8; bit 0 set for the series family), d (u16), p (u32), n (u32).
    """
    flags = _FLAG_SERIES if kset.ring.family is Family.SERIES else 0
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, FORMAT_VERSION, flags, kset.d, kset.ring.p, kset.ring.n))
        fh.write(kset.bits.tobytes())


def read_kakeya(path: str | Path) -> KakeyaSet:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise InvalidInput(f"{path}: truncated header")
    magic, version, flags, d, p, n = HEADER.unpack_from(raw)
    if magic != MAGIC or version != FORMAT_VERSION:
        raise InvalidInput(f"{path}: not a NAKS v{FORMAT_VERSION} file")
    family = Family.SERIES if flags & _FLAG_SERIES else Family.PADIC
    ring = Ring(family, p, n)
    bits = np.frombuffer(raw, dtype=np.uint8, offset=HEADER.size)
    return KakeyaSet(ring, d, bits)


def kakeya_to_csv(kset: KakeyaSet) -> str:
    """Point list, one row per member, coordinates in the ring element text format."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x_{i + 1}" for i in range(kset.d)])
    for idx in kset.indices():
        writer.writerow([str(c) for c in cell_coords(kset.ring, kset.d, int(idx))])
    return buf.getvalue()
