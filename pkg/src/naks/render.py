"""Pictures of Kakeya sets.

Coordinates are placed on a ``p^n`` grid by digit reversal: the element
``sum s_i pi^i`` goes to the pixel whose base-p digits, most significant
first, are ``s_0, s_1, ...``.  This is the level-n shadow of the map
``sum s_i pi^i -> sum s_i p^{-i-1}`` into [0, 1], so neighbouring residue
classes end up in neighbouring pixel blocks.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInput, WrongDimension
from .kakeya import KakeyaSet
from .residue_ring import Ring, RingElement

BLACK = 0
WHITE = 255


def reverse_coord(x: RingElement | int, n: int, p: int) -> int:
    """Pixel index of ``x``: its ``n`` base-p digits read in reverse order."""
    value = x.value if isinstance(x, RingElement) else int(x)
    if not 0 <= value < p ** n:
        raise InvalidInput(f"{value} is not a level-{n} code for p={p}")
    out = 0
    for _ in range(n):
        value, s = divmod(value, p)
        out = out * p + s
    return out


def reverse_table(ring: Ring) -> np.ndarray:
    """``reverse_coord`` for every packed code of ``ring``, as an array."""
    codes = np.arange(ring.size, dtype=np.int64)
    out = np.zeros_like(codes)
    for _ in range(ring.n):
        out = out * ring.p + codes % ring.p
        codes //= ring.p
    return out


@dataclass
class RasterImage:
    """Grayscale image; ``pixels[row, col]`` with ``row`` from the second coordinate."""

    pixels: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    def black_count(self) -> int:
        return int(np.count_nonzero(self.pixels == BLACK))


def _reversed_cells(kset: KakeyaSet) -> np.ndarray:
    """Occupied cells as rows of reversed coordinates, shape ``(card, d)``."""
    ring = kset.ring
    rev = reverse_table(ring)
    idx = kset.indices()
    cols = []
    for _ in range(kset.d):
        idx, c = np.divmod(idx, ring.size)
        cols.append(rev[c])
    return np.stack(cols, axis=1) if cols else np.empty((0, 0), dtype=np.int64)


def render_2d(kset: KakeyaSet) -> RasterImage:
    """Black pixel at (reverse(x_1), reverse(x_2)) for each point of a planar set."""
    if kset.d != 2:
        raise WrongDimension(f"render_2d needs d = 2, got d = {kset.d}")
    side = kset.ring.size
    pixels = np.full((side, side), WHITE, dtype=np.uint8)
    cells = _reversed_cells(kset)
    pixels[cells[:, 1], cells[:, 0]] = BLACK
    meta = {"p": kset.ring.p, "n": kset.ring.n, "d": kset.d, "seed": kset.seed}
    return RasterImage(pixels, meta)


def write_pgm(image: RasterImage, path: str | Path) -> None:
    """Binary PGM (P5), maxval 255."""
    meta = image.metadata
    seed = "" if meta.get("seed") is None else meta["seed"]
    header = (
        f"P5\n# NAKS p={meta.get('p', '')} n={meta.get('n', '')} d={meta.get('d', '')} seed={seed}\n"
        f"{image.width} {image.height}\n255\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(image.pixels, dtype=np.uint8).tobytes())


def read_pgm(path: str | Path) -> RasterImage:
    """Reader for the files produced by :func:`write_pgm`."""
    raw = Path(path).read_bytes()
    tokens: list[bytes] = []
    comments: list[str] = []
    pos = 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            end = raw.index(b"\n", pos)
            comments.append(raw[pos + 1:end].decode("ascii").strip())
            pos = end + 1
            continue
        start = pos
        while not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    pos += 1
    if tokens[0] != b"P5" or tokens[3] != b"255":
        raise InvalidInput(f"{path}: not an 8-bit P5 image")
    width, height = int(tokens[1]), int(tokens[2])
    pixels = np.frombuffer(raw, dtype=np.uint8, count=width * height, offset=pos).reshape(height, width)
    meta: dict = {}
    for line in comments:
        if line.startswith("NAKS"):
            for item in line.split()[1:]:
                key, _, value = item.partition("=")
                meta[key] = int(value) if value else None
    return RasterImage(pixels.copy(), meta)


def voxel_rows(kset: KakeyaSet) -> list[tuple[int, int, int]]:
    if kset.d != 3:
        raise WrongDimension(f"voxel export needs d = 3, got d = {kset.d}")
    cells = _reversed_cells(kset)
    return sorted(tuple(int(v) for v in row) for row in cells)


def export_voxels(kset: KakeyaSet, path: str | Path) -> int:
    """Write the sorted reversed coordinates of a 3-dimensional set; returns the row count."""
    rows = voxel_rows(kset)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rx", "ry", "rz"])
        writer.writerows(rows)
    return len(rows)
