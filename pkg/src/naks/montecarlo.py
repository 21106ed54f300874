"""Monte Carlo and exhaustive estimation of X_n.

Sample ``i`` at level ``n`` is built from its own counter-based stream
(:func:`naks.lipschitz.sample_generator` with ``stream=n``), so the card
sequence, and therefore every statistic, is a function of ``(seed,
samples)`` only.  Workers receive contiguous index ranges; their results are
concatenated in index order and aggregated with exact integer sums.
"""
from __future__ import annotations

import concurrent.futures
import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import __version__
from .errors import InvalidInput, InvariantViolation
from .kakeya import DEFAULT_MEMORY_CAP, batch_cards, check_memory
from .lipschitz import (
    DEFAULT_ENUMERATION_CAP,
    check_enumerable,
    index_draws,
    layers_to_table,
    random_draws,
    sample_generator,
)
from .projective import projective_space
from .residue_ring import Family, Ring
from .theory import expected_measure, lower_bound_dim2

STATS_FIELDS = [
    "q", "d", "n", "samples", "seed",
    "mean_empirical", "std_empirical", "mean_theoretical", "parity_even_fraction",
]
_CHUNK = 2048


@dataclass(frozen=True)
class ExperimentConfig:
    family: Family = Family.PADIC
    p: int = 2
    d: int = 2
    n_values: tuple[int, ...] = (5,)
    samples: int = 100_000
    seed: int = 0
    workers: int = 1
    bins: int = 100
    memory_cap: int = DEFAULT_MEMORY_CAP

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if self.samples < 1:
            raise InvalidInput("samples must be >= 1")
        if self.bins < 1:
            raise InvalidInput("histogram bins must be >= 1")
        if not self.n_values or min(self.n_values) < 1:
            raise InvalidInput("need a nonempty range of levels n >= 1")
        if self.d < 2:
            raise InvalidInput("dimension must be >= 2")
        if self.workers < 1:
            raise InvalidInput("workers must be >= 1")
        if self.seed < 0:
            raise InvalidInput("seed must be non-negative")
        for n in self.n_values:
            check_memory(self.ring(n), self.d, self.memory_cap)

    def ring(self, n: int) -> Ring:
        return Ring(self.family, self.p, n)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["family"] = self.family.value
        out["n_values"] = list(self.n_values)
        return out


@dataclass
class SampleStats:
    q: int
    d: int
    n: int
    samples: int
    seed: int
    mean_empirical: float
    std_empirical: float
    mean_theoretical: float
    parity_even_fraction: float
    min: float
    max: float
    card_sum: int
    card_sq_sum: int
    histogram: list[tuple[float, float, float]] = field(default_factory=list)

    @property
    def count(self) -> int:
        return self.samples

    def row(self) -> dict:
        return {k: getattr(self, k) for k in STATS_FIELDS}


# -- sampling -------------------------------------------------------------

def _cards_for_range(ring: Ring, d: int, seed: int, lo: int, hi: int, memory_cap: int) -> np.ndarray:
    space = projective_space(ring, d)
    draws = np.stack([random_draws(space, sample_generator(seed, i, stream=ring.n)) for i in range(lo, hi)])
    return batch_cards(space, layers_to_table(space, draws), memory_cap)


def sample_cards(ring: Ring, d: int, samples: int, seed: int, workers: int = 1,
                 memory_cap: int = DEFAULT_MEMORY_CAP) -> np.ndarray:
    """Card N(f) for samples 0..samples-1, in index order."""
    check_memory(ring, d, memory_cap)
    ranges = [(lo, min(samples, lo + _CHUNK)) for lo in range(0, samples, _CHUNK)]
    if workers <= 1 or len(ranges) == 1:
        parts = [_cards_for_range(ring, d, seed, lo, hi, memory_cap) for lo, hi in ranges]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_cards_for_range, ring, d, seed, lo, hi, memory_cap) for lo, hi in ranges]
            parts = [fut.result() for fut in futures]
    return np.concatenate(parts)


def histogram(values: Sequence[float], bins: int) -> list[tuple[float, float, float]]:
    """Equal-width bins over [min, max]; density = count / (N * width)."""
    if bins < 1:
        raise InvalidInput("histogram bins must be >= 1")
    values = np.asarray(values, dtype=float)
    counts, edges = np.histogram(values, bins=bins)
    widths = np.diff(edges)
    dens = counts / (values.size * widths)
    return [(float(lo), float(hi), float(x)) for lo, hi, x in zip(edges[:-1], edges[1:], dens)]


def summarize(ring: Ring, d: int, cards: np.ndarray, seed: int, bins: int = 100) -> SampleStats:
    """Exact-integer aggregation of card values into SampleStats."""
    cells = ring.size ** d
    count = int(cards.size)
    card_sum = sum(int(c) for c in cards)
    card_sq_sum = sum(int(c) * int(c) for c in cards)
    mean = Fraction(card_sum, count * cells)
    var = Fraction(count * card_sq_sum - card_sum * card_sum, (count * cells) ** 2)
    stats = SampleStats(
        q=ring.p, d=d, n=ring.n, samples=count, seed=seed,
        mean_empirical=float(mean),
        std_empirical=math.sqrt(var),
        mean_theoretical=float(expected_measure(ring.p, d, ring.n)),
        parity_even_fraction=float(np.count_nonzero(cards % 2 == 0)) / count,
        min=int(cards.min()) / cells,
        max=int(cards.max()) / cells,
        card_sum=card_sum,
        card_sq_sum=card_sq_sum,
        histogram=histogram(cards / cells, bins),
    )
    if d == 2:
        bound = lower_bound_dim2(ring.p, ring.n)
        if Fraction(int(cards.min()), cells) < bound:
            raise InvariantViolation(
                f"sample with X_n = {int(cards.min())}/{cells} below the planar bound {bound}"
            )
    return stats


def run_experiment(config: ExperimentConfig) -> list[SampleStats]:
    out = []
    for n in config.n_values:
        ring = config.ring(n)
        cards = sample_cards(ring, config.d, config.samples, config.seed, config.workers, config.memory_cap)
        out.append(summarize(ring, config.d, cards, config.seed, config.bins))
    return out


# -- exhaustive oracle ----------------------------------------------------

def exact_card_total(ring: Ring, d: int, cap: int = DEFAULT_ENUMERATION_CAP) -> tuple[int, int]:
    """(sum of Card N(f) over all f in Omega_n, Card Omega_n)."""
    total_maps = check_enumerable(ring, d, cap)
    space = projective_space(ring, d)
    total = 0
    chunk = 1 << 15
    for start in range(0, total_maps, chunk):
        idx = np.arange(start, min(total_maps, start + chunk), dtype=np.int64)
        tables = layers_to_table(space, index_draws(space, idx))
        total += int(batch_cards(space, tables).sum(dtype=np.int64))
    return total, total_maps


def exact_experiment(ring: Ring, d: int, cap: int = DEFAULT_ENUMERATION_CAP) -> Fraction:
    """Mean of X_n over the whole of Omega_n, as an exact rational."""
    total, maps = exact_card_total(ring, d, cap)
    return Fraction(total, maps * ring.size ** d)


# -- reports --------------------------------------------------------------

def provenance(config: ExperimentConfig | None = None, **extra) -> dict:
    meta = {"package": "naks", "version": __version__}
    if config is not None:
        meta["config"] = config.to_dict()
    meta.update(extra)
    return meta


def stats_csv(stats: Sequence[SampleStats], meta: dict | None = None) -> str:
    buf = io.StringIO()
    if meta is not None:
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    writer = csv.DictWriter(buf, fieldnames=STATS_FIELDS, lineterminator="\n")
    writer.writeheader()
    for s in stats:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in s.row().items()})
    return buf.getvalue()


def histogram_csv(stats: SampleStats, meta: dict | None = None) -> str:
    buf = io.StringIO()
    if meta is not None:
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    buf.write(f"# n={stats.n} mean_theoretical={stats.mean_theoretical!r} "
              f"mean_empirical={stats.mean_empirical!r}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_lower", "bin_upper", "density"])
    for lo, hi, dens in stats.histogram:
        writer.writerow([repr(lo), repr(hi), repr(dens)])
    return buf.getvalue()


def stats_json(stats: Sequence[SampleStats], meta: dict | None = None) -> str:
    payload = {
        "metadata": meta or {},
        "stats": [s.row() for s in stats],
        "histograms": [
            {
                "n": s.n,
                "mean_theoretical": s.mean_theoretical,
                "mean_empirical": s.mean_empirical,
                "bins": [{"bin_lower": lo, "bin_upper": hi, "density": x} for lo, hi, x in s.histogram],
            }
            for s in stats
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True)
