"""Exact closed forms and combinatorial identities behind E[X_n].

Everything here works with ``fractions.Fraction`` and Python integers; the
only floating point helpers are the ``*_float`` functions used for very
large ``n`` where exact denominators become astronomically long.  ``q`` is
any integer >= 2 (the intended values are prime powers) and need not match
an implemented ring.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import (
    InvalidInput,
    NonIntegralCount,
    SumExplosion,
    TooManySubsets,
    UnsortedSubset,
)
from .projective import ProjectivePoint, enumerate_projective, valuation_distance
from .residue_ring import Ring

MAX_SUM_TERMS = 10 ** 8
MAX_SUBSET_POINTS = 20


def _check_qd(q: int, d: int) -> None:
    if q < 2 or d < 2:
        raise InvalidInput(f"need q >= 2 and d >= 2 (got q={q}, d={d})")


def affine_count(q: int, d: int) -> int:
    """q^{d-1}: size of every fibre of P^{d-1}(R_{i+1}) -> P^{d-1}(R_i)."""
    return q ** (d - 1)


def projective_count(q: int, d: int) -> int:
    """1 + q + ... + q^{d-1} = Card P^{d-1}(k)."""
    return (q ** d - 1) // (q - 1)


# -- the recurrence -------------------------------------------------------

def u_sequence(q: int, d: int, n: int) -> Fraction:
    """u_0 = 1, u_{k+1} = 1 - (1 - u_k / q^{d-1})^{q^{d-1}}."""
    _check_qd(q, d)
    if n < 0:
        raise InvalidInput(f"n must be >= 0, got {n}")
    a = affine_count(q, d)
    u = Fraction(1)
    for _ in range(n):
        u = 1 - (1 - u / a) ** a
    return u


def u_prime(q: int, d: int, n: int) -> Fraction:
    """u'_n = 1 - (1 - u_n)^{1 + 1/q + ... + 1/q^{d-1}}, kept rational.

    Since 1 - u_n = (1 - u_{n-1}/q^{d-1})^{q^{d-1}}, the fractional power is
    (1 - u_{n-1}/q^{d-1})^{1 + q + ... + q^{d-1}}.
    """
    _check_qd(q, d)
    if n < 1:
        raise InvalidInput(f"n must be >= 1, got {n}")
    u_prev = u_sequence(q, d, n - 1)
    return 1 - (1 - u_prev / affine_count(q, d)) ** projective_count(q, d)


def expected_measure(q: int, d: int, n: int) -> Fraction:
    """E[X_n]: mean measure of the q^{-n}-neighbourhood of a random Kakeya set."""
    return u_prime(q, d, n)


def expected_card(q: int, d: int, n: int) -> Fraction:
    return q ** (n * d) * u_prime(q, d, n)


def u_sequence_float(q: int, d: int, n: int) -> float:
    a = affine_count(q, d)
    u = 1.0
    for _ in range(n):
        u = -math.expm1(a * math.log1p(-u / a))
    return u


def expected_measure_float(q: int, d: int, n: int) -> float:
    """Floating evaluation of E[X_n]; for large n where exact values are impractical."""
    u_prev = u_sequence_float(q, d, n - 1)
    a = affine_count(q, d)
    return -math.expm1(projective_count(q, d) * math.log1p(-u_prev / a))


@dataclass(frozen=True)
class ExpectationReport:
    q: int
    d: int
    n: int
    u_n: Fraction
    u_prime_n: Fraction
    expected_measure: Fraction
    expected_card: Fraction


def expectation_report(q: int, d: int, n: int) -> ExpectationReport:
    up = u_prime(q, d, n)
    return ExpectationReport(q, d, n, u_sequence(q, d, n), up, up, q ** (n * d) * up)


def asymptotic_constant(q: int, d: int) -> Fraction:
    """Limit of n * E[X_n]: 2 (q^d - 1) / ((q - 1)(q^{d-1} - 1))."""
    _check_qd(q, d)
    return Fraction(2 * (q ** d - 1), (q - 1) * (q ** (d - 1) - 1))


def lower_bound_dim2(q: int, n: int) -> Fraction:
    """Lower bound 1 / ((q-1)/(q+1) n + 1) on the measure of a planar Besikovitch neighbourhood."""
    if q < 2 or n < 1:
        raise InvalidInput(f"need q >= 2 and n >= 1 (got q={q}, n={n})")
    return 1 / (Fraction(q - 1, q + 1) * n + 1)


def lower_bound_torsion(q: int, n: int, ell: int) -> Fraction:
    """Lower bound on Card B for an ell-Besikovitch set B in R_n^2."""
    if not 0 <= ell <= n:
        raise InvalidInput(f"ell must lie in [0, {n}], got {ell}")
    return q ** (2 * (n - ell)) * lower_bound_dim2(q, n)


# -- height functions -----------------------------------------------------

@dataclass(frozen=True)
class HeightFunction:
    """h : [1, ell] -> [1, n], stored as the tuple (h(1), ..., h(ell)).

    By convention h(0) = n; it is not stored.
    """

    n: int
    values: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if self.n < 1:
            raise InvalidInput(f"level must be >= 1, got {self.n}")
        bad = [v for v in self.values if not 1 <= v <= self.n]
        if bad:
            raise InvalidInput(f"height values {bad} outside [1, {self.n}]")

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


def _values(h) -> tuple[int, ...]:
    return h.values if isinstance(h, HeightFunction) else tuple(h)


def height_function(points: Sequence[ProjectivePoint]) -> HeightFunction:
    """h_A(j) = n - v_n(a_j, a_{j-1}) for A sorted in enumeration order."""
    if not points:
        raise InvalidInput("height function of an empty subset is undefined")
    n = points[0].ring.n
    for prev, cur in zip(points, points[1:]):
        if not prev < cur:
            raise UnsortedSubset(f"{prev} does not precede {cur}")
    return HeightFunction(n, tuple(n - valuation_distance(a, b) for a, b in zip(points, points[1:])))


def multiplicity(h) -> tuple[int, ...]:
    """M(h)(j) = #{j' <= j : h(j') = h(j) and h <= h(j) on [j', j]}."""
    vals = _values(h)
    out = []
    for j, hj in enumerate(vals):
        count = 0
        for jp in range(j, -1, -1):
            if vals[jp] > hj:
                break
            if vals[jp] == hj:
                count += 1
        out.append(count)
    return tuple(out)


def weight(h, q: int, d: int) -> tuple[Fraction, ...]:
    a = affine_count(q, d)
    return tuple(Fraction(a - m, a * (m + 1)) for m in multiplicity(h))


def modified_weight(h, q: int, d: int, n: int) -> tuple[Fraction, ...]:
    """W'(h): as W(h) but with 1 + q + ... + q^{d-1} replacing q^{d-1} in the numerator where h(j) = n."""
    a = affine_count(q, d)
    top = projective_count(q, d)
    vals = _values(h)
    return tuple(
        Fraction((top if v == n else a) - m, a * (m + 1))
        for v, m in zip(vals, multiplicity(vals))
    )


def count_with_height(h, q: int, d: int, n: int) -> int:
    """Number of subsets of P^{d-1}(R_n) whose height function is h."""
    vals = _values(h)
    if any(not 1 <= v <= n for v in vals):
        raise InvalidInput(f"height values must lie in [1, {n}]")
    a = affine_count(q, d)
    total = Fraction(projective_count(q, d), a) * a ** n
    for w, v in zip(modified_weight(vals, q, d, n), vals):
        total *= w * a ** v
    if total.denominator != 1:
        raise NonIntegralCount(f"non-integral subset count {total} for h={vals}")
    return total.numerator


def directional_mean(h, q: int, d: int, n: int) -> Fraction:
    """E[C_A] = q^n * prod_j q^{-(d-1) h(j)}, depending on A only through h_A."""
    vals = _values(h)
    return Fraction(q ** n, affine_count(q, d) ** sum(vals))


def card_fiber_B_A(h, q: int, d: int, n: int) -> int:
    """Number of value tuples (f(a_0), ..., f(a_ell)) realised by some f in Omega_n."""
    return q ** (n * d) * q ** (d * sum(_values(h)))


def iter_height_functions(n: int, length: int) -> Iterator[HeightFunction]:
    for vals in itertools.product(range(1, n + 1), repeat=length):
        yield HeightFunction(n, vals)


def inclusion_exclusion_mean(ring: Ring, d: int) -> Fraction:
    """E[Card N(f)] = sum over nonempty A of (-1)^{1+|A|} E[C_A]."""
    points = enumerate_projective(ring, d)
    if len(points) > MAX_SUBSET_POINTS:
        raise TooManySubsets(f"{len(points)} directions; at most {MAX_SUBSET_POINTS} supported")
    q, n = ring.p, ring.n
    size = len(points)
    dist = [[valuation_distance(a, b) for b in points] for a in points]
    total = Fraction(0)
    for mask in range(1, 1 << size):
        members = [i for i in range(size) if mask >> i & 1]
        heights = [n - dist[i][j] for i, j in zip(members, members[1:])]
        term = directional_mean(heights, q, d, n)
        total += term if len(members) % 2 else -term
    return total


# -- the alternating sum over all height functions ------------------------

def _threshold(q: int, d: int, n: int, value: int, modified: bool) -> int:
    return projective_count(q, d) if modified and value == n else affine_count(q, d)


def weighted_height_sum(q: int, d: int, n: int, modified: bool = False,
                        method: str = "states") -> Fraction:
    """sum over h in H_n of (-1)^{ell(h)} prod_j W(h)(j)  (W' when ``modified``).

    Only finitely many h carry a nonzero weight: W vanishes as soon as a
    multiplicity reaches its threshold.  Two evaluation strategies:

    ``"states"``
        Dynamic programming over the multiplicity state.  Reading h left to
        right, M(h)(j) is one more than the number of earlier occurrences of
        h(j) since the last strictly larger value, so the vector of those
        counts (one per height level) determines every future weight.
        Appending a value strictly increases that vector read from the top
        level down, so the state graph is acyclic and finite.
    ``"enumerate"``
        Lists every nonzero term explicitly (h split at its occurrences of
        the top value into blocks of lower heights) and evaluates its weight
        from :func:`multiplicity`.  Raises ``SumExplosion`` past
        ``MAX_SUM_TERMS`` terms.
    ``"blocks"``
        Uses the same cut at the top value in closed form: the m-th top
        occurrence has multiplicity m and the blocks between top
        occurrences are independent level-(n-1) sums, so
        S_n = sum_m prod_{k<=m} (-W_top(k)) * S_{n-1}^{m+1}.  Linear in n.
    """
    _check_qd(q, d)
    if n < 1:
        raise InvalidInput(f"n must be >= 1, got {n}")
    if method == "states":
        return _height_sum_states(q, d, n, modified)
    if method == "enumerate":
        return _height_sum_enumerate(q, d, n, modified)
    if method == "blocks":
        return _height_sum_blocks(q, d, n, modified)
    raise InvalidInput(f"unknown method {method!r}")


def _height_sum_states(q: int, d: int, n: int, modified: bool) -> Fraction:
    a = affine_count(q, d)
    limits = [_threshold(q, d, n, v, modified) for v in range(1, n + 1)]
    n_states = math.prod(limits)
    if n_states > MAX_SUM_TERMS // n:
        raise SumExplosion(f"{n_states} multiplicity states for q={q}, d={d}, n={n}")
    # state c: c[v-1] = occurrences of v since the last value > v, each < limit
    # Successors are larger when read top level first, so sweep in decreasing order.
    ranges = [range(lim - 1, -1, -1) for lim in reversed(limits)]
    memo: dict[tuple[int, ...], Fraction] = {}
    for top_first in itertools.product(*ranges):
        c = top_first[::-1]
        total = Fraction(1)
        for v in range(1, n + 1):
            m = c[v - 1] + 1
            if m >= limits[v - 1]:
                continue  # weight (limit - m) vanishes
            succ = (0,) * (v - 1) + (m,) + c[v:]
            total -= Fraction(limits[v - 1] - m, a * (m + 1)) * memo[succ]
        memo[c] = total
    return memo[(0,) * n]


def _height_sum_blocks(q: int, d: int, n: int, modified: bool) -> Fraction:
    a = affine_count(q, d)
    s = Fraction(1)  # H_0 holds only the empty function
    for level in range(1, n + 1):
        limit = _threshold(q, d, n, level, modified)
        total = Fraction(0)
        coeff = Fraction(1)
        for m in range(limit):
            if m:
                coeff *= Fraction(-(limit - m), a * (m + 1))
            total += coeff * s ** (m + 1)
        s = total
    return s


def _count_terms(counts: int, limit: int) -> int:
    return sum(counts ** (m + 1) for m in range(limit))


def nonzero_height_functions(q: int, d: int, n: int, modified: bool = False) -> Iterator[tuple[int, ...]]:
    """Every h in H_n whose (modified) weight product is nonzero.

    h is cut at its occurrences of the value n into m + 1 blocks of H_{n-1};
    the m-th top value carries the factor (threshold - m), so m stays below
    the threshold, and each block must itself have a nonzero weight.
    """
    a = affine_count(q, d)
    level_terms: list[tuple[int, ...]] = [()]
    for level in range(1, n + 1):
        limit = _threshold(q, d, n, level, modified) if level == n else a
        if _count_terms(len(level_terms), limit) > MAX_SUM_TERMS:
            raise SumExplosion(f"more than {MAX_SUM_TERMS} height functions at level {level}")
        if level == n:
            break
        level_terms = list(_join_blocks(level_terms, level, limit))
    yield from _join_blocks(level_terms, n, limit)


def _join_blocks(blocks: list[tuple[int, ...]], top: int, limit: int) -> Iterator[tuple[int, ...]]:
    for m in range(limit):
        for parts in itertools.product(blocks, repeat=m + 1):
            out = list(parts[0])
            for part in parts[1:]:
                out.append(top)
                out.extend(part)
            yield tuple(out)


def _height_sum_enumerate(q: int, d: int, n: int, modified: bool) -> Fraction:
    total = Fraction(0)
    for h in nonzero_height_functions(q, d, n, modified):
        ws = modified_weight(h, q, d, n) if modified else weight(h, q, d)
        term = math.prod(ws, start=Fraction(1))
        total += -term if len(h) % 2 else term
    return total
