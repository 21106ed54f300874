"""Truncated local rings R_n = R / m^n with a shared digit representation.

Two families are supported:

* ``padic``  -- R = Z_p, so R_n = Z / p^n Z (addition carries between digits);
* ``series`` -- R = F_p[[t]], so R_n = F_p[t] / (t^n) (digit-wise, carry free).

An element is the digit vector ``(s_0, ..., s_{n-1})`` with ``0 <= s_i < p``
standing for ``sum s_i * pi^i`` (pi = p or t).  Internally it is packed into
one integer ``sum s_i * p^i`` in ``[0, p^n)``; for the p-adic family this is
just the residue itself.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import InvalidInput, InvalidLevel, MixedRings, NonPrimeModulus, NotAUnit


class Family(str, enum.Enum):
    PADIC = "padic"
    SERIES = "series"


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True)
class Ring:
    """Descriptor of R_n.  Immutable and hashable; equal descriptors mean the same ring."""

    family: Family
    p: int
    n: int

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not isinstance(self.p, (int, np.integer)) or not is_prime(int(self.p)):
            raise NonPrimeModulus(f"residue characteristic must be prime, got {self.p!r}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise InvalidLevel(f"level must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "n", int(self.n))

    # -- basic data -------------------------------------------------------
    @property
    def size(self) -> int:
        return self.p ** self.n

    @property
    def q(self) -> int:
        return self.p

    def __str__(self) -> str:
        return f"{self.family.value}:p={self.p},n={self.n}"

    @cached_property
    def zero(self) -> RingElement:
        return RingElement(self, 0)

    @cached_property
    def one(self) -> RingElement:
        return RingElement(self, 1)

    @cached_property
    def uniformizer(self) -> RingElement:
        # pi = p or t; both pack to the integer p (digit 1 in position 1)
        return RingElement(self, self.p % self.size)

    def at_level(self, m: int) -> Ring:
        return Ring(self.family, self.p, m)

    # -- constructors -----------------------------------------------------
    def element(self, packed: int) -> RingElement:
        """Element from its packed code in ``[0, p^n)``."""
        packed = int(packed)
        if not 0 <= packed < self.size:
            raise InvalidInput(f"packed code {packed} out of range for {self}")
        return RingElement(self, packed)

    def from_int(self, k: int) -> RingElement:
        """Image of the integer ``k`` under Z -> R_n."""
        if self.family is Family.PADIC:
            return RingElement(self, k % self.size)
        return RingElement(self, k % self.p)

    def from_digits(self, digits: Sequence[int]) -> RingElement:
        if len(digits) != self.n:
            raise InvalidInput(f"expected {self.n} digits, got {len(digits)}")
        packed = 0
        for s in reversed(digits):
            s = int(s)
            if not 0 <= s < self.p:
                raise InvalidInput(f"digit {s} outside [0, {self.p})")
            packed = packed * self.p + s
        return RingElement(self, packed)

    def parse(self, text: str) -> RingElement:
        """Parse the textual element format: base-p digits, least significant first."""
        text = text.strip()
        if len(text) != self.n or not text.isdigit():
            raise InvalidInput(f"{text!r} is not a {self.n}-digit element of {self}")
        return self.from_digits([int(c) for c in text])

    def elements(self) -> Iterator[RingElement]:
        for v in range(self.size):
            yield RingElement(self, v)

    # -- packed arithmetic (ints or integer numpy arrays) -----------------
    def digits_of(self, packed: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.n):
            packed, s = divmod(packed, self.p)
            out.append(s)
        return tuple(out)

    def add_packed(self, x, y):
        if self.family is Family.PADIC:
            if self.p == 2:
                return (x + y) & (self.size - 1)
            if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
                # operands are reduced, so one conditional subtraction suffices
                s = x + y
                s -= self.size * (s >= self.size)
                return s
            return (x + y) % self.size
        if self.p == 2:
            return x ^ y
        out = 0
        scale = 1
        for _ in range(self.n):
            out = out + ((x // scale + y // scale) % self.p) * scale
            scale *= self.p
        return out

    def neg_packed(self, x):
        if self.family is Family.PADIC:
            return (-x) % self.size
        if self.p == 2:
            return x
        out = 0
        scale = 1
        for _ in range(self.n):
            out = out + ((-(x // scale)) % self.p) * scale
            scale *= self.p
        return out

    def mul_packed(self, x: int, y: int) -> int:
        if self.family is Family.PADIC:
            return (x * y) % self.size
        if self.p == 2:
            acc = 0
            mask = self.size - 1
            while y:
                if y & 1:
                    acc ^= x
                x = (x << 1) & mask
                y >>= 1
            return acc
        a = self.digits_of(x)
        b = self.digits_of(y)
        prod = [0] * self.n
        for i, ai in enumerate(a):
            if ai:
                for j in range(self.n - i):
                    prod[i + j] += ai * b[j]
        return self.from_digits([c % self.p for c in prod]).value

    def valuation_packed(self, x: int) -> int:
        if x == 0:
            return self.n
        v = 0
        while x % self.p == 0:
            x //= self.p
            v += 1
        return v

    # -- element arithmetic ----------------------------------------------
    def _check(self, *xs: RingElement) -> None:
        for x in xs:
            if x.ring != self:
                raise MixedRings(f"element of {x.ring} used in {self}")

    def add(self, x: RingElement, y: RingElement) -> RingElement:
        self._check(x, y)
        return RingElement(self, self.add_packed(x.value, y.value))

    def sub(self, x: RingElement, y: RingElement) -> RingElement:
        self._check(x, y)
        return RingElement(self, self.add_packed(x.value, self.neg_packed(y.value)))

    def neg(self, x: RingElement) -> RingElement:
        self._check(x)
        return RingElement(self, self.neg_packed(x.value))

    def mul(self, x: RingElement, y: RingElement) -> RingElement:
        self._check(x, y)
        return RingElement(self, self.mul_packed(x.value, y.value))

    def is_unit(self, x: RingElement) -> bool:
        self._check(x)
        return x.value % self.p != 0

    def valuation(self, x: RingElement) -> int:
        self._check(x)
        return self.valuation_packed(x.value)

    def inverse(self, x: RingElement) -> RingElement:
        self._check(x)
        if not self.is_unit(x):
            raise NotAUnit(f"{x} is not invertible in {self}")
        if self.family is Family.PADIC:
            return RingElement(self, pow(x.value, -1, self.size))
        # Newton iteration y <- y (2 - x y); precision doubles each round
        y = pow(x.value % self.p, -1, self.p)
        two = 2 % self.p
        precision = 1
        while precision < self.n:
            xy = self.mul_packed(x.value, y)
            y = self.mul_packed(y, self.add_packed(two, self.neg_packed(xy)))
            precision *= 2
        return RingElement(self, y)

    def reduce(self, x: RingElement, m: int) -> RingElement:
        self._check(x)
        if not 1 <= m <= self.n:
            raise InvalidLevel(f"cannot reduce level {self.n} to level {m}")
        return RingElement(self.at_level(m), x.value % self.p ** m)


@dataclass(frozen=True)
class RingElement:
    ring: Ring
    value: int

    @property
    def digits(self) -> tuple[int, ...]:
        return self.ring.digits_of(self.value)

    def __str__(self) -> str:
        return "".join(str(s) for s in self.digits)

    def __repr__(self) -> str:
        return f"RingElement({self.ring}, {self})"

    def __add__(self, other: RingElement) -> RingElement:
        return self.ring.add(self, other)

    def __sub__(self, other: RingElement) -> RingElement:
        return self.ring.sub(self, other)

    def __neg__(self) -> RingElement:
        return self.ring.neg(self)

    def __mul__(self, other: RingElement) -> RingElement:
        return self.ring.mul(self, other)

    def is_unit(self) -> bool:
        return self.ring.is_unit(self)

    def valuation(self) -> int:
        return self.ring.valuation(self)

    def inverse(self) -> RingElement:
        return self.ring.inverse(self)

    def reduce(self, m: int) -> RingElement:
        return self.ring.reduce(self, m)


_RING_RE = re.compile(r"^\s*(padic|series)\s*:\s*p\s*=\s*(\d+)\s*,\s*n\s*=\s*(\d+)\s*$")


def parse_ring(text: str) -> Ring:
    """Parse ``"padic:p=2,n=3"`` style ring strings."""
    m = _RING_RE.match(text)
    if not m:
        raise InvalidInput(f"malformed ring string {text!r}")
    return Ring(Family(m.group(1)), int(m.group(2)), int(m.group(3)))


# Functional surface -------------------------------------------------------

def make_ring(family: str | Family, p: int, n: int) -> Ring:
    try:
        fam = Family(family)
    except ValueError:
        raise InvalidInput(f"unknown ring family {family!r}") from None
    return Ring(fam, p, n)


def ring_add(ring: Ring, x: RingElement, y: RingElement) -> RingElement:
    return ring.add(x, y)


def ring_mul(ring: Ring, x: RingElement, y: RingElement) -> RingElement:
    return ring.mul(x, y)


def is_unit(ring: Ring, x: RingElement) -> bool:
    return ring.is_unit(x)


def ring_inverse(ring: Ring, x: RingElement) -> RingElement:
    return ring.inverse(x)


def valuation(ring: Ring, x: RingElement) -> int:
    return ring.valuation(x)


def reduce_level(ring: Ring, x: RingElement, m: int) -> RingElement:
    return ring.reduce(x, m)


def elem_from_digits(ring: Ring, digits: Iterable[int]) -> RingElement:
    return ring.from_digits(list(digits))
