import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from naks.errors import InvalidInput, InvalidLevel, MixedRings, NonPrimeModulus, NotAUnit
from naks.residue_ring import (
    Family,
    Ring,
    elem_from_digits,
    is_unit,
    make_ring,
    parse_ring,
    reduce_level,
    ring_add,
    ring_inverse,
    ring_mul,
    valuation,
)

FAMILIES = ["padic", "series"]


@st.composite
def ring_and_elements(draw, count=3, max_n=6):
    family = draw(st.sampled_from(FAMILIES))
    p = draw(st.sampled_from([2, 3, 5]))
    n = draw(st.integers(1, max_n))
    ring = Ring(family, p, n)
    values = [draw(st.integers(0, ring.size - 1)) for _ in range(count)]
    return ring, [ring.element(v) for v in values]


class TestConstruction:
    def test_padic_ring(self):
        ring = make_ring("padic", 2, 3)
        assert ring.size == 8 and ring.family is Family.PADIC

    def test_series_ring(self):
        ring = make_ring("series", 2, 3)
        assert ring.size == 8 and ring.family is Family.SERIES

    @pytest.mark.parametrize("p", [0, 1, 4, 9, 15])
    def test_non_prime_rejected(self, p):
        with pytest.raises(NonPrimeModulus):
            make_ring("padic", p, 3)

    def test_bad_level(self):
        with pytest.raises(InvalidLevel):
            make_ring("padic", 2, 0)

    def test_unknown_family(self):
        with pytest.raises(InvalidInput):
            make_ring("adelic", 2, 3)

    def test_string_round_trip(self):
        for ring in (Ring("padic", 2, 3), Ring("series", 5, 1)):
            assert parse_ring(str(ring)) == ring
        assert str(Ring("padic", 2, 3)) == "padic:p=2,n=3"

    def test_malformed_ring_string(self):
        with pytest.raises(InvalidInput):
            parse_ring("padic p=2 n=3")


class TestWorkedValues:
    def test_add_z8(self):
        r = Ring("padic", 2, 3)
        assert ring_add(r, r.element(5), r.element(7)).value == 4

    def test_mul_z4(self):
        r = Ring("padic", 2, 2)
        assert ring_mul(r, r.element(3), r.element(3)).value == 1

    def test_series_product_truncates(self):
        r = Ring("series", 2, 3)
        one_plus_t = r.from_digits([1, 1, 0])
        assert ring_mul(r, one_plus_t, r.from_digits([1, 1, 1])) == r.one

    def test_units(self):
        r = Ring("padic", 2, 3)
        assert is_unit(r, r.element(3))
        assert not is_unit(r, r.element(6))
        s = Ring("series", 2, 2)
        assert not is_unit(s, s.uniformizer)

    def test_inverses(self):
        r8, r4 = Ring("padic", 2, 3), Ring("padic", 2, 2)
        assert ring_inverse(r8, r8.element(3)).value == 3
        assert ring_inverse(r4, r4.element(3)).value == 3
        s = Ring("series", 2, 3)
        assert str(ring_inverse(s, s.parse("110"))) == "111"

    def test_inverse_of_non_unit(self):
        r = Ring("padic", 3, 2)
        with pytest.raises(NotAUnit):
            r.element(3).inverse()

    def test_valuations(self):
        r = Ring("padic", 2, 3)
        assert valuation(r, r.element(4)) == 2
        assert valuation(r, r.zero) == 3
        s = Ring("series", 2, 3)
        assert valuation(s, s.parse("011")) == 1

    def test_reduce(self):
        r = Ring("padic", 2, 3)
        assert reduce_level(r, r.element(5), 2) == Ring("padic", 2, 2).element(1)
        assert reduce_level(r, r.element(5), 3) == r.element(5)
        s = Ring("series", 2, 3)
        assert reduce_level(s, s.parse("101"), 2) == Ring("series", 2, 2).one

    def test_reduce_out_of_range(self):
        r = Ring("padic", 2, 3)
        with pytest.raises(InvalidLevel):
            r.element(5).reduce(4)

    def test_text_format(self):
        r = Ring("padic", 2, 3)
        assert str(r.element(5)) == "101"
        assert r.parse("101").value == 5
        assert str(r.element(1)) == "100"
        with pytest.raises(InvalidInput):
            r.parse("10")
        with pytest.raises(InvalidInput):
            r.parse("121")

    def test_from_int_series_keeps_constant_term(self):
        s = Ring("series", 3, 2)
        assert s.from_int(3) == s.zero
        assert s.from_int(4) == s.one

    def test_mixed_rings(self):
        a = Ring("padic", 2, 3).one
        b = Ring("series", 2, 3).one
        with pytest.raises(MixedRings):
            a + b


class TestAgainstNaiveArithmetic:
    @pytest.mark.parametrize("family", FAMILIES)
    @pytest.mark.parametrize("p,n", [(2, 3), (3, 2), (5, 1), (2, 1)])
    def test_exhaustive(self, family, p, n):
        r = Ring(family, p, n)
        for x in range(r.size):
            assert r.neg_packed(x) == oracles.neg(family, p, n, x)
            for y in range(r.size):
                assert r.add_packed(x, y) == oracles.add(family, p, n, x, y)
                assert r.mul_packed(x, y) == oracles.mul(family, p, n, x, y)

    @settings(max_examples=200, deadline=None)
    @given(ring_and_elements(count=2))
    def test_random(self, data):
        r, (x, y) = data
        fam = r.family.value
        assert (x + y).value == oracles.add(fam, r.p, r.n, x.value, y.value)
        assert (x * y).value == oracles.mul(fam, r.p, r.n, x.value, y.value)
        assert (x - y).value == oracles.add(fam, r.p, r.n, x.value, oracles.neg(fam, r.p, r.n, y.value))


class TestRingAxioms:
    @settings(max_examples=300, deadline=None)
    @given(ring_and_elements())
    def test_axioms(self, data):
        r, (x, y, z) = data
        assert (x + y) + z == x + (y + z)
        assert (x * y) * z == x * (y * z)
        assert x + y == y + x
        assert x * y == y * x
        assert x * (y + z) == x * y + x * z
        assert x + r.zero == x and x * r.one == x
        assert x + (-x) == r.zero

    @settings(max_examples=200, deadline=None)
    @given(ring_and_elements(count=1))
    def test_unit_inverse(self, data):
        r, (x,) = data
        if x.is_unit():
            assert x * x.inverse() == r.one
        else:
            assert x.valuation() >= 1

    @settings(max_examples=200, deadline=None)
    @given(ring_and_elements(count=2))
    def test_valuation_of_product(self, data):
        r, (x, y) = data
        assert (x * y).valuation() == min(x.valuation() + y.valuation(), r.n)

    @settings(max_examples=200, deadline=None)
    @given(ring_and_elements(count=2), st.data())
    def test_reduction_is_homomorphism(self, data, extra):
        r, (x, y) = data
        m = extra.draw(st.integers(1, r.n))
        assert (x + y).reduce(m) == x.reduce(m) + y.reduce(m)
        assert (x * y).reduce(m) == x.reduce(m) * y.reduce(m)

    @settings(max_examples=200, deadline=None)
    @given(ring_and_elements(count=1))
    def test_digit_round_trip(self, data):
        r, (x,) = data
        assert elem_from_digits(r, x.digits) == x
        assert r.parse(str(x)) == x
