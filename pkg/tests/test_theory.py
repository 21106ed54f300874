import itertools
import math
from fractions import Fraction

import pytest

import oracles
from naks.errors import InvalidInput, NonIntegralCount, SumExplosion, TooManySubsets, UnsortedSubset
from naks.projective import canonicalize, enumerate_projective
from naks.residue_ring import Ring
from naks.theory import (
    HeightFunction,
    asymptotic_constant,
    card_fiber_B_A,
    count_with_height,
    directional_mean,
    expectation_report,
    expected_card,
    expected_measure,
    expected_measure_float,
    height_function,
    inclusion_exclusion_mean,
    iter_height_functions,
    lower_bound_dim2,
    lower_bound_torsion,
    modified_weight,
    multiplicity,
    nonzero_height_functions,
    u_prime,
    u_sequence,
    u_sequence_float,
    weight,
    weighted_height_sum,
)


class TestRecurrence:
    def test_first_terms(self):
        assert u_sequence(2, 2, 0) == 1
        assert u_sequence(2, 2, 1) == Fraction(3, 4)
        assert u_sequence(2, 2, 2) == Fraction(39, 64)
        assert u_sequence(2, 2, 3) == Fraction(8463, 16384)

    def test_expected_measure_values(self):
        assert expected_measure(2, 2, 1) == Fraction(7, 8)
        assert expected_measure(2, 2, 2) == Fraction(387, 512)
        assert expected_measure(2, 3, 1) == Fraction(14197, 16384)
        assert expected_card(2, 2, 2) == Fraction(387, 32)

    def test_rounded_values(self):
        assert round(float(expected_measure(2, 2, 5)), 3) == 0.534
        assert round(float(expected_measure(2, 3, 3)), 3) == 0.628

    @pytest.mark.parametrize("q,d,upto", [(2, 2, 6), (2, 3, 4), (3, 2, 4), (4, 2, 3), (5, 3, 2)])
    def test_u_prime_is_the_fractional_power(self, q, d, upto):
        # (1 - u'_n)^{q^{d-1}} == (1 - u_n)^{1 + q + ... + q^{d-1}}, exactly
        a, top = q ** (d - 1), (q ** d - 1) // (q - 1)
        for n in range(1, upto + 1):
            assert (1 - u_prime(q, d, n)) ** a == (1 - u_sequence(q, d, n)) ** top

    @pytest.mark.parametrize("q,d,exact_upto", [(2, 2, 12), (2, 3, 7), (3, 2, 7), (3, 3, 4)])
    def test_strictly_decreasing(self, q, d, exact_upto):
        prev_u, prev_e = Fraction(2), Fraction(2)
        for n in range(1, 51):
            exact = n <= exact_upto
            u = u_sequence(q, d, n) if exact else u_sequence_float(q, d, n)
            e = expected_measure(q, d, n) if exact else expected_measure_float(q, d, n)
            assert 0 < e < 1 and 0 < u < 1
            assert u < prev_u and e < prev_e
            prev_u, prev_e = u, e

    def test_float_matches_exact(self):
        for n in range(1, 10):
            assert math.isclose(expected_measure_float(2, 3, n), float(expected_measure(2, 3, n)), rel_tol=1e-12)

    def test_report(self):
        rep = expectation_report(2, 2, 2)
        assert rep.u_n == Fraction(39, 64) and rep.expected_card == Fraction(387, 32)

    def test_invalid(self):
        with pytest.raises(InvalidInput):
            u_sequence(1, 2, 3)
        with pytest.raises(InvalidInput):
            u_prime(2, 2, 0)


class TestConstantsAndBounds:
    def test_asymptotic_constant(self):
        assert asymptotic_constant(2, 2) == 6
        assert asymptotic_constant(2, 3) == Fraction(14, 3)
        assert asymptotic_constant(3, 2) == 4

    def test_bounds(self):
        assert lower_bound_dim2(2, 5) == Fraction(3, 8)
        assert lower_bound_torsion(2, 5, 0) == 384
        for q, n in [(2, 4), (3, 2), (5, 7)]:
            assert lower_bound_torsion(q, n, n) == lower_bound_dim2(q, n) <= 1
        with pytest.raises(InvalidInput):
            lower_bound_torsion(2, 3, 4)

    @pytest.mark.parametrize("q,exact_upto", [(2, 12), (3, 7), (5, 5)])
    def test_mean_above_bound(self, q, exact_upto):
        for n in range(1, 101):
            e = expected_measure(q, 2, n) if n <= exact_upto else Fraction(expected_measure_float(q, 2, n))
            assert e >= lower_bound_dim2(q, n)


class TestHeightFunctions:
    def test_examples(self):
        r1, r2 = Ring("padic", 2, 1), Ring("padic", 2, 2)
        assert height_function([canonicalize(r1, (1, 0))]).values == ()
        assert height_function([canonicalize(r1, (1, 0)), canonicalize(r1, (1, 1))]).values == (1,)
        assert height_function([canonicalize(r2, (1, 0)), canonicalize(r2, (1, 2))]).values == (1,)

    def test_unsorted(self):
        r = Ring("padic", 2, 1)
        with pytest.raises(UnsortedSubset):
            height_function([canonicalize(r, (0, 1)), canonicalize(r, (1, 0))])

    def test_validation(self):
        with pytest.raises(InvalidInput):
            HeightFunction(2, (1, 3))

    def test_multiplicity_table(self):
        assert multiplicity((3, 2, 4, 3, 1, 3, 5, 2, 2, 2)) == (1, 1, 1, 1, 1, 2, 1, 1, 2, 3)
        assert multiplicity((4, 4, 4)) == (1, 2, 3)
        assert multiplicity((1, 2, 3, 5)) == (1, 1, 1, 1)

    def test_weights(self):
        assert weight((1,), 2, 2) == (Fraction(1, 4),)
        assert modified_weight((1,), 2, 2, 1) == (Fraction(1, 2),)
        assert weight((1, 1), 2, 2)[1] == 0

    def test_count_examples(self):
        assert count_with_height((), 2, 2, 1) == 3
        assert count_with_height((1,), 2, 2, 1) == 3
        assert card_fiber_B_A((), 2, 2, 1) == 4
        assert card_fiber_B_A((1,), 2, 2, 1) == 16
        assert card_fiber_B_A((1,), 2, 2, 2) == 64

    def test_directional_mean_examples(self):
        assert directional_mean((), 2, 2, 3) == 8
        assert directional_mean((1,), 2, 2, 1) == 1
        assert directional_mean((1,), 2, 2, 2) == 2

    def test_non_integral_guard(self, monkeypatch):
        from naks import theory

        monkeypatch.setattr(theory, "modified_weight", lambda h, q, d, n: (Fraction(1, 7),) * len(h))
        with pytest.raises(NonIntegralCount):
            count_with_height((1,), 2, 2, 1)

    @pytest.mark.parametrize("fam,p,n,d", [("padic", 2, 1, 2), ("padic", 2, 2, 2), ("series", 3, 1, 2),
                                           ("padic", 2, 1, 3), ("padic", 3, 2, 2)])
    def test_count_buckets(self, fam, p, n, d):
        ring = Ring(fam, p, n)
        pts = enumerate_projective(ring, d)
        if len(pts) > 16:
            pytest.skip("too many subsets")
        dist = [[oracles.distance(fam, p, n, a.values, b.values) for b in pts] for a in pts]
        buckets = {}
        for r in range(1, len(pts) + 1):
            for sub in itertools.combinations(range(len(pts)), r):
                h = tuple(n - dist[i][j] for i, j in zip(sub, sub[1:]))
                buckets[h] = buckets.get(h, 0) + 1
        for ell in range(len(pts)):
            for h in iter_height_functions(n, ell):
                assert count_with_height(h, p, d, n) == buckets.get(h.values, 0)
        assert sum(buckets.values()) == 2 ** len(pts) - 1


class TestDirectionalMean:
    @pytest.mark.parametrize("fam,n", [("padic", 1), ("padic", 2), ("series", 2)])
    def test_matches_brute_force_plane(self, fam, n):
        ring = Ring(fam, 2, n)
        pts = enumerate_projective(ring, 2)
        for sub, mean in oracles.directional_means(ring, 2).items():
            h = height_function([pts[i] for i in sub])
            assert directional_mean(h, 2, 2, n) == mean

    def test_matches_brute_force_space(self):
        ring = Ring("padic", 2, 1)
        pts = enumerate_projective(ring, 3)
        for sub, mean in oracles.directional_means(ring, 3).items():
            h = height_function([pts[i] for i in sub])
            assert directional_mean(h, 2, 3, 1) == mean


class TestInclusionExclusion:
    @pytest.mark.parametrize("d,n,expected", [(2, 1, Fraction(7, 2)), (2, 2, Fraction(387, 32)),
                                              (3, 1, Fraction(14197, 2048))])
    def test_values(self, d, n, expected):
        ring = Ring("padic", 2, n)
        value = inclusion_exclusion_mean(ring, d)
        assert value == expected == 2 ** (n * d) * u_prime(2, d, n)

    def test_guard(self):
        with pytest.raises(TooManySubsets):
            inclusion_exclusion_mean(Ring("padic", 2, 4), 2)


class TestWeightedHeightSum:
    def test_small_values(self):
        assert weighted_height_sum(2, 2, 1) == Fraction(3, 4)
        assert weighted_height_sum(2, 2, 2) == Fraction(39, 64)
        assert weighted_height_sum(2, 2, 1, modified=True) * Fraction(3, 2) == Fraction(7, 8)

    @pytest.mark.parametrize("q", [2, 3])
    @pytest.mark.parametrize("d", [2, 3])
    def test_equals_recurrence(self, q, d):
        ratio = Fraction(q ** d - 1, (q - 1) * q ** (d - 1))
        for n in range(1, 5):
            assert weighted_height_sum(q, d, n) == u_sequence(q, d, n)
            # the modified state space at (3, 3, 4) is large; the block form covers it below
            if (q, d, n) != (3, 3, 4):
                assert weighted_height_sum(q, d, n, modified=True) * ratio == u_prime(q, d, n)

    @pytest.mark.parametrize("q,d,upto", [(2, 2, 10), (2, 3, 6), (3, 2, 6), (3, 3, 4), (4, 2, 5), (2, 4, 4)])
    def test_block_form(self, q, d, upto):
        ratio = Fraction(q ** d - 1, (q - 1) * q ** (d - 1))
        for n in range(1, upto + 1):
            assert weighted_height_sum(q, d, n, method="blocks") == u_sequence(q, d, n)
            assert weighted_height_sum(q, d, n, modified=True, method="blocks") * ratio == u_prime(q, d, n)
            if n <= 3:
                assert weighted_height_sum(q, d, n, method="blocks") == weighted_height_sum(q, d, n)

    @pytest.mark.parametrize("q,d,n", [(2, 2, 1), (2, 2, 2), (2, 2, 3), (2, 3, 2), (3, 2, 2)])
    def test_enumeration_agrees(self, q, d, n):
        for modified in (False, True):
            assert weighted_height_sum(q, d, n, modified, method="enumerate") == \
                weighted_height_sum(q, d, n, modified)

    def test_enumerated_terms_are_nonzero(self):
        terms = list(nonzero_height_functions(2, 2, 2))
        assert len(set(terms)) == len(terms)
        assert all(all(w != 0 for w in weight(h, 2, 2)) for h in terms)
        # every h of length <= 4 left out has a vanishing weight
        kept = set(terms)
        for ell in range(5):
            for h in itertools.product((1, 2), repeat=ell):
                if h not in kept:
                    assert 0 in weight(h, 2, 2)

    def test_explosion_guard(self):
        with pytest.raises(SumExplosion):
            weighted_height_sum(5, 3, 6)

    def test_bad_method(self):
        with pytest.raises(InvalidInput):
            weighted_height_sum(2, 2, 2, method="magic")
