"""Chain-set membership, enumeration, exact statistics, and the counting identity."""

import io
import math
import re
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divmean.errors import ConfigError, RangeError, ResourceError
from divmean.sieve import build_spf_table, sigma, tau
from divmean.theta import (
    SeqStats,
    ThetaRule,
    b_rows,
    chain_stats_multi,
    dense_stats,
    factor_nr,
    generate_B,
    is_in_B,
    is_practical_by_subset_sum,
    is_t_dense_by_divisors,
    iter_chain,
    practical_stats,
    rough_stats,
    verify_funceq,
    write_b_stream,
)

GOLDEN = Path(__file__).parent / "golden"

B_PRACTICAL_30 = [1, 2, 4, 6, 8, 12, 16, 18, 20, 24, 28, 30]
B_DENSE2_20 = [1, 2, 4, 6, 8, 12, 16, 18, 20]


class TestMembership:
    def test_one_always_in(self, spf_1e5):
        for rule in (ThetaRule.practical(), ThetaRule.dense(2), ThetaRule.dense("5/2")):
            assert is_in_B(1, rule, spf_1e5)

    def test_examples(self, spf_1e5):
        assert not is_in_B(10, ThetaRule.practical(), spf_1e5)
        assert is_in_B(6, ThetaRule.dense(2), spf_1e5)

    def test_range_error(self, spf_1e5):
        with pytest.raises(RangeError):
            is_in_B(10**5 + 1, ThetaRule.practical(), spf_1e5)

    def test_tie_is_in(self, spf_1e5):
        # 2*2 = theta(2) under dense(2), and p=2 <= 2 admits
        assert is_in_B(4, ThetaRule.dense(2), spf_1e5)
        # practical: theta(2) = sigma(2)+1 = 4, so p=3 admitted but p=5 not
        assert is_in_B(6, ThetaRule.practical(), spf_1e5)
        assert not is_in_B(10, ThetaRule.practical(), spf_1e5)


class TestDivisorOracle:
    def test_examples(self, spf_1e5):
        assert is_t_dense_by_divisors(1, 1, spf_1e5)
        assert not is_t_dense_by_divisors(10, 2, spf_1e5)
        assert is_t_dense_by_divisors(18, 2, spf_1e5)

    def test_t_below_one_rejected(self, spf_1e5):
        with pytest.raises(RangeError):
            is_t_dense_by_divisors(6, 0.5, spf_1e5)

    def test_rational_boundary_exact(self, spf_1e5):
        # divisors of 6: 1,2,3,6 with worst ratio exactly 2
        assert is_t_dense_by_divisors(6, 2, spf_1e5)
        assert not is_t_dense_by_divisors(6, Fraction(199, 100), spf_1e5)


class TestSubsetSumOracle:
    def test_examples(self, spf_1e6):
        assert is_practical_by_subset_sum(1, spf_1e6)
        assert not is_practical_by_subset_sum(3, spf_1e6)
        assert is_practical_by_subset_sum(12, spf_1e6)

    def test_scale_cap(self, spf_1e6):
        with pytest.raises(ResourceError):
            is_practical_by_subset_sum(10**6 + 2, spf_1e6)


class TestGenerate:
    def test_practical_30(self):
        assert generate_B(ThetaRule.practical(), 30).tolist() == B_PRACTICAL_30

    def test_dense2_20(self):
        assert generate_B(ThetaRule.dense(2), 20).tolist() == B_DENSE2_20

    def test_x_one(self):
        assert generate_B(ThetaRule.practical(), 1).tolist() == [1]

    def test_x_below_one(self):
        with pytest.raises(RangeError):
            generate_B(ThetaRule.practical(), 0)

    def test_no_duplicates(self):
        ns = [n for n, _s, _t in iter_chain(ThetaRule.dense(2), 50000)]
        assert len(ns) == len(set(ns))

    def test_matches_membership_filter(self, spf_1e5):
        for rule in (ThetaRule.dense(3), ThetaRule.practical()):
            got = set(generate_B(rule, 5000).tolist())
            want = {n for n in range(1, 5001) if is_in_B(n, rule, spf_1e5)}
            assert got == want

    def test_thread_split_identical(self):
        base = generate_B(ThetaRule.practical(), 10**4, threads=1)
        for k in (2, 4):
            assert np.array_equal(base, generate_B(ThetaRule.practical(), 10**4, threads=k))

    def test_sigma_tau_carried_exactly(self, spf_1e5):
        for n, sg, tu in iter_chain(ThetaRule.practical(), 3000):
            assert sg == sigma(n, spf_1e5)
            assert tu == tau(n, spf_1e5)

    def test_stream_writer(self):
        buf = io.StringIO()
        write_b_stream(ThetaRule.dense(2), 20, buf)
        assert buf.getvalue() == "".join(f"{n}\n" for n in B_DENSE2_20)


class TestEquivalence:
    """Chain membership against the defining divisor / subset-sum properties."""

    @pytest.mark.parametrize("t", [2, Fraction(5, 2), 3, 10])
    def test_dense_matches_divisor_ratios(self, t, spf_1e5):
        limit = 10**5
        chain = np.zeros(limit + 1, dtype=bool)
        chain[generate_B(ThetaRule.dense(t), limit)] = True
        for n in range(1, limit + 1):
            assert chain[n] == is_t_dense_by_divisors(n, t, spf_1e5), n

    def test_practical_matches_subset_sums(self, spf_1e5):
        limit = 10**4
        chain = np.zeros(limit + 1, dtype=bool)
        chain[generate_B(ThetaRule.practical(), limit)] = True
        for n in range(1, limit + 1):
            assert chain[n] == is_practical_by_subset_sum(n, spf_1e5), n


class TestRoughStats:
    def test_example_small(self):
        st_ = rough_stats(10, 2)
        assert (st_.count, st_.tau_sum) == (5, 10)

    def test_y_at_least_x(self):
        for x, y in ((10, 10), (10, 11), (100, 1000)):
            st_ = rough_stats(x, y)
            assert (st_.count, st_.tau_sum, st_.harmonic) == (1, 1, 1.0)

    def test_golden_oracle_100_7(self):
        text = (GOLDEN / "rough_100_7_oracle.txt").read_text()
        phi = int(re.search(r"phi\(100,7\) = (\d+)", text).group(1))
        s = int(re.search(r"S\(100,7\) = (\d+)", text).group(1))
        harm = float(re.search(r"harmonic\(100,7\) = ([\d.]+)", text).group(1))
        st_ = rough_stats(100, 7)
        assert st_.count == phi == 22
        assert st_.tau_sum == s == 43
        assert st_.harmonic == pytest.approx(harm, abs=1e-12)

    def test_domain_errors(self):
        with pytest.raises(RangeError):
            rough_stats(0, 5)
        with pytest.raises(RangeError):
            rough_stats(10, 1.5)
        with pytest.raises(RangeError):
            rough_stats(10**6, 5, budget=10**5)

    def test_pair_count_against_direct_loop(self):
        # S counts pairs (a, b) of y-rough numbers with a*b <= x
        x, y = 2000, 11
        st_ = rough_stats(x, y)
        members = [n for n in range(1, x + 1) if n == 1 or all(n % p for p in (2, 3, 5, 7, 11))]
        direct = sum(1 for a in members for b in members if a * b <= x)
        assert st_.tau_sum == direct
        assert st_.count == len(members)
        assert st_.harmonic == pytest.approx(math.fsum(1.0 / np.array(members)), rel=1e-14)


class TestChainStats:
    def test_dense_example(self):
        st_ = dense_stats(20, 2)
        assert (st_.count, st_.tau_sum) == (9, 37)

    def test_dense_x_one(self):
        st_ = dense_stats(1, 2)
        assert (st_.count, st_.tau_sum) == (1, 1)

    def test_dense_t_below_two(self):
        with pytest.raises(RangeError):
            dense_stats(100, 1.5)

    def test_practical_example(self):
        assert practical_stats(30).count == 12

    def test_tau_sum_against_table(self, spf_1e5):
        st_ = dense_stats(10**4, 2)
        members = generate_B(ThetaRule.dense(2), 10**4)
        assert st_.count == len(members)
        assert st_.tau_sum == sum(tau(int(n), spf_1e5) for n in members)

    def test_multi_cutoff_consistent(self):
        cuts = [10, 100, 1000, 10**4]
        multi = chain_stats_multi(ThetaRule.practical(), cuts)
        for st_, c in zip(multi, cuts):
            single = practical_stats(c)
            assert st_ == SeqStats(c, single.count, single.tau_sum)

    def test_multi_cutoff_domain(self):
        with pytest.raises(RangeError):
            chain_stats_multi(ThetaRule.practical(), [0, 10])


class TestFactorSplit:
    def test_member_maps_to_itself(self, spf_1e5):
        for m in B_PRACTICAL_30:
            assert factor_nr(m, ThetaRule.practical(), spf_1e5) == (m, 1)

    def test_examples(self, spf_1e5):
        assert factor_nr(10, ThetaRule.dense(2), spf_1e5) == (2, 5)
        assert factor_nr(5, ThetaRule.dense(2), spf_1e5) == (1, 5)

    def test_partition_exhaustive_1e5(self, spf_1e6):
        # every m splits as m = n*r with n in the chain set and the
        # remainder's least prime factor above theta(n)
        for rule in (ThetaRule.dense(2), ThetaRule.practical()):
            limit = 10**5
            in_b = np.zeros(limit + 1, dtype=bool)
            in_b[generate_B(rule, limit)] = True
            for m in range(1, limit + 1):
                n, r = factor_nr(m, rule, spf_1e6)
                assert n * r == m
                assert in_b[n]
                if r > 1:
                    tf = rule.theta_floor(n, sigma(n, spf_1e6))
                    assert spf_1e6.smallest_prime_factor(r) > tf

    @settings(max_examples=80)
    @given(m=st.integers(min_value=10**5 + 1, max_value=10**6))
    def test_partition_sampled_to_1e6(self, m):
        table = _shared_table()
        for rule in (ThetaRule.dense(2), ThetaRule.practical()):
            n, r = factor_nr(m, rule, table)
            assert n * r == m
            assert is_in_B(n, rule, table)
            if r > 1:
                tf = rule.theta_floor(n, sigma(n, table))
                assert table.smallest_prime_factor(r) > tf


_TABLE_CACHE = {}


def _shared_table():
    if "t" not in _TABLE_CACHE:
        _TABLE_CACHE["t"] = build_spf_table(10**6)
    return _TABLE_CACHE["t"]


class TestCountingIdentity:
    """Both sides in exact integers; equality must be literal, not approximate."""

    @pytest.mark.parametrize("x", [10**3, 10**4])
    @pytest.mark.parametrize("make", [lambda: ThetaRule.dense(2), ThetaRule.practical])
    def test_exact(self, x, make, spf_1e6):
        res = verify_funceq(x, make(), spf_1e6)
        assert res["exact"]
        assert res["count_lhs"] == res["count_rhs"]
        assert res["tau_lhs"] == res["tau_rhs"]

    def test_bijection_count_at_1e6(self, spf_1e6):
        # count equality at 1e6 pins the split map as a bijection there
        res = verify_funceq(10**6, ThetaRule.practical(), spf_1e6)
        assert res["exact"]


class TestCustomRules:
    def test_validation(self):
        with pytest.raises(ConfigError):
            ThetaRule.custom({2: 3})  # theta(1) missing
        with pytest.raises(ConfigError):
            ThetaRule.custom({1: 1, 2: 3})  # theta(1) < 2
        with pytest.raises(ConfigError):
            ThetaRule.custom({1: 2, 12: 2})  # theta(12) below P+(12) = 3

    def test_missing_value_during_walk(self):
        rule = ThetaRule.custom({1: 10})
        with pytest.raises(ConfigError):
            generate_B(rule, 100)

    def test_infinite_theta_gives_full_interval(self):
        full = {n: math.inf for n in range(1, 61)}
        rule = ThetaRule.custom(full)
        assert generate_B(rule, 60).tolist() == list(range(1, 61))

    def test_monotone_maps_nest(self):
        x = 60
        lo = {1: 2, **{n: _pplus(n) + 2 for n in range(2, x + 1)}}
        hi = {1: 4, **{n: 2 * n for n in range(2, x + 1)}}
        b_lo = set(generate_B(ThetaRule.custom(lo), x).tolist())
        b_hi = set(generate_B(ThetaRule.custom(hi), x).tolist())
        assert b_lo <= b_hi

    @settings(max_examples=40)
    @given(
        bumps=st.lists(st.integers(min_value=0, max_value=8), min_size=40, max_size=40),
        extra=st.lists(st.integers(min_value=0, max_value=8), min_size=40, max_size=40),
    )
    def test_monotone_maps_nest_random(self, bumps, extra):
        x = 40
        lo = {1: 2 + bumps[0]}
        hi = {1: lo[1] + extra[0]}
        for n in range(2, x + 1):
            lo[n] = _pplus(n) + bumps[n - 1]
            hi[n] = lo[n] + extra[n - 1]
        b_lo = set(generate_B(ThetaRule.custom(lo), x).tolist())
        b_hi = set(generate_B(ThetaRule.custom(hi), x).tolist())
        assert b_lo <= b_hi


def _pplus(n):
    big = 1
    d = 2
    while d * d <= n:
        while n % d == 0:
            big = d
            n //= d
        d += 1
    return n if n > 1 else big


class TestRows:
    def test_rows_sorted_and_consistent(self, spf_1e5):
        rule = ThetaRule.practical()
        ns, taus, thetas = b_rows(rule, 2000)
        assert np.all(np.diff(ns) > 0)
        for n, tu, tf in zip(ns.tolist(), taus.tolist(), thetas.tolist()):
            assert tu == tau(n, spf_1e5)
            assert tf == sigma(n, spf_1e5) + 1
