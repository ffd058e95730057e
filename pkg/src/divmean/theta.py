"""Theta-chain sets and exact statistics for rough, dense, and practical numbers.

A rule theta admits n = p1^a1 ... pk^ak (ascending primes) into B when
every prime satisfies p_i <= theta(prefix before p_i), with ties included.
Dense-t uses theta(n) = n*t, practical uses theta(n) = sigma(n)+1, and
custom rules carry an explicit admissible table.

Enumeration is depth-first chain extension: from n, append p^a for primes
P+(n) < p <= theta(n) with n*p^a <= x.  Every element is reached exactly
once because its ascending factorization is its only chain.  All theta
comparisons are exact integer arithmetic (rational t included), never
floating point, so boundary ties cannot be misclassified.
"""

import math
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

import numpy as np

from ._util import pmap_ordered
from .errors import ConfigError, RangeError, ResourceError
from .sieve import build_prime_list, build_spf_table, divisors_sorted

ROUGH_LIMIT = 1 << 27
SUBSET_SUM_LIMIT = 10**6
CUSTOM_ENUM_LIMIT = 10**6


@dataclass(frozen=True)
class SeqStats:
    x: int
    count: int
    tau_sum: int
    harmonic: float | None = None


class ThetaRule:
    """Admissible theta function: theta(1) >= 2 and theta(n) >= P+(n)."""

    __slots__ = ("kind", "t_num", "t_den", "table", "name")

    def __init__(self, kind, t_num=0, t_den=1, table=None, name=""):
        self.kind = kind
        self.t_num = t_num
        self.t_den = t_den
        self.table = table
        self.name = name

    @classmethod
    def dense(cls, t):
        frac = Fraction(t)
        if frac < 2:
            raise RangeError(f"dense rule needs t >= 2, got {t}")
        return cls("dense", frac.numerator, frac.denominator, name=f"dense(t={t})")

    @classmethod
    def practical(cls):
        return cls("practical", name="practical")

    @classmethod
    def custom(cls, mapping):
        if 1 not in mapping:
            raise ConfigError("custom theta map must define theta(1)")
        if not _ge(mapping[1], 2):
            raise ConfigError(f"theta(1) = {mapping[1]} violates theta(1) >= 2")
        for n, th in mapping.items():
            if n < 1:
                raise ConfigError(f"custom theta key {n} is not a positive integer")
            if n >= 2 and not _ge(th, _pplus_trial(n)):
                raise ConfigError(f"theta({n}) = {th} below largest prime factor")
        return cls("custom", table=dict(mapping), name="custom")

    def theta_floor(self, n, sigma_n=None):
        """floor(theta(n)) as an exact integer (None for +inf)."""
        if self.kind == "dense":
            return (n * self.t_num) // self.t_den
        if self.kind == "practical":
            if sigma_n is None:
                raise ConfigError("practical theta needs sigma(n)")
            return sigma_n + 1
        th = self.table.get(n)
        if th is None:
            raise ConfigError(f"custom theta map has no value for n={n}")
        if th == math.inf:
            return None
        return math.floor(th)


def _ge(value, bound):
    if value == math.inf:
        return True
    return Fraction(value) >= bound


def _pplus_trial(n):
    big = 1
    d = 2
    while d * d <= n:
        while n % d == 0:
            big = d
            n //= d
        d += 1
    return n if n > 1 else big


def is_in_B(n, rule, table):
    table.check_range(n)
    if n == 1:
        return True
    prefix = 1
    sg = 1
    for p, a in table.factorize(n):
        cap = rule.theta_floor(prefix, sg)
        if cap is not None and p > cap:
            return False
        pk = p**a
        prefix *= pk
        sg *= (pk * p - 1) // (p - 1)
    return True


def is_t_dense_by_divisors(n, t, table):
    """Oracle: consecutive-divisor ratios <= t, checked in exact rationals."""
    if Fraction(t) < 1:
        raise RangeError(f"t must be >= 1, got {t}")
    table.check_range(n)
    num, den = Fraction(t).numerator, Fraction(t).denominator
    divs = divisors_sorted(n, table)
    return all(b * den <= a * num for a, b in zip(divs, divs[1:]))


def is_practical_by_subset_sum(n, table):
    """Oracle: every 1 <= m <= n is a sum of distinct divisors of n."""
    if n > SUBSET_SUM_LIMIT:
        raise ResourceError(f"subset-sum oracle capped at {SUBSET_SUM_LIMIT}")
    table.check_range(n)
    if n == 1:
        return True
    full = (1 << (n + 1)) - 1
    bits = 1
    for d in divisors_sorted(n, table):
        bits |= (bits << d) & full
        if bits == full:
            return True
    return bits == full


def _primes_for_rule(rule, x):
    if rule.kind == "dense":
        cap = isqrt((x * rule.t_num) // rule.t_den) + 1
    elif rule.kind == "practical":
        # p <= min(sigma(n)+1, x/n) and sigma(n)/n < 5.5 below 1e9, so p^2 < 6.5x
        cap = isqrt(7 * x) + 1
    else:
        if x > CUSTOM_ENUM_LIMIT:
            raise ResourceError(f"custom rules enumerate up to {CUSTOM_ENUM_LIMIT}")
        finite = [v for v in rule.table.values() if v != math.inf]
        cap = x if len(finite) < len(rule.table) else int(max(finite, default=2))
    cap = min(max(cap, 2), max(x, 2))
    return build_prime_list(cap).primes.tolist()


def _walk(rule, x, plist, stack):
    """Drain a DFS stack, yielding (n, sigma(n), tau(n)) per element."""
    nprimes = len(plist)
    kind = rule.kind
    tnum, tden = rule.t_num, rule.t_den
    tmap = rule.table
    pop, push = stack.pop, stack.append
    while stack:
        node = pop()
        yield node[:3]
        n, sg, tu, i0 = node
        lim = x // n
        if kind == "practical":
            cap = sg + 1
        elif kind == "dense":
            cap = (n * tnum) // tden
        else:
            th = tmap.get(n)
            if th is None:
                raise ConfigError(f"custom theta map has no value for n={n}")
            cap = lim if th == math.inf else math.floor(th)
        if cap > lim:
            cap = lim
        i = i0
        while i < nprimes:
            p = plist[i]
            if p > cap:
                break
            m = n * p
            spow = 1 + p
            a = 2
            while m <= x:
                push((m, sg * spow, tu * a, i + 1))
                m *= p
                spow = spow * p + 1
                a += 1
            i += 1


def iter_chain(rule, x):
    if x < 1:
        raise RangeError(f"x must be >= 1, got {x}")
    if x == 1:
        yield (1, 1, 1)
        return
    plist = _primes_for_rule(rule, x)
    yield from _walk(rule, x, plist, [(1, 1, 1, 0)])


def _root_children(rule, x, plist):
    """Stack entries for the prime-power subtrees hanging off n=1."""
    cap = rule.theta_floor(1, 1)
    cap = x if cap is None else min(cap, x)
    stack = []
    for i, p in enumerate(plist):
        if p > cap:
            break
        m = p
        spow = 1 + p
        a = 2
        while m <= x:
            stack.append((m, spow, a, i + 1))
            m *= p
            spow = spow * p + 1
            a += 1
    return stack


def generate_B(rule, x, threads=1):
    """Sorted array of B(x).  Work may split over first-step subtrees."""
    if threads <= 1 or x == 1:
        ns = [n for n, _sg, _tu in iter_chain(rule, x)]
    else:
        if x < 1:
            raise RangeError(f"x must be >= 1, got {x}")
        plist = _primes_for_rule(rule, x)
        seeds = [[c] for c in _root_children(rule, x, plist)]
        parts = pmap_ordered(
            lambda st: [n for n, _s, _t in _walk(rule, x, plist, st)], seeds, threads
        )
        ns = [1]
        for part in parts:
            ns.extend(part)
    return np.array(sorted(ns), dtype=np.int64)


def chain_stats_multi(rule, cutoffs):
    """Counts and tau-sums of B at several cutoffs in one DFS pass."""
    cuts = sorted(int(c) for c in cutoffs)
    if not cuts or cuts[0] < 1:
        raise RangeError("cutoffs must be positive integers")
    x = cuts[-1]
    add_c = [0] * len(cuts)
    add_t = [0] * len(cuts)
    for n, _sg, tu in iter_chain(rule, x):
        j = bisect_left(cuts, n)
        add_c[j] += 1
        add_t[j] += tu
    out = []
    run_c = run_t = 0
    for c, ac, at in zip(cuts, add_c, add_t):
        run_c += ac
        run_t += at
        out.append(SeqStats(c, run_c, run_t))
    return out


def b_rows(rule, x):
    """Arrays (n, tau, theta_floor) over B(x), ascending in n."""
    ns, taus, thetas = [], [], []
    for n, sg, tu in iter_chain(rule, x):
        ns.append(n)
        taus.append(tu)
        tf = rule.theta_floor(n, sg)
        thetas.append(x if tf is None else tf)
    order = np.argsort(np.array(ns, dtype=np.int64), kind="stable")
    return (
        np.array(ns, dtype=np.int64)[order],
        np.array(taus, dtype=np.int64)[order],
        np.array(thetas, dtype=np.int64)[order],
    )


def rough_members(x, y, budget=ROUGH_LIMIT):
    """Ascending array of n <= x with no prime factor <= y (n=1 included)."""
    if x < 1:
        raise RangeError(f"x must be >= 1, got {x}")
    if y < 2:
        raise RangeError(f"y must be >= 2, got {y}")
    if x > budget:
        raise RangeError(f"x={x} above rough sieve limit {budget}")
    yf = min(math.floor(y), x)
    mask = np.ones(x + 1, dtype=bool)
    mask[0] = False
    if yf >= 2:
        for p in build_prime_list(yf).primes:
            mask[p::p] = False
        mask[1] = True
    return np.flatnonzero(mask).astype(np.int64)


def rough_stats(x, y, budget=ROUGH_LIMIT):
    """Exact Phi(x,y), S(x,y), and the rough harmonic sum (n=1 included)."""
    rough = rough_members(x, y, budget)
    phi = len(rough)
    s = int(np.searchsorted(rough, x // rough, side="right").sum())
    harm = math.fsum((1.0 / rough).tolist())
    return SeqStats(x, phi, s, harm)


def dense_stats(x, t):
    if Fraction(t) < 2:
        raise RangeError(f"t must be >= 2, got {t}")
    return _chain_stats(ThetaRule.dense(t), x)


def practical_stats(x):
    return _chain_stats(ThetaRule.practical(), x)


def _chain_stats(rule, x):
    count = 0
    tau_sum = 0
    for _n, _sg, tu in iter_chain(rule, x):
        count += 1
        tau_sum += tu
    return SeqStats(x, count, tau_sum)


def factor_nr(m, rule, table):
    """Unique split m = n*r with n in B and (r = 1 or P-(r) > theta(n))."""
    table.check_range(m)
    fac = table.factorize(m)
    n = 1
    sg = 1
    r = 1
    for i, (p, a) in enumerate(fac):
        cap = rule.theta_floor(n, sg)
        if cap is not None and p > cap:
            for q, b in fac[i:]:
                r *= q**b
            break
        pk = p**a
        n *= pk
        sg *= (pk * p - 1) // (p - 1)
    return n, r


def write_b_stream(rule, x, fh, threads=1):
    """One decimal integer per line, ascending; returns the member count."""
    count = 0
    for n in generate_B(rule, x, threads=threads):
        fh.write(f"{n}\n")
        count += 1
    return count


def _bulk_tau(x):
    # hyperbola fill: each divisor pair (d, n/d) with d*d <= n adds 2,
    # perfect squares correct the double count
    arr = np.zeros(x + 1, dtype=np.int64)
    for d in range(1, isqrt(x) + 1):
        arr[d * d :: d] += 2
        arr[d * d] -= 1
    return arr


def verify_funceq(x, rule, table=None):
    """Exact identity: sum_{m<=x} f(m) = sum_{n in B(x)} f(n)(1 + inner sum).

    Inner sum runs over 2 <= r <= x/n with P-(r) > theta(n); checked for
    f = 1 and f = tau with integer arithmetic end to end.
    """
    if x < 1:
        raise RangeError(f"x must be >= 1, got {x}")
    if table is None or table.limit < x:
        table = build_spf_table(max(x, 2))
    d = np.arange(1, x + 1, dtype=np.int64)
    lhs_tau = int((x // d).sum())
    lhs_count = x

    tau_arr = _bulk_tau(x)
    spf = table.spf[: x + 1].astype(np.int64)

    rhs_tau = 0
    rhs_count = 0
    for n, tu, tf in zip(*b_rows(rule, x)):
        n = int(n)
        tu = int(tu)
        z = x // n
        w = int(tf)
        if z >= 2 and w < z:
            sel = spf[2 : z + 1] > w
            inner_t = int(tau_arr[2 : z + 1][sel].sum())
            inner_c = int(sel.sum())
        else:
            inner_t = inner_c = 0
        rhs_tau += tu * (1 + inner_t)
        rhs_count += 1 + inner_c
    return {
        "x": x,
        "theta": rule.name,
        "count_lhs": lhs_count,
        "count_rhs": rhs_count,
        "tau_lhs": lhs_tau,
        "tau_rhs": rhs_tau,
        "exact": lhs_count == rhs_count and lhs_tau == rhs_tau,
    }
