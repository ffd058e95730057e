"""Smallest-prime-factor table, prime list, and multiplicative basics.

Everything downstream (chain enumeration, rough-number statistics,
Mertens products) sits on these two write-once tables.  Counts and
divisor sums are accumulated in Python integers, so overflow is
impossible by construction.
"""

import math
from math import isqrt

import numpy as np

from .errors import RangeError, ResourceError

# table entries, not bytes; ~0.5 GB of int32 at the cap
DEFAULT_SPF_BUDGET = 1 << 27


class SpfTable:
    """spf[n] = smallest prime factor of n for 2 <= n <= limit; spf[0]=spf[1]=0."""

    __slots__ = ("limit", "spf", "_primes")

    def __init__(self, limit, spf):
        self.limit = limit
        self.spf = spf
        self._primes = None

    @property
    def primes(self):
        if self._primes is None:
            idx = np.arange(self.limit + 1, dtype=self.spf.dtype)
            self._primes = np.flatnonzero(self.spf == idx)[1:].astype(np.int64)
            # [1:] drops n=0 (spf 0 == index 0 is a false hit; n=1 has spf 0 != 1)
        return self._primes

    def check_range(self, n):
        if not (1 <= n <= self.limit):
            raise RangeError(f"n={n} outside table range [1, {self.limit}]")

    def smallest_prime_factor(self, n):
        self.check_range(n)
        return int(self.spf[n]) if n > 1 else 0

    def largest_prime_factor(self, n):
        """P+(n); 0 for n=1 (empty factorization)."""
        self.check_range(n)
        big = 0
        while n > 1:
            p = int(self.spf[n])
            big = p
            while n % p == 0:
                n //= p
        return big

    def factorize(self, n):
        """Ascending [(p, multiplicity)] pairs."""
        self.check_range(n)
        out = []
        while n > 1:
            p = int(self.spf[n])
            a = 0
            while n % p == 0:
                n //= p
                a += 1
            out.append((p, a))
        return out


def build_spf_table(limit, budget_entries=DEFAULT_SPF_BUDGET):
    if limit < 2:
        raise RangeError(f"limit must be >= 2, got {limit}")
    if limit + 1 > budget_entries:
        raise ResourceError(
            f"spf table of {limit + 1} entries exceeds budget {budget_entries}"
        )
    spf = np.zeros(limit + 1, dtype=np.int32)
    spf[2::2] = 2
    for p in range(3, isqrt(limit) + 1, 2):
        if spf[p] == 0:
            # odd multiples only; even ones are already marked 2
            sl = spf[p * p :: 2 * p]
            sl[sl == 0] = p
    # every odd prime still reads 0 at its own index (the loop starts at p*p)
    rest = np.flatnonzero(spf[3::2] == 0) * 2 + 3
    spf[rest] = rest.astype(np.int32)
    return SpfTable(limit, spf)


def tau(n, table):
    """Number of divisors."""
    t = 1
    for _p, a in table.factorize(n):
        t *= a + 1
    return t


def sigma(n, table):
    """Sum of divisors."""
    s = 1
    for p, a in table.factorize(n):
        s *= (p ** (a + 1) - 1) // (p - 1)
    return s


def divisors_sorted(n, table):
    divs = [1]
    for p, a in table.factorize(n):
        pk = 1
        base = list(divs)
        for _ in range(a):
            pk *= p
            divs.extend(d * pk for d in base)
    divs.sort()
    return divs


class PrimeList:
    """All primes <= limit plus lazily-built prefix arrays for bulk queries.

    The prefix sums are kept in extended precision (longdouble) because
    report-scale runs take millions of prefix lookups; scalar queries go
    through exact compensated summation instead.
    """

    __slots__ = ("primes", "limit", "_cum_log1m", "_cum_logp_pm1")

    def __init__(self, primes, limit):
        self.primes = primes
        self.limit = limit
        self._cum_log1m = None
        self._cum_logp_pm1 = None

    def _check(self, y):
        if y < 0:
            raise RangeError(f"y must be >= 0, got {y}")
        if y > self.limit:
            raise RangeError(f"y={y} beyond prime list limit {self.limit}")

    def count_leq(self, y):
        self._check(y)
        return int(np.searchsorted(self.primes, math.floor(y), side="right"))

    def mertens(self, y):
        """prod_{p<=y} (1 - 1/p), exactly-rounded log accumulation."""
        k = self.count_leq(y)
        if k == 0:
            return 1.0
        terms = np.log1p(-1.0 / self.primes[:k].astype(np.float64))
        return math.exp(math.fsum(terms))

    def _prefix(self, which):
        if which == "log1m":
            if self._cum_log1m is None:
                t = np.log1p(-1.0 / self.primes.astype(np.float64))
                self._cum_log1m = _prefix_longdouble(t)
            return self._cum_log1m
        if self._cum_logp_pm1 is None:
            p = self.primes.astype(np.float64)
            self._cum_logp_pm1 = _prefix_longdouble(np.log(p) / (p - 1.0))
        return self._cum_logp_pm1

    def mertens_many(self, ys):
        """Vectorized prod_{p<=y}(1-1/p) for an array of cutoffs."""
        ys = np.asarray(ys)
        if ys.size and float(ys.max(initial=0.0)) > self.limit:
            raise RangeError("cutoff beyond prime list limit")
        idx = np.searchsorted(self.primes, np.floor(ys).astype(np.int64), side="right")
        return np.exp(self._prefix("log1m")[idx].astype(np.float64))

    def logp_pm1_many(self, ys):
        """Vectorized sum_{p<=y} log(p)/(p-1)."""
        ys = np.asarray(ys)
        if ys.size and float(ys.max(initial=0.0)) > self.limit:
            raise RangeError("cutoff beyond prime list limit")
        idx = np.searchsorted(self.primes, np.floor(ys).astype(np.int64), side="right")
        return self._prefix("logp_pm1")[idx].astype(np.float64)

    def verify_against(self, table):
        """Completeness check versus an SpfTable (on the overlap)."""
        lim = min(self.limit, table.limit)
        mine = self.primes[self.primes <= lim]
        theirs = table.primes[table.primes <= lim]
        return mine.shape == theirs.shape and bool(np.all(mine == theirs))


def _prefix_longdouble(terms):
    cum = np.empty(terms.size + 1, dtype=np.longdouble)
    cum[0] = 0.0
    np.cumsum(terms.astype(np.longdouble), out=cum[1:])
    return cum


def build_prime_list(limit):
    if limit < 2:
        raise RangeError(f"limit must be >= 2, got {limit}")
    comp = np.ones(limit + 1, dtype=bool)
    comp[:2] = False
    for p in range(2, isqrt(limit) + 1):
        if comp[p]:
            comp[p * p :: p] = False
    return PrimeList(np.flatnonzero(comp).astype(np.int64), limit)


def mertens_product(y, primes):
    """prod_{p<=y}(1-1/p) over a PrimeList; empty product is 1."""
    return primes.mertens(y)
