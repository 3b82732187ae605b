"""Independent biased sampling of the 2-subsets of a transaction.

Pair ``{i, j}`` of a transaction is emitted with probability
``min(1, tau * f(c_i, c_j))`` rounded down to a power of two, where ``c`` are
item counts from the latest prefix snapshot. The rounding makes every pair in
a contiguous run of the support-sorted pair table share one probability, so
each run can be sampled in time proportional to its output. The factor lost
to rounding (``gamma``) travels with the emitted pair and is restored by the
counting stage.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from typing import NamedTuple

from simstream.measures import Measure, weight_function
from simstream.rng import RandomStream
from simstream.stream import PrefixState, Transaction

_frexp = math.frexp
_ldexp = math.ldexp

# Below this, (1 - p) ** phi has underflowed and inversion cannot proceed.
_TINY = 1e-280


class RoundedProbability(NamedTuple):
    p_tilde: float
    gamma: float
    level: int


class SampledPair(NamedTuple):
    i: int
    j: int
    gamma: float
    level: int

    @property
    def pair(self) -> tuple[int, int]:
        return (self.i, self.j)


def round_down(p: float) -> RoundedProbability:
    """Round ``p`` down to ``2**-level`` and report the lost factor ``gamma``.

    ``gamma`` is always in [1, 2). Targets of 1 or more map to level 0
    (certain emission, ``gamma == 1``).
    """
    if not p > 0.0:
        raise ValueError(f"probability must be positive, got {p}")
    if p >= 1.0:
        return RoundedProbability(1.0, 1.0, 0)
    mant, exp = _frexp(p)  # p = mant * 2**exp, mant in [0.5, 1)
    return RoundedProbability(_ldexp(1.0, exp - 1), 2.0 * mant, 1 - exp)


def cutoff_level(n: int, m: int) -> int:
    """Deepest level whose probability ``2**-k`` is not below ``(nm)**-2``."""
    nm = max(1, n) * max(1, m)
    return (nm * nm).bit_length() - 1


def _pick_distinct(k: int, phi: int, rng: RandomStream) -> list[int]:
    # k distinct uniform values from 1..phi
    if k >= phi:
        return list(range(1, phi + 1))
    if 2 * k > phi:
        # dense: partial Fisher-Yates over the compacted array
        pool = list(range(1, phi + 1))
        for t in range(k):
            r = t + rng.below(phi - t)
            pool[t], pool[r] = pool[r], pool[t]
        return pool[:k]
    # sparse: at most half the values end up marked, so each retry succeeds w.p. >= 1/2
    marked: set[int] = set()
    while len(marked) < k:
        marked.add(rng.below(phi) + 1)
    return list(marked)


def _nonempty_subset(phi: int, p: float, u: float, p_empty: float, rng: RandomStream) -> list[int]:
    # Continue inverting the Binomial(phi, p) CDF from the uniform that already
    # decided the sample is non-empty, then choose that many distinct elements.
    if p_empty < _TINY:
        k = 0
        while k == 0:
            k = int(rng.generator.binomial(phi, p))
    else:
        ratio = p / (1.0 - p)
        k = 0
        pmf = cdf = p_empty
        while u >= cdf and k < phi:
            pmf *= (phi - k) / (k + 1) * ratio
            k += 1
            cdf += pmf
    return _pick_distinct(k, phi, rng)


def sample_uniform_subset(phi: int, p: float, rng: RandomStream) -> list[int]:
    """Subset of ``{1..phi}`` including each element independently w.p. ``p``.

    A single uniform draw against ``(1 - p) ** phi`` settles the common empty
    case; otherwise the expected cost is ``O(1 + p * phi)``.
    """
    if phi <= 0 or p <= 0.0:
        return []
    if p >= 1.0:
        return list(range(1, phi + 1))
    p_empty = (1.0 - p) ** phi
    u = rng.random()
    if u < p_empty:
        return []
    return _nonempty_subset(phi, p, u, p_empty, rng)


class PairSampler:
    """Samples pairs of transactions against one frozen prefix snapshot.

    Items with a snapshot count below ``phi`` are treated as having count
    ``phi``; this keeps the expected number of emitted pairs per transaction
    at most ``|T|`` when ``tau = 4 * phi / M``.
    """

    def __init__(
        self,
        counts: Mapping[int, int],
        measure: Measure | str,
        tau: float,
        phi: float,
        n: int,
        m: int,
    ):
        if tau <= 0:
            raise ValueError(f"tau must be positive, got {tau}")
        self.counts = counts
        self.measure = Measure.parse(measure)
        self.tau = tau
        self.floor = max(1.0, phi)
        self.max_level = cutoff_level(n, m)
        self._f = weight_function(self.measure)
        self.ops = 0

    @classmethod
    def from_prefix(cls, prefix: PrefixState, measure, tau: float, phi: float) -> PairSampler:
        return cls(prefix.snapshot_counts, measure, tau, phi, len(prefix), prefix.snapshot_m)

    def clamped_count(self, item: int) -> float:
        c = self.counts.get(item, 0)
        return c if c > self.floor else self.floor

    def target_probability(self, i: int, j: int) -> float:
        p = self.tau * self._f(self.clamped_count(i), self.clamped_count(j))
        return p if p < 1.0 else 1.0

    def emission_probability(self, i: int, j: int) -> float:
        """Exact probability that one call emits ``{i, j}`` (both in the transaction)."""
        r = round_down(self.target_probability(i, j))
        return r.p_tilde if r.level <= self.max_level else 0.0

    def plan(self, tx: Transaction) -> tuple[list[int], list[float], list[tuple[int, int, int, int]]]:
        """Split the pair table of ``tx`` into equal-probability runs.

        Returns the items sorted by ascending clamped count, their counts, and
        runs ``(level, row, start, width)``: row ``a`` pairs with columns
        ``start .. start + width - 1`` all have probability ``2**-level``.
        Pairs below the cutoff level are in no run.
        """
        r = len(tx)
        get = self.counts.get
        floor = self.floor
        keyed = []
        for i in tx:
            c = get(i, 0)
            keyed.append((c if c > floor else floor, i))
        # ascending support = non-increasing probability along rows and columns;
        # ties go to the smaller item id
        keyed.sort()
        cs = [c for c, _ in keyed]
        xs = [i for _, i in keyed]
        runs: list[tuple[int, int, int, int]] = []
        if r < 2:
            return xs, cs, runs
        tau = self.tau
        f = self._f
        ops = r

        def level(a: int, b: int) -> int:
            p = tau * f(cs[a], cs[b])
            if p >= 1.0:
                return 0
            return 1 - _frexp(p)[1]

        k_lo = level(0, 1)
        k_last = level(r - 2, r - 1)
        k_hi = min(k_last, self.max_level)
        ops += 2
        # row a's pairs at the current level are columns lo[a] .. hi[a]-1
        lo = list(range(1, r))
        for k in range(k_lo, k_hi + 1):
            if k == k_last:
                hi = [r] * (r - 1)
            else:
                # the level-k boundary can only move left as the row index grows
                hi = [0] * (r - 1)
                ptr = r
                for a in range(r - 1):
                    if ptr <= a:
                        ptr = a + 1
                    floor_a = lo[a]
                    while ptr > floor_a and level(a, ptr - 1) > k:
                        ptr -= 1
                        ops += 1
                    hi[a] = ptr
                ops += r
            for a in range(r - 1):
                width = hi[a] - lo[a]
                if width > 0:
                    runs.append((k, a, lo[a], width))
            lo = hi
        self.ops += ops
        return xs, cs, runs

    def sample(self, tx: Transaction, rng: RandomStream) -> list[SampledPair]:
        if len(tx) < 2:
            return []
        xs, cs, runs = self.plan(tx)
        tau = self.tau
        f = self._f
        rand = rng.random
        out: list[SampledPair] = []
        ops = len(runs)
        for k, a, start, width in runs:
            if k == 0:
                picks = range(1, width + 1)
            else:
                p = _ldexp(1.0, -k)
                p_empty = (1.0 - p) ** width
                u = rand()
                if u < p_empty:
                    continue
                picks = _nonempty_subset(width, p, u, p_empty, rng)
            ia = xs[a]
            ca = cs[a]
            scale = _ldexp(1.0, k)
            for x in picks:
                b = start + x - 1
                ib = xs[b]
                gamma = 1.0 if k == 0 else tau * f(ca, cs[b]) * scale
                if ia < ib:
                    out.append(SampledPair(ia, ib, gamma, k))
                else:
                    out.append(SampledPair(ib, ia, gamma, k))
            ops += len(picks)
        self.ops += ops
        return out


def sample_transaction(
    tx: Transaction,
    prefix: PrefixState,
    measure: Measure | str,
    tau: float,
    phi: float,
    rng: RandomStream,
) -> list[SampledPair]:
    """One-shot convenience wrapper around :class:`PairSampler`."""
    return PairSampler.from_prefix(prefix, measure, tau, phi).sample(tx, rng)
