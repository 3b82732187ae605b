"""Exact, in-memory reference computations for checking the streaming miner.

Everything here enumerates pairs transaction by transaction, so it is meant
for desk-scale data only.
"""

from __future__ import annotations

import itertools
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from simstream.measures import Measure, similarity
from simstream.stream import Transaction, make_transaction

MAX_CANDIDATE_PAIRS = 10_000_000


class OracleSizeError(RuntimeError):
    """Raised instead of silently truncating an oversized exact computation."""


@dataclass
class Dataset:
    transactions: list[Transaction]

    @classmethod
    def from_iterable(cls, transactions: Iterable[Iterable[int]]) -> Dataset:
        return cls([make_transaction(t) for t in transactions])

    @property
    def m(self) -> int:
        return len(self.transactions)

    @property
    def mb(self) -> int:
        return sum(len(t) for t in self.transactions)

    @property
    def n(self) -> int:
        return len(item_counts(self.transactions))

    @property
    def max_size(self) -> int:
        return max((len(t) for t in self.transactions), default=0)

    def __iter__(self):
        return iter(self.transactions)

    def __len__(self) -> int:
        return len(self.transactions)


def item_counts(transactions: Iterable[Transaction]) -> Counter:
    c: Counter = Counter()
    for t in transactions:
        c.update(t)
    return c


def pair_counts(
    transactions: Iterable[Transaction],
    keep: set[int] | None = None,
    limit: int = MAX_CANDIDATE_PAIRS,
) -> Counter:
    """Co-occurrence count of every pair (restricted to items in ``keep``)."""
    c: Counter = Counter()
    for t in transactions:
        items = t if keep is None else [i for i in t if i in keep]
        if len(items) < 2:
            continue
        c.update(itertools.combinations(items, 2))
        if len(c) > limit:
            raise OracleSizeError(f"more than {limit} candidate pairs; dataset too large for the exact oracle")
    return c


def exact_similarities(
    data: Dataset | Iterable[Transaction],
    measure: Measure | str = Measure.COSINE,
    phi: float = 1,
    limit: int = MAX_CANDIDATE_PAIRS,
) -> dict[tuple[int, int], float]:
    """Similarity of every co-occurring pair whose items both have support >= ``phi``."""
    measure = Measure.parse(measure)
    txs = list(data)
    counts = item_counts(txs)
    keep = {i for i, c in counts.items() if c >= phi}
    pairs = pair_counts(txs, keep, limit)
    return {(i, j): similarity(measure, c, counts[i], counts[j]) for (i, j), c in pairs.items()}


def top_pairs(sims: dict[tuple[int, int], float], k: int) -> list[tuple[tuple[int, int], float]]:
    """The ``k`` most similar pairs, ties broken by ascending pair."""
    return sorted(sims.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


class RatioRecord(NamedTuple):
    key: int | tuple[int, int]
    first_half_count: int
    total_count: int

    @property
    def ratio(self) -> float:
        return self.first_half_count / self.total_count

    @property
    def is_pair(self) -> bool:
        return isinstance(self.key, tuple)

    def key_str(self) -> str:
        return f"{self.key[0]} {self.key[1]}" if self.is_pair else str(self.key)


def half_ratios(
    data: Dataset | Sequence[Transaction],
    min_support: int = 20,
    pairs: bool = True,
    limit: int = MAX_CANDIDATE_PAIRS,
) -> list[RatioRecord]:
    """First-half share of the occurrences of every frequent item and pair.

    The first half is the first ``m // 2`` transactions. Records are sorted by
    ratio (then key), items and pairs interleaved.
    """
    txs = list(data)
    half = len(txs) // 2
    first_items = item_counts(txs[:half])
    all_items = item_counts(txs)
    records = [
        RatioRecord(i, first_items.get(i, 0), c) for i, c in all_items.items() if c >= min_support
    ]
    if pairs:
        first_pairs = pair_counts(txs[:half], limit=limit)
        all_pairs = pair_counts(txs, limit=limit)
        records += [
            RatioRecord(p, first_pairs.get(p, 0), c) for p, c in all_pairs.items() if c >= min_support
        ]
    records.sort(key=lambda r: (r.ratio, r.is_pair, r.key))
    return records


class _WeightedDraws:
    # with-replacement draws in blocks; callers reject repeats within a transaction
    def __init__(self, rng: np.random.Generator, values: np.ndarray, p: np.ndarray, hint: int):
        self._rng = rng
        self._values = values
        self._cdf = np.cumsum(p)
        self._block = max(1024, int(hint * 1.25))
        self._buf: list[int] = []
        self._pos = 0

    def next(self) -> int:
        if self._pos == len(self._buf):
            u = self._rng.random(self._block) * self._cdf[-1]
            idx = np.minimum(np.searchsorted(self._cdf, u, side="right"), len(self._values) - 1)
            self._buf = self._values[idx].tolist()
            self._pos = 0
        self._pos += 1
        return self._buf[self._pos - 1]


class PlantedPair(NamedTuple):
    i: int
    j: int
    similarity: float
    support: int


def _planted_cooccurrence(measure: Measure, target: float, support: int) -> int:
    # equal supports S: cosine/all_confidence/overlap are c/S, dice is c/(2S)
    factor = 2 if measure is Measure.DICE else 1
    return round(target * factor * support)


def generate_synthetic(
    n: int,
    m: int,
    avg_size: float,
    planted: Sequence[PlantedPair | tuple] = (),
    seed: int | None = 0,
    *,
    measure: Measure | str = Measure.COSINE,
    support: int | None = None,
    max_size: int | None = None,
    skew: float = 1.0,
    fixed_size: bool = False,
    tolerance: float = 0.02,
) -> Dataset:
    """Random-order transactions with planted pairs of known similarity.

    ``planted`` entries are :class:`PlantedPair` or ``((i, j), similarity)``
    (using ``support``, default ``m // 50``). Both items of a planted pair get
    exactly that support and co-occur in the number of transactions the
    target similarity implies; they never appear as background items. The
    remaining ids in ``range(n)`` are background items drawn with Zipf-like
    weights ``1 / rank**skew``. Transaction sizes are ``1 + Poisson(avg_size - 1)``,
    truncated at ``max_size`` (or exactly ``avg_size`` with ``fixed_size``);
    planted items take slots first.

    Raises:
        ValueError: if a target cannot be realised within ``tolerance``.
    """
    measure = Measure.parse(measure)
    rng = np.random.default_rng(seed)
    if support is None:
        support = max(1, m // 50)
    plants = []
    for p in planted:
        if isinstance(p, PlantedPair):
            plants.append(p)
        else:
            (i, j), sim = p[0], p[1]
            s = p[2] if len(p) > 2 else support
            plants.append(PlantedPair(min(i, j), max(i, j), sim, s))

    planted_items = [x for p in plants for x in (p.i, p.j)]
    if len(set(planted_items)) != len(planted_items):
        raise ValueError("planted pairs must use distinct items")
    if any(not 0 <= x < n for x in planted_items):
        raise ValueError(f"planted item ids must lie in [0, {n})")

    members: list[list[int]] = [[] for _ in range(m)]
    for p in plants:
        if not 0 < p.similarity <= measure.max_value:
            raise ValueError(f"target similarity {p.similarity} infeasible for {measure.value}")
        both = _planted_cooccurrence(measure, p.similarity, p.support)
        if both > p.support or both + 2 * (p.support - both) > m:
            raise ValueError(f"planted pair {p.i, p.j}: support {p.support} infeasible with m={m}")
        realised = similarity(measure, both, p.support, p.support)
        if abs(realised - p.similarity) > tolerance * p.similarity:
            raise ValueError(
                f"planted pair {p.i, p.j}: support {p.support} too small to reach {p.similarity} "
                f"(closest is {realised:.4f})"
            )
        rows = rng.choice(m, size=both + 2 * (p.support - both), replace=False)
        single = p.support - both
        for r in rows[:both]:
            members[r] += (p.i, p.j)
        for r in rows[both : both + single]:
            members[r].append(p.i)
        for r in rows[both + single :]:
            members[r].append(p.j)

    reserved = set(planted_items)
    background = np.array([x for x in range(n) if x not in reserved], dtype=np.int64)
    if len(background):
        rank_w = 1.0 / np.arange(1, len(background) + 1) ** skew
        order = rng.permutation(len(background))
        weights = np.empty_like(rank_w)
        weights[order] = rank_w
        weights /= weights.sum()
    if fixed_size:
        sizes = np.full(m, int(round(avg_size)))
    else:
        sizes = 1 + rng.poisson(max(0.0, avg_size - 1), size=m)
    if max_size is not None:
        sizes = np.minimum(sizes, max_size)

    need = np.maximum(0, np.minimum(sizes - np.array([len(x) for x in members]), len(background)))
    draws = _WeightedDraws(rng, background, weights, int(need.sum())) if len(background) else None
    transactions: list[Transaction] = []
    for r in range(m):
        items = set(members[r])
        target = len(items) + int(need[r])
        while len(items) < target:
            items.add(draws.next())
        transactions.append(tuple(sorted(items)))

    order = rng.permutation(m)
    data = Dataset([transactions[k] for k in order])

    counts = item_counts(data.transactions)
    for p in plants:
        both = sum(1 for t in data.transactions if p.i in t and p.j in t)
        got = similarity(measure, both, counts[p.i], counts[p.j])
        if abs(got - p.similarity) > tolerance * p.similarity:
            raise AssertionError(f"planted pair {p.i, p.j} realised {got}, wanted {p.similarity}")
    return data
