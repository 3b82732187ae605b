"""Reservoir-then-count stage over the stream of sampled pairs.

Chunks alternate: a reservoir chunk keeps a uniform sample of the pairs it
sees, and the following counting chunk accumulates gamma-weighted occurrences
of exactly those pairs. A pair's weighted count in one counting chunk, scaled
by the number of chunks and divided by the sampling rate, estimates its
similarity over the whole prefix.
"""

from __future__ import annotations

import heapq
import itertools
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from simstream.measures import Measure, weight_function
from simstream.rng import RandomStream
from simstream.sampler import SampledPair

Pair = tuple[int, int]


@dataclass
class Reservoir:
    """Uniform fixed-size sample (Vitter's algorithm R)."""

    capacity: int
    slots: list = field(default_factory=list)
    seen: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"reservoir capacity must be >= 1, got {self.capacity}")

    def offer(self, x, rng: RandomStream) -> None:
        self.seen += 1
        if len(self.slots) < self.capacity:
            self.slots.append(x)
            return
        # accept w.p. capacity/seen, evicting a uniform victim: one draw does both
        r = rng.below(self.seen)
        if r < self.capacity:
            self.slots[r] = x

    def clear(self) -> None:
        self.slots.clear()
        self.seen = 0

    def __len__(self) -> int:
        return len(self.slots)


def reservoir_offer(reservoir: Reservoir, x, rng: RandomStream) -> Reservoir:
    reservoir.offer(x, rng)
    return reservoir


class WeightedCounter:
    """Gamma-weighted occurrence counts for a fixed set of pairs.

    The key set is frozen at construction; duplicates in the source sample
    share one counter.
    """

    def __init__(self, pairs: Iterable[Pair], chunk: int = 0):
        self.weights: dict[Pair, float] = dict.fromkeys(pairs, 0.0)
        self.occurrences: dict[Pair, int] = dict.fromkeys(self.weights, 0)
        self.chunk = chunk

    def add(self, pair: Pair, gamma: float) -> bool:
        w = self.weights.get(pair)
        if w is None:
            return False
        self.weights[pair] = w + gamma
        self.occurrences[pair] += 1
        return True

    def __len__(self) -> int:
        return len(self.weights)


def count_chunk(sample: Iterable[SampledPair], chunk: Iterable[SampledPair]) -> dict[Pair, float]:
    """Weighted counts of the chunk's pairs that also appear in ``sample``.

    Only pairs that occur in ``chunk`` get an entry.
    """
    counter = WeightedCounter(sp.pair for sp in sample)
    for sp in chunk:
        counter.add(sp.pair, sp.gamma)
    return {p: w for p, w in counter.weights.items() if counter.occurrences[p]}


def estimate_similarity(weight: float, kappa: float, tau: float) -> float:
    """Similarity estimate ``kappa * W / tau`` from one counting chunk.

    Valid for weight functions with ``f(2a, 2b) = f(a, b) / 2``, which holds
    for every built-in measure.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    return kappa * weight / tau


def estimate_similarity_general(
    weight: float, kappa: float, tau: float, measure: Measure | str, c_i: float, c_j: float
) -> float:
    """Estimate without assuming homogeneity of ``f``.

    ``c_i`` and ``c_j`` are the (clamped) snapshot counts the pair was sampled
    with; the full-prefix supports are taken to be twice those.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    f = weight_function(measure)
    return 2.0 * kappa * weight * f(2 * c_i, 2 * c_j) / (tau * f(c_i, c_j))


@dataclass(frozen=True)
class SimilarityEstimate:
    pair: Pair
    estimate: float
    weighted_count: float
    chunk: int
    window_exponent: int

    def to_dict(self) -> dict:
        return {
            "i": self.pair[0],
            "j": self.pair[1],
            "estimate": self.estimate,
            "weighted_count": self.weighted_count,
            "chunk": self.chunk,
            "window_exponent": self.window_exponent,
        }


def _rank_key(e: SimilarityEstimate):
    return (-e.estimate, e.pair)


def merge_top(
    current: Iterable[SimilarityEstimate], fresh: Iterable[SimilarityEstimate], s: int
) -> list[SimilarityEstimate]:
    """Keep the ``s`` best distinct pairs, one (the larger) estimate per pair.

    Result is sorted by descending estimate, ties by ascending pair.
    """
    best: dict[Pair, SimilarityEstimate] = {}
    for e in itertools.chain(current, fresh):
        old = best.get(e.pair)
        if old is None or e.estimate > old.estimate:
            best[e.pair] = e
    return heapq.nsmallest(s, best.values(), key=_rank_key)


def estimates_from_counts(
    weights: Mapping[Pair, float],
    *,
    kappa: float,
    tau: float,
    chunk: int,
    window_exponent: int,
    cap: float = 1.0,
) -> list[SimilarityEstimate]:
    """Turn one counting chunk's weights into estimates, capped at ``cap``.

    Pairs with zero weight carry no evidence and are dropped.
    """
    out = []
    for pair, w in weights.items():
        if w > 0.0:
            est = estimate_similarity(w, kappa, tau)
            out.append(SimilarityEstimate(pair, min(est, cap), w, chunk, window_exponent))
    return out
