"""Symmetric pair-similarity measures.

Every measure has the form ``s(i, j) = |S_i & S_j| * f(|S_i|, |S_j|)`` where
``S_i`` is the set of transactions containing item ``i``. The weight ``f`` is
what the pair sampler uses to bias its sampling probabilities, so it is
exposed separately from the similarity itself.

Jaccard is not offered directly. Rank by dice instead: with dice defined as
``D = |S_i&S_j| / (|S_i| + |S_j|)`` (so ``D <= 1/2``), Jaccard is ``D / (1 - D)``,
a monotone function of ``D``.
"""

from __future__ import annotations

import enum
import math


class Measure(str, enum.Enum):
    COSINE = "cosine"
    DICE = "dice"
    ALL_CONFIDENCE = "all_confidence"
    OVERLAP = "overlap"

    @classmethod
    def parse(cls, name: str | Measure) -> Measure:
        """Look a measure up by its CLI name (``cosine``, ``dice``, ...)."""
        if isinstance(name, Measure):
            return name
        try:
            return cls(name)
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown measure {name!r}; expected one of: {choices}") from None

    @property
    def max_value(self) -> float:
        # |S_i & S_j| <= min(|S_i|, |S_j|) <= (|S_i| + |S_j|) / 2
        return 0.5 if self is Measure.DICE else 1.0

    def weight(self, c_i: int, c_j: int) -> float:
        return weight_f(self, c_i, c_j)

    def similarity(self, c_ij: int, c_i: int, c_j: int) -> float:
        return similarity(self, c_ij, c_i, c_j)


def _cosine(a, b):
    return 1.0 / math.sqrt(a * b)


def _dice(a, b):
    return 1.0 / (a + b)


def _all_confidence(a, b):
    return 1.0 / (a if a > b else b)


def _overlap(a, b):
    return 1.0 / (a if a < b else b)


_WEIGHTS = {
    Measure.COSINE: _cosine,
    Measure.DICE: _dice,
    Measure.ALL_CONFIDENCE: _all_confidence,
    Measure.OVERLAP: _overlap,
}


def weight_function(measure: Measure):
    """Return the raw two-argument weight function for ``measure``.

    No argument checking is done; this is the hot-path variant used by the
    sampler after counts have already been clamped to at least one.
    """
    return _WEIGHTS[Measure.parse(measure)]


def weight_f(measure: Measure, c_i: int, c_j: int) -> float:
    """Per-pair weight ``f(c_i, c_j)``; non-increasing in both counts."""
    if c_i < 1 or c_j < 1:
        raise ValueError(f"item counts must be >= 1, got ({c_i}, {c_j})")
    return _WEIGHTS[Measure.parse(measure)](c_i, c_j)


def similarity(measure: Measure, c_ij: int, c_i: int, c_j: int) -> float:
    """Similarity of a pair from its co-occurrence count and item supports.

    Raises:
        ValueError: if either support is zero or ``c_ij`` is not in
            ``[0, min(c_i, c_j)]``.
    """
    if c_i < 1 or c_j < 1:
        raise ValueError(f"item counts must be >= 1, got ({c_i}, {c_j})")
    if not 0 <= c_ij <= min(c_i, c_j):
        raise ValueError(f"pair count {c_ij} outside [0, min({c_i}, {c_j})]")
    return c_ij * _WEIGHTS[Measure.parse(measure)](c_i, c_j)
