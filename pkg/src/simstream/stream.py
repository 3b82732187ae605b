"""Exact per-item counts and power-of-two prefix snapshots."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

Transaction = tuple[int, ...]


def make_transaction(items: Iterable[int], max_size: int | None = None) -> Transaction:
    """Normalize ``items`` into a sorted, duplicate-free transaction."""
    tx = tuple(sorted(set(items)))
    if tx and tx[0] < 0:
        raise ValueError(f"item ids must be non-negative, got {tx[0]}")
    if max_size is not None and len(tx) > max_size:
        raise ValueError(f"transaction of size {len(tx)} exceeds maximum size {max_size}")
    return tx


def is_power_of_two(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0


@dataclass(frozen=True)
class PrefixState:
    """Item counts over exactly the first ``2**exponent`` transactions."""

    exponent: int
    snapshot_counts: Mapping[int, int]
    snapshot_m: int
    snapshot_mb: int = 0

    def count(self, item: int) -> int:
        return self.snapshot_counts.get(item, 0)

    def __len__(self) -> int:
        return len(self.snapshot_counts)


@dataclass
class CountTable:
    counts: dict[int, int] = field(default_factory=dict)
    transactions_seen: int = 0
    items_seen: int = 0

    @property
    def distinct_items(self) -> int:
        return len(self.counts)

    # short names used throughout the package
    @property
    def m(self) -> int:
        return self.transactions_seen

    @property
    def mb(self) -> int:
        return self.items_seen

    @property
    def n(self) -> int:
        return len(self.counts)

    def observe(self, tx: Transaction) -> bool:
        """Count one transaction; True when the new ``m`` is a power of two.

        ``tx`` must already be duplicate-free (see :func:`make_transaction`).
        """
        counts = self.counts
        for item in tx:
            counts[item] = counts.get(item, 0) + 1
        self.items_seen += len(tx)
        m = self.transactions_seen = self.transactions_seen + 1
        return m & (m - 1) == 0

    def snapshot(self) -> PrefixState:
        m = self.transactions_seen
        if not is_power_of_two(m):
            raise RuntimeError(f"snapshot taken off a prefix boundary (m={m})")
        return PrefixState(
            exponent=m.bit_length() - 1,
            snapshot_counts=MappingProxyType(dict(self.counts)),
            snapshot_m=m,
            snapshot_mb=self.items_seen,
        )


def observe(table: CountTable, tx: Transaction) -> bool:
    return table.observe(tx)


def snapshot(table: CountTable) -> PrefixState:
    return table.snapshot()
