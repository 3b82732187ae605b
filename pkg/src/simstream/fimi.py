"""FIMI transaction files: one transaction per line, whitespace-separated item ids."""

from __future__ import annotations

import os
from collections.abc import Iterable, Iterator

import numpy as np

from simstream.stream import Transaction

_MAX_ID = 2**64 - 1


class FimiParseError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


def parse_line(line: str) -> Transaction:
    items = set()
    for tok in line.split():
        if not (tok.isascii() and tok.isdigit()):
            raise ValueError(f"invalid item id {tok!r}")
        x = int(tok)
        if x > _MAX_ID:
            raise ValueError(f"item id {tok} does not fit in 64 bits")
        items.add(x)
    return tuple(sorted(items))


def parse_fimi(path: str | os.PathLike, max_size: int | None = None) -> Iterator[Transaction]:
    """Yield normalized transactions (sorted, de-duplicated); blank lines are skipped.

    Raises:
        FimiParseError: on a non-integer token or a transaction larger than
            ``max_size``, naming the offending line.
    """
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                tx = parse_line(line)
            except ValueError as e:
                raise FimiParseError(path, lineno, str(e)) from None
            if max_size is not None and len(tx) > max_size:
                raise FimiParseError(path, lineno, f"transaction of size {len(tx)} exceeds maximum size {max_size}")
            yield tx


def format_transaction(tx: Iterable[int]) -> str:
    return " ".join(map(str, tx))


def write_fimi(transactions: Iterable[Iterable[int]], path: str | os.PathLike) -> int:
    count = 0
    with open(path, "w") as fh:
        for tx in transactions:
            fh.write(format_transaction(tx))
            fh.write("\n")
            count += 1
    return count


def shuffle(path_in: str | os.PathLike, path_out: str | os.PathLike, seed: int | None) -> int:
    """Write a uniformly random (seeded Fisher-Yates) permutation of a FIMI file."""
    txs = list(parse_fimi(path_in))
    rng = np.random.default_rng(seed)
    # Fisher-Yates, explicit so the permutation depends only on the seed
    for k in range(len(txs) - 1, 0, -1):
        r = int(rng.integers(k + 1))
        txs[k], txs[r] = txs[r], txs[k]
    return write_fimi(txs, path_out)
