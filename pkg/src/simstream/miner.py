"""One-pass similar-pair miner.

Transactions are counted exactly. Whenever the number of transactions ``m``
reaches a power of two ``2**t``, the item counts are frozen, and the next
``2**t`` transactions (the window) are pair-sampled against that snapshot.
The window is cut into ``kappa`` chunks that alternate between filling a
reservoir of sampled pairs and counting the reservoir's pairs. When the window
closes at ``m = 2**(t+1)``, the best estimates it produced replace the
published result.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass, field

from simstream.measures import Measure
from simstream.rng import RandomStream
from simstream.samplecount import (
    Reservoir,
    SimilarityEstimate,
    WeightedCounter,
    estimates_from_counts,
    merge_top,
)
from simstream.sampler import PairSampler
from simstream.stream import CountTable, PrefixState, Transaction

log = logging.getLogger(__name__)

# Multiplier C in L = C * log2(mn). Calibrated on the planted-pair corpora in
# tests/test_acceptance.py; the constants in the analysis are not tight.
DEFAULT_LOG_CONSTANT = 0.25


@dataclass
class MinerConfig:
    measure: Measure | str = Measure.COSINE
    phi: float = 1.0
    phi_relative: bool = False
    s: int = 1024
    max_tx_size: int | None = None
    delta: float = 0.1
    log_constant: float = DEFAULT_LOG_CONSTANT
    seed: int = 0

    def __post_init__(self):
        self.measure = Measure.parse(self.measure)
        if self.phi_relative:
            if not 0.0 < self.phi <= 1.0:
                raise ValueError(f"relative phi must be in (0, 1], got {self.phi}")
        elif self.phi < 1:
            raise ValueError(f"phi must be >= 1, got {self.phi}")
        if self.s < 2:
            raise ValueError(f"s must be >= 2, got {self.s}")
        if self.max_tx_size is not None and self.max_tx_size < 2:
            raise ValueError(f"maximum transaction size must be >= 2, got {self.max_tx_size}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.log_constant <= 0:
            raise ValueError(f"log constant must be positive, got {self.log_constant}")

    def resolve_phi(self, m: int) -> float:
        """Absolute support threshold in effect when ``m`` transactions are seen."""
        if self.phi_relative:
            return max(1.0, self.phi * m)
        return float(self.phi)

    def resolve_max_size(self, n: int) -> int:
        """Configured ``M``, or the number of distinct items seen so far."""
        if self.max_tx_size is not None:
            return self.max_tx_size
        return max(2, n)

    def to_dict(self) -> dict:
        return {
            "measure": self.measure.value,
            "phi": self.phi,
            "phi_relative": self.phi_relative,
            "s": self.s,
            "max_tx_size": self.max_tx_size,
            "delta": self.delta,
            "log_constant": self.log_constant,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ChunkPlan:
    kappa: int
    chunk_len: int
    window_start_m: int
    window_len: int

    @property
    def n_chunks(self) -> int:
        return -(-self.window_len // self.chunk_len)

    @property
    def scale(self) -> float:
        """Window length in units of full chunks; multiplies chunk counts up to the window."""
        return self.window_len / self.chunk_len

    def chunk_of(self, pos: int) -> int:
        return pos // self.chunk_len


def raw_kappa(mb: int, max_size: int, s: int) -> float:
    return math.sqrt(mb * max_size / s)


def plan_chunks(mb: int, max_size: int, s: int, window_len: int, window_start_m: int | None = None) -> ChunkPlan:
    """Balance chunk count against reservoir size: ``kappa ~ sqrt(mb * M / s)``.

    ``kappa`` is rounded to the nearest even integer (at least 2) so chunks
    pair up into reservoir/count rounds.
    """
    kappa = max(2, 2 * math.floor(raw_kappa(mb, max_size, s) / 2 + 0.5))
    chunk_len = max(1, -(-window_len // kappa))
    if window_start_m is None:
        window_start_m = window_len
    return ChunkPlan(kappa, chunk_len, window_start_m, window_len)


def detection_threshold(config: MinerConfig, mb: int, m: int, n: int) -> float:
    """Similarity above which the published top-s carries the accuracy guarantee.

    ``(L / phi) * max(sqrt(mb * M / s), M)`` with ``L = C * log2(m * n)``.
    """
    L = config.log_constant * math.log2(max(1, m * n))
    phi = config.resolve_phi(m)
    M = config.resolve_max_size(n)
    return L / phi * max(math.sqrt(mb * M / config.s), M)


@dataclass
class WindowRecord:
    exponent: int
    m: int
    mb: int
    n: int
    phi: float
    max_tx_size: int
    tau: float
    kappa: int
    chunk_len: int
    threshold: float
    active: bool
    published: list[SimilarityEstimate] | None = None

    def to_dict(self) -> dict:
        d = {
            "exponent": self.exponent,
            "m": self.m,
            "mb": self.mb,
            "n": self.n,
            "phi": self.phi,
            "max_tx_size": self.max_tx_size,
            "tau": self.tau,
            "kappa": self.kappa,
            "chunk_len": self.chunk_len,
            "detection_threshold": self.threshold,
            "active": self.active,
        }
        d["published"] = [e.to_dict() for e in self.published] if self.published is not None else None
        return d


@dataclass
class _Window:
    record: WindowRecord
    prefix: PrefixState
    plan: ChunkPlan
    sampler: PairSampler
    reservoir: Reservoir
    chunk: int = -1
    counter: WeightedCounter | None = None
    top: list[SimilarityEstimate] = field(default_factory=list)


class SimilarityMiner:
    """Streaming state machine; feed transactions with :meth:`process`.

    Args:
        config: tunables; ``config.seed`` fixes every random decision.
        keep_history: retain each window's published list in
            :attr:`windows` (for reports; not part of the algorithm's space).
    """

    def __init__(self, config: MinerConfig, keep_history: bool = False):
        self.config = config
        self.keep_history = keep_history
        self.table = CountTable()
        root = RandomStream(config.seed)
        self._rng_sample, self._rng_reservoir = root.spawn(2)
        self._window: _Window | None = None
        self._published: list[SimilarityEstimate] = []
        self._published_at: int | None = None
        self._published_record: WindowRecord | None = None
        self.windows: list[WindowRecord] = []
        self._ops = 0
        self._sampler_ops = 0
        self.pairs_sampled = 0
        self.peak_entries = 0

    # -- public surface -------------------------------------------------

    def process(self, tx: Transaction) -> None:
        M = self.config.max_tx_size
        if M is not None and len(tx) > M:
            raise ValueError(f"transaction of size {len(tx)} exceeds maximum size {M}")
        boundary = self.table.observe(tx)
        self._ops += len(tx) + 1
        w = self._window
        if w is not None and w.record.active:
            self._route(w, tx, self.table.m - w.plan.window_start_m - 1)
        if boundary:
            if w is not None:
                self._close_window(w)
            self._open_window()

    def run(self, transactions: Iterable[Transaction]) -> list[SimilarityEstimate]:
        for tx in transactions:
            self.process(tx)
        return self.current_top()

    def current_top(self) -> list[SimilarityEstimate]:
        """Estimates published at the latest window close, best first."""
        return list(self._published)

    @property
    def published_at(self) -> int | None:
        """Value of ``m`` when the current top list was published."""
        return self._published_at

    @property
    def ops(self) -> int:
        """Internal operation count (counting, sampling, reservoir and merge work)."""
        w = self._window
        live = w.sampler.ops if w is not None else 0
        return self._ops + self._sampler_ops + live

    def live_entries(self) -> int:
        """Entries held by the algorithm's state (counts, snapshot, samples, results)."""
        total = len(self.table.counts) + len(self._published)
        w = self._window
        if w is not None:
            total += len(w.prefix) + len(w.reservoir) + len(w.top)
            if w.counter is not None:
                total += len(w.counter)
        return total

    @property
    def published_window(self) -> WindowRecord | None:
        """Record of the window whose estimates are currently published."""
        return self._published_record

    def current_threshold(self) -> float | None:
        rec = self._published_record
        return rec.threshold if rec is not None else None

    # -- internals ------------------------------------------------------

    def _open_window(self) -> None:
        table = self.table
        cfg = self.config
        prefix = table.snapshot()
        m, mb, n = table.m, table.mb, table.n
        phi = cfg.resolve_phi(m)
        M = cfg.resolve_max_size(n)
        tau = 4.0 * phi / M
        plan = plan_chunks(mb, M, cfg.s, window_len=m, window_start_m=m)
        record = WindowRecord(
            exponent=prefix.exponent,
            m=m,
            mb=mb,
            n=n,
            phi=phi,
            max_tx_size=M,
            tau=tau,
            kappa=plan.kappa,
            chunk_len=plan.chunk_len,
            threshold=detection_threshold(cfg, mb, m, n),
            active=plan.window_len >= plan.kappa,
        )
        self.windows.append(record)
        sampler = PairSampler(prefix.snapshot_counts, cfg.measure, tau, phi, n, m)
        self._window = _Window(record, prefix, plan, sampler, Reservoir(max(1, cfg.s // 2)))
        self._ops += n
        log.debug("window t=%d opened: kappa=%d chunk_len=%d tau=%.4g", prefix.exponent, plan.kappa, plan.chunk_len, tau)

    def _route(self, w: _Window, tx: Transaction, pos: int) -> None:
        chunk = pos // w.plan.chunk_len
        if chunk != w.chunk:
            self._end_chunk(w)
            w.chunk = chunk
        pairs = w.sampler.sample(tx, self._rng_sample)
        if not pairs:
            return
        self.pairs_sampled += len(pairs)
        self._ops += len(pairs)
        if chunk % 2 == 0:
            offer = w.reservoir.offer
            rng = self._rng_reservoir
            for sp in pairs:
                offer(sp, rng)
        else:
            add = w.counter.add
            for sp in pairs:
                add((sp.i, sp.j), sp.gamma)
        entries = self.live_entries()
        if entries > self.peak_entries:
            self.peak_entries = entries

    def _end_chunk(self, w: _Window) -> None:
        if w.chunk < 0:
            return
        if w.chunk % 2 == 0:
            pairs = [(sp.i, sp.j) for sp in w.reservoir.slots]
            w.counter = WeightedCounter(pairs, chunk=w.chunk + 1)
            self._ops += len(pairs)
            w.reservoir.clear()
        else:
            counter = w.counter
            fresh = estimates_from_counts(
                counter.weights,
                kappa=w.plan.scale,
                tau=w.record.tau,
                chunk=w.chunk,
                window_exponent=w.record.exponent,
                cap=self.config.measure.max_value,
            )
            self._ops += len(counter) + len(fresh) + len(w.top)
            w.top = merge_top(w.top, fresh, self.config.s)
            w.counter = None

    def _close_window(self, w: _Window) -> None:
        if w.chunk % 2 == 1:
            self._end_chunk(w)
        w.reservoir.clear()
        w.counter = None
        self._sampler_ops += w.sampler.ops
        if w.record.active:
            self._published = w.top
            self._published_at = self.table.m
            self._published_record = w.record
            if self.keep_history:
                w.record.published = list(w.top)
        self._window = None
