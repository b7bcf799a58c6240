"""Tracked-dyad sampling, sliding windows, and per-window transition counts.

A fixed set of ``k`` dyads is sampled once per run.  Each snapshot is
projected onto those dyads (one bit per dyad), and every window of ``s``
consecutive snapshots is reduced to per-dyad transition counts: the four
flip/stay counts over the ``s - 1`` consecutive pairs plus the occupancy
(number of snapshots in which the dyad is an edge).  Memory is bounded by the
sample size and window length, independent of the network size.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

from .models import Snapshot, dyad_count, dyad_pair

__all__ = [
    "WindowConfig",
    "DyadSample",
    "ChainCounts",
    "sample_dyads",
    "window_index_sequence",
    "project_snapshot",
    "accumulate_counts",
    "iter_window_counts",
    "iter_keyed_window_counts",
]


@dataclass(frozen=True)
class WindowConfig:
    """Window length ``size`` and step; ``step == size`` tiles without overlap."""

    size: int
    step: int | None = None

    def __post_init__(self):
        if self.step is None:
            object.__setattr__(self, "step", self.size)
        if self.size < 2:
            raise ValueError("window size must be at least 2")
        if not 1 <= self.step <= self.size:
            raise ValueError("step must be in [1, size]")


@dataclass(frozen=True)
class DyadSample:
    """The tracked dyads, in sampling order (grouping follows this order)."""

    dyads: np.ndarray
    n_nodes: int
    strategy: str
    seed: int | None = None

    def __post_init__(self):
        codes = np.asarray(self.dyads, dtype=np.int64)
        if codes.ndim != 1 or codes.size == 0:
            raise ValueError("a sample needs at least one dyad")
        if np.unique(codes).size != codes.size:
            raise ValueError("sampled dyads must be distinct")
        if codes.min() < 0 or codes.max() >= dyad_count(self.n_nodes):
            raise ValueError("sampled dyad out of range")
        object.__setattr__(self, "dyads", codes)

    @property
    def k(self) -> int:
        return int(self.dyads.size)

    def pairs(self) -> list[tuple[int, int]]:
        u, v = dyad_pair(self.dyads, self.n_nodes)
        return list(zip(u.tolist(), v.tolist()))

    @cached_property
    def _sorted(self) -> tuple[np.ndarray, np.ndarray]:
        order = np.argsort(self.dyads, kind="stable")
        return self.dyads[order], np.argsort(order, kind="stable")


def sample_dyads(
    n_nodes: int,
    k: int,
    strategy: str = "uniform-dyads",
    *,
    seed: int | None = None,
    rng: np.random.Generator | None = None,
    priming: Iterable[Snapshot] | None = None,
) -> DyadSample:
    """Sample ``k`` distinct dyads to track; performed once per run.

    ``uniform-dyads`` draws uniformly from all possible dyads.
    ``observed-dyads`` draws uniformly from the dyads that appear as an edge
    at least once in the priming snapshots, which avoids tracking permanently
    empty dyads on sparse networks.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    if k < 1:
        raise ValueError("k must be at least 1")

    if strategy == "uniform-dyads":
        total = dyad_count(n_nodes)
        if k > total:
            raise ValueError(f"k={k} exceeds the {total} possible dyads")
        if total <= 4 * k:
            codes = rng.permutation(total)[:k]
        else:
            # Rejection sampling; k << total makes collisions rare.
            seen: list[np.ndarray] = []
            need = k
            while need > 0:
                cand = rng.integers(0, total, size=2 * need + 8)
                cand = cand[np.sort(np.unique(cand, return_index=True)[1])]
                if seen:
                    cand = cand[~np.isin(cand, np.concatenate(seen))]
                cand = cand[:need]
                seen.append(cand)
                need -= cand.size
            codes = np.concatenate(seen)
        return DyadSample(codes.astype(np.int64), n_nodes, strategy, seed)

    if strategy == "observed-dyads":
        if priming is None:
            raise ValueError("observed-dyads requires priming snapshots")
        pool = np.unique(np.concatenate([s.codes for s in priming] or [np.empty(0, np.int64)]))
        if k > pool.size:
            raise ValueError(f"k={k} exceeds the {pool.size} observed dyads")
        codes = rng.choice(pool, size=k, replace=False)
        return DyadSample(codes.astype(np.int64), n_nodes, strategy, seed)

    raise ValueError(f"unknown sampling strategy {strategy!r}")


def window_index_sequence(length: int, cfg: WindowConfig) -> list[int]:
    """End offsets of every full window: ``size, size + step, ...`` up to ``length``.

    Offsets are end-exclusive: the window ending at ``e`` covers snapshots
    ``e - size`` through ``e - 1``.  A trailing partial window is dropped.
    """
    if length < cfg.size:
        raise ValueError(f"need at least {cfg.size} snapshots, got {length}")
    return list(range(cfg.size, length + 1, cfg.step))


def project_snapshot(snapshot: Snapshot, sample: DyadSample) -> np.ndarray:
    """Edge bits of the tracked dyads, in sample order; cost is O(k log E)."""
    if snapshot.n_nodes != sample.n_nodes:
        raise ValueError("snapshot and sample node counts differ")
    sorted_codes, unsort = sample._sorted
    pos = np.searchsorted(snapshot.codes, sorted_codes)
    pos = np.minimum(pos, max(snapshot.codes.size - 1, 0))
    hits = (
        snapshot.codes[pos] == sorted_codes
        if snapshot.codes.size
        else np.zeros(sample.k, dtype=bool)
    )
    return hits[unsort]


@dataclass(frozen=True)
class ChainCounts:
    """Per-dyad transition counts and occupancy for one window.

    ``n00 + n01 + n10 + n11 == size - 1`` for every dyad, and the occupancy
    ``n1`` counts edge snapshots over the whole window (so ``n1 >= n1_star``).
    """

    n00: np.ndarray
    n01: np.ndarray
    n10: np.ndarray
    n11: np.ndarray
    n1: np.ndarray
    size: int

    def __post_init__(self):
        trans = self.n00 + self.n01 + self.n10 + self.n11
        if np.any(trans != self.size - 1):
            raise ValueError("transition counts must sum to size - 1 per dyad")
        if np.any(self.n1 > self.size) or np.any(self.n1 < self.n1_star):
            raise ValueError("occupancy inconsistent with transition counts")

    @classmethod
    def from_bits(cls, bits: np.ndarray) -> "ChainCounts":
        """Count transitions from an ``(s, k)`` boolean trace matrix."""
        bits = np.asarray(bits, dtype=bool)
        if bits.ndim != 2 or bits.shape[0] < 1:
            raise ValueError("need an (s, k) trace matrix with s >= 1")
        a, b = bits[:-1], bits[1:]
        return cls(
            n00=(~a & ~b).sum(axis=0).astype(np.int64),
            n01=(~a & b).sum(axis=0).astype(np.int64),
            n10=(a & ~b).sum(axis=0).astype(np.int64),
            n11=(a & b).sum(axis=0).astype(np.int64),
            n1=bits.sum(axis=0).astype(np.int64),
            size=bits.shape[0],
        )

    @property
    def k(self) -> int:
        return int(self.n1.size)

    @property
    def n0_star(self) -> np.ndarray:
        return self.n00 + self.n01

    @property
    def n1_star(self) -> np.ndarray:
        return self.n10 + self.n11


def accumulate_counts(snapshots: Sequence[Snapshot], sample: DyadSample) -> ChainCounts:
    """Transition counts for exactly one window of snapshots, in time order."""
    snapshots = list(snapshots)
    if not snapshots:
        raise ValueError("a window cannot be empty")
    bits = np.stack([project_snapshot(s, sample) for s in snapshots])
    return ChainCounts.from_bits(bits)


def iter_window_counts(
    snapshots: Iterable[Snapshot], sample: DyadSample, cfg: WindowConfig
) -> Iterator[tuple[int, ChainCounts]]:
    """Stream ``(end_offset, counts)`` per window, buffering at most ``size`` rows.

    Old rows are discarded as the window advances, so peak memory is
    O(k * size) bits regardless of network size or sequence length.
    """
    buffer: list[np.ndarray] = []
    consumed = 0
    next_end = cfg.size
    for snap in snapshots:
        buffer.append(project_snapshot(snap, sample))
        if len(buffer) > cfg.size:
            buffer.pop(0)
        consumed += 1
        if consumed == next_end:
            yield consumed, ChainCounts.from_bits(np.stack(buffer))
            next_end += cfg.step


def iter_keyed_window_counts(
    snapshots: Iterable[Snapshot], sample: DyadSample
) -> Iterator[tuple[object, ChainCounts]]:
    """Group snapshots by consecutive ``window_key`` runs; one window per key."""
    key = _UNSET = object()
    buffer: list[np.ndarray] = []
    for snap in snapshots:
        if snap.window_key is None:
            raise ValueError(f"snapshot t={snap.t} has no window key")
        if snap.window_key != key and key is not _UNSET:
            yield key, ChainCounts.from_bits(np.stack(buffer))
            buffer = []
        key = snap.window_key
        buffer.append(project_snapshot(snap, sample))
    if buffer:
        yield key, ChainCounts.from_bits(np.stack(buffer))
