"""Snapshot stream serialization and real-data ingestion.

The canonical on-disk form is a plain-text edge list, one record per line:
``t<TAB>u<TAB>v`` with non-decreasing ``t``.  A generated corpus directory
holds ``edges.tsv`` plus a ``meta.txt`` sidecar (``key=value``: node count,
length, seed, schedule) and optionally ``truth.txt`` with one ground-truth
change index per line.  Arbitrary edge-list files are ingested by mapping
the union of node labels to dense indices; an optional fourth column carries
an explicit window key for externally defined windows.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .models import Snapshot, dyad_index, dyad_pair

__all__ = [
    "IngestError",
    "write_corpus",
    "read_corpus",
    "read_meta",
    "write_change_points",
    "read_change_points",
    "SnapshotReader",
    "ingest_snapshots",
]

EDGES_FILE = "edges.tsv"
META_FILE = "meta.txt"
TRUTH_FILE = "truth.txt"


class IngestError(ValueError):
    """Malformed or inconsistent input data; carries the offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def write_corpus(
    directory,
    snapshots: Iterable[Snapshot],
    meta: dict,
    change_points=None,
) -> Path:
    """Stream a snapshot sequence into a corpus directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    count = 0
    n_nodes = None
    with open(directory / EDGES_FILE, "w", encoding="utf-8") as fh:
        for snap in snapshots:
            n_nodes = snap.n_nodes
            if snap.codes.size:
                u, v = dyad_pair(snap.codes, snap.n_nodes)
                lines = "\n".join(
                    f"{snap.t}\t{a}\t{b}" for a, b in zip(u.tolist(), v.tolist())
                )
                fh.write(lines + "\n")
            count += 1
    meta = dict(meta)
    meta.setdefault("length", count)
    if n_nodes is not None:
        meta.setdefault("n_nodes", n_nodes)
    with open(directory / META_FILE, "w", encoding="utf-8") as fh:
        for key, value in meta.items():
            fh.write(f"{key}={value}\n")
    if change_points is not None:
        write_change_points(directory / TRUTH_FILE, change_points)
    return directory


def write_change_points(path, change_points) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for idx in sorted(change_points):
            fh.write(f"{idx}\n")


def read_change_points(path) -> frozenset[int]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(int(line) for line in fh if line.strip())


def read_meta(directory) -> dict[str, str]:
    meta = {}
    with open(Path(directory) / META_FILE, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and "=" in line:
                key, _, value = line.partition("=")
                meta[key] = value
    return meta


def read_corpus(directory) -> Iterator[Snapshot]:
    """Iterate a generated corpus; snapshots absent from the file are empty.

    Corpus timestamps are the snapshot indices ``0 .. length - 1`` and node
    labels are already dense, so no relabeling pass is needed.
    """
    directory = Path(directory)
    meta = read_meta(directory)
    n_nodes = int(meta["n_nodes"])
    length = int(meta["length"])
    current_t = 0
    codes: list[int] = []

    def emit(upto: int) -> Iterator[Snapshot]:
        nonlocal current_t, codes
        while current_t < upto:
            arr = np.unique(np.asarray(codes, dtype=np.int64)) if codes else np.empty(0, np.int64)
            yield Snapshot(current_t, n_nodes, arr)
            codes = []
            current_t += 1

    with open(directory / EDGES_FILE, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            try:
                t, u, v = int(parts[0]), int(parts[1]), int(parts[2])
            except (ValueError, IndexError):
                raise IngestError(f"malformed record {line.strip()!r}", lineno) from None
            if t < current_t:
                raise IngestError("time keys are not sorted", lineno)
            if not 0 <= t < length:
                raise IngestError(f"timestamp {t} outside [0, {length})", lineno)
            if u == v:
                raise IngestError(f"self-loop on node {u}", lineno)
            if not 0 <= min(u, v) or max(u, v) >= n_nodes:
                raise IngestError(f"node index out of range for n_nodes={n_nodes}", lineno)
            yield from emit(t)
            codes.append(int(dyad_index(min(u, v), max(u, v), n_nodes)))
    yield from emit(length)


class SnapshotReader:
    """Two-pass reader for arbitrary edge-list files.

    The first pass collects the union of node labels (mapped to dense
    indices in sorted label order) and validates the format; iteration
    re-reads the file and yields snapshots per distinct time key.  Passing
    ``node_map`` (a sequence of labels, position = dense index) skips the
    union pass for strict single-pass streaming.
    """

    def __init__(self, path, window_column: bool = False, node_map=None):
        self.path = Path(path)
        self.window_column = window_column
        if node_map is not None:
            self._labels = {int(label): i for i, label in enumerate(node_map)}
            if len(self._labels) != len(list(node_map)):
                raise IngestError("node map contains duplicate labels")
        else:
            self._labels = self._scan_labels()
        self.n_nodes = len(self._labels)

    @property
    def node_labels(self) -> list[int]:
        return sorted(self._labels, key=self._labels.get)

    def _records(self) -> Iterator[tuple[int, int, int, int, object]]:
        expected = 4 if self.window_column else 3
        last_t = None
        empty = True
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                parts = line.split()
                if not parts:
                    continue
                empty = False
                if len(parts) != expected:
                    raise IngestError(
                        f"expected {expected} fields, got {len(parts)}", lineno
                    )
                try:
                    t, u, v = int(parts[0]), int(parts[1]), int(parts[2])
                except ValueError:
                    raise IngestError(f"non-numeric field in {line.strip()!r}", lineno) from None
                if u == v:
                    raise IngestError(f"self-loop on node {u}", lineno)
                if last_t is not None and t < last_t:
                    raise IngestError("time keys are not sorted", lineno)
                last_t = t
                key = parts[3] if self.window_column else None
                yield lineno, t, u, v, key
        if empty:
            raise IngestError("input contains no records")

    def _scan_labels(self) -> dict[int, int]:
        labels: set[int] = set()
        for _, _, u, v, _ in self._records():
            labels.add(u)
            labels.add(v)
        return {label: i for i, label in enumerate(sorted(labels))}

    def _lookup(self, label: int, lineno: int) -> int:
        try:
            return self._labels[label]
        except KeyError:
            raise IngestError(f"node label {label} not in the node map", lineno) from None

    def __iter__(self) -> Iterator[Snapshot]:
        current_t = None
        current_key = None
        codes: set[int] = set()

        def build() -> Snapshot:
            arr = np.sort(np.fromiter(codes, dtype=np.int64, count=len(codes)))
            return Snapshot(current_t, self.n_nodes, arr, window_key=current_key)

        for lineno, t, u, v, key in self._records():
            if current_t is not None and t != current_t:
                yield build()
                codes = set()
                current_key = None
            current_t = t
            if self.window_column:
                if current_key is not None and key != current_key:
                    raise IngestError(
                        f"snapshot {t} spans multiple window keys", lineno
                    )
                current_key = key
            a, b = self._lookup(u, lineno), self._lookup(v, lineno)
            codes.add(int(dyad_index(min(a, b), max(a, b), self.n_nodes)))
        if current_t is not None:
            yield build()


def ingest_snapshots(path, window_column: bool = False, node_map=None):
    """Open a snapshot source: a corpus directory or a bare edge-list file.

    Returns an iterable of snapshots; bare files go through
    :class:`SnapshotReader` with union-based relabeling.
    """
    path = Path(path)
    if path.is_dir():
        if window_column:
            raise IngestError("corpus directories do not carry window keys")
        return read_corpus(path)
    return SnapshotReader(path, window_column=window_column, node_map=node_map)
