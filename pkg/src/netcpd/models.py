"""Generative network models and snapshot primitives.

A dynamic network is a sequence of undirected simple graphs ("snapshots") on a
fixed node set of size ``n``.  A *dyad* is an unordered node pair, linked or
not; dyads are addressed by a canonical linear index in ``[0, n*(n-1)/2)``
(row-major order over the upper triangle).  Each generative model assigns an
edge probability to every dyad; snapshots are Bernoulli samples coupled in
time by a continuity mechanism (see :mod:`netcpd.generate`).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

__all__ = [
    "dyad_count",
    "dyad_index",
    "dyad_pair",
    "all_dyads",
    "Snapshot",
    "GenerativeModel",
    "ErdosRenyi",
    "ChungLu",
    "StochasticBlockModel",
    "BlockChungLu",
    "BTER",
]


def dyad_count(n_nodes: int) -> int:
    """Number of distinct dyads on ``n_nodes`` nodes."""
    return n_nodes * (n_nodes - 1) // 2


def dyad_index(u, v, n_nodes: int):
    """Map canonical node pairs ``u < v`` to linear dyad indices (vectorized)."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    if np.any(u >= v):
        raise ValueError("dyads must satisfy u < v")
    if np.any(u < 0) or np.any(v >= n_nodes):
        raise ValueError(f"node index out of range for n_nodes={n_nodes}")
    idx = u * (2 * n_nodes - u - 1) // 2 + (v - u - 1)
    return idx if idx.ndim else int(idx)


def dyad_pair(index, n_nodes: int):
    """Inverse of :func:`dyad_index`: linear indices back to ``(u, v)`` arrays."""
    idx = np.asarray(index, dtype=np.int64)
    if np.any(idx < 0) or np.any(idx >= dyad_count(n_nodes)):
        raise ValueError("dyad index out of range")
    # Float solve for the row, then an exact integer fix-up for rounding.
    b = 2 * n_nodes - 1
    u = np.floor((b - np.sqrt(b * b - 8.0 * idx)) / 2.0).astype(np.int64)
    row_start = u * (2 * n_nodes - u - 1) // 2
    u = np.where(row_start > idx, u - 1, u)
    row_start = u * (2 * n_nodes - u - 1) // 2
    next_start = (u + 1) * (2 * n_nodes - u - 2) // 2
    u = np.where(idx >= next_start, u + 1, u)
    row_start = u * (2 * n_nodes - u - 1) // 2
    v = idx - row_start + u + 1
    if idx.ndim:
        return u, v
    return int(u), int(v)


def all_dyads(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint arrays ``(u, v)`` of every dyad in linear-index order."""
    counts = np.arange(n_nodes - 1, 0, -1)
    u = np.repeat(np.arange(n_nodes - 1, dtype=np.int64), counts)
    v = np.concatenate(
        [np.arange(i + 1, n_nodes, dtype=np.int64) for i in range(n_nodes - 1)]
    ) if n_nodes > 1 else np.empty(0, dtype=np.int64)
    return u, v


@dataclass(frozen=True, eq=False)
class Snapshot:
    """One observed graph: a timestamp and a set of edges.

    ``codes`` holds the sorted, duplicate-free linear dyad indices of the
    edges.  ``window_key`` optionally tags the snapshot with an external
    grouping key (one window per key run) for real-data ingestion.
    """

    t: int
    n_nodes: int
    codes: np.ndarray
    window_key: object = None

    @classmethod
    def from_edges(cls, t, n_nodes, edges, window_key=None) -> "Snapshot":
        """Build a snapshot from ``(u, v)`` pairs; pairs are canonicalized."""
        pairs = list(edges)
        if not pairs:
            return cls(t, n_nodes, np.empty(0, dtype=np.int64), window_key)
        arr = np.asarray(pairs, dtype=np.int64)
        u = np.minimum(arr[:, 0], arr[:, 1])
        v = np.maximum(arr[:, 0], arr[:, 1])
        if np.any(u == v):
            raise ValueError("self-loops are not allowed")
        codes = np.unique(dyad_index(u, v, n_nodes))
        return cls(t, n_nodes, codes, window_key)

    @property
    def edge_count(self) -> int:
        return int(self.codes.size)

    def edges(self) -> Iterator[tuple[int, int]]:
        u, v = dyad_pair(self.codes, self.n_nodes) if self.codes.size else ((), ())
        return zip(np.atleast_1d(u).tolist(), np.atleast_1d(v).tolist())

    def has_edge(self, u: int, v: int) -> bool:
        code = dyad_index(min(u, v), max(u, v), self.n_nodes)
        pos = np.searchsorted(self.codes, code)
        return pos < self.codes.size and self.codes[pos] == code

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Snapshot)
            and self.t == other.t
            and self.n_nodes == other.n_nodes
            and np.array_equal(self.codes, other.codes)
        )

    __hash__ = None


class GenerativeModel(ABC):
    """Edge-probability model for one snapshot.

    Subclasses assign a probability in ``[0, 1]`` to every dyad.  They are
    immutable; model change over time is expressed by swapping instances.
    """

    kind: str

    @abstractmethod
    def validate(self, n_nodes: int) -> None:
        """Raise ``ValueError`` if parameters are invalid for ``n_nodes`` nodes."""

    @abstractmethod
    def edge_probability(self, u: int, v: int) -> float:
        """Probability that the dyad ``{u, v}`` is an edge."""

    @abstractmethod
    def dyad_probabilities(self, n_nodes: int) -> np.ndarray:
        """Edge probabilities for all dyads, in linear-index order."""

    def expected_edges(self, n_nodes: int) -> float:
        return float(self.dyad_probabilities(n_nodes).sum())


def _check_prob(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value}")


def _as_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-D array")
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    if w.sum() <= 0:
        raise ValueError("weights must have a positive sum")
    return w


def _as_communities(communities) -> np.ndarray:
    c = np.asarray(communities, dtype=np.int64)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("community assignment must be a non-empty 1-D array")
    if np.any(c < 0):
        raise ValueError("community labels must be non-negative")
    return c


def _check_rates(rates: np.ndarray, n_communities: int) -> None:
    if rates.shape != (n_communities, n_communities):
        raise ValueError(
            f"rate matrix must be {n_communities}x{n_communities}, got {rates.shape}"
        )
    if not np.array_equal(rates, rates.T):
        raise ValueError("rate matrix must be symmetric")
    if np.any(rates < 0) or np.any(rates > 1):
        raise ValueError("rate matrix entries must be in [0, 1]")


def _top_two(values: np.ndarray) -> tuple[float, float]:
    if values.size < 2:
        return float(values[0]), 0.0
    part = np.partition(values, values.size - 2)
    return float(part[-1]), float(part[-2])


@dataclass(frozen=True)
class ErdosRenyi(GenerativeModel):
    """Homogeneous model: every dyad is an edge with the same probability."""

    p: float
    kind = "er"

    def __post_init__(self):
        _check_prob(self.p, "p")

    def validate(self, n_nodes: int) -> None:
        _check_prob(self.p, "p")

    def edge_probability(self, u: int, v: int) -> float:
        return self.p

    def dyad_probabilities(self, n_nodes: int) -> np.ndarray:
        return np.full(dyad_count(n_nodes), self.p)


@dataclass(frozen=True)
class ChungLu(GenerativeModel):
    """Weighted model: dyad probability ``density * w_u * w_v / sum(w)``."""

    weights: np.ndarray
    density: float
    kind = "cl"

    def __post_init__(self):
        object.__setattr__(self, "weights", _as_weights(self.weights))
        if self.density < 0:
            raise ValueError("density must be non-negative")
        w1, w2 = _top_two(self.weights)
        if self.density * w1 * w2 / self.weights.sum() > 1.0:
            raise ValueError("maximal weight pair exceeds probability 1")

    def validate(self, n_nodes: int) -> None:
        if self.weights.size != n_nodes:
            raise ValueError("one weight per node is required")

    def edge_probability(self, u: int, v: int) -> float:
        return float(self.density * self.weights[u] * self.weights[v] / self.weights.sum())

    def dyad_probabilities(self, n_nodes: int) -> np.ndarray:
        self.validate(n_nodes)
        u, v = all_dyads(n_nodes)
        return self.density * self.weights[u] * self.weights[v] / self.weights.sum()


@dataclass(frozen=True)
class StochasticBlockModel(GenerativeModel):
    """Community model: dyad probability looked up from a symmetric rate matrix."""

    communities: np.ndarray
    rates: np.ndarray
    kind = "sbm"

    def __post_init__(self):
        object.__setattr__(self, "communities", _as_communities(self.communities))
        object.__setattr__(self, "rates", np.asarray(self.rates, dtype=np.float64))
        _check_rates(self.rates, int(self.communities.max()) + 1)

    def validate(self, n_nodes: int) -> None:
        if self.communities.size != n_nodes:
            raise ValueError("one community label per node is required")

    def edge_probability(self, u: int, v: int) -> float:
        return float(self.rates[self.communities[u], self.communities[v]])

    def dyad_probabilities(self, n_nodes: int) -> np.ndarray:
        self.validate(n_nodes)
        u, v = all_dyads(n_nodes)
        return self.rates[self.communities[u], self.communities[v]]


@dataclass(frozen=True)
class BlockChungLu(GenerativeModel):
    """Community model with node weights.

    Dyad probability is ``rates[c_u, c_v] * w_u * w_v / normalization``.  The
    default normalization is the largest pairwise weight product, which keeps
    every dyad probability in ``[0, 1]`` whenever the rates do.  A custom
    normalization is accepted but rejected if any dyad would exceed 1.
    """

    communities: np.ndarray
    rates: np.ndarray
    weights: np.ndarray
    normalization: float | None = None
    kind = "sbm-cl"

    def __post_init__(self):
        object.__setattr__(self, "communities", _as_communities(self.communities))
        object.__setattr__(self, "rates", np.asarray(self.rates, dtype=np.float64))
        object.__setattr__(self, "weights", _as_weights(self.weights))
        _check_rates(self.rates, int(self.communities.max()) + 1)
        if self.communities.size != self.weights.size:
            raise ValueError("communities and weights must have equal length")
        if self.normalization is not None and self.normalization <= 0:
            raise ValueError("normalization must be positive")
        if self._max_dyad_probability() > 1.0 + 1e-12:
            raise ValueError("some dyad probability exceeds 1; invalid parameterization")

    @property
    def _norm(self) -> float:
        if self.normalization is not None:
            return self.normalization
        w1, w2 = _top_two(self.weights)
        return w1 * w2

    def _max_dyad_probability(self) -> float:
        # Exact maximum over dyads via the top weights of each community.
        best = 0.0
        n_comm = self.rates.shape[0]
        for r in range(n_comm):
            wr = self.weights[self.communities == r]
            if wr.size == 0:
                continue
            for s in range(r, n_comm):
                if s == r:
                    if wr.size < 2:
                        continue
                    pair = _top_two(wr)
                    prod = pair[0] * pair[1]
                else:
                    ws = self.weights[self.communities == s]
                    if ws.size == 0:
                        continue
                    prod = float(wr.max() * ws.max())
                best = max(best, self.rates[r, s] * prod / self._norm)
        return best

    def validate(self, n_nodes: int) -> None:
        if self.communities.size != n_nodes:
            raise ValueError("one community label per node is required")

    def edge_probability(self, u: int, v: int) -> float:
        p = (
            self.rates[self.communities[u], self.communities[v]]
            * self.weights[u]
            * self.weights[v]
            / self._norm
        )
        return float(min(p, 1.0))

    def dyad_probabilities(self, n_nodes: int) -> np.ndarray:
        self.validate(n_nodes)
        u, v = all_dyads(n_nodes)
        p = (
            self.rates[self.communities[u], self.communities[v]]
            * self.weights[u]
            * self.weights[v]
            / self._norm
        )
        return np.minimum(p, 1.0)


@dataclass(frozen=True)
class BTER(GenerativeModel):
    """Two-regime model: one flat rate inside communities, weighted across them."""

    communities: np.ndarray
    p_intra: float
    weights: np.ndarray
    density: float
    kind = "bter"

    def __post_init__(self):
        object.__setattr__(self, "communities", _as_communities(self.communities))
        object.__setattr__(self, "weights", _as_weights(self.weights))
        _check_prob(self.p_intra, "p_intra")
        if self.density < 0:
            raise ValueError("density must be non-negative")
        if self.communities.size != self.weights.size:
            raise ValueError("communities and weights must have equal length")
        if self._max_cross_probability() > 1.0 + 1e-12:
            raise ValueError("maximal cross-community pair exceeds probability 1")

    def _max_cross_probability(self) -> float:
        labels = np.unique(self.communities)
        if labels.size < 2:
            return 0.0
        tops = np.array(
            [self.weights[self.communities == c].max() for c in labels]
        )
        t1, t2 = _top_two(tops)
        return self.density * t1 * t2 / self.weights.sum()

    def validate(self, n_nodes: int) -> None:
        if self.communities.size != n_nodes:
            raise ValueError("one community label per node is required")

    def edge_probability(self, u: int, v: int) -> float:
        if self.communities[u] == self.communities[v]:
            return self.p_intra
        return float(self.density * self.weights[u] * self.weights[v] / self.weights.sum())

    def dyad_probabilities(self, n_nodes: int) -> np.ndarray:
        self.validate(n_nodes)
        u, v = all_dyads(n_nodes)
        cross = self.density * self.weights[u] * self.weights[v] / self.weights.sum()
        return np.where(self.communities[u] == self.communities[v], self.p_intra, cross)
