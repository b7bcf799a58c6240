"""Temporally correlated snapshot generation with scripted model changes.

Snapshot ``t`` is coupled to snapshot ``t-1`` through a resampling rate
``alpha``: each dyad independently keeps its previous connection status with
probability ``1 - alpha`` and redraws it from the active model with
probability ``alpha``.  Equivalently, every dyad follows a two-state Markov
chain with transition probabilities

    0 -> 1: alpha * p      1 -> 0: alpha * (1 - p)
    0 -> 0: 1 - alpha * p  1 -> 1: 1 - alpha * (1 - p)

where ``p`` is the dyad's edge probability under the active model.  A
schedule lists the snapshot indices at which the model mutates; those indices
are the ground-truth change points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

import numpy as np

from .models import (
    BTER,
    BlockChungLu,
    ChungLu,
    GenerativeModel,
    Snapshot,
    dyad_count,
)

__all__ = [
    "sample_initial_snapshot",
    "evolve_snapshot",
    "snapshot_log_likelihood",
    "UniformWeights",
    "TwoLevelWeights",
    "RegenerateWeights",
    "ChangeBlockRates",
    "ReassignCommunities",
    "Mutation",
    "ScheduledMutation",
    "ModelSchedule",
    "apply_mutation",
    "iter_sequence",
    "generate_sequence",
    "GeneratedSequence",
    "benchmark_schedule",
    "BENCHMARK_CHANGE_WINDOWS",
    "stream_er_snapshots",
]


def _snapshot_from_state(t: int, n_nodes: int, state: np.ndarray) -> Snapshot:
    return Snapshot(t, n_nodes, np.flatnonzero(state).astype(np.int64))


def _state_from_snapshot(snap: Snapshot) -> np.ndarray:
    state = np.zeros(dyad_count(snap.n_nodes), dtype=bool)
    state[snap.codes] = True
    return state


def sample_initial_snapshot(
    model: GenerativeModel, n_nodes: int, rng: np.random.Generator, t: int = 0
) -> Snapshot:
    """Draw every dyad independently from the model's edge probabilities."""
    model.validate(n_nodes)
    probs = model.dyad_probabilities(n_nodes)
    state = rng.random(probs.size) < probs
    return _snapshot_from_state(t, n_nodes, state)


def _evolve_state(
    state: np.ndarray, probs: np.ndarray, alpha: float, rng: np.random.Generator
) -> np.ndarray:
    # One uniform per dyad realizes the two-state transition kernel exactly.
    u = rng.random(state.size)
    return np.where(state, u >= alpha * (1.0 - probs), u < alpha * probs)


def evolve_snapshot(
    prev: Snapshot, model: GenerativeModel, alpha: float, rng: np.random.Generator
) -> Snapshot:
    """Advance one step: keep each status with probability ``1 - alpha``, else redraw."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    model.validate(prev.n_nodes)
    probs = model.dyad_probabilities(prev.n_nodes)
    state = _evolve_state(_state_from_snapshot(prev), probs, alpha, rng)
    return _snapshot_from_state(prev.t + 1, prev.n_nodes, state)


def snapshot_log_likelihood(
    prev: Snapshot, curr: Snapshot, model: GenerativeModel, alpha: float
) -> float:
    """Log-probability of observing ``curr`` given ``prev`` under the model.

    Sums the per-dyad transition log-probabilities.  Returns ``-inf`` when a
    realized transition has probability exactly zero (for example any flip
    when ``alpha`` is 0).
    """
    if prev.n_nodes != curr.n_nodes:
        raise ValueError("snapshots must share the same node set")
    model.validate(prev.n_nodes)
    probs = model.dyad_probabilities(prev.n_nodes)
    a = _state_from_snapshot(prev)
    b = _state_from_snapshot(curr)
    with np.errstate(divide="ignore"):
        total = 0.0
        m01 = ~a & b
        m10 = a & ~b
        m00 = ~a & ~b
        m11 = a & b
        total += np.log(alpha * probs[m01]).sum()
        total += np.log(alpha * (1.0 - probs[m10])).sum()
        total += np.log1p(-alpha * probs[m00]).sum()
        total += np.log1p(-alpha * (1.0 - probs[m11])).sum()
    return float(total)


# --------------------------------------------------------------------------
# Scheduled model mutations


@dataclass(frozen=True)
class UniformWeights:
    """Node weights drawn uniformly from ``[low, high]``."""

    low: float = 0.2
    high: float = 1.8

    def __post_init__(self):
        if not 0.0 <= self.low < self.high:
            raise ValueError("need 0 <= low < high")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, size=size)


@dataclass(frozen=True)
class TwoLevelWeights:
    """Node weights at one of two activity levels, with a small jitter.

    Regenerating such a weight flips the node's level with probability
    ``2 * p_high * (1 - p_high)``, a large multiplicative change, which makes
    weight mutations visible on tracked dyads.
    """

    low: float = 0.5
    high: float = 1.5
    jitter: float = 0.05
    p_high: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.low < self.high:
            raise ValueError("need 0 < low < high")
        if not 0.0 <= self.jitter < self.low:
            raise ValueError("jitter must be small and non-negative")
        if not 0.0 < self.p_high < 1.0:
            raise ValueError("p_high must be in (0, 1)")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        levels = np.where(rng.random(size) < self.p_high, self.high, self.low)
        return levels + rng.uniform(-self.jitter, self.jitter, size=size)


WeightSampler = Union[UniformWeights, TwoLevelWeights]


@dataclass(frozen=True)
class RegenerateWeights:
    """Redraw the weights of a random node fraction from the given sampler."""

    fraction: float
    sampler: WeightSampler = UniformWeights()

    def __post_init__(self):
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError("fraction must be in (0, 1]")


@dataclass(frozen=True)
class ChangeBlockRates:
    """Redraw the block-rate rows/columns of a random community fraction.

    With ``preserve_density`` the whole rate matrix is rescaled afterwards so
    the expected edge count matches the previous model; otherwise it is
    rescaled to ``density_factor`` times the previous expected edge count.
    """

    fraction: float
    preserve_density: bool
    density_factor: float = 1.2
    intra: tuple[float, float] = (0.25, 0.6)
    inter: tuple[float, float] = (0.05, 0.3)

    def __post_init__(self):
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError("fraction must be in (0, 1]")
        if self.density_factor <= 0:
            raise ValueError("density_factor must be positive")


@dataclass(frozen=True)
class ReassignCommunities:
    """Permute the community assignment of all nodes."""


Mutation = Union[RegenerateWeights, ChangeBlockRates, ReassignCommunities]


def _rescale_rates(model, new_rates: np.ndarray, n_nodes: int, target: float):
    """Scale ``new_rates`` so the model's expected edge count equals ``target``.

    Returns ``None`` when the required scale would push a rate above 1; the
    caller redraws in that case.
    """
    candidate = _with_rates(model, new_rates)
    raw = candidate.expected_edges(n_nodes)
    if raw <= 0:
        return None
    scaled = new_rates * (target / raw)
    if scaled.max() > 1.0:
        return None
    return _with_rates(model, scaled)


def _with_rates(model, rates: np.ndarray):
    if isinstance(model, BlockChungLu):
        return BlockChungLu(model.communities, rates, model.weights, model.normalization)
    return type(model)(model.communities, rates)


def apply_mutation(
    model: GenerativeModel, mutation: Mutation, n_nodes: int, rng: np.random.Generator
) -> GenerativeModel:
    """Return a new model with the mutation applied; the input is untouched."""
    if isinstance(mutation, RegenerateWeights):
        if not isinstance(model, (ChungLu, BlockChungLu, BTER)):
            raise TypeError(f"{type(model).__name__} has no node weights")
        count = math.ceil(mutation.fraction * n_nodes)
        chosen = rng.choice(n_nodes, size=count, replace=False)
        weights = model.weights.copy()
        weights[chosen] = mutation.sampler.draw(rng, count)
        if isinstance(model, ChungLu):
            return ChungLu(weights, model.density)
        if isinstance(model, BTER):
            return BTER(model.communities, model.p_intra, weights, model.density)
        return BlockChungLu(model.communities, model.rates, weights, model.normalization)

    if isinstance(mutation, ChangeBlockRates):
        if not hasattr(model, "rates"):
            raise TypeError(f"{type(model).__name__} has no block rates")
        n_comm = model.rates.shape[0]
        count = math.ceil(mutation.fraction * n_comm)
        chosen = rng.choice(n_comm, size=count, replace=False)
        touched = np.zeros((n_comm, n_comm), dtype=bool)
        touched[chosen, :] = True
        touched[:, chosen] = True
        old_expected = model.expected_edges(n_nodes)
        factor = 1.0 if mutation.preserve_density else mutation.density_factor
        # Redraw until the density rescale keeps every rate within [0, 1].
        for _ in range(200):
            rates = model.rates.copy()
            for r in range(n_comm):
                for s in range(r, n_comm):
                    if touched[r, s]:
                        lo, hi = mutation.intra if r == s else mutation.inter
                        rates[r, s] = rates[s, r] = rng.uniform(lo, hi)
            mutated = _rescale_rates(model, rates, n_nodes, factor * old_expected)
            if mutated is not None:
                return mutated
        raise ValueError("could not rescale block rates into [0, 1]")

    if isinstance(mutation, ReassignCommunities):
        if not hasattr(model, "communities"):
            raise TypeError(f"{type(model).__name__} has no communities")
        communities = rng.permutation(model.communities)
        if isinstance(model, BlockChungLu):
            return BlockChungLu(communities, model.rates, model.weights, model.normalization)
        if isinstance(model, BTER):
            return BTER(communities, model.p_intra, model.weights, model.density)
        return type(model)(communities, model.rates)

    raise TypeError(f"unknown mutation {mutation!r}")


@dataclass(frozen=True)
class ScheduledMutation:
    """A mutation taking effect at snapshot index ``at`` (0-based).

    Snapshot ``at`` is the first one generated under the mutated model.  An
    optional ``alpha`` override applies from that snapshot onward.
    """

    at: int
    mutation: Mutation
    alpha: float | None = None


@dataclass(frozen=True)
class ModelSchedule:
    """Initial model, resampling rate, and an ordered list of mutations."""

    initial: GenerativeModel
    alpha: float
    mutations: tuple[ScheduledMutation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "mutations", tuple(self.mutations))
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0, 1]; alpha = 0 freezes the sequence")
        indices = [m.at for m in self.mutations]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("mutation indices must be strictly increasing")
        if indices and indices[0] < 1:
            raise ValueError("mutations cannot precede the second snapshot")
        for m in self.mutations:
            if m.alpha is not None and not 0.0 < m.alpha <= 1.0:
                raise ValueError("alpha override must be in (0, 1]")

    def change_points(self) -> frozenset[int]:
        return frozenset(m.at for m in self.mutations)


def iter_sequence(
    schedule: ModelSchedule,
    n_nodes: int,
    length: int,
    seed,
    with_models: bool = False,
) -> Iterator:
    """Stream ``length`` snapshots under the schedule.

    Yields snapshots, or ``(snapshot, model, alpha)`` triples when
    ``with_models`` is set.  Mutation parameters are drawn from a random
    stream separate from the evolution stream, so the realized models depend
    only on the seed and the schedule.
    """
    if length < 2:
        raise ValueError("a sequence needs at least 2 snapshots")
    for m in schedule.mutations:
        if m.at >= length:
            raise ValueError(f"mutation index {m.at} is beyond the last snapshot")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    evo_seq, mut_seq = root.spawn(2)
    rng = np.random.default_rng(evo_seq)
    mut_rng = np.random.default_rng(mut_seq)

    model = schedule.initial
    alpha = schedule.alpha
    model.validate(n_nodes)
    probs = model.dyad_probabilities(n_nodes)
    pending = list(schedule.mutations)

    state = rng.random(probs.size) < probs
    snap = _snapshot_from_state(0, n_nodes, state)
    yield (snap, model, alpha) if with_models else snap

    for t in range(1, length):
        if pending and pending[0].at == t:
            scheduled = pending.pop(0)
            model = apply_mutation(model, scheduled.mutation, n_nodes, mut_rng)
            probs = model.dyad_probabilities(n_nodes)
            if scheduled.alpha is not None:
                alpha = scheduled.alpha
        state = _evolve_state(state, probs, alpha, rng)
        snap = _snapshot_from_state(t, n_nodes, state)
        yield (snap, model, alpha) if with_models else snap


@dataclass(frozen=True)
class GeneratedSequence:
    """Materialized sequence plus its ground truth."""

    snapshots: list[Snapshot]
    change_points: frozenset[int]
    timeline: tuple[tuple[int, GenerativeModel, float], ...]  # (start index, model, alpha)

    def model_at(self, t: int) -> tuple[GenerativeModel, float]:
        active = self.timeline[0]
        for segment in self.timeline:
            if segment[0] > t:
                break
            active = segment
        return active[1], active[2]


def generate_sequence(
    schedule: ModelSchedule, n_nodes: int, length: int, seed
) -> GeneratedSequence:
    """Materialize a sequence; the change set is exactly the mutation indices."""
    snapshots: list[Snapshot] = []
    timeline: list[tuple[int, GenerativeModel, float]] = []
    for snap, model, alpha in iter_sequence(schedule, n_nodes, length, seed, with_models=True):
        if not timeline or timeline[-1][1] is not model or timeline[-1][2] != alpha:
            timeline.append((snap.t, model, alpha))
        snapshots.append(snap)
    return GeneratedSequence(snapshots, schedule.change_points(), tuple(timeline))


# --------------------------------------------------------------------------
# Benchmark scenario: a block-weights sequence with seven scripted changes

BENCHMARK_CHANGE_WINDOWS = (15, 30, 60, 75, 90, 105, 135)

_BENCHMARK_RATES = (0.02, 0.9)
_BENCHMARK_WEIGHTS = TwoLevelWeights(low=0.4, high=1.6, jitter=0.05, p_high=0.7)
_BENCHMARK_SHIFTS = (1.09, 1.04)  # density factors of the two shifted changes


def benchmark_schedule(
    n_nodes: int,
    window_size: int,
    alpha: float,
    seed,
    n_communities: int = 20,
) -> ModelSchedule:
    """Block-weights model with seven scripted changes at fixed window indices.

    Change ``i`` takes effect at snapshot ``w_i * window_size`` so that, with
    non-overlapping windows of ``window_size``, each change lands exactly on a
    window boundary.  The seven changes are, in order: weight regeneration for
    1/3 and then 2/3 of the nodes, block-rate redraws for half and then all
    communities at constant density, the same two redraws with the density
    shifted upward, and finally a full community reassignment.

    Node weights sit at two activity levels and block rates span a wide range
    so that every scripted change moves the affected dyad probabilities by
    amounts resolvable at the experiment's window size and continuity rate.
    """
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.default_rng(root)
    communities = rng.permutation(np.arange(n_nodes, dtype=np.int64) % n_communities)
    weights = _BENCHMARK_WEIGHTS.draw(rng, n_nodes)
    rates = np.empty((n_communities, n_communities))
    for r in range(n_communities):
        for s in range(r, n_communities):
            rates[r, s] = rates[s, r] = rng.uniform(*_BENCHMARK_RATES)
    initial = BlockChungLu(communities, rates, weights)

    rate_ranges = dict(intra=_BENCHMARK_RATES, inter=_BENCHMARK_RATES)
    changes = [
        RegenerateWeights(fraction=1 / 3, sampler=_BENCHMARK_WEIGHTS),
        RegenerateWeights(fraction=2 / 3, sampler=_BENCHMARK_WEIGHTS),
        ChangeBlockRates(fraction=0.5, preserve_density=True, **rate_ranges),
        ChangeBlockRates(fraction=1.0, preserve_density=True, **rate_ranges),
        ChangeBlockRates(
            fraction=0.5, preserve_density=False, density_factor=_BENCHMARK_SHIFTS[0],
            **rate_ranges,
        ),
        ChangeBlockRates(
            fraction=1.0, preserve_density=False, density_factor=_BENCHMARK_SHIFTS[1],
            **rate_ranges,
        ),
        ReassignCommunities(),
    ]
    mutations = tuple(
        ScheduledMutation(at=w * window_size, mutation=m)
        for w, m in zip(BENCHMARK_CHANGE_WINDOWS, changes)
    )
    return ModelSchedule(initial=initial, alpha=alpha, mutations=mutations)


# --------------------------------------------------------------------------
# Sparse constant-memory stream for large homogeneous networks


def stream_er_snapshots(
    n_nodes: int, p: float, alpha: float, length: int, seed
) -> Iterator[Snapshot]:
    """Stream a homogeneous sequence in O(edges) memory.

    Distribution-identical to :func:`iter_sequence` with a fixed
    :class:`~netcpd.models.ErdosRenyi` model, but never touches non-edges:
    per step, existing edges are dropped with probability ``alpha * (1 - p)``
    and the number of new edges is drawn binomially, then placed uniformly on
    the complement.  Intended for scale benchmarks where the dyad count makes
    dense evolution impractical.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1]")
    total = dyad_count(n_nodes)
    rng = np.random.default_rng(seed)

    def draw_new(current: np.ndarray, count: int) -> np.ndarray:
        # Uniform distinct dyads from the complement of ``current``.
        chosen: list[np.ndarray] = []
        need = count
        while need > 0:
            cand = rng.integers(0, total, size=int(need * 1.2) + 8)
            cand = np.unique(cand)
            cand = cand[np.isin(cand, current, assume_unique=True, invert=True)]
            if chosen:
                seen = np.concatenate(chosen)
                cand = cand[np.isin(cand, seen, invert=True)]
            rng.shuffle(cand)
            cand = cand[:need]
            chosen.append(cand)
            need -= cand.size
        return np.concatenate(chosen) if chosen else np.empty(0, dtype=np.int64)

    count = rng.binomial(total, p)
    edges = np.sort(draw_new(np.empty(0, dtype=np.int64), count))
    yield Snapshot(0, n_nodes, edges)
    for t in range(1, length):
        keep = rng.random(edges.size) >= alpha * (1.0 - p)
        survivors = edges[keep]
        births = rng.binomial(total - edges.size, alpha * p)
        new = draw_new(edges, births)
        edges = np.sort(np.concatenate([survivors, new]))
        yield Snapshot(t, n_nodes, edges)
