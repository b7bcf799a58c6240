import numpy as np
import pytest

from netcpd.chains import (
    ChainCounts,
    WindowConfig,
    accumulate_counts,
    iter_keyed_window_counts,
    iter_window_counts,
    project_snapshot,
    sample_dyads,
    window_index_sequence,
)
from netcpd.models import Snapshot, dyad_count, dyad_pair

from .oracles import naive_transition_counts


def snapshots_from_trace(trace, n_nodes=2, window_key=None):
    """One-dyad snapshots: bit b at step t means the dyad (0, 1) is an edge."""
    return [
        Snapshot.from_edges(t, n_nodes, [(0, 1)] if b else [], window_key=window_key)
        for t, b in enumerate(trace)
    ]


class TestWindowIndexSequence:
    def test_non_overlapping_tiling(self):
        assert window_index_sequence(100, WindowConfig(20, 20)) == [20, 40, 60, 80, 100]

    def test_overlapping_progression(self):
        assert window_index_sequence(100, WindowConfig(20, 10)) == list(range(20, 101, 10))

    def test_too_short_errors(self):
        with pytest.raises(ValueError):
            window_index_sequence(19, WindowConfig(20, 20))

    def test_window_config_validation(self):
        with pytest.raises(ValueError):
            WindowConfig(1)
        with pytest.raises(ValueError):
            WindowConfig(10, 11)
        assert WindowConfig(10).step == 10


class TestSampleDyads:
    def test_exhaustive_pool(self):
        sample = sample_dyads(3, 3, "uniform-dyads", seed=0)
        assert sorted(sample.dyads.tolist()) == [0, 1, 2]

    def test_large_network(self):
        sample = sample_dyads(50000, 250, "uniform-dyads", seed=1)
        assert sample.k == 250
        assert np.unique(sample.dyads).size == 250
        u, v = dyad_pair(sample.dyads, 50000)
        assert np.all(u < v) and np.all(v < 50000)

    def test_k_exceeding_pool_errors(self):
        with pytest.raises(ValueError):
            sample_dyads(3, 4, "uniform-dyads", seed=0)

    def test_observed_dyads_exhaustive(self):
        priming = [
            Snapshot.from_edges(0, 5, [(0, 1), (2, 3)]),
            Snapshot.from_edges(1, 5, [(0, 1), (1, 4)]),
        ]
        sample = sample_dyads(5, 3, "observed-dyads", seed=0, priming=priming)
        observed = set(np.concatenate([s.codes for s in priming]).tolist())
        assert set(sample.dyads.tolist()) == observed

    def test_observed_requires_priming(self):
        with pytest.raises(ValueError):
            sample_dyads(5, 2, "observed-dyads", seed=0)

    def test_deterministic(self):
        a = sample_dyads(1000, 50, seed=3)
        b = sample_dyads(1000, 50, seed=3)
        assert np.array_equal(a.dyads, b.dyads)


class TestAccumulateCounts:
    def test_hand_counted_trace(self):
        counts = accumulate_counts(snapshots_from_trace([0, 0, 1, 1, 0]), _sample())
        assert (counts.n00[0], counts.n01[0], counts.n11[0], counts.n10[0]) == (1, 1, 1, 1)
        assert counts.n1[0] == 2

    def test_constant_trace(self):
        counts = accumulate_counts(snapshots_from_trace([1, 1, 1, 1]), _sample())
        assert counts.n11[0] == 3
        assert counts.n00[0] == counts.n01[0] == counts.n10[0] == 0
        assert counts.n1[0] == 4

    def test_alternating_trace(self):
        counts = accumulate_counts(snapshots_from_trace([0, 1, 0, 1]), _sample())
        assert (counts.n01[0], counts.n10[0]) == (2, 1)
        assert counts.n00[0] == counts.n11[0] == 0
        assert counts.n1[0] == 2

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_naive_recount(self, seed):
        rng = np.random.default_rng(seed)
        trace = rng.random(rng.integers(2, 40)) < 0.5
        counts = accumulate_counts(snapshots_from_trace(trace), _sample())
        naive = naive_transition_counts(trace)
        assert counts.n00[0] == naive["n00"]
        assert counts.n01[0] == naive["n01"]
        assert counts.n10[0] == naive["n10"]
        assert counts.n11[0] == naive["n11"]
        assert counts.n1[0] == naive["n1"]
        assert counts.n00[0] + counts.n01[0] + counts.n10[0] + counts.n11[0] == len(trace) - 1

    def test_node_count_mismatch(self):
        with pytest.raises(ValueError):
            accumulate_counts([Snapshot.from_edges(0, 9, [])], _sample())


def _sample():
    return sample_dyads(2, 1, seed=0)


class TestWindowStreaming:
    def test_window_ends(self):
        rng = np.random.default_rng(0)
        snaps = [Snapshot.from_edges(t, 6, [(0, 1)] if rng.random() < 0.5 else []) for t in range(50)]
        sample = sample_dyads(6, 4, seed=1)
        ends = [end for end, _ in iter_window_counts(snaps, sample, WindowConfig(10, 10))]
        assert ends == [10, 20, 30, 40, 50]

    def test_overlapping_matches_non_overlapping(self):
        rng = np.random.default_rng(5)
        snaps = [
            Snapshot.from_edges(t, 8, [(0, 1)] if rng.random() < 0.4 else [(2, 5)])
            for t in range(12)
        ]
        sample = sample_dyads(8, 6, seed=2)
        overlapping = dict(iter_window_counts(snaps, sample, WindowConfig(4, 2)))
        tiling = dict(iter_window_counts(snaps, sample, WindowConfig(4, 4)))
        for end, counts in tiling.items():
            other = overlapping[end]
            for name in ("n00", "n01", "n10", "n11", "n1"):
                assert np.array_equal(getattr(counts, name), getattr(other, name))

    def test_projection_follows_sample_order(self):
        snap = Snapshot.from_edges(0, 5, [(0, 1), (2, 3)])
        sample = sample_dyads(5, 10, seed=3)
        bits = project_snapshot(snap, sample)
        for i, (u, v) in enumerate(sample.pairs()):
            assert bits[i] == snap.has_edge(u, v)

    def test_matches_accumulate(self):
        rng = np.random.default_rng(9)
        snaps = [
            Snapshot.from_edges(t, 10, [(0, 1)] if rng.random() < 0.3 else [(4, 7)])
            for t in range(20)
        ]
        sample = sample_dyads(10, 8, seed=4)
        streamed = dict(iter_window_counts(snaps, sample, WindowConfig(5, 5)))
        for end, counts in streamed.items():
            direct = accumulate_counts(snaps[end - 5 : end], sample)
            assert np.array_equal(counts.n1, direct.n1)
            assert np.array_equal(counts.n01, direct.n01)


class TestKeyedWindows:
    def test_groups_by_key_runs(self):
        bits_and_keys = [(1, "a"), (0, "a"), (1, "a"), (0, "b"), (0, "b"), (1, "c")]
        snaps = [
            Snapshot.from_edges(t, 2, [(0, 1)] if b else [], window_key=key)
            for t, (b, key) in enumerate(bits_and_keys)
        ]
        out = list(iter_keyed_window_counts(snaps, _sample()))
        assert [key for key, _ in out] == ["a", "b", "c"]
        assert [c.size for _, c in out] == [3, 2, 1]
        assert [int(c.n1[0]) for _, c in out] == [2, 0, 1]

    def test_missing_key_errors(self):
        with pytest.raises(ValueError, match="window key"):
            list(iter_keyed_window_counts(snapshots_from_trace([1, 0]), _sample()))


class TestChainCountsInvariants:
    def test_transition_sum_enforced(self):
        with pytest.raises(ValueError):
            ChainCounts(
                n00=np.array([1]),
                n01=np.array([1]),
                n10=np.array([0]),
                n11=np.array([0]),
                n1=np.array([1]),
                size=5,
            )

    def test_occupancy_bounds_enforced(self):
        with pytest.raises(ValueError):
            ChainCounts(
                n00=np.array([0]),
                n01=np.array([0]),
                n10=np.array([2]),
                n11=np.array([2]),
                n1=np.array([1]),  # below n1_star
                size=5,
            )
