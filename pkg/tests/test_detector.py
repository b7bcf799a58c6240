from dataclasses import replace

import numpy as np
import pytest

from netcpd.chains import WindowConfig
from netcpd.detector import (
    DetectorConfig,
    compute_threshold,
    flag_changes,
    run_pipeline,
    write_flagged,
    write_manifest,
    write_scores,
)
from netcpd.generate import ModelSchedule, iter_sequence
from netcpd.models import ErdosRenyi, Snapshot


def er_stream(n=40, p=0.3, alpha=0.5, length=120, seed=0):
    return iter_sequence(ModelSchedule(initial=ErdosRenyi(p), alpha=alpha), n, length, seed)


def small_config(**overrides):
    defaults = dict(
        window=WindowConfig(10, 10), tracked_dyads=60, groups=6, seed=1, ks_samples=2000
    )
    defaults.update(overrides)
    return DetectorConfig(**defaults)


class TestThreshold:
    def test_constant_scores(self):
        assert compute_threshold([2.5] * 10, 0.05) == 2.5
        assert compute_threshold(
            [2.5] * 10, 0.3, resamples=50, rng=np.random.default_rng(0)
        ) == 2.5

    def test_order_statistic_convention(self):
        scores = np.arange(1, 101, dtype=float)
        assert compute_threshold(scores, 0.05) == 95.0

    def test_bootstrap_converges_to_plain(self):
        rng = np.random.default_rng(3)
        scores = rng.exponential(size=200)
        plain = compute_threshold(scores, 0.1)
        boot = compute_threshold(scores, 0.1, resamples=4000, rng=np.random.default_rng(1))
        assert boot == pytest.approx(plain, rel=0.15)

    def test_monotone_in_significance(self):
        rng = np.random.default_rng(4)
        scores = rng.random(50)
        taus = [compute_threshold(scores, a) for a in (0.01, 0.05, 0.1, 0.3, 0.6)]
        assert all(x >= y for x, y in zip(taus, taus[1:]))

    def test_too_few_scores(self):
        with pytest.raises(ValueError):
            compute_threshold([1.0], 0.05)


class TestFlagging:
    def test_nothing_above(self):
        assert flag_changes([0.1, 0.2, 0.3], 0.5) == ()

    def test_pair_index_to_window(self):
        # scores align pairs (1,2), (2,3), (3,4); the middle one flags window 3
        assert flag_changes([0.1, 0.9, 0.2], 0.5) == (3,)

    def test_negative_threshold_flags_all(self):
        assert flag_changes([0.0, 0.1, 0.2], -1.0) == (2, 3, 4)

    def test_strict_inequality(self):
        assert flag_changes([0.5, 0.7], 0.7) == ()

    def test_rescaling_invariance(self):
        scores = np.array([0.1, 0.9, 0.4, 0.8])
        tau = 0.5
        base = flag_changes(scores, tau)
        assert flag_changes(scores * 7.3, tau * 7.3) == base

    def test_infinite_threshold_rejected(self):
        with pytest.raises(ValueError):
            flag_changes([0.1], float("inf"))


class TestPipeline:
    def test_empty_source(self):
        with pytest.raises(ValueError, match="empty"):
            run_pipeline([], small_config())

    def test_too_few_windows(self):
        snaps = list(er_stream(length=12))
        with pytest.raises(ValueError, match="fewer than 2"):
            run_pipeline(snaps, small_config())

    def test_result_shape(self):
        result = run_pipeline(er_stream(length=100), small_config())
        assert result.n_windows == 10
        assert len(result.scores) == 9
        assert result.window_labels == tuple(range(10, 101, 10))
        assert all(2 <= w <= 10 for w in result.flagged)
        assert all(result.scores[w - 2] > result.threshold for w in result.flagged)

    @pytest.mark.parametrize("measure", ["kl", "ks", "euclidean", "euclidean-grouped"])
    def test_deterministic_across_runs_and_workers(self, measure):
        snaps = list(er_stream(length=80, seed=5))
        base = small_config(measure=measure)
        a = run_pipeline(snaps, base)
        b = run_pipeline(snaps, base)
        c = run_pipeline(snaps, replace(base, workers=4))
        assert np.array_equal(a.scores, b.scores)
        assert np.array_equal(a.scores, c.scores)
        assert a.threshold == b.threshold == c.threshold
        assert a.flagged == b.flagged == c.flagged

    def test_mle_estimator_runs(self):
        result = run_pipeline(er_stream(length=100, p=0.4), small_config(estimator="mle"))
        assert len(result.scores) == 9

    def test_observed_dyads_strategy(self):
        # Only a handful of dyads ever carry edges; the observed pool is small.
        rng = np.random.default_rng(8)
        active = [(0, 1), (2, 3), (4, 5), (1, 7), (3, 9)]
        snaps = [
            Snapshot.from_edges(t, 12, [e for e in active if rng.random() < 0.5])
            for t in range(60)
        ]
        config = small_config(tracked_dyads=5, groups=5, strategy="observed-dyads")
        result = run_pipeline(snaps, config)
        assert result.n_windows == 6

    def test_memory_measurement_optional(self):
        result = run_pipeline(er_stream(length=60), small_config(), measure_memory=True)
        assert result.peak_memory is not None and result.peak_memory > 0
        plain = run_pipeline(er_stream(length=60), small_config())
        assert plain.peak_memory is None

    def test_null_false_positive_fraction(self):
        # Constant model: flagged fraction is capped by the quantile construction.
        flagged_counts = []
        for seed in range(5):
            result = run_pipeline(
                er_stream(length=150, seed=seed), small_config(seed=seed)
            )
            flagged_counts.append(len(result.flagged))
        n_pairs = 14
        assert np.mean(flagged_counts) <= 3 * 0.05 * n_pairs

    def test_keyed_grouping(self):
        rng = np.random.default_rng(2)
        snaps = [
            Snapshot.from_edges(
                t, 10, [(0, 1)] if rng.random() < 0.5 else [(2, 3)], window_key=t // 15
            )
            for t in range(60)
        ]
        config = small_config(grouping="by-key", tracked_dyads=20, groups=4)
        result = run_pipeline(snaps, config)
        assert result.n_windows == 4
        assert result.window_labels == (0, 1, 2, 3)


class TestResultFiles:
    def test_round_trip(self, tmp_path):
        result = run_pipeline(er_stream(length=80), small_config())
        write_scores(tmp_path / "scores.tsv", result)
        write_flagged(tmp_path / "flagged.txt", result)
        write_manifest(tmp_path / "manifest.txt", result, extra={"note": "test"})

        lines = (tmp_path / "scores.tsv").read_text().splitlines()
        assert len(lines) == len(result.scores)
        windows = [int(line.split("\t")[0]) for line in lines]
        assert windows == list(range(2, result.n_windows + 1))
        values = [float(line.split("\t")[1]) for line in lines]
        assert values == result.scores.tolist()

        flagged = [int(x) for x in (tmp_path / "flagged.txt").read_text().split()]
        assert tuple(flagged) == result.flagged

        manifest = dict(
            line.split("=", 1) for line in (tmp_path / "manifest.txt").read_text().splitlines()
        )
        assert manifest["estimator"] == "frequency"
        assert manifest["note"] == "test"
        assert float(manifest["threshold"]) == result.threshold
