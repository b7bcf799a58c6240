import numpy as np
import pytest

from netcpd.evaluate import (
    bench_scaling,
    likelihood_curve,
    precision_recall,
    run_benchmark_scenario,
    truth_windows,
    write_plot_data,
    write_report,
)
from netcpd.generate import (
    ChangeBlockRates,
    ModelSchedule,
    ScheduledMutation,
    benchmark_schedule,
    generate_sequence,
)
from netcpd.models import BlockChungLu, ErdosRenyi


class TestPrecisionRecall:
    def test_exact_match(self):
        assert precision_recall({15, 30}, {15, 30}, tolerance=0) == (1.0, 1.0)

    def test_empty_flagged(self):
        assert precision_recall(set(), {10, 20}, tolerance=0) == (1.0, 0.0)

    def test_empty_truth(self):
        precision, recall = precision_recall({5}, set(), tolerance=0)
        assert (precision, recall) == (0.0, 1.0)

    def test_tolerant_matching(self):
        precision, recall = precision_recall({15, 31, 80}, {15, 30, 60}, tolerance=1)
        assert precision == pytest.approx(2 / 3)
        assert recall == pytest.approx(2 / 3)

    def test_each_truth_matched_once(self):
        # Two flagged windows near one truth window: only one match.
        precision, recall = precision_recall({10, 11}, {10}, tolerance=1)
        assert precision == pytest.approx(0.5)
        assert recall == pytest.approx(1.0)

    @pytest.mark.parametrize("seed", range(10))
    def test_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        a = set(rng.integers(0, 60, size=rng.integers(0, 8)).tolist())
        b = set(rng.integers(0, 60, size=rng.integers(0, 8)).tolist())
        tol = int(rng.integers(0, 3))
        p_ab, r_ab = precision_recall(a, b, tol)
        p_ba, r_ba = precision_recall(b, a, tol)
        assert p_ab == pytest.approx(r_ba)
        assert r_ab == pytest.approx(p_ba)

    def test_truth_window_mapping(self):
        assert truth_windows({300, 600}, 20) == frozenset({16, 31})
        assert truth_windows({0, 19, 20}, 20) == frozenset({1, 2})


class TestLikelihoodCurve:
    def test_stationary_sequence_has_no_trend(self):
        schedule = ModelSchedule(initial=ErdosRenyi(0.3), alpha=0.5)
        generated = generate_sequence(schedule, 40, 160, seed=0)
        values = likelihood_curve(generated)
        assert len(values) == 159
        assert np.all(np.isfinite(values))
        # slope insignificant: |t| < 4 under a plain linear fit
        x = np.arange(values.size)
        slope, intercept = np.polyfit(x, values, 1)
        resid = values - (slope * x + intercept)
        se = np.sqrt(resid.var(ddof=2) * 12 / (values.size**3 - values.size))
        assert abs(slope / se) < 4

    @pytest.mark.parametrize("seed", range(5))
    def test_density_change_drops_likelihood(self, seed):
        rng = np.random.default_rng(seed)
        n, n_comm = 40, 4
        communities = rng.permutation(np.arange(n) % n_comm)
        rates = np.full((n_comm, n_comm), 0.1)
        np.fill_diagonal(rates, 0.4)
        weights = rng.uniform(0.5, 1.5, n)
        initial = BlockChungLu(communities, rates, weights)
        schedule = ModelSchedule(
            initial=initial,
            alpha=0.5,
            mutations=(
                ScheduledMutation(
                    40, ChangeBlockRates(1.0, preserve_density=False, density_factor=1.4)
                ),
            ),
        )
        generated = generate_sequence(schedule, n, 80, seed=seed)
        values = likelihood_curve(generated)
        pre = values[34:39].mean()  # transitions into snapshots 35..39
        post = values[39:44].mean()  # transitions into snapshots 40..44
        assert post < pre


class TestBenchmarkScenario:
    def test_structure_and_reproducibility(self):
        kwargs = dict(
            seeds=[3],
            n_nodes=120,
            length=560,
            window_size=4,
            alpha=0.49,
            tracked_dyads=60,
            groups=6,
            ks_samples=500,
            n_communities=6,
        )
        report = run_benchmark_scenario(**kwargs)
        again = run_benchmark_scenario(**kwargs)
        assert len(report.seeds) == 1
        seed_report = report.seeds[0]
        assert seed_report.truth == truth_windows(
            benchmark_schedule(120, 4, 0.49, 3, 6).change_points(), 4
        )
        assert {(v.estimator, v.measure) for v in seed_report.variants} == {
            ("frequency", "kl"),
            ("frequency", "euclidean"),
            ("frequency", "ks"),
            ("mle", "kl"),
        }
        for v, w in zip(seed_report.variants, again.seeds[0].variants):
            assert np.array_equal(v.scores, w.scores)
            assert v.flagged == w.flagged
        assert 0.0 <= report.mean_metric("frequency", "kl", "recall") <= 1.0

    def test_report_files(self, tmp_path):
        report = run_benchmark_scenario(
            seeds=[0],
            n_nodes=100,
            length=560,
            window_size=4,
            tracked_dyads=40,
            groups=4,
            ks_samples=300,
            n_communities=5,
        )
        write_report(tmp_path / "report.tsv", report)
        write_plot_data(tmp_path / "plot.tsv", report.seeds[0])
        header, *rows = (tmp_path / "report.tsv").read_text().splitlines()
        assert header.split("\t") == [
            "seed", "estimator", "measure", "precision", "recall", "flagged", "truth",
        ]
        assert len(rows) == 4
        plot_lines = (tmp_path / "plot.tsv").read_text().splitlines()
        assert plot_lines[0].startswith("# thresholds:")
        assert plot_lines[1].split("\t")[0] == "window"
        assert len(plot_lines) == 2 + len(report.seeds[0].variants[0].scores)


class TestBenchScaling:
    def test_cells_and_window_counts(self):
        cells = bench_scaling([60], [80, 160], tracked_dyads=30, window_size=10, edge_target=40)
        assert [(c.n_nodes, c.length) for c in cells] == [(60, 80), (60, 160)]
        assert [c.n_windows for c in cells] == [8, 16]
        assert all(c.wall_seconds > 0 and c.peak_memory > 0 for c in cells)
