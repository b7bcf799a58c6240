import numpy as np
import pytest

from netcpd.generate import ModelSchedule, generate_sequence
from netcpd.models import ErdosRenyi, Snapshot
from netcpd.streams import (
    IngestError,
    SnapshotReader,
    ingest_snapshots,
    read_change_points,
    read_corpus,
    read_meta,
    write_corpus,
)


class TestCorpusRoundTrip:
    def test_generate_write_ingest_identical(self, tmp_path):
        schedule = ModelSchedule(initial=ErdosRenyi(0.15), alpha=0.5)
        generated = generate_sequence(schedule, 25, 40, seed=4)
        out = write_corpus(
            tmp_path / "corpus", generated.snapshots, {"seed": 4}, change_points={7, 20}
        )
        back = list(read_corpus(out))
        assert len(back) == 40
        assert all(a == b for a, b in zip(generated.snapshots, back))
        assert read_change_points(out / "truth.txt") == frozenset({7, 20})
        meta = read_meta(out)
        assert meta["n_nodes"] == "25"
        assert meta["length"] == "40"

    def test_empty_snapshots_survive(self, tmp_path):
        snaps = [
            Snapshot.from_edges(0, 5, [(0, 1)]),
            Snapshot.from_edges(1, 5, []),
            Snapshot.from_edges(2, 5, [(2, 3)]),
        ]
        out = write_corpus(tmp_path / "c", snaps, {})
        back = list(read_corpus(out))
        assert len(back) == 3
        assert back[1].edge_count == 0
        assert all(a == b for a, b in zip(snaps, back))

    def test_ingest_dispatches_to_corpus(self, tmp_path):
        snaps = [Snapshot.from_edges(t, 4, [(0, 1)]) for t in range(3)]
        out = write_corpus(tmp_path / "c", snaps, {})
        assert len(list(ingest_snapshots(out))) == 3


def write_lines(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestFileIngestion:
    def test_documented_example(self, tmp_path):
        path = write_lines(tmp_path / "edges.tsv", "1\t0\t1\n1\t1\t2\n2\t0\t1\n")
        reader = SnapshotReader(path)
        snaps = list(reader)
        assert reader.n_nodes == 3
        assert len(snaps) == 2
        assert snaps[0].t == 1 and snaps[0].edge_count == 2
        assert snaps[0].has_edge(0, 1) and snaps[0].has_edge(1, 2)
        assert snaps[1].t == 2 and snaps[1].has_edge(0, 1)

    def test_labels_mapped_to_dense_indices(self, tmp_path):
        path = write_lines(tmp_path / "e.tsv", "0\t5\t9\n0\t9\t12\n")
        reader = SnapshotReader(path)
        assert reader.n_nodes == 3
        assert reader.node_labels == [5, 9, 12]
        snap = next(iter(reader))
        assert snap.has_edge(0, 1)  # 5-9
        assert snap.has_edge(1, 2)  # 9-12

    def test_duplicate_edges_deduped(self, tmp_path):
        path = write_lines(tmp_path / "e.tsv", "0\t1\t2\n0\t2\t1\n0\t1\t2\n")
        snaps = list(SnapshotReader(path))
        assert snaps[0].edge_count == 1

    def test_self_loop_reports_line(self, tmp_path):
        path = write_lines(tmp_path / "e.tsv", "0\t1\t2\n0\t3\t3\n")
        with pytest.raises(IngestError, match="line 2.*self-loop"):
            SnapshotReader(path)

    def test_unsorted_times_report_line(self, tmp_path):
        path = write_lines(tmp_path / "e.tsv", "3\t0\t1\n1\t0\t1\n")
        with pytest.raises(IngestError, match="line 2.*sorted"):
            SnapshotReader(path)

    def test_non_numeric_field(self, tmp_path):
        path = write_lines(tmp_path / "e.tsv", "0\ta\t1\n")
        with pytest.raises(IngestError, match="line 1.*non-numeric"):
            SnapshotReader(path)

    def test_wrong_column_count(self, tmp_path):
        path = write_lines(tmp_path / "e.tsv", "0\t1\n")
        with pytest.raises(IngestError, match="expected 3 fields"):
            SnapshotReader(path)

    def test_empty_input(self, tmp_path):
        path = write_lines(tmp_path / "e.tsv", "\n\n")
        with pytest.raises(IngestError, match="no records"):
            SnapshotReader(path)

    def test_node_map_single_pass(self, tmp_path):
        path = write_lines(tmp_path / "e.tsv", "0\t5\t9\n1\t5\t12\n")
        reader = SnapshotReader(path, node_map=[5, 9, 12])
        snaps = list(reader)
        assert reader.n_nodes == 3
        assert snaps[0].has_edge(0, 1)
        assert snaps[1].has_edge(0, 2)

    def test_node_map_missing_label(self, tmp_path):
        path = write_lines(tmp_path / "e.tsv", "0\t5\t77\n")
        reader = SnapshotReader(path, node_map=[5, 9])
        with pytest.raises(IngestError, match="line 1.*not in the node map"):
            list(reader)


class TestWindowColumn:
    def test_window_keys_attached(self, tmp_path):
        text = "0\t0\t1\tc93\n1\t0\t2\tc93\n2\t1\t2\tc94\n"
        path = write_lines(tmp_path / "e.tsv", text)
        snaps = list(SnapshotReader(path, window_column=True))
        assert [s.window_key for s in snaps] == ["c93", "c93", "c94"]

    def test_snapshot_spanning_keys_rejected(self, tmp_path):
        text = "0\t0\t1\ta\n0\t0\t2\tb\n"
        path = write_lines(tmp_path / "e.tsv", text)
        with pytest.raises(IngestError, match="multiple window keys"):
            list(SnapshotReader(path, window_column=True))

    def test_corpus_dir_rejects_window_column(self, tmp_path):
        snaps = [Snapshot.from_edges(0, 3, [(0, 1)]), Snapshot.from_edges(1, 3, [])]
        out = write_corpus(tmp_path / "c", snaps, {})
        with pytest.raises(IngestError, match="window keys"):
            ingest_snapshots(out, window_column=True)
