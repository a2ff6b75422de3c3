import csv
import json

import numpy as np
import pytest

from driftxplain.dataio import (
    csv_header,
    read_checkerboard_truth_json,
    read_dataset_csv,
    read_labels_csv,
    read_reports_json,
    read_stream,
    read_stream_named,
    read_table_csv,
    read_truth_csv,
    write_checkerboard_truth_json,
    write_dataset_csv,
    write_pairs_csv,
    write_reports_json,
    write_truth_csv,
)
from driftxplain.errors import IngestionError, ValidationError
from driftxplain.pipeline import OracleDetector, explain_stream
from driftxplain.synth import (
    CheckerboardSpec,
    GmmSpec,
    sample_checkerboard,
    sample_gmm,
    stream_change_positions,
)

from conftest import make_dataset


class TestDatasetCsv:
    def test_round_trip_is_exact(self, tmp_path):
        data, _ = sample_gmm(GmmSpec(seed=1), 50, rng_seed=2)
        path = tmp_path / "data.csv"
        write_dataset_csv(path, data)
        back = read_dataset_csv(path)
        assert np.array_equal(back.x, data.x)
        assert np.array_equal(back.t, data.t)
        assert back.n_bins == data.n_bins

    def test_feature_names_in_header(self, tmp_path):
        data = make_dataset(np.array([[1.5, -2.0]]), [1])
        path = tmp_path / "named.csv"
        write_dataset_csv(path, data, feature_names=["a", "b"])
        assert csv_header(path) == ["a", "b", "t"]

    def test_name_validation(self, tmp_path):
        data = make_dataset(np.array([[1.0, 2.0]]), [1])
        with pytest.raises(ValidationError):
            write_dataset_csv(tmp_path / "x.csv", data, feature_names=["only-one"])
        with pytest.raises(ValidationError):
            write_dataset_csv(tmp_path / "x.csv", data, feature_names=["a", "t"])

    def test_read_rejects_malformed_rows(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("f0,t\n1.0,1\nnope,2\n")
        with pytest.raises(IngestionError, match="row 3"):
            read_dataset_csv(path)
        path.write_text("f0,t\n1.0,1\n2.0\n")
        with pytest.raises(IngestionError, match="row 3"):
            read_dataset_csv(path)
        path.write_text("f0,label\n1.0,1\n")
        with pytest.raises(IngestionError, match="'t'"):
            read_dataset_csv(path)
        path.write_text("f0,t\n1.0,1\n2.0,3\n")
        with pytest.raises(IngestionError, match="bins without samples"):
            read_dataset_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestionError):
            read_dataset_csv(tmp_path / "absent.csv")


class TestTruthCsv:
    def test_round_trip(self, tmp_path):
        _, truth = sample_gmm(GmmSpec(seed=3), 40, rng_seed=4)
        path = tmp_path / "truth.csv"
        write_truth_csv(path, truth)
        back = read_truth_csv(path)
        assert np.array_equal(back.i_true, truth.i_true)
        assert np.array_equal(back.char_true, truth.char_true)

    def test_missing_column_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("other\n0.5\n")
        with pytest.raises(IngestionError, match="i_true"):
            read_truth_csv(path)


class TestCheckerboardTruthJson:
    def test_round_trip(self, tmp_path):
        data, truth = sample_checkerboard(CheckerboardSpec(), 100, rng_seed=5)
        path = tmp_path / "cells.json"
        write_checkerboard_truth_json(path, truth)
        back = read_checkerboard_truth_json(path)
        assert back["grid"] == truth.meta["grid"]
        assert back["active"] == truth.meta["active"]
        assert back["changed_cells"] == truth.meta["changed_cells"]
        assert np.array_equal(back["cell_of"], truth.meta["cell_of"])

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(IngestionError, match="invalid JSON"):
            read_checkerboard_truth_json(path)


class TestReadStream:
    def test_headerless_csv(self, tmp_path):
        path = tmp_path / "raw.csv"
        path.write_text("1.0,2.0\n3.0,4.0\n")
        x = read_stream(path)
        assert x == pytest.approx(np.array([[1.0, 2.0], [3.0, 4.0]]))

    def test_header_csv_skips_t(self, tmp_path):
        path = tmp_path / "head.csv"
        path.write_text("a,b,t\n1.0,2.0,1\n3.0,4.0,2\n")
        x, names = read_stream_named(path)
        assert names == ["a", "b"]
        assert x.shape == (2, 2)

    def test_column_selection(self, tmp_path):
        path = tmp_path / "head.csv"
        path.write_text("a,b,c\n1.0,2.0,3.0\n")
        x, names = read_stream_named(path, columns=["c", "a"])
        assert names == ["c", "a"]
        assert x == pytest.approx(np.array([[3.0, 1.0]]))
        with pytest.raises(IngestionError, match="not found"):
            read_stream(path, columns=["z"])

    def test_column_selection_needs_header(self, tmp_path):
        path = tmp_path / "raw.csv"
        path.write_text("1.0,2.0\n")
        with pytest.raises(IngestionError, match="header"):
            read_stream(path, columns=["a"])

    def test_jsonl(self, tmp_path):
        path = tmp_path / "s.jsonl"
        path.write_text('[1, 2.5]\n\n[3, 4]\n')
        x = read_stream(path)
        assert x == pytest.approx(np.array([[1.0, 2.5], [3.0, 4.0]]))

    def test_jsonl_errors_carry_line_numbers(self, tmp_path):
        path = tmp_path / "s.jsonl"
        path.write_text('[1, 2]\n[3]\n')
        with pytest.raises(IngestionError, match="line 2"):
            read_stream(path)
        path.write_text('{"a": 1}\n')
        with pytest.raises(IngestionError, match="line 1"):
            read_stream(path)

    def test_csv_errors_carry_row_numbers(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1.0,oops\n")
        with pytest.raises(IngestionError, match="row 2"):
            read_stream(path)
        path.write_text("a,b\n1.0,inf\n")
        with pytest.raises(IngestionError, match="non-finite"):
            read_stream(path)

    def test_read_table_csv(self, tmp_path):
        path = tmp_path / "table.csv"
        path.write_text("a,b,y\n1.0,2.0,0.5\n")
        y = read_table_csv(path, ["y"])
        assert y == pytest.approx(np.array([[0.5]]))


class TestLabelsCsv:
    def test_reads_raw_strings(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text("x,label\n1.0,UP\n2.0,DOWN\n")
        labels = read_labels_csv(path, "label")
        assert labels.tolist() == ["UP", "DOWN"]

    def test_unknown_column(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text("x,label\n1.0,UP\n")
        with pytest.raises(IngestionError, match="'missing'"):
            read_labels_csv(path, "missing")


class TestAtomicWrites:
    def test_no_tmp_file_left_behind(self, tmp_path):
        data = make_dataset(np.array([[1.0], [2.0]]), [1, 2])
        write_dataset_csv(tmp_path / "out.csv", data)
        assert [p.name for p in tmp_path.iterdir()] == ["out.csv"]

    def test_failed_write_leaves_no_partial_file(self, tmp_path):
        data, _ = sample_gmm(GmmSpec(seed=1), 10, rng_seed=1)
        target = tmp_path / "missing-dir" / "out.csv"
        with pytest.raises(OSError):
            write_dataset_csv(target, data)
        assert not target.exists()
        assert list(tmp_path.iterdir()) == []


class TestReportsJson:
    def _reports(self):
        data, _ = sample_gmm(GmmSpec(seed=2), 160, rng_seed=3)
        return explain_stream(data.x, OracleDetector(stream_change_positions(data)))

    def test_round_trip(self, tmp_path):
        reports = self._reports()
        path = tmp_path / "reports.json"
        write_reports_json(path, reports, name="demo")
        name, back = read_reports_json(path)
        assert name == "demo"
        assert back == reports

    def test_document_shape(self, tmp_path):
        reports = self._reports()
        path = tmp_path / "reports.json"
        write_reports_json(path, reports)
        doc = json.loads(path.read_text())
        assert doc["schema_version"] == 1
        assert doc["n_reports"] == len(reports)
        # key-sorted, newline-terminated
        assert path.read_text() == json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def test_schema_checked(self, tmp_path):
        path = tmp_path / "r.json"
        path.write_text('{"schema_version": 99}')
        with pytest.raises(IngestionError, match="schema"):
            read_reports_json(path)


class TestPairsCsv:
    def test_flat_table(self, tmp_path):
        data, _ = sample_gmm(GmmSpec(seed=2), 160, rng_seed=3)
        reports = explain_stream(data.x, OracleDetector(stream_change_positions(data)))
        path = tmp_path / "pairs.csv"
        write_pairs_csv(path, reports)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        r = reports[0]
        n_pairs = sum(len(a["pairs"]) for a in r.assignments)
        assert len(rows) == 1 + n_pairs
        assert rows[0][:3] == ["event_index", "target_bin", "char_row"]
        assert rows[0][-2:] == ["d_f0", "d_f1"]
        # costs parse back as floats
        cost_col = rows[0].index("cost")
        for row in rows[1:]:
            float(row[cost_col])

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            write_pairs_csv(tmp_path / "p.csv", [])
