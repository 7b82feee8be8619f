"""
Tests for ledger documents, distance streams and trace CSV output.
"""
import io
import json

import numpy as np
import pytest

from src.data.json_handler import JsonHandler, ledger_from_document, ledger_to_document, load_ledger, save_ledger
from src.data.streams import TraceWriter, format_number, read_distance_stream, write_distance_stream
from src.privacy.accountant import Ledger, LedgerMode
from src.simulation.plans import TraceRecord
from src.utils.errors import StreamParseError


class TestLedgerDocuments:

    def test_save_load_is_bit_exact(self, tmp_path):
        ledger = Ledger(mode=LedgerMode.BDP, lambda_grid=(1, 2, 8), gamma=1e-15)
        ledger.record_step([0.1, 1 / 3, np.pi]).record_step([1e-300, 2.5, 7.0])
        path = str(tmp_path / "ledger.json")
        save_ledger(ledger, path)

        loaded = load_ledger(path)
        assert loaded.mode is LedgerMode.BDP
        assert loaded.lambda_grid == (1, 2, 8)
        assert loaded.gamma == 1e-15
        assert loaded.steps == 2
        np.testing.assert_array_equal(loaded.cum_cost, ledger.cum_cost)
        assert loaded.saved_at is not None
        assert loaded.epsilon_at(1e-5) == ledger.epsilon_at(1e-5)

    def test_document_fields(self):
        document = ledger_to_document(Ledger(mode=LedgerMode.MA, lambda_grid=(1, 2), gamma=0.0))
        assert set(document) == {"version", "mode", "gamma", "lambda_grid", "cum_cost", "steps", "saved_at"}
        assert document["mode"] == "ma"

    def test_missing_timestamp_is_accepted(self):
        document = {"version": 1, "mode": "ma", "gamma": 0.0, "lambda_grid": [1], "cum_cost": [0.5], "steps": 1}
        assert ledger_from_document(document).saved_at is None

    @pytest.mark.parametrize("document", [
        [],
        {"version": 2, "mode": "ma", "gamma": 0.0, "lambda_grid": [1], "cum_cost": [0.0], "steps": 0},
        {"version": 1, "mode": "ma", "gamma": 0.0, "lambda_grid": [1]},
        {"version": 1, "mode": "rdp", "gamma": 0.0, "lambda_grid": [1], "cum_cost": [0.0], "steps": 0},
    ])
    def test_rejected_documents(self, document):
        with pytest.raises(StreamParseError):
            ledger_from_document(document)

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "version": 1,\n  "mode": \n}', encoding="utf-8")
        with pytest.raises(StreamParseError) as info:
            JsonHandler(str(path)).load_data()
        assert info.value.line == 4

    def test_numpy_values_serialise(self, tmp_path):
        path = str(tmp_path / "values.json")
        JsonHandler(path).save_data({"a": np.float64(0.5), "b": np.int64(3), "c": np.arange(2)})
        assert JsonHandler(path).load_data() == {"a": 0.5, "b": 3, "c": [0, 1]}


class TestDistanceStreams:

    def test_write_then_read(self, tmp_path):
        path = str(tmp_path / "d.jsonl")
        write_distance_stream(path, [(1, [0.5, 1.5]), (2, [0.0, 2.0])])
        records = list(read_distance_stream(path))
        assert [step for step, _ in records] == [1, 2]
        np.testing.assert_array_equal(records[1][1], [0.0, 2.0])

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text('{"step": 1, "distances": [1.0, 2.0]}\n\n', encoding="utf-8")
        assert len(list(read_distance_stream(str(path)))) == 1

    @pytest.mark.parametrize("line", [
        "not json",
        '{"step": 1}',
        '{"step": 1, "distances": ["a"]}',
        '{"step": 1, "distances": [-1.0, 2.0]}',
    ])
    def test_bad_record_reports_line(self, tmp_path, line):
        path = tmp_path / "d.jsonl"
        path.write_text('{"step": 1, "distances": [1.0, 2.0]}\n' + line + "\n", encoding="utf-8")
        with pytest.raises(StreamParseError) as info:
            list(read_distance_stream(str(path)))
        assert info.value.line == 2
        assert info.value.exit_code == 2


class TestTraceOutput:

    def test_number_format(self):
        assert format_number(3) == "3"
        assert format_number(1 / 3) == "0.3333333333"
        assert format_number(None) == ""

    def test_trace_rows(self):
        handle = io.StringIO()
        writer = TraceWriter(handle)
        writer.write(TraceRecord(step=1, epsilon_dp=0.5, epsilon_bdp=0.25, delta=1e-5,
                                 lambda_star_dp=32, lambda_star_bdp=64))
        lines = handle.getvalue().splitlines()
        assert lines[0] == "step,epsilon_dp,epsilon_bdp,delta,lambda_star_dp,lambda_star_bdp"
        assert lines[1] == "1,0.5,0.25,1e-05,32,64"

    def test_leading_columns(self):
        handle = io.StringIO()
        writer = TraceWriter(handle, leading=("point",))
        writer.write(TraceRecord(1, 0.5, 0.25, 1e-5, 2, 3), leading=("sigma=1",))
        assert handle.getvalue().splitlines()[1].startswith("sigma=1,1,")


def test_metadata_round_trip_keeps_unicode(tmp_path):
    path = str(tmp_path / "meta.json")
    JsonHandler(path).save_data({"note": "σ sweep"})
    assert json.loads(open(path, encoding="utf-8").read())["note"] == "σ sweep"
