"""
Line-oriented inputs and outputs: distance streams, trace CSV and datasets.
"""
import csv
import json
import logging
import math
import sys
from contextlib import contextmanager

import numpy as np

from ..utils.errors import DataError, StreamParseError

logger = logging.getLogger(__name__)

TRACE_HEADER = ("step", "epsilon_dp", "epsilon_bdp", "delta", "lambda_star_dp", "lambda_star_bdp")


@contextmanager
def open_text(path, mode="r"):
    """
    Open a UTF-8 text file, with ``-`` meaning stdin or stdout.
    """
    if path == "-":
        yield sys.stdin if "r" in mode else sys.stdout
        return
    with open(path, mode, encoding="utf-8", newline="" if "w" in mode else None) as handle:
        yield handle


def parse_distance_record(line, line_no):
    """
    Parse one JSON-lines record ``{"step": n, "distances": [...]}``.

    Args:
        line (str): Raw line
        line_no (int): 1-based line number for error messages

    Returns:
        tuple: (step, numpy.ndarray of distances)
    """
    try:
        record = json.loads(line)
    except json.JSONDecodeError as e:
        raise StreamParseError(e.msg, line=line_no) from e
    if not isinstance(record, dict) or "distances" not in record:
        raise StreamParseError('record must be an object with a "distances" list', line=line_no)
    step = record.get("step", line_no)
    raw = record["distances"]
    if not isinstance(raw, list) or not all(isinstance(d, (int, float)) and not isinstance(d, bool) for d in raw):
        raise StreamParseError("distances must be a list of numbers", line=line_no)
    distances = np.asarray(raw, dtype=float)
    if np.any(~np.isfinite(distances)) or np.any(distances < 0):
        raise StreamParseError("distances must be finite and non-negative", line=line_no)
    return step, distances


def read_distance_stream(path):
    """
    Iterate over the records of a distance stream.

    Args:
        path (str): JSON-lines file, or "-"

    Yields:
        tuple: (step, distances)
    """
    try:
        with open_text(path) as handle:
            for line_no, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                yield parse_distance_record(line, line_no)
    except OSError as e:
        raise StreamParseError(f"cannot read {path}: {e}") from e


def write_distance_stream(path, records):
    """
    Write (step, distances) records as JSON lines.
    """
    with open_text(path, "w") as handle:
        for step, distances in records:
            handle.write(json.dumps({"step": int(step), "distances": [float(d) for d in distances]}) + "\n")


def format_number(value):
    """10 significant digits, the trace file precision."""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return f"{float(value):.10g}"


class TraceWriter:
    """
    Streams trace rows to a CSV file as they are produced.
    """
    def __init__(self, handle, leading=()):
        """
        Args:
            handle: Writable text handle
            leading: Extra leading column names (e.g. a sweep point label)
        """
        self.leading = tuple(leading)
        self._writer = csv.writer(handle, lineterminator="\n")
        self._writer.writerow(self.leading + TRACE_HEADER)

    def write(self, record, leading=()):
        """
        Write one TraceRecord.
        """
        self._writer.writerow([*leading, *(format_number(v) for v in record.as_row())])


def write_rows(handle, header, rows):
    """
    Write a generic CSV table with the trace number format.
    """
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([cell if isinstance(cell, str) else format_number(cell) for cell in row])


def read_dataset(path, label_column):
    """
    Read a numeric CSV dataset with a binary label column.

    Args:
        path (str): CSV file with a header row
        label_column (str): Name of the label column

    Returns:
        tuple: (features array (n, k), labels array (n,), feature names)
    """
    try:
        with open_text(path) as handle:
            reader = csv.reader(handle)
            try:
                header = [name.strip() for name in next(reader)]
            except StopIteration:
                raise StreamParseError("dataset is empty", row=1) from None
            if label_column not in header:
                raise StreamParseError(f"label column {label_column!r} not in header", row=1)
            label_index = header.index(label_column)

            rows, labels = [], []
            for row_no, row in enumerate(reader, start=2):
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) != len(header):
                    raise StreamParseError(f"expected {len(header)} fields, found {len(row)}", row=row_no)
                values = []
                for name, cell in zip(header, row):
                    try:
                        values.append(float(cell))
                    except ValueError:
                        raise StreamParseError(f"not a number: {cell!r}", row=row_no, column=name) from None
                label = values.pop(label_index)
                if label not in (0.0, 1.0):
                    raise DataError(f"row {row_no}: label {label!r} is not binary")
                rows.append(values)
                labels.append(label)
    except OSError as e:
        raise StreamParseError(f"cannot read {path}: {e}") from e

    features = [name for i, name in enumerate(header) if i != label_index]
    logger.info("read %d rows with %d features from %s", len(rows), len(features), path)
    return np.asarray(rows, dtype=float).reshape(len(rows), len(features)), np.asarray(labels), features
