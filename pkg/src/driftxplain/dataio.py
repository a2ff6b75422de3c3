"""Reading and writing datasets, streams and reports.

CSV round-trips are exact: floats are written with repr() and parsed back
with float(), which is lossless for IEEE doubles. Every writer goes
through a temp file and an atomic rename, so a failure never leaves a
half-written artifact behind.
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

import numpy as np

from .core import Dataset
from .errors import IngestionError, ValidationError
from .pipeline import ExplanationReport
from .synth import GroundTruth


def _atomic_write_text(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def _read_csv_rows(path) -> list[list[str]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc


def _floatable(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _parse_float(cell: str, row: int, path) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise IngestionError(f"{path}: row {row}: {cell!r} is not a number") from None
    if not np.isfinite(value):
        raise IngestionError(f"{path}: row {row}: non-finite value {cell!r}")
    return value


# ---------------------------------------------------------------------------
# Bin-labelled datasets


def write_dataset_csv(path, data: Dataset, feature_names=None) -> None:
    """Header ``f0..f{d-1},t`` (or the given names), one sample per row."""
    names = list(feature_names) if feature_names else [f"f{j}" for j in range(data.dim)]
    if len(names) != data.dim:
        raise ValidationError(f"{len(names)} feature names given for {data.dim} features")
    if "t" in names:
        raise ValidationError("'t' is reserved for the bin column")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*names, "t"])
    for row, t in zip(data.x, data.t):
        writer.writerow([repr(float(v)) for v in row] + [int(t)])
    _atomic_write_text(path, buf.getvalue())


def read_dataset_csv(path) -> Dataset:
    rows = _read_csv_rows(path)
    if len(rows) < 2:
        raise IngestionError(f"{path}: no samples")
    header = rows[0]
    if header[-1] != "t":
        raise IngestionError(f"{path}: expected a trailing 't' bin column, got {header[-1]!r}")
    dim = len(header) - 1
    if dim < 1:
        raise IngestionError(f"{path}: no feature columns")
    x = np.empty((len(rows) - 1, dim))
    t = np.empty(len(rows) - 1, dtype=np.int64)
    for k, row in enumerate(rows[1:], start=2):
        if len(row) != dim + 1:
            raise IngestionError(f"{path}: row {k}: expected {dim + 1} cells, got {len(row)}")
        for j in range(dim):
            x[k - 2, j] = _parse_float(row[j], k, path)
        try:
            t[k - 2] = int(row[dim])
        except ValueError:
            raise IngestionError(f"{path}: row {k}: bin {row[dim]!r} is not an integer") from None
    try:
        return Dataset(x=x, t=t, n_bins=int(t.max()))
    except ValidationError as exc:
        raise IngestionError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Ground truth sidecars


def write_truth_csv(path, truth: GroundTruth) -> None:
    """Per-sample analytic columns aligned with the dataset rows."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    columns = [("i_true", truth.i_true)]
    if truth.char_true is not None:
        columns.append(("char_true", truth.char_true))
    writer.writerow([name for name, _ in columns])
    for k in range(len(truth.i_true)):
        writer.writerow([repr(float(values[k])) for _, values in columns])
    _atomic_write_text(path, buf.getvalue())


def read_truth_csv(path) -> GroundTruth:
    rows = _read_csv_rows(path)
    if len(rows) < 2:
        raise IngestionError(f"{path}: no rows")
    header = rows[0]
    if "i_true" not in header:
        raise IngestionError(f"{path}: missing the i_true column")
    data = {name: np.empty(len(rows) - 1) for name in header}
    for k, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise IngestionError(f"{path}: row {k}: expected {len(header)} cells, got {len(row)}")
        for name, cell in zip(header, row):
            data[name][k - 2] = _parse_float(cell, k, path)
    return GroundTruth(i_true=data["i_true"], char_true=data.get("char_true"))


def write_checkerboard_truth_json(path, truth: GroundTruth) -> None:
    meta = truth.meta
    doc = {
        "grid": int(meta["grid"]),
        "active": [list(map(int, cells)) for cells in meta["active"]],
        "changed_cells": {
            f"{a}->{b}": list(map(int, cells)) for (a, b), cells in meta["changed_cells"].items()
        },
        "cell_of": [int(c) for c in meta["cell_of"]],
    }
    _atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_checkerboard_truth_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IngestionError(f"{path}: invalid JSON: {exc}") from exc
    changed = {}
    for key, cells in doc.get("changed_cells", {}).items():
        a, _, b = key.partition("->")
        changed[(int(a), int(b))] = tuple(int(c) for c in cells)
    return {
        "grid": int(doc["grid"]),
        "active": tuple(tuple(int(c) for c in cells) for cells in doc["active"]),
        "changed_cells": changed,
        "cell_of": np.asarray(doc["cell_of"], dtype=np.int64),
    }


# ---------------------------------------------------------------------------
# Feature streams


def read_stream(path, columns=None) -> np.ndarray:
    """Feature rows for the explain pipeline.

    CSV: a header row is assumed when the first row does not parse as
    numbers; ``columns`` selects features by header name, and without a
    selection every column except a literal ``t`` is used. Files ending in
    .jsonl or .ndjson hold one JSON array of numbers per line.
    """
    return read_stream_named(path, columns)[0]


def read_stream_named(path, columns=None) -> tuple[np.ndarray, list[str] | None]:
    """Like read_stream, also returning the selected header names (or None)."""
    p = Path(path)
    if p.suffix.lower() in (".jsonl", ".ndjson"):
        if columns is not None:
            raise IngestionError(f"{path}: column selection applies to CSV input only")
        return _read_jsonl_stream(p), None
    rows = _read_csv_rows(p)
    if not rows:
        raise IngestionError(f"{path}: empty file")
    has_header = not all(_floatable(cell) for cell in rows[0])
    if columns is not None:
        if not has_header:
            raise IngestionError(f"{path}: column selection needs a header row")
        missing = [c for c in columns if c not in rows[0]]
        if missing:
            raise IngestionError(f"{path}: columns not found: {missing}")
        picks = [rows[0].index(c) for c in columns]
    elif has_header:
        picks = [j for j, name in enumerate(rows[0]) if name != "t"]
        if not picks:
            raise IngestionError(f"{path}: no feature columns")
    else:
        picks = list(range(len(rows[0])))
    body = rows[1:] if has_header else rows
    if not body:
        raise IngestionError(f"{path}: no samples")
    start = 2 if has_header else 1
    x = np.empty((len(body), len(picks)))
    for k, row in enumerate(body, start=start):
        if max(picks) >= len(row):
            raise IngestionError(f"{path}: row {k}: too few cells")
        for out_j, j in enumerate(picks):
            x[k - start, out_j] = _parse_float(row[j], k, path)
    names = [rows[0][j] for j in picks] if has_header else None
    return x, names


def csv_header(path) -> list[str] | None:
    """Header names of a CSV file, or None when the first row is numeric."""
    rows = _read_csv_rows(path)
    if not rows:
        raise IngestionError(f"{path}: empty file")
    return None if all(_floatable(cell) for cell in rows[0]) else rows[0]


def read_labels_csv(path, column: str) -> np.ndarray:
    """One raw string column of a header CSV (classification targets)."""
    rows = _read_csv_rows(path)
    if len(rows) < 2:
        raise IngestionError(f"{path}: no rows")
    header = rows[0]
    if column not in header:
        raise IngestionError(f"{path}: column {column!r} not found in {header}")
    j = header.index(column)
    out = []
    for k, row in enumerate(rows[1:], start=2):
        if j >= len(row):
            raise IngestionError(f"{path}: row {k}: too few cells")
        out.append(row[j])
    return np.asarray(out)


def _read_jsonl_stream(path: Path) -> np.ndarray:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    vectors = []
    for k, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestionError(f"{path}: line {k}: invalid JSON: {exc}") from exc
        if not isinstance(row, list) or not all(isinstance(v, (int, float)) for v in row):
            raise IngestionError(f"{path}: line {k}: expected an array of numbers")
        if vectors and len(row) != len(vectors[0]):
            raise IngestionError(
                f"{path}: line {k}: {len(row)} values, expected {len(vectors[0])}"
            )
        vectors.append([float(v) for v in row])
    if not vectors:
        raise IngestionError(f"{path}: no samples")
    x = np.asarray(vectors)
    if not np.isfinite(x).all():
        raise IngestionError(f"{path}: non-finite values in the stream")
    return x


def read_table_csv(path, columns) -> np.ndarray:
    """Selected numeric columns of a header CSV (for external datasets)."""
    return read_stream(path, columns=list(columns))


# ---------------------------------------------------------------------------
# Reports


def write_reports_json(path, reports, name: str = "") -> None:
    """All reports of one run in a single document, key-sorted JSON."""
    doc = {
        "schema_version": 1,
        "name": str(name),
        "n_reports": len(reports),
        "reports": [r.to_dict() for r in reports],
    }
    _atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_reports_json(path) -> tuple[str, list[ExplanationReport]]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IngestionError(f"{path}: invalid JSON: {exc}") from exc
    if doc.get("schema_version") != 1:
        raise IngestionError(f"{path}: unsupported schema {doc.get('schema_version')!r}")
    reports = [ExplanationReport.from_dict(r) for r in doc.get("reports", [])]
    return str(doc.get("name", "")), reports


def write_pairs_csv(path, reports) -> None:
    """Flat counterpart table: one row per (report, target bin, pair)."""
    if isinstance(reports, ExplanationReport):
        reports = [reports]
    reports = list(reports)
    if not reports:
        raise ValidationError("no reports to write")
    names = reports[0].feature_summary["names"]
    for r in reports[1:]:
        if r.feature_summary["names"] != names:
            raise ValidationError("reports disagree on feature names")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "event_index",
            "target_bin",
            "char_row",
            "char_index",
            "char_position",
            "char_bin",
            "sample_index",
            "sample_position",
            "cost",
            *[f"d_{n}" for n in names],
        ]
    )
    for report in reports:
        for block in report.assignments:
            for pair in block["pairs"]:
                char = report.characteristic_samples[pair["char_row"]]
                writer.writerow(
                    [
                        report.event_index,
                        block["target_bin"],
                        pair["char_row"],
                        char["index"],
                        char["position"],
                        char["bin"],
                        pair["sample_index"],
                        pair["position"],
                        repr(pair["cost"]),
                        *[repr(float(v)) for v in pair["difference"]],
                    ]
                )
    _atomic_write_text(path, buf.getvalue())
