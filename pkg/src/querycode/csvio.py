"""CSV readers and writers for every on-disk format.

All files may carry ``#``-prefixed comment lines before the header. Comment
lines of the form ``# key: value`` are returned as metadata by the readers.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .bounds import BoundCurve
from .decoders import DecodeReport
from .errors import ParseError
from .model import AnswerVector, LabelVector, QueryGraph, QueryKind

YES = {"1", "yes", "y", "true"}
NO = {"0", "no", "n", "false"}


def _write(path, header_lines, columns, rows):
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_table(path_or_text):
    """(metadata, header, rows) of a comment-headed CSV; rows carry their 1-based file line."""
    text = path_or_text
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and "\n" not in path_or_text):
        try:
            text = Path(path_or_text).read_text()
        except OSError as exc:
            raise ParseError(f"cannot read {path_or_text}: {exc}") from exc
    meta, header, rows = {}, None, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, _, value = body.partition(":")
                meta[key.strip()] = value.strip()
            continue
        fields = next(csv.reader([line]))
        fields = [f.strip() for f in fields]
        if header is None:
            header = fields
        else:
            rows.append((lineno, fields))
    if header is None:
        raise ParseError("missing header row")
    return meta, header, rows


def _expect_header(header, required):
    if header[: len(required)] != list(required):
        raise ParseError(f"expected header starting {','.join(required)}, got {','.join(header)}", row=1)


def _int(value, lineno, what):
    try:
        return int(value)
    except ValueError:
        raise ParseError(f"{what} {value!r} is not an integer", row=lineno) from None


# ---------------------------------------------------------------- labels

def write_labels(path, labels: LabelVector, ids=None, header_lines=()):
    ids = list(range(labels.n)) if ids is None else list(ids)
    return _write(path, header_lines, ["id", "label"], zip(ids, labels.labels.tolist()))


def read_labels(path, k=None):
    """LabelVector plus the id column (ints 0..n-1 for files written without explicit ids)."""
    _, header, rows = read_table(path)
    _expect_header(header, ["id", "label"])
    ids, labels = [], []
    for lineno, fields in rows:
        if len(fields) < 2:
            raise ParseError("expected id,label", row=lineno)
        ids.append(fields[0])
        labels.append(_int(fields[1], lineno, "label"))
    if not labels:
        raise ParseError("no label rows")
    k = max(max(labels) + 1, 2) if k is None else k
    return LabelVector(np.array(labels), k), ids


# ---------------------------------------------------------------- query graphs

def write_query_graph(path, graph: QueryGraph):
    width = max((len(q) for q in graph.queries), default=2)
    columns = ["query_id", "kind"] + [f"idx_{i}" for i in range(1, width + 1)]
    rows = ([j, graph.kind.value, *q] for j, q in enumerate(graph.queries))
    meta = [f"n: {graph.n}", f"delta_max: {graph.delta_max}", f"kind: {graph.kind.value}"]
    return _write(path, meta, columns, rows)


def read_query_graph(path):
    meta, header, rows = read_table(path)
    _expect_header(header, ["query_id", "kind"])
    try:
        n = int(meta["n"])
        delta_max = int(meta["delta_max"])
        kind = QueryKind(meta["kind"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"query graph metadata incomplete: {exc}") from None
    queries = []
    for j, (lineno, fields) in enumerate(rows):
        if _int(fields[0], lineno, "query_id") != j:
            raise ParseError(f"query ids must run 0..m-1, got {fields[0]}", row=lineno)
        if fields[1] != kind.value:
            raise ParseError(f"row kind {fields[1]!r} differs from file kind {kind.value!r}", row=lineno)
        queries.append(tuple(_int(x, lineno, "index") for x in fields[2:] if x != ""))
    return QueryGraph(n, tuple(queries), kind, delta_max)


# ---------------------------------------------------------------- answers

def write_answers(path, answers: AnswerVector, header_lines=()):
    return _write(path, header_lines, ["query_id", "answer"], enumerate(answers.answers.tolist()))


def parse_answer(value, k, lineno):
    v = value.strip().lower()
    if k == 2 and v in YES:
        return 1
    if k == 2 and v in NO:
        return 0
    a = _int(v, lineno, "answer")
    if not 0 <= a < k:
        raise ParseError(f"answer {a} outside [0, {k})", row=lineno)
    return a


def read_answers(path, m, k=2):
    """Answers indexed by query_id. Missing or repeated ids raise ParseError naming them."""
    _, header, rows = read_table(path)
    _expect_header(header, ["query_id", "answer"])
    seen = {}
    dupes = []
    for lineno, fields in rows:
        if len(fields) < 2:
            raise ParseError("expected query_id,answer", row=lineno)
        qid = _int(fields[0], lineno, "query_id")
        if not 0 <= qid < m:
            raise ParseError(f"query_id {qid} outside [0, {m})", row=lineno)
        if qid in seen:
            dupes.append(qid)
        seen[qid] = parse_answer(fields[1], k, lineno)
    missing = [j for j in range(m) if j not in seen]
    if missing or dupes:
        parts = []
        if missing:
            parts.append("missing query_ids " + ",".join(map(str, missing)))
        if dupes:
            parts.append("duplicate query_ids " + ",".join(map(str, sorted(set(dupes)))))
        raise ParseError("; ".join(parts))
    return AnswerVector(np.array([seen[j] for j in range(m)], dtype=np.int64), k)


# ---------------------------------------------------------------- decode reports

def write_report(path, report: DecodeReport, ids=None, header_lines=()):
    ids = list(range(report.labels.n)) if ids is None else list(ids)
    rows = zip(ids, report.labels.labels.tolist(), report.flags)
    return _write(path, header_lines, ["id", "label", "flag"], rows)


def read_report(path, k=2):
    meta, header, rows = read_table(path)
    _expect_header(header, ["id", "label", "flag"])
    labels = [_int(f[1], ln, "label") for ln, f in rows]
    flags = tuple(f[2] if len(f) > 2 else "" for _, f in rows)
    amb = meta.get("ambiguity")
    return DecodeReport(LabelVector(np.array(labels), k), flags,
                        int(amb) if amb not in (None, "", "None") else None)


# ---------------------------------------------------------------- curves and tables

def format_float(x):
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return repr(float(x))


def write_curve(path, curve: BoundCurve, header_lines=()):
    meta = [f"name: {curve.name}",
            f"units: {curve.units[0]} -> {curve.units[1]}",
            "params: " + json.dumps(curve.params, sort_keys=True)] + list(header_lines)
    rows = ((format_float(x), format_float(v), int(ok)) for x, v, ok in curve.rows)
    return _write(path, meta, ["abscissa", "value", "feasible"], rows)


def read_curve(path):
    meta, header, rows = read_table(path)
    _expect_header(header, ["abscissa", "value", "feasible"])
    params = json.loads(meta.get("params", "{}"))
    units = tuple(s.strip() for s in meta.get("units", "x -> y").split("->"))
    parsed = []
    for lineno, f in rows:
        try:
            parsed.append((float(f[0]), float(f[1]), bool(int(f[2]))))
        except (ValueError, IndexError):
            raise ParseError("expected abscissa,value,feasible", row=lineno) from None
    return BoundCurve(meta.get("name", ""), tuple(parsed), units, params)


SIM_COLUMNS = ["axis_value", "mean_distortion", "std_error", "exact_rate", "queries"]


def write_sim_table(path, rows, header_lines=()):
    out = ((format_float(r.axis_value), format_float(r.mean_distortion), format_float(r.std_error),
            format_float(r.exact_rate), r.queries) for r in rows)
    return _write(path, header_lines, SIM_COLUMNS, out)


def read_sim_table(path):
    meta, header, rows = read_table(path)
    _expect_header(header, SIM_COLUMNS)
    return meta, [(float(f[0]), float(f[1]), float(f[2]), float(f[3]), int(f[4])) for _, f in rows]


SURVEY_COLUMNS = ["dtilde", "threshold", "queries", "distortion", "exact_error"]


def write_survey_table(path, rows, header_lines=()):
    out = ((r.dtilde, r.threshold, r.queries, format_float(r.distortion), format_float(r.exact_error))
           for r in rows)
    return _write(path, header_lines, SURVEY_COLUMNS, out)


# ---------------------------------------------------------------- datasets and query sheets

def read_dataset(path):
    """Rows ``id,name[,label]`` -> (ids, names, labels or None)."""
    _, header, rows = read_table(path)
    if header[:2] != ["id", "name"]:
        raise ParseError(f"dataset header must start with id,name, got {','.join(header)}", row=1)
    has_label = len(header) > 2 and header[2] == "label"
    ids, names, labels = [], [], []
    for lineno, fields in rows:
        if len(fields) < 2 or fields[0] == "":
            raise ParseError("expected id,name[,label]", row=lineno)
        ids.append(fields[0])
        names.append(fields[1])
        if has_label:
            if len(fields) < 3:
                raise ParseError("missing label", row=lineno)
            labels.append(_int(fields[2], lineno, "label"))
    if len(set(ids)) != len(ids):
        raise ParseError("dataset ids must be unique")
    if not ids:
        raise ParseError("dataset has no rows")
    return ids, names, (labels if has_label else None)


SHEET_COLUMNS = ["query_id", "id_a", "name_a", "id_b", "name_b"]


def write_query_sheet(path, graph: QueryGraph, ids, names, header_lines=()):
    rows = ((j, ids[a], names[a], ids[b], names[b]) for j, (a, b) in enumerate(graph.queries))
    return _write(path, header_lines, SHEET_COLUMNS, rows)


def read_query_sheet(path):
    _, header, rows = read_table(path)
    _expect_header(header, SHEET_COLUMNS)
    return [(int(f[0]), f[1], f[2], f[3], f[4]) for _, f in rows]
