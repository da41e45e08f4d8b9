"""Corpus ingestion, model-dump files, and report serialization.

A model dump for example ``X`` in directory ``D`` consists of:

* ``D/X.tokens.json`` -- ``{"example_id", "tokens": [str], "spans": [[s,e]|null]}``
  where spans are half-open character ranges into the normalized code,
  null for special tokens;
* ``D/X.attn.bin``    -- 16-byte header (magic ``ATTN``, u32 layers, u32 heads,
  u32 tokens, little-endian) followed by float32 little-endian attention
  scores of shape (layers, heads, tokens, tokens);
* ``D/X.attrib.json`` -- ``{"example_id", "attributions": {tool: [float]}}``
  with one length-n array per attribution tool.
"""

from __future__ import annotations

import csv
import json
import logging
import re
import struct
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .astcore import SourceFunction
from .errors import CorruptTensor, LabelError, MissingFile, SchemaError
from .metrics import AlignmentRecord, SummaryStats, aggregate_records
from .tokenalign import InputToken

log = logging.getLogger(__name__)

ATTENTION_MAGIC = b"ATTN"
_HEADER = struct.Struct("<4sIII")
_ID_PATTERN = re.compile(r"^[A-Za-z0-9._-]+$")


# --- corpus ---------------------------------------------------------------------

def load_corpus(path) -> list[SourceFunction]:
    """Read a JSON-lines corpus of {id, code, label, bug_lines?} records."""
    functions = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc}", line=lineno) from None
            for key in ("id", "code", "label"):
                if key not in raw:
                    raise SchemaError(f"missing field {key!r}", line=lineno)
            ex_id = raw["id"]
            if not isinstance(ex_id, str) or not _ID_PATTERN.match(ex_id):
                raise SchemaError(f"id {ex_id!r} is not a safe identifier", line=lineno)
            if ex_id in seen:
                raise SchemaError(f"duplicate id {ex_id!r}", line=lineno)
            seen.add(ex_id)
            if raw["label"] not in (0, 1):
                raise LabelError(f"label must be 0 or 1, got {raw['label']!r}", line=lineno)
            if not isinstance(raw["code"], str) or not raw["code"]:
                raise SchemaError("code must be a nonempty string", line=lineno)
            traces = raw.get("bug_lines") or []
            if not isinstance(traces, list) or any(not isinstance(t, list) for t in traces):
                raise SchemaError("bug_lines must be a list of lists", line=lineno)
            try:
                fn = SourceFunction(
                    id=ex_id,
                    code=raw["code"],
                    label=raw["label"],
                    dataset=raw.get("dataset", ""),
                    bug_line_traces=tuple(tuple(int(x) for x in t) for t in traces),
                )
            except (TypeError, ValueError) as exc:
                raise SchemaError(str(exc), line=lineno) from None
            functions.append(fn)
    return functions


def write_corpus(functions: Sequence[SourceFunction], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for fn in functions:
            record = {"id": fn.id, "code": fn.code, "label": fn.label}
            if fn.dataset:
                record["dataset"] = fn.dataset
            if fn.bug_line_traces:
                record["bug_lines"] = [list(t) for t in fn.bug_line_traces]
            fh.write(json.dumps(record) + "\n")


# --- model dumps -----------------------------------------------------------------

@dataclass
class ModelDump:
    example_id: str
    tokens: list[InputToken]
    attention: np.ndarray                  # (L, H, n, n) float32
    attributions: dict[str, np.ndarray]    # tool -> (n,)

    @property
    def n_tokens(self) -> int:
        return len(self.tokens)


def dump_paths(directory, example_id: str) -> dict[str, Path]:
    directory = Path(directory)
    return {
        "tokens": directory / f"{example_id}.tokens.json",
        "attention": directory / f"{example_id}.attn.bin",
        "attributions": directory / f"{example_id}.attrib.json",
    }


def write_dump(directory, dump: ModelDump) -> None:
    paths = dump_paths(directory, dump.example_id)
    paths["tokens"].parent.mkdir(parents=True, exist_ok=True)

    tokens_payload = {
        "example_id": dump.example_id,
        "tokens": [t.text for t in dump.tokens],
        "spans": [list(t.char_span) if t.char_span is not None else None
                  for t in dump.tokens],
    }
    paths["tokens"].write_text(json.dumps(tokens_payload), encoding="utf-8")

    att = np.ascontiguousarray(dump.attention, dtype="<f4")
    n_layers, n_heads, n, n2 = att.shape
    if n != n2 or n != dump.n_tokens:
        raise ValueError("attention shape does not match token count")
    header = _HEADER.pack(ATTENTION_MAGIC, n_layers, n_heads, n)
    paths["attention"].write_bytes(header + att.tobytes())

    attrib_payload = {
        "example_id": dump.example_id,
        "attributions": {tool: [float(x) for x in arr]
                         for tool, arr in dump.attributions.items()},
    }
    paths["attributions"].write_text(json.dumps(attrib_payload), encoding="utf-8")


def load_tokens(directory, example_id: str) -> list[InputToken]:
    """Load just the input-token offsets file of a dump."""
    path = dump_paths(directory, example_id)["tokens"]
    if not path.exists():
        raise MissingFile(str(path))
    payload = json.loads(path.read_text(encoding="utf-8"))
    texts = payload["tokens"]
    spans = payload["spans"]
    if len(texts) != len(spans):
        raise SchemaError(f"{path}: tokens/spans length mismatch")
    return [InputToken(i, text, tuple(span) if span is not None else None)
            for i, (text, span) in enumerate(zip(texts, spans))]


def load_dump(directory, example_id: str) -> ModelDump:
    """Load and validate one example's dump; attention rows are sanity-checked."""
    paths = dump_paths(directory, example_id)
    for path in paths.values():
        if not path.exists():
            raise MissingFile(str(path))

    tokens = load_tokens(directory, example_id)

    blob = paths["attention"].read_bytes()
    if len(blob) < _HEADER.size:
        raise CorruptTensor(f"{paths['attention']}: too short for header")
    magic, n_layers, n_heads, n = _HEADER.unpack_from(blob)
    if magic != ATTENTION_MAGIC:
        raise CorruptTensor(f"{paths['attention']}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * n_layers * n_heads * n * n
    if len(blob) != expected:
        raise CorruptTensor(
            f"{paths['attention']}: expected {expected} bytes, found {len(blob)}")
    if n != len(tokens):
        raise CorruptTensor(
            f"{paths['attention']}: tensor is for {n} tokens, offsets file has {len(tokens)}")
    attention = np.frombuffer(blob, dtype="<f4", offset=_HEADER.size).reshape(
        n_layers, n_heads, n, n)

    deviation = np.abs(attention.sum(axis=-1) - 1.0).max() if attention.size else 0.0
    if deviation > 1e-3:
        log.warning("%s: attention rows deviate from stochastic by %.3g",
                    example_id, deviation)

    attrib_payload = json.loads(paths["attributions"].read_text(encoding="utf-8"))
    attributions = {}
    for tool, values in attrib_payload.get("attributions", {}).items():
        arr = np.asarray(values, dtype=float)
        if arr.shape != (n,):
            raise SchemaError(
                f"{paths['attributions']}: tool {tool} has {arr.shape[0]} scores, expected {n}")
        attributions[tool] = arr
    return ModelDump(example_id=example_id, tokens=tokens,
                     attention=attention, attributions=attributions)


# --- reports ---------------------------------------------------------------------

_REPORT_COLUMNS = ("example_id", "metric", "tool", "layer", "head", "path_id", "k", "score")


def _record_sort_key(rec: AlignmentRecord):
    return (
        rec.example_id,
        rec.metric,
        rec.tool or "",
        -1 if rec.layer is None else rec.layer,
        -1 if rec.head is None else rec.head,
        -1 if rec.path_id is None else rec.path_id,
    )


def summarize(records: Sequence[AlignmentRecord], head_reduce: str = "mean") -> dict:
    """Per-metric (and per-tool) summary statistics for a record set."""
    groups: dict[tuple, list[AlignmentRecord]] = {}
    for rec in records:
        groups.setdefault((rec.metric, rec.tool), []).append(rec)
    summary: dict = {}
    for (metric, tool), recs in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1] or "")):
        views = aggregate_records(recs, head_reduce=head_reduce)
        name = metric if tool is None else f"{metric}/{tool}"
        summary[name] = {
            "per_example": views["per_example"].stats.as_dict(),
            "per_head": views["per_head"].stats.as_dict(),
        }
        if metric == "joint_prob":
            lengths: dict[int, list[float]] = {}
            for rec in recs:
                lengths.setdefault(rec.k, []).append(rec.score)
            summary[name]["by_path_length"] = {
                str(length): SummaryStats.of(scores).as_dict()
                for length, scores in sorted(lengths.items())
            }
    return summary


def write_report(records: Sequence[AlignmentRecord], path, fmt: str = "json",
                 head_reduce: str = "mean") -> None:
    """Write records (deterministically ordered) plus summary tables."""
    if not records:
        raise ValueError("no records to report")
    bad = [r for r in records if not np.isfinite(r.score)]
    if bad:
        raise ValueError(f"non-finite score in record {bad[0]}")
    ordered = sorted(records, key=_record_sort_key)
    summary = summarize(ordered, head_reduce=head_reduce)
    path = Path(path)
    if fmt == "json":
        payload = {"records": [asdict(r) for r in ordered], "summary": summary}
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(_REPORT_COLUMNS)
            for rec in ordered:
                row = asdict(rec)
                writer.writerow([_csv_cell(row[col]) for col in _REPORT_COLUMNS])
        summary_path = path.with_suffix(path.suffix + ".summary.json")
        summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown report format: {fmt!r}")


def _csv_cell(value):
    return "" if value is None else value


def read_report(path, fmt: Optional[str] = None) -> list[AlignmentRecord]:
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix == ".csv" else "json"
    records = []
    if fmt == "json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        for raw in payload["records"]:
            records.append(AlignmentRecord(**raw))
    else:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                records.append(AlignmentRecord(
                    example_id=row["example_id"],
                    metric=row["metric"],
                    tool=row["tool"] or None,
                    layer=int(row["layer"]) if row["layer"] != "" else None,
                    head=int(row["head"]) if row["head"] != "" else None,
                    path_id=int(row["path_id"]) if row["path_id"] != "" else None,
                    k=int(row["k"]),
                    score=float(row["score"]),
                ))
    return records
