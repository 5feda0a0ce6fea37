"""JSONL dataset reading and writing with schema validation.

One record per line: {id, author, sentiment, text}. Outputs from the
mechanisms add {anonymized_text, substitutions, budget} on top. Integer
sentiment scores are binarized to pos/neg when a rating scale is given.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

from .attack_harness import Record, binarize_sentiment


class SchemaError(ValueError):
    """Malformed dataset line; the message carries the 1-based line number."""


_REQUIRED = ("id", "author", "sentiment", "text")


def _parse_record(obj: dict, lineno: int, sentiment_scale: int | None) -> Record:
    for key in _REQUIRED:
        if key not in obj:
            raise SchemaError(f"line {lineno}: missing field {key!r}")
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise SchemaError(f"line {lineno}: id must be a non-empty string")
    if not isinstance(obj["author"], str) or not obj["author"]:
        raise SchemaError(f"line {lineno}: author must be a non-empty string")
    if not isinstance(obj["text"], str):
        raise SchemaError(f"line {lineno}: text must be a string")
    sentiment = obj["sentiment"]
    if isinstance(sentiment, bool) or not isinstance(sentiment, (int, str)):
        raise SchemaError(f"line {lineno}: sentiment must be an integer or a string")
    if isinstance(sentiment, int):
        if sentiment_scale is None:
            sentiment = str(sentiment)
        else:
            sentiment = binarize_sentiment(sentiment, sentiment_scale)
    return Record(id=obj["id"], author=obj["author"], sentiment=sentiment, text=obj["text"])


def read_jsonl(path: str | Path) -> list[dict]:
    """Raw JSON objects, one per non-empty line, with line numbers on errors."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise SchemaError(f"line {lineno}: expected a JSON object")
            obj["__line__"] = lineno
            out.append(obj)
    return out


def read_corpus(path: str | Path, sentiment_scale: int | None = None) -> list[Record]:
    """Load a labeled corpus, checking the schema and de-duplicating ids."""
    records = []
    seen: set[str] = set()
    for obj in read_jsonl(path):
        lineno = obj.pop("__line__")
        rec = _parse_record(obj, lineno, sentiment_scale)
        if rec.id in seen:
            raise SchemaError(f"line {lineno}: duplicate id {rec.id!r}")
        seen.add(rec.id)
        records.append(rec)
    if not records:
        raise SchemaError("dataset is empty")
    return records


def read_perturbed_corpus(path: str | Path, sentiment_scale: int | None = None) -> list[Record]:
    """Load mechanism output, using anonymized_text as each record's text."""
    records = []
    seen: set[str] = set()
    for obj in read_jsonl(path):
        lineno = obj.pop("__line__")
        if "anonymized_text" in obj:
            if not isinstance(obj["anonymized_text"], str):
                raise SchemaError(f"line {lineno}: anonymized_text must be a string")
            obj = dict(obj, text=obj["anonymized_text"])
        rec = _parse_record(obj, lineno, sentiment_scale)
        if rec.id in seen:
            raise SchemaError(f"line {lineno}: duplicate id {rec.id!r}")
        seen.add(rec.id)
        records.append(rec)
    if not records:
        raise SchemaError("dataset is empty")
    return records


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> None:
    """One compact JSON object per line; key order is preserved as given."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=True) + "\n")


def records_to_rows(records: Sequence[Record]) -> list[dict]:
    return [
        {"id": r.id, "author": r.author, "sentiment": r.sentiment, "text": r.text}
        for r in records
    ]
