"""Line-JSON corpus and NER-span readers.

Same record shape the clustering engine consumes; only the fields this
component needs (id, title, text, cluster) are kept.  Span files are
line-JSON too: {"id": ..., "spans": [[start, end, "LABEL"], ...]}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .masks import EntitySpan


@dataclass(frozen=True)
class Doc:
    id: str
    title: str = ""
    text: str = ""
    cluster: str | None = None


def _records(path):
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield line_no, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}: line {line_no}: not valid JSON") from exc


def load_corpus(path, language: str | None = None) -> list[Doc]:
    """Read documents in file order; records without an ``id`` (idf tables
    and the like) are skipped, duplicates are an error."""
    docs: list[Doc] = []
    seen: set[str] = set()
    for line_no, record in _records(path):
        if "id" not in record:
            continue
        lang = record.get("lang", record.get("language"))
        if language is not None and lang is not None and lang != language:
            continue
        doc_id = str(record["id"])
        if doc_id in seen:
            raise ValueError(f"{path}: line {line_no}: duplicate document id {doc_id!r}")
        seen.add(doc_id)
        cluster = None
        for key in ("cluster", "event", "label"):
            if key in record:
                cluster = str(record[key])
                break
        body = record.get("text", record.get("body", ""))
        docs.append(Doc(id=doc_id, title=str(record.get("title") or ""),
                        text=str(body or ""), cluster=cluster))
    return docs


def load_spans(path) -> dict[str, list[EntitySpan]]:
    """Per-document NER spans, keyed by document id."""
    out: dict[str, list[EntitySpan]] = {}
    for line_no, record in _records(path):
        if "id" not in record:
            raise ValueError(f"{path}: line {line_no}: span record without an id")
        doc_id = str(record["id"])
        if doc_id in out:
            raise ValueError(f"{path}: line {line_no}: duplicate span record for {doc_id!r}")
        out[doc_id] = [
            EntitySpan(int(s[0]), int(s[1]), str(s[2])) for s in record.get("spans", [])
        ]
    return out
