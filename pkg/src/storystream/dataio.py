"""File formats: corpus loaders, binary/text embedding files, model-bundle
persistence, TF-IDF tables, and key-value config files."""

from __future__ import annotations

import hashlib
import json
import struct
from datetime import datetime, timezone
from typing import Mapping, Sequence

import numpy as np

from .core import (
    BUNDLE_FORMAT_VERSION,
    Document,
    ModelBundle,
    N_FEATURES,
    SectionAnnotations,
    SectionKind,
    SimilarityParams,
    Unit,
)
from .errors import (
    BadMagic,
    CorruptFile,
    MissingField,
    ParseError,
    TruncatedFile,
    UnknownEvent,
    VersionMismatch,
)
from .represent import EmbeddingStore, TfidfModel
from .training import CreationNet


# ---------------------------------------------------------------------------
# Timestamps


def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-ish timestamp ("2014-11-02 07:00:00", T-separated, or
    date-only); timezone-aware values are converted to UTC and made naive."""
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is not None:
        ts = ts.astimezone(timezone.utc).replace(tzinfo=None)
    return ts


# ---------------------------------------------------------------------------
# Corpus: line-delimited JSON records


_SECTION_ALIASES = {
    "title": "title",
    "body": "body",
    "text": "body",
    "titlebody": "titlebody",
    "all": "titlebody",
}


def _annotations_from_features(features, path: str, lineno: int) -> dict[str, SectionAnnotations]:
    out: dict[str, SectionAnnotations] = {}
    if not isinstance(features, dict):
        raise ParseError("'features' must be an object", path=path, line=lineno)
    for raw_key, ann in features.items():
        key = _SECTION_ALIASES.get(str(raw_key).lower())
        if key is None:
            raise ParseError(f"unknown feature section {raw_key!r}", path=path, line=lineno)
        if not isinstance(ann, dict):
            raise ParseError(f"features[{raw_key!r}] must be an object", path=path, line=lineno)
        out[key] = SectionAnnotations(
            tokens=tuple(str(t) for t in ann.get("tokens", ())),
            lemmas=tuple(str(t) for t in ann.get("lemmas", ())),
            entities=tuple(str(t) for t in ann.get("entities", ())),
        )
    return out


def _fallback_annotations(text: str) -> SectionAnnotations:
    """Whitespace tokens, lowercased lemmas, no entities."""
    tokens = tuple(text.split())
    return SectionAnnotations(
        tokens=tokens,
        lemmas=tuple(t.lower() for t in tokens),
        entities=(),
    )


def _first_field(record: dict, names: Sequence[str]):
    for name in names:
        if name in record:
            return record[name]
    return None


def _require(record: dict, names: Sequence[str], path: str, lineno: int):
    value = _first_field(record, names)
    if value is None:
        raise MissingField(f"record is missing required field {names[0]!r}",
                           path=path, line=lineno)
    return value


def _document_from_record(record: dict, path: str, lineno: int) -> Document:
    doc_id = str(_require(record, ("id",), path, lineno))
    date_raw = _require(record, ("date", "timestamp"), path, lineno)
    try:
        timestamp = parse_timestamp(str(date_raw))
    except ValueError as exc:
        raise ParseError(f"bad timestamp {date_raw!r}: {exc}", path=path, line=lineno) from exc
    title = str(record.get("title", ""))
    body_raw = _first_field(record, ("text", "body"))
    body = "" if body_raw is None else str(body_raw)
    cluster = _first_field(record, ("cluster", "event", "label"))
    gold = None if cluster is None else str(cluster)
    if "features" in record:
        anns = _annotations_from_features(record["features"], path, lineno)
    else:
        anns = {}
    title_ann = anns.get("title", _fallback_annotations(title))
    body_ann = anns.get("body", _fallback_annotations(body))
    try:
        return Document.build(
            id=doc_id,
            title=title,
            body=body,
            timestamp=timestamp,
            title_ann=title_ann,
            body_ann=body_ann,
            titlebody_ann=anns.get("titlebody"),
            gold_cluster=gold,
        )
    except ValueError as exc:
        raise ParseError(str(exc), path=path, line=lineno) from exc


def _tfidf_from_idf_record(record: dict, path: str, lineno: int) -> dict[Unit, TfidfModel]:
    tables = record["idf"]
    if not isinstance(tables, dict):
        raise ParseError("'idf' must map units to term->idf objects", path=path, line=lineno)
    doc_count = int(record.get("doc_count", 1))
    models: dict[Unit, TfidfModel] = {}
    for unit in Unit:
        table = tables.get(unit.value)
        if table is None:
            raise MissingField(f"idf record lacks unit {unit.value!r}", path=path, line=lineno)
        terms = sorted(table)
        vocabulary = {t: i for i, t in enumerate(terms)}
        idf = np.array([float(table[t]) for t in terms])
        try:
            models[unit] = TfidfModel(unit=unit, vocabulary=vocabulary,
                                      idf=idf, doc_count=max(doc_count, 1))
        except ValueError as exc:
            raise ParseError(str(exc), path=path, line=lineno) from exc
    return models


def load_miranda(
    path,
    language: str | None = "eng",
) -> tuple[list[Document], dict[Unit, TfidfModel] | None]:
    """Load a line-delimited JSON news corpus, preserving file order.

    Document records carry ``id``, ``date`` (or ``timestamp``), ``lang`` (or
    ``language``), ``title``, ``text`` (or ``body``), ``cluster`` (aliases
    ``event``/``label``), and optionally ``features``: per-section
    (``title``/``body``/``titlebody``) objects with ``tokens``/``lemmas``/
    ``entities`` string lists.  Records without features fall back to
    whitespace tokenization.  A record with an ``idf`` field and no ``id``
    supplies corpus-provided TF-IDF tables: ``{"idf": {"tok": {term: idf},
    "lem": ..., "ent": ...}, "doc_count": N}``.

    Records in other languages than ``language`` are skipped (pass None to
    keep everything).
    """
    docs: list[Document] = []
    seen: set[str] = set()
    models: dict[Unit, TfidfModel] | None = None
    spath = str(path)
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON: {exc.msg}", path=spath, line=lineno) from exc
            if not isinstance(record, dict):
                raise ParseError("each line must hold a JSON object", path=spath, line=lineno)
            if "idf" in record and "id" not in record:
                models = _tfidf_from_idf_record(record, spath, lineno)
                continue
            lang = _first_field(record, ("lang", "language"))
            if language is not None and lang is not None and str(lang) != language:
                continue
            doc = _document_from_record(record, spath, lineno)
            if doc.id in seen:
                raise ParseError(f"duplicate document id {doc.id!r}", path=spath, line=lineno)
            seen.add(doc.id)
            docs.append(doc)
    return docs, models


# Event partition for the two standard splits of the 25-event pilot corpus.
TDT_TRAIN_EVENTS = (
    "Karrigan Harding",
    "Shannon Faulker",
    "Quayle lung clot",
    "Haiti ousts observers",
    "NYC Subway bombing",
    "Carlos the Jackal",
    "USAir 427 crash",
    "Lost in Iraq",
    "Death of Kim Jong Il",
    "Clinic Murders",
    "Kobe Japan quake",
    "Serbs violate Bihac",
    "OK-City bombing",
)

TDT_TEST_EVENTS = (
    "Pentium chip flaw",
    "Cuban riot in Panama",
    "Justice-to-be Breyer",
    "Humble TX flooding",
    "WTC Bombing trial",
    "Cessna on White House",
    "Aldrich Ames",
    "Comet into Jupiter",
    "Serbians down F-16",
    "Carter in Bosnia",
    "Halls copter",
    "DNA in OJ trial",
)


def load_tdt(path, split: str = "train") -> list[Document]:
    """Load the on-topic TDT pilot documents (same line-JSON record shape as
    ``load_miranda``, no language filter) and keep one split.

    ``split`` is ``"train"`` / ``"test"`` (the built-in event partition) or a
    path to a text file naming one event per line.  Titles are absent in
    this corpus: the Title section is empty and TitleBody equals Body.
    """
    docs, _ = load_miranda(path, language=None)
    corpus_events = {d.gold_cluster for d in docs if d.gold_cluster is not None}
    if split == "train":
        wanted = set(TDT_TRAIN_EVENTS)
    elif split == "test":
        wanted = set(TDT_TEST_EVENTS)
    else:
        with open(split, "r", encoding="utf-8") as fh:
            wanted = {line.strip() for line in fh if line.strip()}
        unknown = sorted(wanted - corpus_events)
        if unknown:
            raise UnknownEvent(f"split file names events absent from the corpus: {unknown}")
    out = []
    for doc in docs:
        if doc.gold_cluster in wanted:
            if doc.title:  # corpus has no titles; normalize any stray ones away
                doc = Document.build(
                    id=doc.id, title="", body=doc.body, timestamp=doc.timestamp,
                    title_ann=SectionAnnotations(),
                    body_ann=doc.sections[SectionKind.BODY],
                    gold_cluster=doc.gold_cluster,
                )
            out.append(doc)
    return out


# ---------------------------------------------------------------------------
# Embedding files


EMBEDDING_MAGIC = b"SSEM"
EMBEDDING_VERSION = 1
_HEADER = struct.Struct("<4sIII")  # magic, version, dim, count


def save_embeddings(store: EmbeddingStore, path) -> None:
    """Binary little-endian format: header (magic "SSEM", version, dim,
    count), then per record a u16 id length, the UTF-8 id, and dim float32s."""
    ids = sorted(store.vectors)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(EMBEDDING_MAGIC, EMBEDDING_VERSION, store.dim, len(ids)))
        for doc_id in ids:
            raw = doc_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValueError(f"document id too long to serialize: {doc_id[:32]!r}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(store.vectors[doc_id].astype("<f4").tobytes())


def load_embeddings(path) -> EmbeddingStore:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise TruncatedFile("embedding file shorter than its header")
        magic, version, dim, count = _HEADER.unpack(header)
        if magic != EMBEDDING_MAGIC:
            raise BadMagic(f"not an embedding file (magic {magic!r})")
        if version != EMBEDDING_VERSION:
            raise VersionMismatch(f"embedding format version {version} not supported")
        if dim < 1:
            raise CorruptFile("embedding dimension must be positive")
        store = EmbeddingStore(dim=dim)
        for _ in range(count):
            len_bytes = fh.read(2)
            if len(len_bytes) < 2:
                raise TruncatedFile("record count is smaller than the header claims")
            (id_len,) = struct.unpack("<H", len_bytes)
            raw_id = fh.read(id_len)
            vec_bytes = fh.read(4 * dim)
            if len(raw_id) < id_len or len(vec_bytes) < 4 * dim:
                raise TruncatedFile("record count is smaller than the header claims")
            doc_id = raw_id.decode("utf-8")
            if doc_id in store:
                raise CorruptFile(f"duplicate document id {doc_id!r}")
            vec = np.frombuffer(vec_bytes, dtype="<f4").astype(np.float64)
            store.add(doc_id, vec)
        if fh.read(1):
            raise CorruptFile("trailing bytes after the last record")
    return store


def save_embeddings_text(store: EmbeddingStore, path) -> None:
    """Debug-friendly variant: one line per id, tab, space-separated floats
    (float32 values printed exactly)."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in sorted(store.vectors):
            vals = " ".join(repr(float(v)) for v in store.vectors[doc_id].astype("<f4"))
            fh.write(f"{doc_id}\t{vals}\n")


def load_embeddings_text(path) -> EmbeddingStore:
    store: EmbeddingStore | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc_id, vals = line.rstrip("\n").split("\t", 1)
                vec = np.array([float(v) for v in vals.split()])
            except ValueError as exc:
                raise ParseError(str(exc), path=str(path), line=lineno) from exc
            if store is None:
                store = EmbeddingStore(dim=len(vec))
            store.add(doc_id, vec)
    if store is None:
        raise ParseError("embedding text file holds no records", path=str(path))
    return store


# ---------------------------------------------------------------------------
# Model bundles


def _bundle_payload(bundle: ModelBundle) -> dict:
    net = bundle.creation_net
    return {
        "format_version": bundle.format_version,
        "weights": [float(v) for v in bundle.weights],
        "feature_mask": [bool(v) for v in bundle.feature_mask],
        "sim_params": {"mu": bundle.sim_params.mu, "sigma": bundle.sim_params.sigma},
        "embedding_dim": bundle.embedding_dim,
        "creation_net": {
            "w1": [[float(v) for v in row] for row in net.w1],
            "b1": [float(v) for v in net.b1],
            "w2": [float(v) for v in net.w2],
            "b2": float(net.b2),
        },
    }


def serialize_bundle(bundle: ModelBundle) -> bytes:
    """Checksummed canonical-JSON encoding: sha256 hex line, payload line."""
    payload = json.dumps(_bundle_payload(bundle), sort_keys=True,
                         separators=(",", ":")).encode("utf-8")
    checksum = hashlib.sha256(payload).hexdigest()
    return checksum.encode("ascii") + b"\n" + payload + b"\n"


def deserialize_bundle(blob: bytes) -> ModelBundle:
    parts = blob.split(b"\n")
    if len(parts) < 2 or not parts[0]:
        raise CorruptFile("bundle file is missing its checksum line")
    checksum, payload = parts[0], parts[1]
    try:
        data = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"bundle payload is not valid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise CorruptFile("bundle payload must be a JSON object")
    version = data.get("format_version")
    if version != BUNDLE_FORMAT_VERSION:
        raise VersionMismatch(
            f"bundle format version {version!r} (supported: {BUNDLE_FORMAT_VERSION})"
        )
    if hashlib.sha256(payload).hexdigest().encode("ascii") != checksum:
        raise CorruptFile("bundle checksum does not match its payload")
    try:
        net_data = data["creation_net"]
        net = CreationNet(
            w1=np.array(net_data["w1"], dtype=np.float64),
            b1=np.array(net_data["b1"], dtype=np.float64),
            w2=np.array(net_data["w2"], dtype=np.float64),
            b2=float(net_data["b2"]),
        )
        bundle = ModelBundle(
            weights=np.array(data["weights"], dtype=np.float64),
            creation_net=net,
            sim_params=SimilarityParams(
                mu=float(data["sim_params"]["mu"]),
                sigma=float(data["sim_params"]["sigma"]),
            ),
            embedding_dim=int(data["embedding_dim"]),
            feature_mask=tuple(bool(v) for v in data["feature_mask"]),
            format_version=int(version),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"bundle payload is malformed: {exc}") from exc
    if len(bundle.feature_mask) != N_FEATURES:
        raise CorruptFile("bundle feature mask has the wrong length")
    return bundle


def save_bundle(bundle: ModelBundle, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_bundle(bundle))


def load_bundle(path) -> ModelBundle:
    with open(path, "rb") as fh:
        return deserialize_bundle(fh.read())


# ---------------------------------------------------------------------------
# TF-IDF tables


def save_tfidf_models(models: Mapping[Unit, TfidfModel], path) -> None:
    """JSON: {unit: {"doc_count": N, "idf": {term: idf}}}."""
    data = {}
    for unit, model in models.items():
        inv = sorted(model.vocabulary, key=model.vocabulary.get)
        data[unit.value] = {
            "doc_count": model.doc_count,
            "idf": {term: float(model.idf[model.vocabulary[term]]) for term in inv},
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_tfidf_models(path) -> dict[Unit, TfidfModel]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON: {exc.msg}", path=str(path)) from exc
    models: dict[Unit, TfidfModel] = {}
    for unit in Unit:
        entry = data.get(unit.value)
        if entry is None:
            raise MissingField(f"TF-IDF file lacks unit {unit.value!r}", path=str(path))
        terms = sorted(entry["idf"])
        vocabulary = {t: i for i, t in enumerate(terms)}
        idf = np.array([float(entry["idf"][t]) for t in terms])
        models[unit] = TfidfModel(
            unit=unit, vocabulary=vocabulary, idf=idf,
            doc_count=max(int(entry.get("doc_count", 1)), 1),
        )
    return models


# ---------------------------------------------------------------------------
# Config files


def read_config(path) -> dict[str, str]:
    """Parse a flat ``key = value`` text file; '#' starts a comment."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ParseError("expected 'key = value'", path=str(path), line=lineno)
            key, value = text.split("=", 1)
            key = key.strip()
            if not key:
                raise ParseError("empty config key", path=str(path), line=lineno)
            out[key] = value.strip()
    return out
