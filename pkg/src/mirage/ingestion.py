"""Catalog ingestion: parse records, batch-embed captions and images, and
assemble a searchable store.

Catalogs are CSV (header ``id,caption,image_path[,modality]``) or JSON Lines
with the same fields. Store row order always equals catalog record order, so
rebuilding from the same catalog with a deterministic backend yields
byte-identical vector files.

Images are copied into the blob store at ingest time and each entry's
``image_ref`` is rewritten to ``blob:<sha256>``, letting the service serve
images without touching the original paths (which are kept in the build
report).
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

from .blobs import BlobStore
from .errors import (
    AllRecordsSkipped,
    DuplicateId,
    IngestAborted,
    MirageError,
    MissingField,
    ParseError,
)
from .store import CatalogEntry, VectorStore

DEFAULT_BATCH_SIZE = 32

_MEDIA_FOR_SUFFIX = {
    ".png": "image/png",
    ".jpg": "image/jpeg",
    ".jpeg": "image/jpeg",
    ".gif": "image/gif",
    ".webp": "image/webp",
}


@dataclass
class CatalogRecord:
    id: str
    caption: str
    image_path: str
    modality: str = "unknown"
    line: int = 0


@dataclass
class BuildReport:
    """What happened during a build; written next to the store as JSON.

    ``total_records`` counts the records actually processed (after ``limit``),
    so built + len(skipped) == total_records. ``catalog_records`` is the full
    catalog size before subsetting.
    """

    catalog_records: int = 0
    total_records: int = 0
    built: int = 0
    skipped: list[dict] = field(default_factory=list)
    limit: int | None = None
    dim: int | None = None
    elapsed_ms: float = 0.0
    # Original image path per entry id when images were copied into the blob
    # store (the entry's image_ref then points at the blob instead).
    image_sources: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "catalog_records": self.catalog_records,
            "total_records": self.total_records,
            "built": self.built,
            "skipped": self.skipped,
            "limit": self.limit,
            "dim": self.dim,
            "elapsed_ms": self.elapsed_ms,
            "image_sources": self.image_sources,
        }


def _record_from_fields(fields: dict, lineno: int) -> CatalogRecord:
    rec_id = (fields.get("id") or "").strip()
    caption = (fields.get("caption") or "").strip()
    image_path = (fields.get("image_path") or "").strip()
    modality = (fields.get("modality") or "").strip() or "unknown"
    if not rec_id:
        raise MissingField("empty or missing 'id'", line=lineno)
    if not caption:
        raise MissingField("empty or missing 'caption'", line=lineno)
    if not image_path:
        raise MissingField("empty or missing 'image_path'", line=lineno)
    return CatalogRecord(
        id=rec_id, caption=caption, image_path=image_path, modality=modality, line=lineno
    )


def _looks_like_jsonl(path: Path) -> bool:
    if path.suffix.lower() in (".jsonl", ".ndjson", ".json"):
        return True
    if path.suffix.lower() == ".csv":
        return False
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                return line.lstrip().startswith("{")
    return False


def parse_catalog(path: str | Path) -> list[CatalogRecord]:
    """Read a catalog file into records, rejecting duplicates.

    Raises ParseError / MissingField with 1-based line numbers, and
    DuplicateId naming both offending lines.
    """
    path = Path(path)
    records = (_parse_jsonl if _looks_like_jsonl(path) else _parse_csv)(path)
    seen: dict[str, int] = {}
    for rec in records:
        if rec.id in seen:
            raise DuplicateId(
                rec.id,
                f"duplicate id {rec.id!r} on lines {seen[rec.id]} and {rec.line}",
            )
        seen[rec.id] = rec.line
    return records


def _parse_jsonl(path: Path) -> list[CatalogRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(obj, dict):
                raise ParseError("each line must be a JSON object", line=lineno)
            records.append(_record_from_fields(obj, lineno))
    return records


def _parse_csv(path: Path) -> list[CatalogRecord]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("catalog is empty", line=1) from None
        header = [h.strip() for h in header]
        required = ("id", "caption", "image_path")
        for col in required:
            if col not in header:
                raise MissingField(f"header lacks required column {col!r}", line=1)
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) > len(header):
                raise ParseError(
                    f"{len(row)} cells but {len(header)} header columns", line=lineno
                )
            fields = dict(zip(header, row))
            records.append(_record_from_fields(fields, lineno))
    return records


def _batched(items: list, size: int):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def build_store(
    records: list[CatalogRecord],
    backend,
    batch_size: int = DEFAULT_BATCH_SIZE,
    on_missing_image: str = "skip",
    base_dir: str | Path | None = None,
    blob_store: BlobStore | None = None,
    limit: int | None = None,
) -> tuple[VectorStore, BuildReport]:
    """Embed records and assemble the store.

    ``on_missing_image`` chooses between skipping unreadable images (recorded
    in the report) and failing the whole build. Backend failures abort with
    an IngestAborted carrying the partial report. Raises AllRecordsSkipped
    when nothing survives.
    """
    if on_missing_image not in ("skip", "fail"):
        raise ValueError(f"on_missing_image must be 'skip' or 'fail', got {on_missing_image!r}")
    if not records:
        raise AllRecordsSkipped("no catalog records to ingest")
    started = time.perf_counter()
    base = Path(base_dir) if base_dir is not None else None
    catalog_size = len(records)
    if limit is not None:
        records = records[:limit]
    report = BuildReport(
        catalog_records=catalog_size, total_records=len(records), limit=limit
    )

    # Load image bytes first so skips happen before any backend traffic.
    usable: list[tuple[CatalogRecord, bytes]] = []
    for rec in records:
        img_path = Path(rec.image_path)
        if base is not None and not img_path.is_absolute():
            img_path = base / img_path
        try:
            data = img_path.read_bytes()
            if not data:
                raise OSError("file is empty")
        except OSError as exc:
            if on_missing_image == "fail":
                raise IngestAborted(
                    f"record {rec.id!r}: cannot read image {rec.image_path!r}: {exc}",
                    report=report,
                ) from exc
            report.skipped.append(
                {"id": rec.id, "line": rec.line, "reason": f"unreadable image: {exc}"}
            )
            continue
        usable.append((rec, data))
    if not usable:
        raise AllRecordsSkipped("every record was skipped; nothing to embed")

    store: VectorStore | None = None
    try:
        for batch in _batched(usable, batch_size):
            caption_vecs = backend.encode_text([rec.caption for rec, _ in batch])
            image_vecs = backend.encode_image([data for _, data in batch])
            if store is None:
                report.dim = len(caption_vecs[0])
                store = VectorStore(dim=report.dim)
            for (rec, data), cap_vec, img_vec in zip(batch, caption_vecs, image_vecs):
                image_ref = rec.image_path
                if blob_store is not None:
                    media = _MEDIA_FOR_SUFFIX.get(
                        Path(rec.image_path).suffix.lower(), "application/octet-stream"
                    )
                    image_ref = f"blob:{blob_store.put(data, media)}"
                    report.image_sources[rec.id] = rec.image_path
                store.add_entry(
                    CatalogEntry(
                        id=rec.id,
                        caption=rec.caption,
                        image_ref=image_ref,
                        modality=rec.modality,
                        caption_embedding=cap_vec,
                        image_embedding=img_vec,
                    )
                )
                report.built += 1
    except MirageError as exc:
        report.elapsed_ms = round((time.perf_counter() - started) * 1000.0, 3)
        raise IngestAborted(f"backend failed during embedding: {exc}", report=report) from exc

    report.elapsed_ms = round((time.perf_counter() - started) * 1000.0, 3)
    return store, report
