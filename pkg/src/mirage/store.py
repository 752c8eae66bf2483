"""In-memory catalog of unit-norm embeddings with exact top-k cosine search
and a bit-exact on-disk format.

A store is persisted as three files:

- ``meta.jsonl``      one JSON object per entry, in row order:
                      ``{"id": ..., "caption": ..., "image_ref": ..., "modality": ...}``
- ``captions.mvec``   caption embeddings (kind byte 0)
- ``images.mvec``     image embeddings (kind byte 1)

``.mvec`` layout (all integers little-endian):

    bytes 0-3    magic  ``4D 49 52 47``  ("MIRG")
    bytes 4-5    format version, u16, currently 1
    byte  6      kind, u8: 0 = caption embeddings, 1 = image embeddings
    byte  7      reserved, 0
    bytes 8-11   dim, u32
    bytes 12-19  count, u64
    rest         count x dim IEEE-754 binary32 values, row-major,
                 rows in metadata order

Vectors are quantized to float32 when an entry is added; save/load therefore
round-trips every value at the binary level. Search is an exact linear scan:
at the scale this engine targets (a few percent of an 81k-image catalog) a
brute-force matmul is fast and trivially verifiable against an oracle.

Concurrency: any number of readers may call ``top_k``/``get`` concurrently;
``add_entry`` and ``load`` require exclusive access (single-writer contract,
no internal locking or background threads).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import vectors
from .errors import (
    BadMagic,
    CorruptLength,
    DimensionMismatch,
    DuplicateId,
    EmptyStore,
    EntryNotFound,
    InvalidK,
    KindMismatch,
    MetaVecMismatch,
    NonFiniteInput,
    VersionUnsupported,
    ZeroVector,
)

MAGIC = b"MIRG"
FORMAT_VERSION = 1
KIND_CAPTION = 0
KIND_IMAGE = 1

_HEADER = struct.Struct("<4sHBBIQ")  # magic, version, kind, reserved, dim, count

DEFAULT_DIM = 768

# Canonical file names used by the directory-level save/load helpers.
META_FILENAME = "meta.jsonl"
CAPTION_VEC_FILENAME = "captions.mvec"
IMAGE_VEC_FILENAME = "images.mvec"


@dataclass(frozen=True)
class SearchHit:
    """One ranked search result. ``rank`` is 1-based."""

    entry_id: str
    similarity: float
    rank: int


@dataclass
class CatalogEntry:
    """One catalog record plus its two embeddings.

    Embeddings are stored as float32 unit vectors; pass any finite
    near-unit vector and the store validates/quantizes on insert.
    """

    id: str
    caption: str
    image_ref: str
    modality: str = "unknown"
    caption_embedding: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    image_embedding: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]


def _quantize_unit(vec, dim: int) -> np.ndarray:
    """Validate a unit vector and quantize it to float32 for storage."""
    arr = vectors.as_array(vec)
    if arr.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("embedding contains NaN or Inf")
    if not vectors.is_unit(arr):
        # Not pre-normalized; normalize rather than reject.
        arr = vectors.normalize(arr)
    out = arr.astype("<f4")
    if not vectors.is_unit(out):
        raise ZeroVector("embedding lost unit norm during float32 quantization")
    return out


class VectorStore:
    """Searchable store of catalog entries with caption + image embeddings."""

    def __init__(self, dim: int = DEFAULT_DIM):
        if dim < 1:
            raise DimensionMismatch(f"dimension must be >= 1, got {dim}")
        self.dim = int(dim)
        self._ids: list[str] = []
        self._index: dict[str, int] = {}
        self._meta: list[dict] = []
        self._caption_rows: list[np.ndarray] = []
        self._image_rows: list[np.ndarray] = []
        self._matrix_cache: dict[str, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, entry_id: str) -> bool:
        return entry_id in self._index

    @property
    def ids(self) -> list[str]:
        return list(self._ids)

    def add_entry(self, entry: CatalogEntry) -> None:
        """Append an entry. Raises DuplicateId / DimensionMismatch."""
        if entry.id in self._index:
            raise DuplicateId(entry.id)
        cap = _quantize_unit(entry.caption_embedding, self.dim)
        img = _quantize_unit(entry.image_embedding, self.dim)
        self._index[entry.id] = len(self._ids)
        self._ids.append(entry.id)
        self._meta.append(
            {
                "id": entry.id,
                "caption": entry.caption,
                "image_ref": entry.image_ref,
                "modality": entry.modality,
            }
        )
        self._caption_rows.append(cap)
        self._image_rows.append(img)
        self._matrix_cache.clear()

    def get(self, entry_id: str) -> CatalogEntry:
        """Return the entry by id. Raises EntryNotFound."""
        try:
            row = self._index[entry_id]
        except KeyError:
            raise EntryNotFound(f"no entry with id {entry_id!r}") from None
        meta = self._meta[row]
        return CatalogEntry(
            id=meta["id"],
            caption=meta["caption"],
            image_ref=meta["image_ref"],
            modality=meta["modality"],
            caption_embedding=self._caption_rows[row].copy(),
            image_embedding=self._image_rows[row].copy(),
        )

    def _matrix(self, target: str) -> np.ndarray:
        if target not in ("image", "caption"):
            raise ValueError(f"target must be 'image' or 'caption', got {target!r}")
        cached = self._matrix_cache.get(target)
        if cached is None or cached.shape[0] != len(self._ids):
            rows = self._image_rows if target == "image" else self._caption_rows
            cached = np.vstack(rows) if rows else np.empty((0, self.dim), dtype="<f4")
            self._matrix_cache[target] = cached
        return cached

    def top_k(self, query, k: int, target: str = "image") -> list[SearchHit]:
        """Exact top-k cosine search against the chosen embedding matrix.

        Equivalent to a full scan sorted by (-similarity, id): similarity ties
        are broken by ascending entry id, so results are deterministic. The
        query is normalized internally, making the ranking invariant under
        positive scaling of the query. Returns min(k, len(store)) hits.
        """
        if not self._ids:
            raise EmptyStore("cannot search an empty store")
        if not isinstance(k, int) or k < 1:
            raise InvalidK(f"k must be a positive integer, got {k!r}")
        q = vectors.normalize(query, dim=self.dim)
        # Row-wise dots instead of one matmul: BLAS GEMV accumulation can
        # differ per row position (alignment), so bit-identical rows could
        # score an ulp apart and break deterministic tie ordering.
        matrix = self._matrix(target)
        sims = np.fromiter(
            (np.dot(row.astype(np.float64), q) for row in matrix),
            dtype=np.float64,
            count=matrix.shape[0],
        )
        sims = vectors.clamp_similarities(sims)
        order = sorted(range(len(self._ids)), key=lambda i: (-sims[i], self._ids[i]))
        return [
            SearchHit(entry_id=self._ids[i], similarity=float(sims[i]), rank=rank)
            for rank, i in enumerate(order[: min(k, len(order))], start=1)
        ]

    # --- persistence --------------------------------------------------------

    def save(self, meta_path, caption_vec_path, image_vec_path) -> None:
        """Write the metadata file and the two .mvec files."""
        cap = self._matrix("caption")
        img = self._matrix("image")
        write_mvec(caption_vec_path, KIND_CAPTION, cap)
        write_mvec(image_vec_path, KIND_IMAGE, img)
        with open(meta_path, "w", encoding="utf-8") as fh:
            for meta in self._meta:
                fh.write(json.dumps(meta, ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, meta_path, caption_vec_path, image_vec_path) -> "VectorStore":
        """Read a store saved by :meth:`save`. Validates the format."""
        cap = read_mvec(caption_vec_path, expect_kind=KIND_CAPTION)
        img = read_mvec(image_vec_path, expect_kind=KIND_IMAGE)
        if cap.shape != img.shape:
            raise MetaVecMismatch(
                f"caption matrix {cap.shape} and image matrix {img.shape} differ"
            )
        metas = []
        with open(meta_path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise MetaVecMismatch(f"metadata line {lineno} unparseable: {exc}") from exc
                metas.append(obj)
        if len(metas) != cap.shape[0]:
            raise MetaVecMismatch(
                f"{len(metas)} metadata rows but {cap.shape[0]} vector rows"
            )
        store = cls(dim=cap.shape[1])
        for row, meta in enumerate(metas):
            entry_id = meta.get("id")
            if not entry_id or entry_id in store._index:
                raise MetaVecMismatch(f"metadata row {row + 1}: missing or duplicate id")
            store._index[entry_id] = row
            store._ids.append(entry_id)
            store._meta.append(
                {
                    "id": entry_id,
                    "caption": meta.get("caption", ""),
                    "image_ref": meta.get("image_ref", ""),
                    "modality": meta.get("modality", "unknown"),
                }
            )
            store._caption_rows.append(cap[row])
            store._image_rows.append(img[row])
        return store

    def save_dir(self, directory) -> None:
        """Save under canonical file names inside ``directory``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        self.save(d / META_FILENAME, d / CAPTION_VEC_FILENAME, d / IMAGE_VEC_FILENAME)

    @classmethod
    def load_dir(cls, directory) -> "VectorStore":
        d = Path(directory)
        return cls.load(d / META_FILENAME, d / CAPTION_VEC_FILENAME, d / IMAGE_VEC_FILENAME)


def write_mvec(path, kind: int, matrix: np.ndarray) -> None:
    """Write one embedding matrix in the .mvec layout described above."""
    if kind not in (KIND_CAPTION, KIND_IMAGE):
        raise KindMismatch(f"unknown kind byte {kind}")
    mat = np.ascontiguousarray(matrix, dtype="<f4")
    count, dim = mat.shape
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, kind, 0, dim, count)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(mat.tobytes())


def read_mvec(path, expect_kind: int | None = None) -> np.ndarray:
    """Read a .mvec file back into a (count, dim) float32 matrix."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise CorruptLength(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, version, kind, _reserved, dim, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionUnsupported(f"{path}: version {version}, supported: {FORMAT_VERSION}")
    if expect_kind is not None and kind != expect_kind:
        raise KindMismatch(f"{path}: kind byte {kind}, expected {expect_kind}")
    if dim < 1:
        raise CorruptLength(f"{path}: dim {dim} declared in header")
    expected = _HEADER.size + count * dim * 4
    if len(data) != expected:
        raise CorruptLength(
            f"{path}: {len(data)} bytes on disk, header declares {expected}"
        )
    if count == 0:
        return np.empty((0, dim), dtype="<f4")
    payload = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    return payload.reshape(count, dim).copy()
