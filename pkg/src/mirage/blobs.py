"""Content-addressed blob store for images.

Blob ids are the SHA-256 hex digest of the content, so identical bytes are
stored once and a fetched blob can be verified against its id. Writes go
through a temp file + atomic rename, which makes concurrent writers safe:
either writer produces the same bytes at the same path.
"""

from __future__ import annotations

import hashlib
import os
from pathlib import Path

from .errors import BlobNotFound, EmptyBlob

_EXT_FOR_TYPE = {
    "image/png": ".png",
    "image/jpeg": ".jpg",
    "image/gif": ".gif",
    "image/webp": ".webp",
}
_TYPE_FOR_EXT = {ext: mt for mt, ext in _EXT_FOR_TYPE.items()}
_DEFAULT_EXT = ".bin"
_DEFAULT_TYPE = "application/octet-stream"


def blob_id_for(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class BlobStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def put(self, data: bytes, media_type: str = "image/png") -> str:
        """Store bytes, returning their content-addressed id."""
        if not data:
            raise EmptyBlob("refusing to store an empty blob")
        blob_id = blob_id_for(data)
        ext = _EXT_FOR_TYPE.get(media_type, _DEFAULT_EXT)
        path = self.root / f"{blob_id}{ext}"
        if not path.exists():
            tmp = self.root / f".{blob_id}{ext}.{os.getpid()}.tmp"
            tmp.write_bytes(data)
            os.replace(tmp, path)
        return blob_id

    def _find(self, blob_id: str) -> Path | None:
        for ext in [*_TYPE_FOR_EXT, _DEFAULT_EXT]:
            candidate = self.root / f"{blob_id}{ext}"
            if candidate.is_file():
                return candidate
        return None

    def get(self, blob_id: str) -> tuple[bytes, str]:
        """Return (bytes, media_type). Raises BlobNotFound."""
        path = self._find(blob_id)
        if path is None:
            raise BlobNotFound(f"no blob with id {blob_id!r}")
        return path.read_bytes(), _TYPE_FOR_EXT.get(path.suffix, _DEFAULT_TYPE)

    def __contains__(self, blob_id: str) -> bool:
        return self._find(blob_id) is not None
