import hashlib

import pytest

from mirage import BlobStore
from mirage.errors import BlobNotFound, EmptyBlob


@pytest.fixture
def blobs(tmp_path):
    return BlobStore(tmp_path / "blobs")


def test_id_is_sha256_hex(blobs):
    data = b"some png bytes"
    assert blobs.put(data) == hashlib.sha256(data).hexdigest()


def test_same_bytes_same_id_stored_once(blobs, tmp_path):
    data = b"\x89PNG..."
    first = blobs.put(data)
    second = blobs.put(data)
    assert first == second
    files = [p for p in (tmp_path / "blobs").iterdir() if not p.name.startswith(".")]
    assert len(files) == 1


def test_distinct_bytes_distinct_ids(blobs):
    assert blobs.put(b"one") != blobs.put(b"two")


def test_get_roundtrip_with_media_type(blobs):
    blob_id = blobs.put(b"jpegish", media_type="image/jpeg")
    data, media_type = blobs.get(blob_id)
    assert data == b"jpegish"
    assert media_type == "image/jpeg"


def test_unknown_media_type_falls_back(blobs):
    blob_id = blobs.put(b"mystery", media_type="application/x-widget")
    _, media_type = blobs.get(blob_id)
    assert media_type == "application/octet-stream"


def test_unknown_id(blobs):
    with pytest.raises(BlobNotFound):
        blobs.get("0" * 64)


def test_contains(blobs):
    blob_id = blobs.put(b"present")
    assert blob_id in blobs
    assert "f" * 64 not in blobs


def test_empty_blob_rejected(blobs):
    with pytest.raises(EmptyBlob):
        blobs.put(b"")
