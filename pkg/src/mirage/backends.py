"""Clients for the three external inference services, plus a deterministic
mock for hermetic tests.

The engine never loads model weights. Encoding, caption enrichment, and
image synthesis live behind a JSON-over-HTTP protocol (all POST, UTF-8
bodies):

    POST {encoder_url}/encode/text    {"texts": [...]}      -> {"dim": D, "embeddings": [[...], ...]}
    POST {encoder_url}/encode/image   {"images_b64": [...]} -> same shape
    POST {enricher_url}/enrich        {"query": ..., "context": [...]} -> {"caption": ...}
    POST {synthesizer_url}/generate   {"prompt": ...}       -> {"image_b64": ..., "media_type": "image/png"}

Non-2xx responses carry ``{"error": "..."}``.

The mock backend is bit-deterministic across runs and platforms: embeddings
come from integer token hashing followed by a single normalization, and
synthetic images are hand-assembled PNGs seeded by the prompt embedding.
"""

from __future__ import annotations

import base64
import re
import struct
import zlib
from dataclasses import dataclass, field
from typing import Sequence
from urllib.parse import urlparse

import numpy as np
import requests

from .errors import (
    BackendError,
    BackendUnreachable,
    ConfigError,
    DimensionMismatch,
    EmptyBlob,
    EmptyResponse,
    EmptyText,
)

MOCK_DIM = 64

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_U64 = (1 << 64) - 1

# Unicode alphanumeric runs (\w minus the underscore).
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

# Suggested prompt for a real enricher service. The wire protocol only
# carries (query, context); how the service phrases its LLM prompt is its
# own configuration, and this default is what the bundled docs recommend.
DEFAULT_ENRICHMENT_TEMPLATE = (
    "Context captions:\n{captions}\n"
    "Using the context, write one concise medical description of: {query}"
)


@dataclass
class BackendConfig:
    """Connection settings for the three services.

    In mock mode the URLs are ignored. ``retries`` counts additional
    attempts after a transport failure (connection refused / timeout).
    """

    mode: str = "mock"
    encoder_url: str = ""
    enricher_url: str = ""
    synthesizer_url: str = ""
    timeout: float = 120.0
    retries: int = 1
    expect_dim: int | None = None
    enrichment_template: str = DEFAULT_ENRICHMENT_TEMPLATE

    def __post_init__(self):
        if self.mode not in ("remote", "mock"):
            raise ConfigError(f"backend mode must be 'remote' or 'mock', got {self.mode!r}")
        if self.mode == "remote":
            for name in ("encoder_url", "enricher_url", "synthesizer_url"):
                url = getattr(self, name)
                parsed = urlparse(url)
                if parsed.scheme not in ("http", "https") or not parsed.netloc:
                    raise ConfigError(f"{name} is not a well-formed URL: {url!r}")
        if self.timeout <= 0:
            raise ConfigError(f"timeout must be positive, got {self.timeout}")
        if self.retries < 0:
            raise ConfigError(f"retries must be >= 0, got {self.retries}")


@dataclass(frozen=True)
class EnrichmentRequest:
    """Query plus the stage-1 top-k captions used as context."""

    query: str
    context_captions: tuple[str, ...]

    def __post_init__(self):
        if not self.query or not self.query.strip():
            raise EmptyText("enrichment query empty")
        if not self.context_captions:
            raise ValueError("enrichment requires at least one context caption")


# --- deterministic mock embedding (normative test encoder) ------------------

def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _U64
    return h


def _tokenize_text(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _tokenize_bytes(blob: bytes) -> list[str]:
    # Consecutive 4-byte chunks rendered as (lowercase) hex; the trailing
    # chunk may be shorter.
    return [blob[i : i + 4].hex() for i in range(0, len(blob), 4)]


def mock_embed(text_or_bytes: str | bytes) -> np.ndarray:
    """Hash-bucket embedding used by the mock backend.

    Tokens (lowercased alphanumeric runs for text, 4-byte hex chunks for
    bytes) are FNV-1a hashed; each token adds +1 or -1 (sign from the top
    hash bit) at index ``hash mod 64``. The accumulator is L2-normalized.
    Token order does not matter, so texts with the same bag of tokens map to
    the same vector.
    """
    if isinstance(text_or_bytes, bytes):
        if not text_or_bytes:
            raise EmptyBlob("cannot embed an empty blob")
        tokens = _tokenize_bytes(text_or_bytes)
    else:
        tokens = _tokenize_text(text_or_bytes)
    if not tokens:
        raise EmptyText("input produced no tokens")
    acc = np.zeros(MOCK_DIM, dtype=np.float64)
    for token in tokens:
        h = fnv1a64(token.encode("utf-8"))
        sign = 1.0 if (h >> 63) == 0 else -1.0
        acc[h % MOCK_DIM] += sign
    norm = float(np.linalg.norm(acc))
    if norm == 0.0:
        # Opposite-signed tokens landed on the same buckets and cancelled.
        raise EmptyText("tokens cancelled to a zero vector")
    return acc / norm


# --- minimal PNG writer (mock synthesizer output) ----------------------------

def _png_chunk(tag: bytes, payload: bytes) -> bytes:
    return (
        struct.pack(">I", len(payload))
        + tag
        + payload
        + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF)
    )


def _png_gray(pixels: np.ndarray) -> bytes:
    """Encode a (h, w) uint8 array as an 8-bit grayscale PNG."""
    height, width = pixels.shape
    ihdr = struct.pack(">IIBBBBB", width, height, 8, 0, 0, 0, 0)
    raw = b"".join(b"\x00" + row.tobytes() for row in pixels)
    return (
        b"\x89PNG\r\n\x1a\n"
        + _png_chunk(b"IHDR", ihdr)
        + _png_chunk(b"IDAT", zlib.compress(raw, 9))
        + _png_chunk(b"IEND", b"")
    )


def _mock_png(prompt: str) -> bytes:
    """64x64 diagonal-stripe PNG whose pattern is the prompt's embedding."""
    vec = mock_embed(prompt)
    shades = np.round((vec + 1.0) * 127.5).astype(np.uint8)
    rows = np.empty((MOCK_DIM, MOCK_DIM), dtype=np.uint8)
    for y in range(MOCK_DIM):
        rows[y] = np.roll(shades, y)
    return _png_gray(rows)


# --- backend clients ---------------------------------------------------------

class MockBackend:
    """Fully deterministic in-process backend. Pure; safe everywhere."""

    mode = "mock"
    dim = MOCK_DIM

    def encode_text(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            raise EmptyText("batch must contain at least one text")
        for t in texts:
            if not t or not t.strip():
                raise EmptyText("text empty after trimming")
        return [mock_embed(t) for t in texts]

    def encode_image(self, blobs: Sequence[bytes]) -> list[np.ndarray]:
        if not blobs:
            raise EmptyBlob("batch must contain at least one blob")
        for b in blobs:
            if not b:
                raise EmptyBlob("zero-length blob")
        return [mock_embed(b) for b in blobs]

    def enrich_caption(self, request: EnrichmentRequest) -> str:
        return (
            f"Enriched: {request.query} | context: "
            + "; ".join(request.context_captions)
        )

    def synthesize_image(self, prompt: str) -> tuple[bytes, str]:
        if not prompt or not prompt.strip():
            raise EmptyText("prompt empty after trimming")
        return _mock_png(prompt), "image/png"


class RemoteBackend:
    """HTTP client for the wire protocol at the top of this module.

    Each call is independent; a shared requests.Session provides connection
    pooling and is safe for concurrent use.
    """

    mode = "remote"

    def __init__(self, config: BackendConfig):
        if config.mode != "remote":
            raise ConfigError("RemoteBackend requires a config with mode='remote'")
        self.config = config
        self._session = requests.Session()

    def _post(self, url: str, payload: dict) -> dict:
        last_exc: Exception | None = None
        for _attempt in range(self.config.retries + 1):
            try:
                resp = self._session.post(url, json=payload, timeout=self.config.timeout)
            except requests.RequestException as exc:
                last_exc = exc
                continue
            if not 200 <= resp.status_code < 300:
                try:
                    message = resp.json().get("error", resp.text)
                except ValueError:
                    message = resp.text
                raise BackendError(
                    f"{url} -> {resp.status_code}: {message}", status=resp.status_code
                )
            try:
                return resp.json()
            except ValueError as exc:
                raise BackendError(f"{url}: response is not JSON: {exc}") from exc
        raise BackendUnreachable(f"{url}: {last_exc}")

    def _parse_embeddings(self, data: dict, batch_size: int) -> list[np.ndarray]:
        try:
            dim = int(data["dim"])
            rows = data["embeddings"]
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendError(f"malformed encoder response: {exc}") from exc
        if len(rows) != batch_size:
            raise BackendError(
                f"encoder returned {len(rows)} embeddings for a batch of {batch_size}"
            )
        if self.config.expect_dim is not None and dim != self.config.expect_dim:
            raise DimensionMismatch(
                f"encoder dim {dim}, expected {self.config.expect_dim}"
            )
        out = []
        for row in rows:
            vec = np.asarray(row, dtype=np.float64)
            if vec.ndim != 1 or vec.shape[0] != dim:
                raise DimensionMismatch(
                    f"embedding has shape {vec.shape}, declared dim {dim}"
                )
            norm = float(np.linalg.norm(vec))
            off = abs(norm - 1.0)
            if off > 1e-3:
                raise BackendError(f"embedding norm {norm:.6f} outside tolerance 1e-3")
            if off > 1e-6:
                vec = vec / norm
            out.append(vec)
        return out

    def encode_text(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            raise EmptyText("batch must contain at least one text")
        for t in texts:
            if not t or not t.strip():
                raise EmptyText("text empty after trimming")
        data = self._post(f"{self.config.encoder_url}/encode/text", {"texts": list(texts)})
        return self._parse_embeddings(data, len(texts))

    def encode_image(self, blobs: Sequence[bytes]) -> list[np.ndarray]:
        if not blobs:
            raise EmptyBlob("batch must contain at least one blob")
        for b in blobs:
            if not b:
                raise EmptyBlob("zero-length blob")
        payload = {"images_b64": [base64.b64encode(b).decode("ascii") for b in blobs]}
        data = self._post(f"{self.config.encoder_url}/encode/image", payload)
        return self._parse_embeddings(data, len(blobs))

    def enrich_caption(self, request: EnrichmentRequest) -> str:
        data = self._post(
            f"{self.config.enricher_url}/enrich",
            {"query": request.query, "context": list(request.context_captions)},
        )
        caption = data.get("caption")
        if not caption or not str(caption).strip():
            raise EmptyResponse("enricher returned an empty caption")
        return str(caption)

    def synthesize_image(self, prompt: str) -> tuple[bytes, str]:
        if not prompt or not prompt.strip():
            raise EmptyText("prompt empty after trimming")
        data = self._post(f"{self.config.synthesizer_url}/generate", {"prompt": prompt})
        b64 = data.get("image_b64")
        if not b64:
            raise EmptyResponse("synthesizer returned no image")
        try:
            blob = base64.b64decode(b64)
        except (ValueError, TypeError) as exc:
            raise BackendError(f"synthesizer image is not valid base64: {exc}") from exc
        if not blob:
            raise EmptyResponse("synthesizer returned zero bytes")
        return blob, str(data.get("media_type", "image/png"))


def make_backend(config: BackendConfig) -> MockBackend | RemoteBackend:
    """Instantiate the backend named by ``config.mode``."""
    if config.mode == "mock":
        return MockBackend()
    return RemoteBackend(config)
