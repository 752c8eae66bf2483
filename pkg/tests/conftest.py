"""Shared fixtures: mock backend, store builders, and a stub HTTP backend."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
import pytest

from mirage import CatalogEntry, MockBackend, VectorStore, mock_embed

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def backend():
    return MockBackend()


def make_entry(entry_id: str, caption: str, image_embedding=None) -> CatalogEntry:
    """Entry whose image embedding defaults to its caption's text embedding,
    so caption-token overlap drives image retrieval in fixtures."""
    cap_vec = mock_embed(caption)
    return CatalogEntry(
        id=entry_id,
        caption=caption,
        image_ref=f"{entry_id}.png",
        modality="X-ray",
        caption_embedding=cap_vec,
        image_embedding=cap_vec if image_embedding is None else image_embedding,
    )


def store_from_captions(captions: dict[str, str]) -> VectorStore:
    store = VectorStore(dim=64)
    for entry_id, caption in captions.items():
        store.add_entry(make_entry(entry_id, caption))
    return store


@pytest.fixture
def tiny_store():
    return store_from_captions(
        {
            "rds": "neonatal rds chest",
            "mas": "neonatal mas chest",
            "knee": "knee mri ligament tear",
        }
    )


def random_unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    rows = rng.normal(size=(n, dim))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return rows


def random_store(rng: np.random.Generator, n: int, dim: int, duplicate_rate: float = 0.0):
    """Store of n random unit vectors; some image rows may duplicate earlier
    rows to force exact similarity ties."""
    store = VectorStore(dim=dim)
    rows = random_unit_rows(rng, n, dim)
    for i in range(n):
        if i and duplicate_rate and rng.random() < duplicate_rate:
            rows[i] = rows[rng.integers(0, i)]
        store.add_entry(
            CatalogEntry(
                id=f"id{i:04d}",
                caption=f"caption {i}",
                image_ref=f"img{i}.png",
                modality="CT",
                caption_embedding=rows[i],
                image_embedding=rows[i],
            )
        )
    return store


# --- independent brute-force oracle ------------------------------------------

def brute_force_top_k(store: VectorStore, query, k: int, target: str = "image"):
    """Per-entry linear scan, kept independent of VectorStore.top_k:
    normalizes with math on python floats and dots row by row."""
    import math

    q = np.asarray(query, dtype=np.float64)
    norm = math.sqrt(float(sum(x * x for x in q)))
    q = q / norm
    scored = []
    for entry_id in store.ids:
        entry = store.get(entry_id)
        row = entry.image_embedding if target == "image" else entry.caption_embedding
        sim = float(np.dot(row.astype(np.float64), q))
        sim = min(1.0, max(-1.0, sim))
        scored.append((-sim, entry_id))
    scored.sort()
    return [
        (entry_id, -neg_sim, rank)
        for rank, (neg_sim, entry_id) in enumerate(scored[:k], start=1)
    ]


# --- stub HTTP backend ---------------------------------------------------------

class _StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        try:
            body = json.loads(self.rfile.read(length) or b"{}")
        except json.JSONDecodeError:
            body = {}
        self.server.requests.append((self.path, body))
        route = self.server.routes.get(self.path)
        if self.server.delay:
            time.sleep(self.server.delay)
        if route is None:
            payload, status = {"error": f"no stub route for {self.path}"}, 404
        else:
            result = route(body) if callable(route) else route
            status, payload = result
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


class StubServer:
    """Configurable JSON stub served over a real socket."""

    def __init__(self):
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
        self._httpd.routes = {}
        self._httpd.requests = []
        self._httpd.delay = 0.0
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address
        return f"http://{host}:{port}"

    @property
    def requests(self):
        return self._httpd.requests

    def route(self, path: str, payload, status: int = 200):
        self._httpd.routes[path] = payload if callable(payload) else (status, payload)

    def set_delay(self, seconds: float):
        self._httpd.delay = seconds

    def close(self):
        self._httpd.shutdown()
        self._httpd.server_close()


@pytest.fixture
def stub_server():
    server = StubServer()
    yield server
    server.close()
