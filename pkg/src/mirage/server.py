"""HTTP front door.

Endpoints:

    POST /api/query   {"text": ..., "k": optional}                -> retrieval result
    POST /api/dual    {"text": ..., "subtract": ..., "add": ..., "k": optional}
    GET  /health
    GET  /api/entries/{id}
    GET  /api/images/{blob_or_entry_id}

Status mapping: 400 malformed body / empty text / missing term, 404 unknown
id, 409 empty store, 422 degenerate query (the concepts cancelled), 503
backend unreachable (body carries the failing stage). The server never
mutates the store; requests run on the framework's worker threads against a
read-only store, and each request gets its work done by one shared pipeline
instance.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .algebra import ConceptQuery
from .backends import make_backend
from .blobs import BlobStore
from .config import ServiceConfig
from .errors import (
    BackendError,
    BackendUnreachable,
    BlobNotFound,
    DegenerateQuery,
    EmptyStore,
    EmptyText,
    EntryNotFound,
    MirageError,
    MissingTerms,
    StageError,
)
from .pipeline import RetrievalPipeline, dual_result_payload, retrieval_result_payload
from .store import VectorStore


def _error_json(status: int, message: str, stage: str | None = None) -> JSONResponse:
    body = {"error": message}
    if stage is not None:
        body["stage"] = stage
    return JSONResponse(body, status_code=status)


def _map_error(exc: MirageError) -> JSONResponse:
    if isinstance(exc, StageError):
        cause = exc.cause
        if isinstance(cause, BackendUnreachable):
            return _error_json(503, str(cause), stage=exc.stage)
        if isinstance(cause, (BackendError, MirageError)):
            return _error_json(502, str(cause), stage=exc.stage)
    if isinstance(exc, EmptyStore):
        return _error_json(409, str(exc))
    if isinstance(exc, DegenerateQuery):
        return _error_json(422, str(exc))
    if isinstance(exc, (EmptyText, MissingTerms)):
        return _error_json(400, str(exc))
    return _error_json(500, str(exc))


async def _json_body(request: Request) -> dict | None:
    try:
        body = json.loads(await request.body())
    except (json.JSONDecodeError, UnicodeDecodeError):
        return None
    return body if isinstance(body, dict) else None


def _text_field(body: dict, name: str) -> str | None:
    value = body.get(name)
    if not isinstance(value, str) or not value.strip():
        return None
    return value


def create_app(
    store: VectorStore,
    backend,
    blob_store: BlobStore | None,
    config: ServiceConfig,
) -> FastAPI:
    app = FastAPI(title="mirage", docs_url=None, redoc_url=None)
    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=config.cors_origins,
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
        )
    pipeline = RetrievalPipeline(
        store, backend, blob_store, default_k=config.default_k
    )

    def _k_from(body: dict) -> int | None:
        """Parsed k, or None for 'invalid'. Missing key falls back to config."""
        if "k" not in body or body["k"] is None:
            return config.default_k
        k = body["k"]
        if isinstance(k, bool) or not isinstance(k, int) or k < 1:
            return None
        return k

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "entries": len(store),
            "backend_mode": getattr(backend, "mode", "unknown"),
        }

    @app.post("/api/query")
    async def query(request: Request):
        body = await _json_body(request)
        if body is None:
            return _error_json(400, "body must be a JSON object")
        text = _text_field(body, "text")
        if text is None:
            return _error_json(400, "'text' must be a non-empty string")
        k = _k_from(body)
        if k is None:
            return _error_json(400, "'k' must be a positive integer")
        try:
            result = pipeline.single_query(ConceptQuery(text=text, k=k))
        except MirageError as exc:
            return _map_error(exc)
        return JSONResponse(retrieval_result_payload(result, store))

    @app.post("/api/dual")
    async def dual(request: Request):
        body = await _json_body(request)
        if body is None:
            return _error_json(400, "body must be a JSON object")
        text = _text_field(body, "text")
        subtract = _text_field(body, "subtract")
        add = _text_field(body, "add")
        if text is None or subtract is None or add is None:
            return _error_json(
                400, "'text', 'subtract' and 'add' must all be non-empty strings"
            )
        k = _k_from(body)
        if k is None:
            return _error_json(400, "'k' must be a positive integer")
        try:
            result = pipeline.dual_query(
                ConceptQuery(text=text, subtract_term=subtract, add_term=add, k=k)
            )
        except MirageError as exc:
            return _map_error(exc)
        return JSONResponse(dual_result_payload(result))

    @app.get("/api/entries/{entry_id}")
    def entry(entry_id: str):
        try:
            e = store.get(entry_id)
        except EntryNotFound as exc:
            return _error_json(404, str(exc))
        return {
            "id": e.id,
            "caption": e.caption,
            "image_ref": e.image_ref,
            "modality": e.modality,
        }

    @app.get("/api/images/{image_id}")
    def image(image_id: str):
        data_type = _resolve_image(store, blob_store, image_id)
        if data_type is None:
            return _error_json(404, f"no image for id {image_id!r}")
        data, media_type = data_type
        return Response(content=data, media_type=media_type)

    return app


def _resolve_image(
    store: VectorStore, blob_store: BlobStore | None, image_id: str
) -> tuple[bytes, str] | None:
    """Resolve an id that may name a blob directly or a catalog entry."""
    if blob_store is not None and image_id in blob_store:
        return blob_store.get(image_id)
    if image_id in store:
        ref = store.get(image_id).image_ref
        if ref.startswith("blob:") and blob_store is not None:
            try:
                return blob_store.get(ref[len("blob:"):])
            except BlobNotFound:
                return None
    return None


def app_from_config(config: ServiceConfig) -> FastAPI:
    """Build the app from configuration (used by `mirage serve`)."""
    config.validate_paths(store_required=True)
    store = VectorStore.load_dir(config.store_dir)
    blob_store = BlobStore(config.blob_dir) if config.blob_dir else None
    backend = make_backend(config.backend)
    return create_app(store, backend, blob_store, config)
