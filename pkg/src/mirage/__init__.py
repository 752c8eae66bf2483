"""Multimodal medical image/caption retrieval engine.

Core pieces: a unit-norm embedding store with exact cosine top-k search and
bit-exact persistence, concept arithmetic for dual (compare-two-conditions)
queries, a two-stage retrieval pipeline with caption enrichment, a
pair-similarity evaluation protocol with threshold calibration, catalog
ingestion, and an HTTP/CLI front door. Model inference (encoders, enricher,
synthesizer) stays behind a JSON wire protocol with a deterministic mock for
hermetic use.
"""

from .algebra import ConceptQuery, compose_modified, modified_prompt_text
from .backends import (
    BackendConfig,
    EnrichmentRequest,
    MockBackend,
    RemoteBackend,
    make_backend,
    mock_embed,
)
from .blobs import BlobStore
from .evaluation import (
    EvaluationReport,
    LabeledPair,
    find_threshold,
    pair_similarities,
    run_protocol,
)
from .ingestion import BuildReport, CatalogRecord, build_store, parse_catalog
from .pipeline import (
    DualSearchResult,
    RetrievalPipeline,
    RetrievalResult,
)
from .store import CatalogEntry, SearchHit, VectorStore
from .vectors import cosine, normalize

__version__ = "0.1.0"

__all__ = [
    "BackendConfig",
    "BlobStore",
    "BuildReport",
    "CatalogEntry",
    "CatalogRecord",
    "ConceptQuery",
    "DualSearchResult",
    "EnrichmentRequest",
    "EvaluationReport",
    "LabeledPair",
    "MockBackend",
    "RemoteBackend",
    "RetrievalPipeline",
    "RetrievalResult",
    "SearchHit",
    "VectorStore",
    "build_store",
    "compose_modified",
    "cosine",
    "find_threshold",
    "make_backend",
    "mock_embed",
    "modified_prompt_text",
    "normalize",
    "pair_similarities",
    "parse_catalog",
    "run_protocol",
    "__version__",
]
