"""End-to-end query flows.

Single query (two-stage): encode the query, pull the top-k nearest catalog
images, feed their captions to the enricher, re-encode the enriched caption,
and retrieve the final image with it. The synthetic image is always generated
from the user's original prompt, not the enriched caption: longer
descriptions do not produce better synthetic images.

Dual query: encode query/subtract/add, build the shifted embedding, and run
top-1 retrieval for the original and the shifted query side by side. Dual
search is single-stage; the revised description is a side output and is not
re-injected into retrieval.

Backend failures carry the stage they happened in (encode_query, stage1,
enrich, encode_enriched, stage2, synthesize). Synthesizer failures degrade
gracefully into a warning instead of failing the whole query, because the
retrieved result is the primary output.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import vectors
from .algebra import ConceptQuery, compose_modified, modified_prompt_text
from .blobs import BlobStore
from .backends import EnrichmentRequest
from .errors import (
    BackendError,
    BackendUnreachable,
    DimensionMismatch,
    EmptyBlob,
    EmptyResponse,
    EmptyText,
    MirageError,
    StageError,
)
from .store import CatalogEntry, SearchHit, VectorStore

SIMILARITY_DECIMALS = 6

# Failures that originate in a backend call (or in reconciling its output
# with the store) get annotated with the pipeline stage. Query-shape and
# store-state errors (EmptyStore, DegenerateQuery, ...) propagate bare.
_BACKEND_ERRORS = (
    BackendUnreachable,
    BackendError,
    EmptyResponse,
    EmptyText,
    EmptyBlob,
    DimensionMismatch,
)


@dataclass
class RetrievalResult:
    query_text: str
    stage1_hits: list[SearchHit]
    context_captions: list[str]
    enriched_caption: str
    final_hit: SearchHit
    final_entry: CatalogEntry
    synthetic_image_ref: str | None
    timings_ms: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


@dataclass
class DualBranch:
    hit: SearchHit
    entry: CatalogEntry
    synthetic_image_ref: str | None
    prompt_used: str


@dataclass
class DualSearchResult:
    original: DualBranch
    modified: DualBranch
    modified_similarity_to_original: float
    revised_description: str | None
    timings_ms: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


class _Timer:
    def __init__(self):
        self.timings_ms: dict[str, float] = {}

    def stage(self, name: str):
        return _StageClock(self, name)


class _StageClock:
    def __init__(self, timer: _Timer, name: str):
        self._timer = timer
        self._name = name

    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        elapsed = (time.perf_counter() - self._start) * 1000.0
        self._timer.timings_ms[self._name] = round(elapsed, 3)
        return False


def _staged(stage: str, fn, *args):
    """Run fn; wrap backend failures with the stage name."""
    try:
        return fn(*args)
    except StageError:
        raise
    except _BACKEND_ERRORS as exc:
        raise StageError(stage, exc) from exc


class RetrievalPipeline:
    """Binds a store, a backend, and a blob store into the query flows.

    Instances are safe for concurrent requests: the store is only read, the
    backend clients are call-independent, and blob writes are
    content-addressed.
    """

    def __init__(
        self,
        store: VectorStore,
        backend,
        blob_store: BlobStore | None = None,
        default_k: int = 5,
        enrich_dual: bool = True,
    ):
        self.store = store
        self.backend = backend
        self.blobs = blob_store
        self.default_k = default_k
        self.enrich_dual = enrich_dual

    # --- shared helpers ----------------------------------------------------

    def persist_blob(self, data: bytes, media_type: str) -> str | None:
        if self.blobs is None:
            return None
        return self.blobs.put(data, media_type)

    def _synthesize(self, prompt: str) -> tuple[str | None, str | None]:
        """Generate + persist a synthetic image.

        Returns (blob id, warning); failures surface as a warning instead of
        an exception.
        """
        try:
            blob, media_type = self.backend.synthesize_image(prompt)
            if not blob:
                raise EmptyResponse("synthesizer returned zero bytes")
            return self.persist_blob(blob, media_type), None
        except MirageError as exc:
            return None, f"synthesize failed: {exc}"

    def _encode_one(self, stage: str, text: str) -> np.ndarray:
        return _staged(stage, self.backend.encode_text, [text])[0]

    # --- flows ---------------------------------------------------------------

    def single_query(self, query: ConceptQuery) -> RetrievalResult:
        """Two-stage retrieval with caption enrichment."""
        if query.is_dual:
            raise ValueError("query carries subtract/add terms; use dual_query")
        timer = _Timer()
        warnings: list[str] = []

        with timer.stage("encode_query"):
            e_q = self._encode_one("encode_query", query.text)
        with timer.stage("stage1"):
            stage1_hits = _staged(
                "stage1", self.store.top_k, e_q, query.k, "image"
            )
        context = [self.store.get(h.entry_id).caption for h in stage1_hits]
        with timer.stage("enrich"):
            enriched = _staged(
                "enrich",
                self.backend.enrich_caption,
                EnrichmentRequest(query=query.text, context_captions=tuple(context)),
            )
            if not enriched or not enriched.strip():
                raise StageError("enrich", EmptyResponse("enricher returned empty text"))
        with timer.stage("encode_enriched"):
            e_c = self._encode_one("encode_enriched", enriched)
        with timer.stage("stage2"):
            final_hit = _staged("stage2", self.store.top_k, e_c, 1, "image")[0]
        with timer.stage("synthesize"):
            # Original prompt by design; see module docstring.
            synth_ref, warning = self._synthesize(query.text)
        if warning:
            warnings.append(warning)

        return RetrievalResult(
            query_text=query.text,
            stage1_hits=stage1_hits,
            context_captions=context,
            enriched_caption=enriched,
            final_hit=final_hit,
            final_entry=self.store.get(final_hit.entry_id),
            synthetic_image_ref=synth_ref,
            timings_ms=timer.timings_ms,
            warnings=warnings,
        )

    def dual_query(self, query: ConceptQuery) -> DualSearchResult:
        """Side-by-side retrieval for the original and shifted query."""
        if not query.is_dual:
            raise ValueError("dual_query requires subtract and add terms")
        timer = _Timer()
        warnings: list[str] = []
        modified_text = modified_prompt_text(query)

        with timer.stage("encode_query"):
            e_o, e_s, e_a = _staged(
                "encode_query",
                self.backend.encode_text,
                [query.text, query.subtract_term, query.add_term],
            )
        e_m = compose_modified(e_o, e_s, e_a)

        # The two synthetic generations share no state with retrieval, so
        # they run concurrently with it. The synthesize timing is wall time
        # until both images are ready, overlapping the retrieval stages.
        with ThreadPoolExecutor(max_workers=2) as pool:
            synth_start = time.perf_counter()
            orig_synth = pool.submit(self._synthesize, query.text)
            mod_synth = pool.submit(self._synthesize, modified_text)

            with timer.stage("stage1"):
                original_hit = _staged("stage1", self.store.top_k, e_o, 1, "image")[0]
            with timer.stage("stage2"):
                modified_hits = _staged(
                    "stage2", self.store.top_k, e_m, query.k, "image"
                )
            modified_hit = modified_hits[0]

            revised = None
            if self.enrich_dual:
                context = [self.store.get(h.entry_id).caption for h in modified_hits]
                with timer.stage("enrich"):
                    revised = _staged(
                        "enrich",
                        self.backend.enrich_caption,
                        EnrichmentRequest(
                            query=modified_text, context_captions=tuple(context)
                        ),
                    )
            orig_ref, orig_warning = orig_synth.result()
            mod_ref, mod_warning = mod_synth.result()
            timer.timings_ms["synthesize"] = round(
                (time.perf_counter() - synth_start) * 1000.0, 3
            )
        for warning in (orig_warning, mod_warning):
            if warning:
                warnings.append(warning)

        return DualSearchResult(
            original=DualBranch(
                hit=original_hit,
                entry=self.store.get(original_hit.entry_id),
                synthetic_image_ref=orig_ref,
                prompt_used=query.text,
            ),
            modified=DualBranch(
                hit=modified_hit,
                entry=self.store.get(modified_hit.entry_id),
                synthetic_image_ref=mod_ref,
                prompt_used=modified_text,
            ),
            modified_similarity_to_original=vectors.cosine(e_o, e_m),
            revised_description=revised,
            timings_ms=timer.timings_ms,
            warnings=warnings,
        )


# --- JSON rendering -----------------------------------------------------------

def _image_url(entry_id: str) -> str:
    return f"/api/images/{entry_id}"


def _round_sim(sim: float) -> float:
    return round(sim, SIMILARITY_DECIMALS)


def _hit_payload(hit: SearchHit, entry: CatalogEntry) -> dict:
    return {
        "entry_id": hit.entry_id,
        "rank": hit.rank,
        "similarity": _round_sim(hit.similarity),
        "caption": entry.caption,
        "modality": entry.modality,
        "image_url": _image_url(hit.entry_id),
    }


def retrieval_result_payload(result: RetrievalResult, store: VectorStore) -> dict:
    """Wire shape shared by the HTTP API and the CLI ``--json`` output.

    Image URLs are server-relative (``/api/images/{id}``) so clients need no
    filesystem knowledge.
    """
    return {
        "query": result.query_text,
        "stage1_hits": [
            _hit_payload(h, store.get(h.entry_id)) for h in result.stage1_hits
        ],
        "context_captions": result.context_captions,
        "enriched_caption": result.enriched_caption,
        "final": _hit_payload(result.final_hit, result.final_entry),
        "synthetic_image_url": (
            _image_url(result.synthetic_image_ref)
            if result.synthetic_image_ref
            else None
        ),
        "warnings": result.warnings,
        "timings_ms": result.timings_ms,
    }


def _branch_payload(branch: DualBranch) -> dict:
    return {
        "prompt_used": branch.prompt_used,
        "hit": _hit_payload(branch.hit, branch.entry),
        "synthetic_image_url": (
            _image_url(branch.synthetic_image_ref)
            if branch.synthetic_image_ref
            else None
        ),
    }


def dual_result_payload(result: DualSearchResult) -> dict:
    return {
        "original": _branch_payload(result.original),
        "modified": _branch_payload(result.modified),
        "modified_similarity_to_original": _round_sim(
            result.modified_similarity_to_original
        ),
        "revised_description": result.revised_description,
        "warnings": result.warnings,
        "timings_ms": result.timings_ms,
    }
