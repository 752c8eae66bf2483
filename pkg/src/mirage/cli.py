"""Command-line front door: ingest, query, dual, eval, serve.

Exit codes: 0 success, 1 usage error, 2 runtime error. ``--mock`` switches
every subcommand to the deterministic in-process backend.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .algebra import ConceptQuery
from .backends import BackendConfig, make_backend
from .blobs import BlobStore
from .config import CONFIG_ENV_VAR, ServiceConfig
from .errors import MirageError
from .evaluation import format_report_table, run_protocol
from .ingestion import build_store, parse_catalog
from .pipeline import RetrievalPipeline, dual_result_payload, retrieval_result_payload
from .store import VectorStore

USAGE_EXIT = 1
RUNTIME_EXIT = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this tool reserves 2 for runtime.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _backend_from_flags(args) -> object:
    if getattr(args, "mock", False):
        return make_backend(BackendConfig(mode="mock"))
    if getattr(args, "config", None):
        return make_backend(ServiceConfig.from_file(args.config).backend)
    return make_backend(ServiceConfig.from_env().backend)


def _load_store(args) -> tuple[VectorStore, BlobStore]:
    store = VectorStore.load_dir(args.store)
    blob_dir = args.blob_dir or str(Path(args.store) / "blobs")
    return store, BlobStore(blob_dir)


def _print_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mirage", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mock", action="store_true", help="use the deterministic mock backend")
    common.add_argument("--config", help="service config JSON (backend settings)")

    p = sub.add_parser("ingest", parents=[common], help="build a store from a catalog")
    p.add_argument("--catalog", required=True, help="CSV or JSONL catalog file")
    p.add_argument("--out", required=True, help="output store directory")
    p.add_argument("--limit", type=int, default=None, help="index only the first N records")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--on-missing-image", choices=("skip", "fail"), default="skip")

    p = sub.add_parser("query", parents=[common], help="two-stage single query")
    p.add_argument("--store", required=True, help="store directory")
    p.add_argument("--text", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--json", action="store_true", help="print the API JSON payload")
    p.add_argument("--blob-dir", default=None)

    p = sub.add_parser("dual", parents=[common], help="side-by-side concept comparison")
    p.add_argument("--store", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--subtract", required=True)
    p.add_argument("--add", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--json", action="store_true")
    p.add_argument("--blob-dir", default=None)

    p = sub.add_parser("eval", parents=[common], help="pair-similarity evaluation")
    p.add_argument("--pairs", required=True, nargs="+", help="pair JSONL file(s)")
    p.add_argument(
        "--strategy", choices=("max_accuracy", "mean_midpoint"), default="max_accuracy"
    )
    p.add_argument("--sample-std", action="store_true", help="use n-1 in the std denominator")
    p.add_argument("--out", default="report.json", help="machine-readable report path")

    p = sub.add_parser("serve", parents=[common], help="run the HTTP API")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--store", default=None, help="override store_dir from the config")
    p.add_argument("--blob-dir", default=None)

    return parser


def _cmd_ingest(args) -> int:
    records = parse_catalog(args.catalog)
    backend = _backend_from_flags(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    store, report = build_store(
        records,
        backend,
        batch_size=args.batch_size,
        on_missing_image=args.on_missing_image,
        base_dir=Path(args.catalog).parent,
        blob_store=BlobStore(out / "blobs"),
        limit=args.limit,
    )
    store.save_dir(out)
    with open(out / "build_report.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"built store: {report.built} entries (dim {report.dim}), "
        f"{len(report.skipped)} skipped -> {out}"
    )
    return 0


def _cmd_query(args) -> int:
    store, blob_store = _load_store(args)
    pipeline = RetrievalPipeline(store, _backend_from_flags(args), blob_store)
    result = pipeline.single_query(ConceptQuery(text=args.text, k=args.k))
    if args.json:
        _print_json(retrieval_result_payload(result, store))
        return 0
    print(f"query: {result.query_text}")
    print("stage-1 hits (query vs image embeddings):")
    for hit in result.stage1_hits:
        caption = store.get(hit.entry_id).caption
        print(f"  {hit.rank}. {hit.entry_id}  sim={hit.similarity:.6f}  {caption}")
    print(f"enriched caption: {result.enriched_caption}")
    print(
        f"final image: {result.final_hit.entry_id} "
        f"(sim={result.final_hit.similarity:.6f}) {result.final_entry.caption}"
    )
    print(f"synthetic image: {result.synthetic_image_ref or '(unavailable)'}")
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def _cmd_dual(args) -> int:
    store, blob_store = _load_store(args)
    pipeline = RetrievalPipeline(store, _backend_from_flags(args), blob_store)
    query = ConceptQuery(
        text=args.text, subtract_term=args.subtract, add_term=args.add, k=args.k
    )
    result = pipeline.dual_query(query)
    if args.json:
        _print_json(dual_result_payload(result))
        return 0
    for name, branch in (("original", result.original), ("modified", result.modified)):
        print(f"[{name}] prompt: {branch.prompt_used}")
        print(
            f"  hit: {branch.hit.entry_id} (sim={branch.hit.similarity:.6f}) "
            f"{branch.entry.caption}"
        )
        print(f"  synthetic image: {branch.synthetic_image_ref or '(unavailable)'}")
    print(
        "similarity(original, modified query): "
        f"{result.modified_similarity_to_original:.6f}"
    )
    if result.revised_description:
        print(f"revised description: {result.revised_description}")
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def _cmd_eval(args) -> int:
    backend = _backend_from_flags(args)
    reports = run_protocol(
        args.pairs, backend, strategy=args.strategy, sample_std=args.sample_std
    )
    print(format_report_table(reports))
    payload = [r.to_dict() for r in reports]
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import app_from_config

    if args.config:
        config = ServiceConfig.from_file(args.config)
    elif os.environ.get(CONFIG_ENV_VAR):
        config = ServiceConfig.from_env()
    elif args.mock and args.store:
        config = ServiceConfig()  # flags supply everything a mock stack needs
    else:
        raise MirageError(
            f"serve needs --config, {CONFIG_ENV_VAR}, or --mock with --store"
        )
    if args.mock:
        config.backend = BackendConfig(mode="mock")
    if args.store:
        config.store_dir = args.store
    if args.blob_dir:
        config.blob_dir = args.blob_dir
    elif not config.blob_dir and config.store_dir:
        config.blob_dir = str(Path(config.store_dir) / "blobs")
    if args.host:
        config.host = args.host
    if args.port:
        config.port = args.port
    app = app_from_config(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "query": _cmd_query,
    "dual": _cmd_dual,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (MirageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
