#!/usr/bin/env python3
"""Regenerate the checked-in test fixtures and golden outputs.

Produces:
  tests/fixtures/catalog/catalog.jsonl   25-entry catalog
  tests/fixtures/catalog/images/*.png    deterministic tiny grayscale PNGs
  tests/fixtures/pairs_mock.jsonl        separable 50+50 pair corpus
  tests/golden/query_mock.json           canonical single-query payload
  tests/golden/dual_mock.json            canonical dual-query payload
  tests/golden/query_mock.txt            human CLI output

Golden JSON is the CLI --json payload with the (nondeterministic) timings
removed, re-serialized with sorted keys. Everything else is a pure function
of the fixture bytes and the mock backend, so reruns are idempotent.
"""

from __future__ import annotations

import contextlib
import io
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "tests" / "fixtures"
GOLDEN = ROOT / "tests" / "golden"

sys.path.insert(0, str(ROOT / "src"))

from mirage import mock_embed  # noqa: E402
from mirage.backends import _png_gray  # noqa: E402
from mirage.cli import main as cli_main  # noqa: E402

CAPTIONS = [
    ("roco_0001", "neonatal chest x-ray with ground glass opacity consistent with rds", "X-ray"),
    ("roco_0002", "neonatal chest x-ray with meconium aspiration syndrome mas", "X-ray"),
    ("roco_0003", "chest x-ray showing diffuse interstitial fibrosis of the lung", "X-ray"),
    ("roco_0004", "chest x-ray with bullous emphysema of the upper lobe", "X-ray"),
    ("roco_0005", "axial ct of the chest showing a solitary pulmonary nodule", "CT"),
    ("roco_0006", "contrast enhanced ct demonstrating a hepatic abscess", "CT"),
    ("roco_0007", "ct angiogram with saddle pulmonary embolism", "CT"),
    ("roco_0008", "sagittal mri of the lumbar spine with disc herniation", "MRI"),
    ("roco_0009", "knee mri showing anterior cruciate ligament tear", "MRI"),
    ("roco_0010", "brain mri with right frontal glioma and surrounding edema", "MRI"),
    ("roco_0011", "abdominal ultrasound showing gallstones within the gallbladder", "Ultrasound"),
    ("roco_0012", "renal ultrasound with moderate hydronephrosis", "Ultrasound"),
    ("roco_0013", "chest x-ray with right sided pleural effusion", "X-ray"),
    ("roco_0014", "chest x-ray showing cardiomegaly and pulmonary congestion", "X-ray"),
    ("roco_0015", "panoramic dental radiograph with impacted third molar", "X-ray"),
    ("roco_0016", "mammogram with clustered microcalcifications in the upper quadrant", "Mammography"),
    ("roco_0017", "pet ct with hypermetabolic mediastinal lymph nodes", "PET-CT"),
    ("roco_0018", "barium swallow study showing esophageal stricture", "Fluoroscopy"),
    ("roco_0019", "pelvic x-ray with displaced femoral neck fracture", "X-ray"),
    ("roco_0020", "wrist x-ray showing distal radius colles fracture", "X-ray"),
    ("roco_0021", "ct of the head with acute subdural hematoma", "CT"),
    ("roco_0022", "mri of the shoulder with rotator cuff tendinopathy", "MRI"),
    ("roco_0023", "chest ct with ground glass opacities in both lower lobes", "CT"),
    ("roco_0024", "abdominal ct showing acute appendicitis with periappendiceal fat stranding", "CT"),
    ("roco_0025", "echocardiogram still frame with dilated left ventricle", "Ultrasound"),
]

QUERY_TEXT = "neonatal chest x-ray with rds"
DUAL_SUBTRACT = "rds"
DUAL_ADD = "mas"


def fixture_png(index: int, entry_id: str) -> bytes:
    """Tiny 16x16 PNG whose pixels derive from the entry id's embedding."""
    vec = mock_embed(entry_id + " fixture image")
    shades = np.round((vec[:16] + 1.0) * 127.5).astype(np.uint8)
    rows = np.empty((16, 16), dtype=np.uint8)
    for y in range(16):
        rows[y] = np.roll(shades, y + index)
    return _png_gray(rows)


def write_catalog() -> None:
    images = FIXTURES / "catalog" / "images"
    images.mkdir(parents=True, exist_ok=True)
    catalog = FIXTURES / "catalog" / "catalog.jsonl"
    with open(catalog, "w", encoding="utf-8") as fh:
        for i, (entry_id, caption, modality) in enumerate(CAPTIONS):
            name = f"{entry_id}.png"
            (images / name).write_bytes(fixture_png(i, entry_id))
            fh.write(
                json.dumps(
                    {
                        "id": entry_id,
                        "caption": caption,
                        "image_path": f"images/{name}",
                        "modality": modality,
                    }
                )
                + "\n"
            )
    print(f"wrote {catalog} + {len(CAPTIONS)} images")


def write_pairs() -> None:
    """50 shared-token similar pairs + 50 disjoint-token dissimilar pairs,
    verified separable under the mock embedder before writing."""
    # Tokens end in a letter: a trailing 0-7 digit would vary only the low
    # bits entering the final hash round, and `hash mod 64` then lands in an
    # 8-bucket coset that collides between texts far too often.
    pairs = []
    for i in range(50):
        shared = [f"sim{i:02d}tok{j}q" for j in range(8)]
        left = " ".join(shared)
        right = " ".join(shared[:-1] + [f"sim{i:02d}variant"])
        pairs.append({"pair_type": "caption_caption", "label": "similar", "left": left, "right": right})
    for i in range(50):
        left = " ".join(f"disA{i:02d}tok{j}q" for j in range(8))
        right = " ".join(f"disB{i:02d}tok{j}z" for j in range(8))
        pairs.append({"pair_type": "caption_caption", "label": "dissimilar", "left": left, "right": right})

    def sim(a, b):
        return float(np.dot(mock_embed(a), mock_embed(b)))

    similar_scores = [sim(p["left"], p["right"]) for p in pairs if p["label"] == "similar"]
    dissimilar_scores = [sim(p["left"], p["right"]) for p in pairs if p["label"] == "dissimilar"]
    assert min(similar_scores) > max(dissimilar_scores), (
        f"corpus not separable: min similar {min(similar_scores):.3f} "
        f"<= max dissimilar {max(dissimilar_scores):.3f}"
    )
    path = FIXTURES / "pairs_mock.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(json.dumps(p) + "\n")
    print(
        f"wrote {path} (separable: similar >= {min(similar_scores):.3f}, "
        f"dissimilar <= {max(dissimilar_scores):.3f})"
    )


def canonical_json(stdout: str) -> str:
    payload = json.loads(stdout)
    payload.pop("timings_ms", None)
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def run_cli(argv: list[str]) -> str:
    buffer = io.StringIO()
    with contextlib.redirect_stdout(buffer):
        code = cli_main(argv)
    assert code == 0, f"cli {argv} exited {code}"
    return buffer.getvalue()


def write_goldens() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    catalog = FIXTURES / "catalog" / "catalog.jsonl"
    with tempfile.TemporaryDirectory() as tmp:
        store_dir = str(Path(tmp) / "store")
        run_cli(["ingest", "--catalog", str(catalog), "--out", store_dir, "--mock"])
        query_json = run_cli(
            ["query", "--store", store_dir, "--text", QUERY_TEXT, "--json", "--mock"]
        )
        (GOLDEN / "query_mock.json").write_text(canonical_json(query_json), encoding="utf-8")
        dual_json = run_cli(
            [
                "dual", "--store", store_dir, "--text", QUERY_TEXT,
                "--subtract", DUAL_SUBTRACT, "--add", DUAL_ADD, "--json", "--mock",
            ]
        )
        (GOLDEN / "dual_mock.json").write_text(canonical_json(dual_json), encoding="utf-8")
        query_txt = run_cli(["query", "--store", store_dir, "--text", QUERY_TEXT, "--mock"])
        (GOLDEN / "query_mock.txt").write_text(query_txt, encoding="utf-8")
    print(f"wrote goldens under {GOLDEN}")


if __name__ == "__main__":
    write_catalog()
    write_pairs()
    write_goldens()
