"""Semantic-consistency evaluation: similarity over labeled pairs, threshold
calibration, and accuracy reporting.

Pairs are labeled similar/dissimilar and grouped by type (caption-caption,
image-caption with real images, image-caption with synthetic images). For
each type the protocol scores every pair by cosine similarity, calibrates a
single decision threshold, and reports per-class mean/std plus the
classification accuracy at that threshold.

Two threshold strategies are shipped:

- ``max_accuracy``: sweep the midpoints between consecutive distinct scores
  (plus sentinels at -1 and +1) and keep the candidate with the highest
  accuracy, lowest threshold on ties.
- ``mean_midpoint``: halfway between the two class means.

Neither is privileged: published reference numbers for text-text and real
image-caption pairs match the mean-midpoint rule exactly (0.770/0.394 ->
0.582 and 0.386/0.086 -> 0.236), but the synthetic-image row does not
(0.287/0.074 midpoint is 0.1805, reported threshold 0.230), so the rule
behind those numbers is unknown and both strategies are exposed.

Standard deviations use the population formula (divide by n) by default so
runs are reproducible bit for bit; pass ``sample_std=True`` for n-1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import vectors
from .errors import DegenerateLabels, MissingField, ParseError

LABELS = ("similar", "dissimilar")
PAIR_TYPES = ("caption_caption", "image_caption_real", "image_caption_synthetic")
KINDS = ("text", "image")
STRATEGIES = ("max_accuracy", "mean_midpoint")


@dataclass(frozen=True)
class LabeledPair:
    """One evaluation pair; operands are text or image file paths."""

    left: str
    right: str
    label: str
    pair_type: str
    left_kind: str = "text"
    right_kind: str = "text"

    def __post_init__(self):
        if not self.left or not self.right:
            raise MissingField("pair operands must be non-empty")
        if self.label not in LABELS:
            raise ParseError(f"label must be one of {LABELS}, got {self.label!r}")
        if self.pair_type not in PAIR_TYPES:
            raise ParseError(
                f"pair_type must be one of {PAIR_TYPES}, got {self.pair_type!r}"
            )
        if self.left_kind not in KINDS or self.right_kind not in KINDS:
            raise ParseError("operand kinds must be 'text' or 'image'")
        kinds = {self.left_kind, self.right_kind}
        if self.pair_type == "caption_caption" and kinds != {"text"}:
            raise ParseError("caption_caption pairs must be text/text")
        if self.pair_type != "caption_caption" and kinds != {"text", "image"}:
            raise ParseError(f"{self.pair_type} pairs must mix one text and one image")


@dataclass
class EvaluationReport:
    """One strategy's calibration outcome for a single pair type."""

    pair_type: str
    n_similar: int
    n_dissimilar: int
    mean_similar: float
    std_similar: float
    mean_dissimilar: float
    std_dissimilar: float
    threshold: float
    accuracy: float
    threshold_strategy: str

    def to_dict(self) -> dict:
        return {
            "pair_type": self.pair_type,
            "n_similar": self.n_similar,
            "n_dissimilar": self.n_dissimilar,
            "mean_similar": self.mean_similar,
            "std_similar": self.std_similar,
            "mean_dissimilar": self.mean_dissimilar,
            "std_dissimilar": self.std_dissimilar,
            "threshold": self.threshold,
            "accuracy": self.accuracy,
            "threshold_strategy": self.threshold_strategy,
        }


def load_pairs(path: str | Path) -> list[LabeledPair]:
    """Parse a JSON Lines pair file. ParseError carries the line number."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(obj, dict):
                raise ParseError("each line must be a JSON object", line=lineno)
            try:
                pairs.append(
                    LabeledPair(
                        left=obj.get("left", ""),
                        right=obj.get("right", ""),
                        label=obj.get("label", ""),
                        pair_type=obj.get("pair_type", ""),
                        left_kind=obj.get("left_kind", "text"),
                        right_kind=obj.get("right_kind", "text"),
                    )
                )
            except ParseError as exc:
                raise ParseError(str(exc), line=lineno) from exc
    return pairs


def _encode_operands(pairs: Sequence[LabeledPair], backend, base_dir: Path | None):
    """Embed every operand, batching texts and images separately."""
    texts: list[str] = []
    images: list[bytes] = []
    slots: list[tuple[str, int]] = []  # per operand: (batch name, batch index)
    for pair in pairs:
        for operand, kind in ((pair.left, pair.left_kind), (pair.right, pair.right_kind)):
            if kind == "text":
                slots.append(("text", len(texts)))
                texts.append(operand)
            else:
                path = Path(operand)
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                slots.append(("image", len(images)))
                images.append(path.read_bytes())
    text_vecs = backend.encode_text(texts) if texts else []
    image_vecs = backend.encode_image(images) if images else []
    lookup = {"text": text_vecs, "image": image_vecs}
    return [lookup[batch][idx] for batch, idx in slots]


def pair_similarities(
    pairs: Sequence[LabeledPair], backend, base_dir: Path | None = None
) -> list[tuple[float, str]]:
    """Cosine similarity per pair, order-preserving, with its label."""
    if not pairs:
        return []
    embedded = _encode_operands(pairs, backend, base_dir)
    scores = []
    for i, pair in enumerate(pairs):
        sim = vectors.cosine(embedded[2 * i], embedded[2 * i + 1])
        scores.append((sim, pair.label))
    return scores


def _accuracy_at(threshold: float, scores: np.ndarray, labels_similar: np.ndarray) -> float:
    predicted_similar = scores >= threshold
    return float(np.mean(predicted_similar == labels_similar))


def find_threshold(
    scores: Iterable[tuple[float, str]], strategy: str = "max_accuracy"
) -> tuple[float, float]:
    """Calibrate the similar/dissimilar cutoff; returns (threshold, accuracy).

    Classification is "similar iff similarity >= threshold". Input order does
    not affect the result.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}, got {strategy!r}")
    pairs = sorted(scores)  # deterministic accumulation regardless of input order
    values = np.array([s for s, _ in pairs], dtype=np.float64)
    is_similar = np.array([label == "similar" for _, label in pairs], dtype=bool)
    if not is_similar.any() or is_similar.all():
        raise DegenerateLabels("need at least one similar and one dissimilar score")

    if strategy == "mean_midpoint":
        threshold = float((values[is_similar].mean() + values[~is_similar].mean()) / 2.0)
        return threshold, _accuracy_at(threshold, values, is_similar)

    distinct = np.unique(values)
    candidates = [-1.0, *((distinct[:-1] + distinct[1:]) / 2.0), 1.0]
    best_threshold, best_accuracy = None, -1.0
    for candidate in candidates:  # ascending; ties keep the smallest threshold
        accuracy = _accuracy_at(candidate, values, is_similar)
        if accuracy > best_accuracy:
            best_threshold, best_accuracy = float(candidate), accuracy
    return best_threshold, best_accuracy


def _class_stats(values: np.ndarray, sample_std: bool) -> tuple[float, float]:
    ddof = 1 if sample_std and values.size > 1 else 0
    return float(values.mean()), float(values.std(ddof=ddof))


def run_protocol(
    pair_files: str | Path | Sequence[str | Path],
    backend,
    strategy: str = "max_accuracy",
    sample_std: bool = False,
) -> list[EvaluationReport]:
    """Score, calibrate, and report for every pair type present.

    Reports come back in the canonical pair-type order. Raises
    DegenerateLabels when a present type is missing one of the labels.
    """
    if isinstance(pair_files, (str, Path)):
        pair_files = [pair_files]
    groups: dict[str, list[tuple[float, str]]] = {}
    for path in pair_files:
        pairs = load_pairs(path)
        if not pairs:
            continue
        scored = pair_similarities(pairs, backend, base_dir=Path(path).parent)
        for pair, (sim, label) in zip(pairs, scored):
            groups.setdefault(pair.pair_type, []).append((sim, label))

    reports = []
    for pair_type in PAIR_TYPES:
        if pair_type not in groups:
            continue
        scored = sorted(groups[pair_type])
        values = np.array([s for s, _ in scored], dtype=np.float64)
        is_similar = np.array([label == "similar" for _, label in scored], dtype=bool)
        if not is_similar.any() or is_similar.all():
            raise DegenerateLabels(f"{pair_type}: both labels required")
        threshold, accuracy = find_threshold(scored, strategy=strategy)
        mean_sim, std_sim = _class_stats(values[is_similar], sample_std)
        mean_dis, std_dis = _class_stats(values[~is_similar], sample_std)
        reports.append(
            EvaluationReport(
                pair_type=pair_type,
                n_similar=int(is_similar.sum()),
                n_dissimilar=int((~is_similar).sum()),
                mean_similar=mean_sim,
                std_similar=std_sim,
                mean_dissimilar=mean_dis,
                std_dissimilar=std_dis,
                threshold=threshold,
                accuracy=accuracy,
                threshold_strategy=strategy,
            )
        )
    return reports


def format_report_row(report: EvaluationReport) -> str:
    """Render one report as ``mean ± std / mean ± std | threshold | acc%``."""
    return (
        f"{report.mean_similar:.3f} ± {report.std_similar:.3f} / "
        f"{report.mean_dissimilar:.3f} ± {report.std_dissimilar:.3f} | "
        f"{report.threshold:.3f} | {report.accuracy:.0%}"
    )


def format_report_table(reports: Sequence[EvaluationReport]) -> str:
    """Human-readable table, one row per pair type."""
    header = (
        f"{'Pair type':<26} {'Similar / Dissimilar':<31} "
        f"{'Threshold':>9} {'Accuracy':>8}"
    )
    lines = [header, "-" * len(header)]
    for r in reports:
        sims = (
            f"{r.mean_similar:.3f} ± {r.std_similar:.3f} / "
            f"{r.mean_dissimilar:.3f} ± {r.std_dissimilar:.3f}"
        )
        lines.append(
            f"{r.pair_type:<26} {sims:<31} {r.threshold:>9.3f} {r.accuracy:>8.0%}"
        )
    return "\n".join(lines)
