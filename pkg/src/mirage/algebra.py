"""Query composition, including the subtract/add latent transformation.

A dual query combines three texts: the base query, a concept to remove, and
a concept to introduce. In embedding space the modified query is

    modified = normalize(original - subtract + add)

All functions here are pure; no shared state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import vectors
from .errors import DegenerateQuery, DimensionMismatch, EmptyText, MissingTerms

# Pre-normalization norm below which the concepts have cancelled out and the
# direction is numerically meaningless.
DEGENERATE_NORM_EPS = 1e-6

DEFAULT_K = 5


@dataclass(frozen=True)
class ConceptQuery:
    """User query text, optionally with a subtract/add concept pair.

    ``subtract_term`` and ``add_term`` must be both present (dual search) or
    both absent (single search).
    """

    text: str
    subtract_term: str | None = None
    add_term: str | None = None
    k: int = DEFAULT_K

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise EmptyText("query text empty after trimming")
        if (self.subtract_term is None) != (self.add_term is None):
            raise MissingTerms("subtract_term and add_term must be given together")
        if self.subtract_term is not None and not self.subtract_term.strip():
            raise EmptyText("subtract_term empty after trimming")
        if self.add_term is not None and not self.add_term.strip():
            raise EmptyText("add_term empty after trimming")
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")

    @property
    def is_dual(self) -> bool:
        return self.subtract_term is not None


def compose_modified(
    e_original: np.ndarray, e_subtract: np.ndarray, e_add: np.ndarray
) -> np.ndarray:
    """Shift the query embedding by ``- e_subtract + e_add`` and renormalize.

    When the two term embeddings cancel exactly, the original vector is
    returned unchanged: it is already unit-norm and renormalizing would only
    introduce rounding noise. Raises DegenerateQuery when the combination
    collapses below ``DEGENERATE_NORM_EPS``.
    """
    e_o = vectors.as_array(e_original)
    e_s = vectors.as_array(e_subtract)
    e_a = vectors.as_array(e_add)
    if not (e_o.shape == e_s.shape == e_a.shape):
        raise DimensionMismatch(
            f"operand dimensions differ: {e_o.shape[0]}, {e_s.shape[0]}, {e_a.shape[0]}"
        )
    delta = e_a - e_s
    if not np.any(delta):
        return e_o.copy()
    modified = e_o + delta
    norm = float(np.linalg.norm(modified))
    if norm < DEGENERATE_NORM_EPS:
        raise DegenerateQuery(
            f"concepts cancel the query (norm {norm:g} < {DEGENERATE_NORM_EPS:g})"
        )
    return modified / norm


def modified_prompt_text(query: ConceptQuery) -> str:
    """Text counterpart of the embedding shift, for the image synthesizer.

    If the subtract term occurs (case-insensitively) in the query text, its
    first occurrence is replaced by the add term; otherwise the add term is
    appended after a comma.
    """
    if not query.is_dual:
        raise MissingTerms("modified_prompt_text requires subtract and add terms")
    sub = query.subtract_term or ""
    add = query.add_term or ""
    idx = query.text.lower().find(sub.lower())
    if idx >= 0:
        return query.text[:idx] + add + query.text[idx + len(sub):]
    return f"{query.text}, {add}"
