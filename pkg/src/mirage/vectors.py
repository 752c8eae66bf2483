"""Unit-vector math shared by the store, query algebra, and evaluation.

All similarity math runs in float64; the store quantizes to float32 only at
insert time so that persistence is bit-exact.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NonFiniteInput, ZeroVector

# Below this L2 norm a vector has no usable direction.
ZERO_NORM_EPS = 1e-12
# Stored vectors must satisfy |norm - 1| <= UNIT_NORM_TOL.
UNIT_NORM_TOL = 1e-6


def as_array(v: Sequence[float] | np.ndarray) -> np.ndarray:
    """Coerce to a 1-D float64 array without validating contents."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"expected a 1-D vector, got shape {arr.shape}")
    return arr


def normalize(v: Sequence[float] | np.ndarray, dim: int | None = None) -> np.ndarray:
    """Return ``v / ||v||_2`` as a float64 unit vector.

    Raises NonFiniteInput for NaN/Inf values, ZeroVector when the norm is
    below ``ZERO_NORM_EPS``, and DimensionMismatch when ``dim`` is given and
    does not match.
    """
    arr = as_array(v)
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("vector contains NaN or Inf")
    norm = float(np.linalg.norm(arr))
    if norm < ZERO_NORM_EPS:
        raise ZeroVector(f"norm {norm:g} below {ZERO_NORM_EPS:g}")
    return arr / norm


def is_unit(v: np.ndarray, tol: float = UNIT_NORM_TOL) -> bool:
    """True when ``||v|| - 1`` is within ``tol``."""
    return abs(float(np.linalg.norm(np.asarray(v, dtype=np.float64))) - 1.0) <= tol


def cosine(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    """Cosine similarity ``u.v / (||u|| ||v||)``, clamped to [-1, 1].

    For stored (unit) vectors this is just the dot product; the explicit
    division makes the function safe for raw vectors too.
    """
    a = as_array(u)
    b = as_array(v)
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"dimensions differ: {a.shape[0]} vs {b.shape[0]}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < ZERO_NORM_EPS or nb < ZERO_NORM_EPS:
        raise ZeroVector("cosine undefined for a zero vector")
    sim = float(np.dot(a, b) / (na * nb))
    return max(-1.0, min(1.0, sim))


def clamp_similarities(sims: np.ndarray) -> np.ndarray:
    """Clamp a similarity array to [-1, 1] in place-safe fashion."""
    return np.clip(sims, -1.0, 1.0)
