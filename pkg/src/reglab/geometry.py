"""Vectors, norms, balls and graph points in R^n.

The product metric on X × Y is the coordinatewise max of the component
distances throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: absolute feasibility tolerance for graph membership
TOL_FEAS = 1e-8
#: slack used when testing strict inequalities from theorem premises
STRICT_SLACK = 1e-12

NORM_KINDS = ("euclidean", "max")


class DimensionMismatch(ValueError):
    pass


class DomainError(ValueError):
    pass


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Validate and coerce to a finite 1D float array of dimension >= 1."""
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1 or v.size < 1:
        raise DimensionMismatch(f"expected a 1D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    if dim is not None and v.size != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {v.size}")
    return v


def vec_norm(v: np.ndarray, norm: str = "euclidean") -> float:
    if norm == "euclidean":
        return float(np.linalg.norm(v))
    if norm == "max":
        return float(np.max(np.abs(v))) if v.size else 0.0
    raise ValueError(f"unknown norm kind {norm!r}")


def vec_dist(a, b, norm: str = "euclidean") -> float:
    return vec_norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), norm)


@dataclass(frozen=True)
class Ball:
    """Closed (default) or open ball."""

    center: np.ndarray
    radius: float
    closed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    def contains(self, x, norm: str = "euclidean", tol: float = 0.0) -> bool:
        d = vec_dist(x, self.center, norm)
        return d <= self.radius + tol if self.closed else d < self.radius - tol


@dataclass(frozen=True)
class GraphPoint:
    """A pair (x, y) intended to lie on the graph of a set-valued map."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", as_vector(self.x))
        object.__setattr__(self, "y", as_vector(self.y))


def graph_dist(p: GraphPoint, q: GraphPoint, norm: str = "euclidean") -> float:
    """Product (box) metric: max of the component distances."""
    return max(vec_dist(p.x, q.x, norm), vec_dist(p.y, q.y, norm))
