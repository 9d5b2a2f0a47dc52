"""Set-valued map representations and the distance oracles built on them.

A :class:`SetMap` is a tagged representation of F: R^n =: R^m.  Querying it
at a point yields a :class:`ValueSet` descriptor that supports exact distance
and membership tests (finite point sets, boxes, affine sets, unions of convex
polyhedra).  On top of the descriptors sit the three work-horse oracles:

* ``dist_to_value_set(y, F, x)``   distance from y to F(x)
* ``dist_to_preimage(x0, F, y)``   distance from x0 to F^{-1}(y), analytic
  where possible and honest grid search with local refinement otherwise
* ``graph_sample(F, center, r)``   seeded, feasibility-checked graph points

All operations are pure; nothing here keeps mutable state.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .expr import compile_expression
from .geometry import (
    TOL_FEAS,
    Ball,
    DimensionMismatch,
    DomainError,
    GraphPoint,
    as_vector,
    vec_dist,
    vec_norm,
)
from .rng import SplitMix64, derive_seed, shell_points_1d

INF = float("inf")


class UnsupportedOperation(ValueError):
    pass


class UnsupportedDimension(UnsupportedOperation):
    pass


# ---------------------------------------------------------------------------
# value-set descriptors


def _project_polyhedron(point: np.ndarray, A: np.ndarray, b: np.ndarray):
    """Euclidean projection onto {z: Az <= b} by active-subset enumeration.

    Exact for small systems (the only ones we build).  Returns (z, dist) or
    None when the polyhedron is empty.
    """
    point = np.asarray(point, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    scale = max(1.0, float(np.abs(b).max(initial=0.0)), float(np.abs(point).max(initial=0.0)))
    if A.size == 0 or np.all(A @ point <= b + 1e-12 * scale):
        return point, 0.0
    k, d = A.shape
    best = None
    for size in range(1, min(k, d) + 1):
        for idx in itertools.combinations(range(k), size):
            Ak = A[list(idx)]
            bk = b[list(idx)]
            gram = Ak @ Ak.T
            lam, *_ = np.linalg.lstsq(gram, Ak @ point - bk, rcond=None)
            z = point - Ak.T @ lam
            if np.max(np.abs(Ak @ z - bk)) > 1e-8 * scale:
                continue
            if np.all(A @ z <= b + 1e-9 * scale):
                dist = float(np.linalg.norm(z - point))
                if best is None or dist < best[1]:
                    best = (z, dist)
    return best


def _chebyshev_to_polyhedron(point: np.ndarray, A: np.ndarray, b: np.ndarray):
    """(nearest, max-norm distance) to {z: Az <= b} via a small LP."""
    from scipy.optimize import linprog

    point = np.asarray(point, dtype=float)
    d = point.size
    A = np.atleast_2d(A)
    eye = np.eye(d)
    ones = np.ones((d, 1))
    A_ub = np.vstack(
        [
            np.hstack([eye, -ones]),
            np.hstack([-eye, -ones]),
            np.hstack([A, np.zeros((A.shape[0], 1))]),
        ]
    )
    b_ub = np.concatenate([point, -point, b])
    c = np.zeros(d + 1)
    c[-1] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * d + [(0, None)], method="highs")
    if not res.success:
        return None, INF
    return res.x[:d], float(res.x[-1])


class ValueSet:
    """Abstract descriptor of F(x) supporting distance/membership queries."""

    dim: int

    def dist(self, y, norm: str = "euclidean") -> float:
        raise NotImplementedError

    def nearest(self, y, norm: str = "euclidean"):
        """(point, dist) of a nearest member; (None, inf) when empty."""
        raise UnsupportedOperation(f"{type(self).__name__} has no nearest-point query")

    def contains(self, y, tol: float = TOL_FEAS, norm: str = "euclidean") -> bool:
        return self.dist(y, norm) <= tol

    def is_empty(self) -> bool:
        return False

    def translate(self, v) -> "ValueSet":
        raise UnsupportedOperation(f"{type(self).__name__} cannot be translated")

    def members_near(self, center, radius, count, rng: SplitMix64, norm="euclidean") -> list[np.ndarray]:
        """A few representative members within ``radius`` of ``center``."""
        raise UnsupportedOperation(f"{type(self).__name__} cannot be sampled")

    def interval_structure_1d(self):
        """(points, intervals) decomposition for 1D value sets."""
        raise UnsupportedOperation(f"{type(self).__name__} has no 1D structure")


class EmptySet(ValueSet):
    def __init__(self, dim: int):
        self.dim = dim

    def dist(self, y, norm="euclidean"):
        return INF

    def nearest(self, y, norm="euclidean"):
        return None, INF

    def is_empty(self):
        return True

    def translate(self, v):
        return self

    def members_near(self, center, radius, count, rng, norm="euclidean"):
        return []

    def interval_structure_1d(self):
        return [], []


class FinitePoints(ValueSet):
    def __init__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[0] == 0:
            raise ValueError("FinitePoints requires at least one point")
        self.points = pts
        self.dim = pts.shape[1]

    def dist(self, y, norm="euclidean"):
        y = as_vector(y, self.dim)
        diff = self.points - y
        if norm == "euclidean":
            return float(np.sqrt((diff**2).sum(axis=1)).min())
        return float(np.abs(diff).max(axis=1).min())

    def nearest(self, y, norm="euclidean"):
        y = as_vector(y, self.dim)
        diff = self.points - y
        d = np.sqrt((diff**2).sum(axis=1)) if norm == "euclidean" else np.abs(diff).max(axis=1)
        i = int(d.argmin())
        return self.points[i].copy(), float(d[i])

    def translate(self, v):
        return FinitePoints(self.points + as_vector(v, self.dim))

    def members_near(self, center, radius, count, rng, norm="euclidean"):
        center = as_vector(center, self.dim)
        out = [p for p in self.points if vec_dist(p, center, norm) <= radius]
        return out[:count]

    def interval_structure_1d(self):
        if self.dim != 1:
            raise UnsupportedOperation("not one-dimensional")
        return list(self.points[:, 0]), []


class BoxSet(ValueSet):
    """Axis-aligned box, possibly unbounded (entries may be ±inf)."""

    def __init__(self, lo, hi):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if self.lo.shape != self.hi.shape:
            raise DimensionMismatch("box bounds must share a shape")
        if np.any(self.lo > self.hi):
            raise ValueError("box lower bounds exceed upper bounds")
        self.dim = self.lo.size

    def dist(self, y, norm="euclidean"):
        y = as_vector(y, self.dim)
        resid = np.maximum(self.lo - y, 0.0) + np.maximum(y - self.hi, 0.0)
        return vec_norm(resid, norm)

    def nearest(self, y, norm="euclidean"):
        y = as_vector(y, self.dim)
        p = np.clip(y, self.lo, self.hi)
        return p, vec_dist(p, y, norm)

    def translate(self, v):
        v = as_vector(v, self.dim)
        return BoxSet(self.lo + v, self.hi + v)

    def members_near(self, center, radius, count, rng, norm="euclidean"):
        center = as_vector(center, self.dim)
        lo = np.maximum(self.lo, center - radius)
        hi = np.minimum(self.hi, center + radius)
        if np.any(lo > hi):
            return []
        out = [np.clip(center, lo, hi)]
        for _ in range(count - 1):
            out.append(np.array([rng.uniform(float(a), float(b)) for a, b in zip(lo, hi)]))
        return out

    def interval_structure_1d(self):
        if self.dim != 1:
            raise UnsupportedOperation("not one-dimensional")
        return [], [(float(self.lo[0]), float(self.hi[0]))]


class AffineSet(ValueSet):
    """Solution set {z: Az = rhs}; empty when rhs is outside the range of A."""

    def __init__(self, A, rhs):
        self.A = np.atleast_2d(np.asarray(A, dtype=float))
        self.rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        self.dim = self.A.shape[1]
        z, *_ = np.linalg.lstsq(self.A, self.rhs, rcond=None)
        self._particular = z
        scale = max(1.0, float(np.abs(self.rhs).max(initial=0.0)))
        self._feasible = bool(np.linalg.norm(self.A @ z - self.rhs) <= 1e-9 * scale)

    def is_empty(self):
        return not self._feasible

    def dist(self, y, norm="euclidean"):
        return self.nearest(y, norm)[1]

    def nearest(self, y, norm="euclidean"):
        if not self._feasible:
            return None, INF
        y = as_vector(y, self.dim)
        if norm == "euclidean":
            corr, *_ = np.linalg.lstsq(self.A, self.rhs - self.A @ y, rcond=None)
            return y + corr, float(np.linalg.norm(corr))
        from scipy.optimize import linprog

        d = self.dim
        eye = np.eye(d)
        ones = np.ones((d, 1))
        A_ub = np.vstack([np.hstack([eye, -ones]), np.hstack([-eye, -ones])])
        b_ub = np.concatenate([y, -y])
        c = np.zeros(d + 1)
        c[-1] = 1.0
        res = linprog(
            c,
            A_ub=A_ub,
            b_ub=b_ub,
            A_eq=np.hstack([self.A, np.zeros((self.A.shape[0], 1))]),
            b_eq=self.rhs,
            bounds=[(None, None)] * d + [(0, None)],
            method="highs",
        )
        if not res.success:
            return None, INF
        return res.x[:d], float(res.x[-1])

    def translate(self, v):
        v = as_vector(v, self.dim)
        return AffineSet(self.A, self.rhs + self.A @ v)

    def members_near(self, center, radius, count, rng, norm="euclidean"):
        if not self._feasible:
            return []
        center = as_vector(center, self.dim)
        corr, *_ = np.linalg.lstsq(self.A, self.rhs - self.A @ center, rcond=None)
        base = center + corr
        out = [base]
        # jitter within the null space
        _, s, vt = np.linalg.svd(self.A)
        rank = int((s > 1e-12 * max(1.0, s.max(initial=0.0))).sum())
        null = vt[rank:]
        for _ in range(count - 1):
            if null.shape[0] == 0:
                break
            coef = np.array([rng.uniform(-radius, radius) for _ in range(null.shape[0])])
            out.append(base + null.T @ coef)
        return [p for p in out if vec_dist(p, center, norm) <= radius + 1e-12]

    def interval_structure_1d(self):
        if self.dim != 1:
            raise UnsupportedOperation("not one-dimensional")
        if not self._feasible:
            return [], []
        if np.abs(self.A).max() <= 1e-14:
            return [], [(-INF, INF)]
        return [float(self._particular[0])], []


class PolyhedralSet(ValueSet):
    """Finite union of convex polyhedra {z: Az <= b} in half-space form."""

    def __init__(self, pieces, dim: int):
        self.pieces = [
            (np.atleast_2d(np.asarray(A, dtype=float)), np.atleast_1d(np.asarray(b, dtype=float)))
            for A, b in pieces
        ]
        self.dim = dim

    def dist(self, y, norm="euclidean"):
        return self.nearest(y, norm)[1]

    def nearest(self, y, norm="euclidean"):
        y = as_vector(y, self.dim)
        best: tuple = (None, INF)
        for A, b in self.pieces:
            if norm == "euclidean":
                proj = _project_polyhedron(y, A, b)
                if proj is not None and proj[1] < best[1]:
                    best = proj
            else:
                pt, d = _chebyshev_to_polyhedron(y, A, b)
                if d < best[1]:
                    best = (pt, d)
        return best

    def is_empty(self):
        return all(_project_polyhedron(np.zeros(self.dim), A, b) is None for A, b in self.pieces)

    def translate(self, v):
        v = as_vector(v, self.dim)
        return PolyhedralSet([(A, b + A @ v) for A, b in self.pieces], self.dim)

    def members_near(self, center, radius, count, rng, norm="euclidean"):
        center = as_vector(center, self.dim)
        out = []
        for A, b in self.pieces:
            proj = _project_polyhedron(center, A, b)
            if proj is not None and vec_dist(proj[0], center, norm) <= radius + 1e-12:
                out.append(proj[0])
        k = 0
        while len(out) < count and k < 4 * count:
            p = rng.in_ball(center, radius, norm)
            for A, b in self.pieces:
                proj = _project_polyhedron(p, A, b)
                if proj is not None and vec_dist(proj[0], center, norm) <= radius + 1e-12:
                    out.append(proj[0])
                    break
            k += 1
        return out[:count]

    def interval_structure_1d(self):
        if self.dim != 1:
            raise UnsupportedOperation("not one-dimensional")
        points, intervals = [], []
        for A, b in self.pieces:
            lo, hi = -INF, INF
            empty = False
            for coef, off in zip(A[:, 0], b):
                if abs(coef) <= 1e-14:
                    if off < -1e-12:
                        empty = True
                        break
                elif coef > 0:
                    hi = min(hi, off / coef)
                else:
                    lo = max(lo, off / coef)
            if empty or lo > hi + 1e-12:
                continue
            if abs(hi - lo) <= 1e-14:
                points.append(lo)
            else:
                intervals.append((lo, hi))
        return points, intervals


class UnionSet(ValueSet):
    def __init__(self, parts: list[ValueSet]):
        parts = [p for p in parts if not p.is_empty()]
        if not parts:
            raise ValueError("use EmptySet for an empty union")
        self.parts = parts
        self.dim = parts[0].dim

    def dist(self, y, norm="euclidean"):
        return min(p.dist(y, norm) for p in self.parts)

    def nearest(self, y, norm="euclidean"):
        best: tuple = (None, INF)
        for p in self.parts:
            cand = p.nearest(y, norm)
            if cand[1] < best[1]:
                best = cand
        return best

    def translate(self, v):
        return UnionSet([p.translate(v) for p in self.parts])

    def members_near(self, center, radius, count, rng, norm="euclidean"):
        out = []
        for p in self.parts:
            out.extend(p.members_near(center, radius, max(1, count // len(self.parts)), rng, norm))
        return out[:count]

    def interval_structure_1d(self):
        points, intervals = [], []
        for p in self.parts:
            pp, ii = p.interval_structure_1d()
            points.extend(pp)
            intervals.extend(ii)
        return points, intervals


# ---------------------------------------------------------------------------
# set-valued map variants


class SetMap:
    """Base class; subclasses fix domain dim ``n`` and range dim ``m``."""

    n: int
    m: int

    def _value_set(self, x: np.ndarray) -> ValueSet:
        raise NotImplementedError

    def value_set(self, x) -> ValueSet:
        return self._value_set(as_vector(x, self.n))

    def describe(self) -> str:
        return type(self).__name__


class SingleValued(SetMap):
    def __init__(self, fn, n: int = 1, m: int = 1, vectorized: bool = True):
        self.fn = fn
        self.n = n
        self.m = m
        self.vectorized = vectorized

    def __call__(self, x):
        return as_vector(self.fn(as_vector(x, self.n)), self.m)

    def _value_set(self, x):
        return FinitePoints([self(x)])


class FiniteValued(SetMap):
    """Finitely many branch values per point; branches are callables."""

    def __init__(self, branches, n: int = 1, m: int = 1, vectorized: bool = True, branch_inverses=None):
        if not branches:
            raise ValueError("need at least one branch")
        self.branches = list(branches)
        self.n = n
        self.m = m
        self.vectorized = vectorized
        self.branch_inverses = branch_inverses

    def _value_set(self, x):
        return FinitePoints([as_vector(b(x), self.m) for b in self.branches])


class Epigraph(SetMap):
    """x -> {y in R : y >= f(x)} for a scalar function f."""

    def __init__(self, f, n: int = 1, vectorized: bool = True):
        self.f = f
        self.n = n
        self.m = 1
        self.vectorized = vectorized

    def _value_set(self, x):
        return BoxSet([float(np.asarray(self.f(x)).reshape(-1)[0])], [INF])


class LinearOp(SetMap):
    def __init__(self, matrix):
        self.A = np.atleast_2d(np.asarray(matrix, dtype=float))
        self.m, self.n = self.A.shape

    def _value_set(self, x):
        return FinitePoints([self.A @ x])


class NormalConeBox(SetMap):
    """x -> normal cone to the box [lo, hi] at x (empty outside the box)."""

    def __init__(self, lo, hi, atol: float = 1e-9):
        self.lo = as_vector(lo)
        self.hi = as_vector(hi, self.lo.size)
        if np.any(self.lo > self.hi):
            raise ValueError("box lower bounds exceed upper bounds")
        self.n = self.m = self.lo.size
        self.atol = atol

    def _value_set(self, x):
        if np.any(x < self.lo - self.atol) or np.any(x > self.hi + self.atol):
            return EmptySet(self.m)
        lo = np.zeros(self.m)
        hi = np.zeros(self.m)
        for i in range(self.m):
            at_lo = x[i] <= self.lo[i] + self.atol
            at_hi = x[i] >= self.hi[i] - self.atol
            if at_lo and at_hi:
                lo[i], hi[i] = -INF, INF
            elif at_lo:
                lo[i], hi[i] = -INF, 0.0
            elif at_hi:
                lo[i], hi[i] = 0.0, INF
            else:
                lo[i] = hi[i] = 0.0
        return BoxSet(lo, hi)


class PolyhedralGraph(SetMap):
    """Graph given as a finite union of convex polyhedra in R^{n+m}."""

    def __init__(self, pieces, n: int, m: int):
        self.pieces = [
            (np.atleast_2d(np.asarray(A, dtype=float)), np.atleast_1d(np.asarray(b, dtype=float)))
            for A, b in pieces
        ]
        self.n = n
        self.m = m
        for A, b in self.pieces:
            if A.shape[1] != n + m:
                raise DimensionMismatch("piece half-spaces must live in R^{n+m}")
            if _project_polyhedron(np.zeros(n + m), A, b) is None:
                raise ValueError("empty polyhedral piece")

    def _value_set(self, x):
        slices = []
        for A, b in self.pieces:
            Ax, Ay = A[:, : self.n], A[:, self.n:]
            slices.append((Ay, b - Ax @ x))
        ps = PolyhedralSet(slices, self.m)
        return ps if not ps.is_empty() else EmptySet(self.m)


class SumMap(SetMap):
    def __init__(self, F: SetMap, G: SetMap):
        if F.n != G.n or F.m != G.m:
            raise DimensionMismatch("summands need matching domain/range dimensions")
        self.F = F
        self.G = G
        self.n, self.m = F.n, F.m

    def _value_set(self, x):
        vf = self.F._value_set(x)
        vg = self.G._value_set(x)
        if vf.is_empty() or vg.is_empty():
            return EmptySet(self.m)
        if isinstance(vf, FinitePoints) and isinstance(vg, FinitePoints):
            pts = (vf.points[:, None, :] + vg.points[None, :, :]).reshape(-1, self.m)
            return FinitePoints(pts)
        if isinstance(vf, FinitePoints):
            return UnionSet([vg.translate(p) for p in vf.points])
        if isinstance(vg, FinitePoints):
            return UnionSet([vf.translate(p) for p in vg.points])
        if isinstance(vf, BoxSet) and isinstance(vg, BoxSet):
            return BoxSet(vf.lo + vg.lo, vf.hi + vg.hi)
        raise UnsupportedOperation("Minkowski sum needs a finite operand or two boxes")


class InverseView(SetMap):
    """The inverse map y -> F^{-1}(y), sharing the graph of the base map."""

    def __init__(self, base: SetMap):
        self.base = base
        self.n, self.m = base.m, base.n

    def _value_set(self, y):
        base = self.base
        if isinstance(base, InverseView):
            return base.base._value_set(y)
        if isinstance(base, LinearOp):
            return AffineSet(base.A, y)
        if isinstance(base, NormalConeBox):
            lo = np.empty(self.m)
            hi = np.empty(self.m)
            for i in range(self.m):
                if y[i] > base.atol:
                    lo[i] = hi[i] = base.hi[i]
                elif y[i] < -base.atol:
                    lo[i] = hi[i] = base.lo[i]
                else:
                    lo[i], hi[i] = base.lo[i], base.hi[i]
            if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
                raise UnsupportedOperation("inverse of an unbounded-box normal cone")
            return BoxSet(lo, hi)
        if isinstance(base, PolyhedralGraph):
            swapped = []
            for A, b in base.pieces:
                swapped.append((np.hstack([A[:, base.n:], A[:, : base.n]]), b))
            pg = PolyhedralGraph(swapped, base.m, base.n)
            return pg._value_set(y)
        raise UnsupportedOperation(f"no analytic inverse for {base.describe()}")


# ---------------------------------------------------------------------------
# oracles


def values(F: SetMap, x) -> ValueSet:
    """Value set F(x); raises DomainError when x is outside the domain."""
    vs = F.value_set(x)
    if vs.is_empty():
        raise DomainError("point outside the domain of the map")
    return vs


def dist_to_value_set(y, F: SetMap, x, norm: str = "euclidean") -> float:
    """Distance from y to F(x); +inf when F(x) is empty."""
    return F.value_set(x).dist(as_vector(y, F.m), norm)


def dist_to_value_set_batch(y, F: SetMap, X: np.ndarray, norm: str = "euclidean") -> np.ndarray:
    """Vectorized dist_to_value_set over rows of X (shape (k, n))."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = as_vector(y, F.m)
    fast = _batch_fast_path(y, F, X, norm)
    if fast is not None:
        return fast
    return np.array([dist_to_value_set(y, F, row, norm) for row in X])


def _eval_vectorized(fn, X: np.ndarray, n: int, m: int):
    """Try to evaluate a callable on a batch of points; None on failure."""
    try:
        arg = X[:, 0] if n == 1 else X
        out = np.asarray(fn(arg), dtype=float)
    except Exception:
        return None
    k = X.shape[0]
    if m == 1:
        if out.shape == (k,):
            return out.reshape(k, 1)
        if out.shape == (k, 1):
            return out
        return None
    if out.shape == (k, m):
        return out
    if out.shape == (m, k):
        return out.T
    return None


def _batch_fast_path(y, F, X, norm):
    if isinstance(F, LinearOp):
        diff = X @ F.A.T - y
        return np.linalg.norm(diff, axis=1) if norm == "euclidean" else np.abs(diff).max(axis=1)
    if isinstance(F, SingleValued) and F.vectorized:
        out = _eval_vectorized(F.fn, X, F.n, F.m)
        if out is None:
            return None
        diff = out - y
        return np.linalg.norm(diff, axis=1) if norm == "euclidean" else np.abs(diff).max(axis=1)
    if isinstance(F, FiniteValued) and F.vectorized:
        dists = []
        for b in F.branches:
            out = _eval_vectorized(b, X, F.n, F.m)
            if out is None:
                return None
            diff = out - y
            dists.append(np.linalg.norm(diff, axis=1) if norm == "euclidean" else np.abs(diff).max(axis=1))
        return np.min(dists, axis=0)
    if isinstance(F, Epigraph) and F.vectorized:
        out = _eval_vectorized(F.f, X, F.n, 1)
        if out is None:
            return None
        return np.maximum(out[:, 0] - y[0], 0.0)
    if isinstance(F, SumMap):
        # fast only when one side is single-valued and vectorizable
        for first, second in ((F.F, F.G), (F.G, F.F)):
            if isinstance(first, (SingleValued, LinearOp)):
                if isinstance(first, LinearOp):
                    shift = X @ first.A.T
                else:
                    if not first.vectorized:
                        continue
                    shift = _eval_vectorized(first.fn, X, first.n, first.m)
                    if shift is None:
                        continue
                return np.array(
                    [second.value_set(row).dist(y - s, norm) for row, s in zip(X, shift)]
                )
    return None


def _grid_axes(center: np.ndarray, radius: float, resolution: int) -> np.ndarray:
    axes = [np.linspace(c - radius, c + radius, resolution) for c in center]
    if center.size == 1:
        return axes[0].reshape(-1, 1)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def scalar_branches(F: SetMap):
    """Vectorized scalar branch callables for 1D->1D maps, or None."""
    if F.n != 1 or F.m != 1:
        return None
    if isinstance(F, LinearOp):
        a = float(F.A[0, 0])
        return [lambda x, a=a: a * np.asarray(x, dtype=float)]
    if isinstance(F, SingleValued) and F.vectorized:
        return [F.fn]
    if isinstance(F, FiniteValued) and F.vectorized:
        return list(F.branches)
    if isinstance(F, SumMap):
        bf = scalar_branches(F.F)
        bg = scalar_branches(F.G)
        if bf is None or bg is None:
            return None
        return [lambda x, f=f, g=g: np.asarray(f(x), dtype=float) + np.asarray(g(x), dtype=float) for f in bf for g in bg]
    return None


def _bisect_root(fn, a: float, b: float, fa: float, fb: float, iters: int = 60) -> float:
    """Root of a continuous scalar function bracketed by [a, b]."""
    for _ in range(iters):
        mid = 0.5 * (a + b)
        fm = float(fn(np.asarray(mid)))
        if fa * fm <= 0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def _preimage_1d_branches(x0, branches, y0: float, grid: np.ndarray, norm: str, tol_feas: float):
    """Exact-ish preimage (dist, point) for 1D maps with continuous branches."""
    xs = grid[:, 0]
    h = float(xs[1] - xs[0]) if xs.size > 1 else 1.0
    best = INF
    arg = None
    found = False
    for b in branches:
        try:
            vals = np.asarray(b(xs), dtype=float).reshape(-1) - y0
        except Exception:
            return None
        if vals.shape != xs.shape or not np.all(np.isfinite(vals)):
            return None
        branch_found = False
        hit = np.abs(vals) <= tol_feas
        if np.any(hit):
            found = branch_found = True
            i = int(np.abs(xs[np.nonzero(hit)[0]] - x0[0]).argmin())
            cand = float(xs[np.nonzero(hit)[0][i]])
            if abs(cand - x0[0]) < best:
                best, arg = abs(cand - x0[0]), np.array([cand])
        sign_change = vals[:-1] * vals[1:] < 0
        for i in np.nonzero(sign_change)[0]:
            root = _bisect_root(lambda x, b=b: float(np.asarray(b(x))) - y0, xs[i], xs[i + 1], vals[i], vals[i + 1])
            found = branch_found = True
            if abs(root - float(x0[0])) < best:
                best, arg = abs(root - float(x0[0])), np.array([root])
        if not branch_found:
            # tangential roots never change sign: descend on |b - y| from the
            # flattest grid points, but only where the local variation makes
            # an in-cell root plausible
            for i in np.argsort(np.abs(vals))[:2]:
                local_delta = max(
                    abs(vals[i] - vals[max(i - 1, 0)]),
                    abs(vals[min(i + 1, vals.size - 1)] - vals[i]),
                )
                fx = abs(float(vals[i]))
                if fx > 2.0 * local_delta + tol_feas:
                    continue
                x = float(xs[i])
                step = h
                for _ in range(60):
                    if fx <= tol_feas / 4 or step < 1e-18:
                        break
                    moved = False
                    for s in (step, -step):
                        fz = abs(float(np.asarray(b(np.asarray(x + s)))) - y0)
                        if fz < fx:
                            x, fx = x + s, fz
                            moved = True
                    if not moved:
                        step *= 0.5
                if fx <= tol_feas:
                    found = True
                    if abs(x - float(x0[0])) < best:
                        best, arg = abs(x - float(x0[0])), np.array([x])
    return (best, arg) if found else (INF, None)


def _preimage_1d_epigraph(x0, F, y0: float, grid: np.ndarray, tol_feas: float):
    """Preimage (dist, point) for an epigraph map: nearest x with f(x) <= y0."""
    xs = grid[:, 0]
    try:
        vals = np.asarray(F.f(xs), dtype=float).reshape(-1) - y0
    except Exception:
        vals = np.array([float(F.f(np.array([x]))) - y0 for x in xs])
    feas = vals <= tol_feas
    if not np.any(feas):
        return INF, None
    i = int(np.abs(xs[np.nonzero(feas)[0]] - x0[0]).argmin())
    arg = np.array([xs[np.nonzero(feas)[0][i]]])
    best = float(abs(arg[0] - x0[0]))
    # sharpen across feasibility boundaries adjacent to the best grid points
    change = feas[:-1] != feas[1:]
    for i in np.nonzero(change)[0]:
        a, b_ = xs[i], xs[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa * fb < 0:
            root = _bisect_root(lambda x: float(np.asarray(F.f(x))) - y0, a, b_, fa, fb)
            if abs(root - float(x0[0])) < best:
                best, arg = abs(root - float(x0[0])), np.array([root])
    return best, arg


def _coordinate_polish(objective, accept, x0, step0, steps, lo=None, hi=None, target=None):
    """Greedy coordinate descent with halving steps; ``accept`` gates moves."""
    x = np.asarray(x0, dtype=float).copy()
    fx = objective(x)
    step = step0
    for _ in range(steps):
        if target is not None and fx <= target:
            break
        improved = False
        for i in range(x.size):
            for s in (step, -step):
                z = x.copy()
                z[i] += s
                if lo is not None:
                    z[i] = min(max(z[i], lo[i]), hi[i])
                fz = objective(z)
                if fz < fx and accept(z):
                    x, fx = z, fz
                    improved = True
        if not improved:
            step *= 0.5
    return x, fx


def preimage_search(
    x0,
    F: SetMap,
    y,
    region: Ball | None = None,
    tol_feas: float = TOL_FEAS,
    norm: str = "euclidean",
    resolution: int = 401,
    refine_steps: int = 25,
):
    """(distance, point) from x0 to F^{-1}(y) = {x: y in F(x)}.

    Analytic for LinearOp / NormalConeBox / InverseView (global answer);
    otherwise a grid search over ``region`` with feasibility restoration and
    a polish pass toward x0.  Returns (+inf, None) when no feasible point is
    found.
    """
    x0 = as_vector(x0, F.n)
    y = as_vector(y, F.m)

    if isinstance(F, LinearOp):
        return AffineSet(F.A, y).nearest(x0, norm)[::-1]
    if isinstance(F, NormalConeBox):
        try:
            return InverseView(F)._value_set(y).nearest(x0, norm)[::-1]
        except UnsupportedOperation:
            pass
    if isinstance(F, InverseView):
        # preimage of the inverse is the forward value set of the base
        return F.base.value_set(y).nearest(x0, norm)[::-1]
    if isinstance(F, FiniteValued) and F.branch_inverses is not None:
        best, arg = INF, None
        for inv in F.branch_inverses:
            try:
                cand = as_vector(inv(y), F.n)
            except (DomainError, ValueError):
                continue
            if dist_to_value_set(y, F, cand, norm) <= tol_feas:
                d = vec_dist(cand, x0, norm)
                if d < best:
                    best, arg = d, cand
        return best, arg

    if F.n > 2:
        raise UnsupportedDimension(
            "grid preimage search supports n <= 2; higher dimensions need an analytic variant"
        )
    if region is None:
        region = Ball(x0, 1.0)
    center = as_vector(region.center, F.n)
    per_axis = resolution if F.n == 1 else max(21, int(math.sqrt(resolution)) * 2 + 1)
    grid = _grid_axes(center, region.radius, per_axis)
    h = 2.0 * region.radius / max(per_axis - 1, 1)

    if F.n == 1 and F.m == 1:
        if isinstance(F, Epigraph) and F.vectorized:
            d, p = _preimage_1d_epigraph(x0, F, float(y[0]), grid, tol_feas)
            return d, p
        branches = scalar_branches(F)
        if branches is not None:
            out = _preimage_1d_branches(x0, branches, float(y[0]), grid, norm, tol_feas)
            if out is not None:
                return out

    feas = dist_to_value_set_batch(y, F, grid, norm)
    dists = np.array([vec_dist(row, x0, norm) for row in grid])

    def objective(x):
        return vec_dist(x, x0, norm)

    def feasible(x):
        return dist_to_value_set(y, F, x, norm) <= tol_feas

    best, arg = INF, None
    feasible_mask = feas <= tol_feas
    if np.any(feasible_mask):
        order = np.argsort(np.where(feasible_mask, dists, INF))[:4]
        for i in order:
            if not feasible_mask[i]:
                continue
            x, d = _coordinate_polish(objective, feasible, grid[i], h, refine_steps)
            if d < best:
                best, arg = d, x
        return best, arg

    # no grid point is feasible: restore feasibility from the most promising
    # local minima, then polish toward x0
    order = _local_minima_indices(feas, per_axis, F.n, limit=4 if F.n == 1 else 8)

    def infeasibility(x):
        return dist_to_value_set(y, F, x, norm)

    for i in order:
        x, r = _coordinate_polish(
            infeasibility, lambda _z: True, grid[i], h, refine_steps + 35, target=tol_feas / 4
        )
        if r <= tol_feas:
            x, d = _coordinate_polish(objective, feasible, x, h, refine_steps)
            if d < best:
                best, arg = d, x
    return best, arg


def _local_minima_indices(feas: np.ndarray, per_axis: int, n: int, limit: int) -> list[int]:
    if n == 1:
        f = feas
        idx = [
            i
            for i in range(f.size)
            if (i == 0 or f[i] <= f[i - 1]) and (i == f.size - 1 or f[i] <= f[i + 1])
        ]
    else:
        idx = list(np.argsort(feas)[: 4 * limit])
    idx.sort(key=lambda i: feas[i])
    return idx[:limit]


def dist_to_preimage(
    x0,
    F: SetMap,
    y,
    region: Ball | None = None,
    tol_feas: float = TOL_FEAS,
    norm: str = "euclidean",
    resolution: int = 401,
    refine_steps: int = 25,
) -> float:
    """Distance from x0 to F^{-1}(y); see :func:`preimage_search`."""
    return preimage_search(x0, F, y, region, tol_feas, norm, resolution, refine_steps)[0]


# ---------------------------------------------------------------------------
# graph sampling


def _domain_samples(center: np.ndarray, radius: float, count: int, rng: SplitMix64) -> list[np.ndarray]:
    if center.size == 1:
        pts = shell_points_1d(float(center[0]), 0.0, radius, count)
        return [np.array([p]) for p in pts]
    return [rng.in_ball(center, radius, "max") for _ in range(count)]


def graph_sample(
    F: SetMap,
    center: GraphPoint,
    radius: float,
    count: int,
    seed: int = 42,
    norm: str = "euclidean",
    tol_feas: float = TOL_FEAS,
) -> list[GraphPoint]:
    """Seeded graph points within the product ball of ``radius`` around ``center``.

    Every returned point is feasibility-checked; an empty list means the graph
    was not seen in the region (which is not an error).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = SplitMix64(derive_seed(seed, "graph_sample"))
    cx, cy = as_vector(center.x, F.n), as_vector(center.y, F.m)
    out: list[GraphPoint] = []

    def push(x, y):
        if vec_dist(x, cx, norm) <= radius + 1e-12 and vec_dist(y, cy, norm) <= radius + 1e-12:
            if dist_to_value_set(y, F, x, norm) <= tol_feas:
                out.append(GraphPoint(x, y))

    if isinstance(F, InverseView):
        inner = graph_sample(F.base, GraphPoint(cy, cx), radius, count, seed, norm, tol_feas)
        return [GraphPoint(p.y, p.x) for p in inner]

    if isinstance(F, (SingleValued, LinearOp)):
        for x in _domain_samples(cx, radius, 3 * count, rng):
            y = F.A @ x if isinstance(F, LinearOp) else as_vector(F.fn(x), F.m)
            push(x, y)
            if len(out) >= count:
                break
    elif isinstance(F, FiniteValued):
        for x in _domain_samples(cx, radius, 3 * count, rng):
            vs = F._value_set(x)
            for y in vs.points:
                push(x, y)
            if len(out) >= count:
                break
    elif isinstance(F, Epigraph):
        for j, x in enumerate(_domain_samples(cx, radius, 3 * count, rng)):
            fx = float(np.asarray(F.f(x)).reshape(-1)[0])
            if abs(fx - cy[0]) <= radius:
                push(x, np.array([fx]))  # boundary sample
            if j % 2 == 0:
                lo = max(fx, cy[0] - radius)
                hi = cy[0] + radius
                if lo <= hi:
                    push(x, np.array([rng.uniform(lo, hi)]))
            if len(out) >= count:
                break
    elif isinstance(F, (NormalConeBox, PolyhedralGraph, SumMap)):
        for x in _domain_samples(cx, radius, 3 * count, rng):
            vs = F._value_set(x)
            if vs.is_empty():
                continue
            try:
                ys = vs.members_near(cy, radius, 2, rng, norm)
            except UnsupportedOperation:
                ys = []
            for y in ys:
                push(x, y)
            if len(out) >= count:
                break
        if isinstance(F, PolyhedralGraph) and len(out) < count:
            # direct projections of ambient samples onto the graph pieces
            for _ in range(3 * count):
                z = np.concatenate([rng.in_ball(cx, radius, norm), rng.in_ball(cy, radius, norm)])
                for A, b in F.pieces:
                    proj = _project_polyhedron(z, A, b)
                    if proj is not None:
                        push(proj[0][: F.n], proj[0][F.n:])
                if len(out) >= count:
                    break
    else:
        raise UnsupportedOperation(f"graph sampling not supported for {F.describe()}")
    return out[:count]


# ---------------------------------------------------------------------------
# JSON construction


def _compile_branch(entry, n: int, m: int):
    exprs = [entry] if isinstance(entry, str) else list(entry)
    if len(exprs) != m:
        raise ValueError(f"branch needs {m} coordinate expressions, got {len(exprs)}")
    fns = [compile_expression(e, n) for e in exprs]
    if m == 1:
        return fns[0]

    def branch(x):
        x = np.asarray(x, dtype=float)
        return np.array([f(x) for f in fns])

    return branch


def build_setmap(desc: dict) -> SetMap:
    """Construct a SetMap from its JSON description (strict keys)."""
    if not isinstance(desc, dict) or "kind" not in desc:
        raise ValueError("set map description needs a 'kind' tag")
    kind = desc["kind"]
    known = {
        "single": {"kind", "expr", "n", "m"},
        "finite": {"kind", "branches", "n", "m"},
        "epigraph": {"kind", "expr", "n"},
        "linear": {"kind", "matrix"},
        "normal_cone_box": {"kind", "lo", "hi"},
        "polyhedral_graph": {"kind", "pieces", "n", "m"},
        "sum": {"kind", "f", "g"},
        "inverse": {"kind", "base"},
    }
    if kind not in known:
        raise ValueError(f"unknown set map kind {kind!r}")
    extra = set(desc) - known[kind]
    if extra:
        raise ValueError(f"unknown keys for kind {kind!r}: {sorted(extra)}")
    if kind == "single":
        n, m = int(desc.get("n", 1)), int(desc.get("m", 1))
        return SingleValued(_compile_branch(desc["expr"], n, m), n, m)
    if kind == "finite":
        n, m = int(desc.get("n", 1)), int(desc.get("m", 1))
        branches = [_compile_branch(b, n, m) for b in desc["branches"]]
        return FiniteValued(branches, n, m)
    if kind == "epigraph":
        n = int(desc.get("n", 1))
        return Epigraph(compile_expression(desc["expr"], n), n)
    if kind == "linear":
        return LinearOp(np.asarray(desc["matrix"], dtype=float))
    if kind == "normal_cone_box":
        return NormalConeBox(desc["lo"], desc["hi"])
    if kind == "polyhedral_graph":
        pieces = [(p["normals"], p["offsets"]) for p in desc["pieces"]]
        return PolyhedralGraph(pieces, int(desc["n"]), int(desc["m"]))
    if kind == "sum":
        return SumMap(build_setmap(desc["f"]), build_setmap(desc["g"]))
    return InverseView(build_setmap(desc["base"]))
