"""Constructive covering machinery.

The Picard solver iterates u -> B(A(tu) - f(xbar + tu) + y)/t from u = 0,
the fixed-point construction that witnesses covering for approximately
linear maps; a fixed point yields f(xbar + tu) = y with the solution inside
the prescribed ball.  Existence is guaranteed under the covering hypotheses
but Picard convergence is not, so every check carries a grid fallback
(n <= 2) and explicit failure accounting.

Also here: calm selections of f^{-1} built from the same solver, and the
relaxed one-sided Lipschitz (ROSL) covering checks for set-valued maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import STRICT_SLACK, TOL_FEAS, Ball, GraphPoint, as_vector
from .moduli import LiminfSchedule, check_on_graph, estimate_modulus, linear_moduli
from .rng import SplitMix64, derive_seed, sphere_directions
from .setmaps import (
    INF,
    BoxSet,
    FinitePoints,
    LinearOp,
    PolyhedralSet,
    SetMap,
    SingleValued,
    UnionSet,
    UnsupportedOperation,
    ValueSet,
    dist_to_value_set,
    graph_sample,
    preimage_search,
)

#: covering conclusions pass within this relative plus absolute tolerance
COVER_RTOL = 0.02
COVER_ATOL = 1e-7


@dataclass(frozen=True)
class PseudoInverse:
    """Right inverse B = A^T (A A^T)^{-1} of a surjective matrix A."""

    A: np.ndarray
    B: np.ndarray
    sur_A: float

    @property
    def norm(self) -> float:
        return float(np.linalg.svd(self.B, compute_uv=False)[0])


def pseudo_inverse(A) -> PseudoInverse:
    """Construct A^T (A A^T)^{-1}; raises for rank-deficient A."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    svals = np.linalg.svd(A, compute_uv=False)
    if m > n or svals[m - 1] <= max(m, n) * svals[0] * np.finfo(float).eps:
        raise ValueError("matrix is not surjective (rank < m)")
    B = np.linalg.solve(A @ A.T, A).T
    pinv = PseudoInverse(A, B, float(svals[m - 1]))
    resid = np.abs(A @ B - np.eye(m)).max()
    if resid > 1e-10:
        raise ValueError(f"A B deviates from the identity by {resid:.2e}")
    if abs(pinv.norm * pinv.sur_A - 1.0) > 1e-9 * max(1.0, pinv.norm):
        raise ValueError("reciprocal singular-value invariant violated")
    return pinv


@dataclass
class PicardResult:
    x: np.ndarray | None
    converged: bool
    method: str  # picard | grid | failed
    iterations: int
    residual: float

    def to_json_dict(self) -> dict:
        return {
            "x": None if self.x is None else [float(v) for v in self.x],
            "converged": self.converged,
            "method": self.method,
            "iterations": self.iterations,
            "residual": self.residual,
        }


def _fn_of(f) -> tuple:
    if isinstance(f, SingleValued):
        return (lambda x: as_vector(f.fn(x), f.m)), f.n, f.m
    if isinstance(f, LinearOp):
        return (lambda x: f.A @ x), f.n, f.m
    raise ValueError("expected a single-valued map")


def solve_preimage_picard(
    f: SetMap,
    A,
    xbar,
    y,
    t: float,
    max_iter: int = 200,
    tol: float = 1e-9,
    grid_resolution: int = 201,
) -> PicardResult:
    """Solve f(x) = y with x in B[xbar, t] by Picard iteration on the
    corrected fixed-point map, falling back to grid search for n <= 2.

    Success requires the residual test and the ball constraint; both are
    asserted on every successful return.
    """
    fn, n, m = _fn_of(f)
    pinv = pseudo_inverse(A)
    xbar = as_vector(xbar, n)
    y = as_vector(y, m)
    fx = fn(xbar)
    u = np.zeros(n)
    iterations = 0
    best_resid = INF
    for iterations in range(1, max_iter + 1):
        x = xbar + t * u
        resid = float(np.linalg.norm(fn(x) - y))
        best_resid = min(best_resid, resid)
        if resid <= tol and np.linalg.norm(u) <= 1.0 + 1e-9:
            result = PicardResult(x, True, "picard", iterations, resid)
            _assert_feasible(result, fn, y, xbar, t, tol)
            return result
        u = pinv.B @ (pinv.A @ (t * u) - (fn(x) - fx) + (y - fx)) / t
        if np.linalg.norm(u) > 4.0:
            break
    if n <= 2:
        from .moduli import _ball_grid

        grid = _ball_grid(xbar, t, grid_resolution if n == 1 else 41, "euclidean")
        resids = np.array([np.linalg.norm(fn(row) - y) for row in grid])
        i = int(resids.argmin())
        x = grid[i].copy()
        step = 2.0 * t / (grid_resolution - 1)
        resid = float(resids[i])
        for _ in range(40):
            improved = False
            for k in range(n):
                for s in (step, -step):
                    z = x.copy()
                    z[k] += s
                    if np.linalg.norm(z - xbar) > t:
                        continue
                    rz = float(np.linalg.norm(fn(z) - y))
                    if rz < resid:
                        x, resid = z, rz
                        improved = True
            if not improved:
                step *= 0.5
        if resid <= tol:
            result = PicardResult(x, True, "grid", iterations, resid)
            _assert_feasible(result, fn, y, xbar, t, tol)
            return result
        return PicardResult(None, False, "failed", iterations, resid)
    return PicardResult(None, False, "failed", iterations, best_resid)


def _assert_feasible(result: PicardResult, fn, y, xbar, t, tol):
    assert result.x is not None
    assert np.linalg.norm(fn(result.x) - y) <= tol * (1 + 1e-6), "solver returned an infeasible point"
    assert np.linalg.norm(result.x - xbar) <= t * (1 + 1e-9) + 1e-15, "solver left the prescribed ball"


@dataclass
class CoveringReport:
    check: str
    constants: dict
    t_grid: list[float]
    attained: list[dict] = field(default_factory=list)
    unattained: list[dict] = field(default_factory=list)
    condition_violations: list[dict] = field(default_factory=list)
    verdict: str = "pass"
    seed: int = 42
    notes: list[str] = field(default_factory=list)

    def finalize(self) -> "CoveringReport":
        if self.verdict == "rejected":
            return self
        self.verdict = "pass" if not (self.unattained or self.condition_violations) else "fail"
        return self

    @property
    def picard_success_rate(self) -> float:
        solved = [a for a in self.attained if a.get("method") in ("picard", "grid")]
        if not solved:
            return 0.0
        return sum(1 for a in solved if a["method"] == "picard") / len(solved)

    def to_json_dict(self) -> dict:
        enc = lambda v: "inf" if isinstance(v, float) and v == INF else v
        return {
            "check": self.check,
            "constants": {k: enc(v) for k, v in self.constants.items()},
            "t_grid": self.t_grid,
            "attained": self.attained,
            "unattained": self.unattained,
            "condition_violations": self.condition_violations,
            "verdict": self.verdict,
            "seed": self.seed,
            "notes": self.notes,
        }


def covering_check_kaluza(
    f: SetMap,
    A,
    xbar,
    c: float,
    r: float,
    samples: int = 48,
    seed: int = 42,
    t_grid: list[float] | None = None,
    calm_override: float | None = None,
) -> CoveringReport:
    """Check B[f(xbar), c t] subset f(B[xbar, t]) constructively.

    Rejected (not failed) when c is not below sur A minus the estimated
    calmness of f - A at xbar, since the covering guarantee needs that
    margin.  Each sampled target records its solver provenance.
    """
    fn, n, m = _fn_of(f)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    xbar = as_vector(xbar, n)
    sur_A = linear_moduli(A).sur
    if calm_override is not None:
        calm_est = calm_override
    else:
        diff = SingleValued(lambda x: fn(as_vector(x, n)) - A @ as_vector(x, n), n, m, vectorized=False)
        calm_est = estimate_modulus(
            "calm", diff, GraphPoint(xbar, fn(xbar) - A @ xbar),
            LiminfSchedule(r0=min(0.1, r), rho=0.5, shells=6, samples_per_shell=32),
            seed=derive_seed(seed, "calm"),
        ).value
    report = CoveringReport(
        check="covering_kaluza",
        constants={"c": c, "r": r, "sur_A": sur_A, "calm_diff": calm_est},
        t_grid=list(t_grid) if t_grid else [r * k / 4 for k in range(1, 5)],
        seed=seed,
    )
    if c >= sur_A - calm_est:
        report.verdict = "rejected"
        report.notes.append(
            f"precondition c < sur A - calm(f-A) violated: c={c:.6g}, sur A={sur_A:.6g}, calm={calm_est:.6g}"
        )
        return report
    fx = fn(xbar)
    rng = SplitMix64(derive_seed(seed, "targets"))
    per_t = max(1, samples // len(report.t_grid))
    for t in report.t_grid:
        targets = []
        dirs = sphere_directions(m, max(4, per_t // 3), derive_seed(seed, f"dirs{t}"))
        fracs = (0.35, 0.7, 1.0)
        for v in dirs:
            for frac in fracs:
                targets.append(fx + frac * c * t * np.asarray(v))
        while len(targets) < per_t:
            targets.append(rng.in_ball(fx, c * t, "euclidean"))
        for target in targets[:per_t]:
            res = solve_preimage_picard(f, A, xbar, target, t)
            entry = {
                "t": t,
                "target": [float(v) for v in target],
                "method": res.method,
                "iterations": res.iterations,
                "residual": res.residual,
            }
            if res.method == "grid":
                entry["grid_resolution"] = 201
            (report.attained if res.converged else report.unattained).append(entry)
    return report.finalize()


@dataclass
class SelectionTrace:
    pairs: list[dict]
    calm_ratio_max: float
    corrected_ratio_max: float
    calm_bound: float
    corrected_bound: float
    failures: int
    bounds_ok: bool
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "pairs": self.pairs,
            "calm_ratio_max": self.calm_ratio_max,
            "corrected_ratio_max": self.corrected_ratio_max,
            "calm_bound": self.calm_bound,
            "corrected_bound": self.corrected_bound,
            "failures": self.failures,
            "bounds_ok": self.bounds_ok,
            "seed": self.seed,
        }


def build_selection(
    f: SetMap,
    A,
    xbar,
    radius: float,
    samples: int = 48,
    seed: int = 42,
    calm_override: float | None = None,
    tol: float = 0.05,
) -> SelectionTrace:
    """Construct a calm selection sigma of f^{-1} near f(xbar) via Picard.

    Reports the worst calm ratio ||sigma(y) - xbar||/||y - ybar|| and the
    B-corrected ratio ||sigma(y) - xbar - B(y - ybar)||/||y - ybar||, checked
    against 1/(sur A - calm(f-A)) and calm/(sur A (sur A - calm(f-A))).
    """
    fn, n, m = _fn_of(f)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    xbar = as_vector(xbar, n)
    ybar = fn(xbar)
    pinv = pseudo_inverse(A)
    sur_A = pinv.sur_A
    if calm_override is not None:
        calm_est = calm_override
    else:
        diff = SingleValued(lambda x: fn(as_vector(x, n)) - A @ as_vector(x, n), n, m, vectorized=False)
        calm_est = estimate_modulus(
            "calm", diff, GraphPoint(xbar, ybar - A @ xbar),
            LiminfSchedule(r0=radius, rho=0.5, shells=6, samples_per_shell=32),
            seed=derive_seed(seed, "calm"),
        ).value
    if calm_est >= sur_A:
        raise ValueError("selection bounds need calm(f-A) < sur A")
    c = 0.95 * (sur_A - calm_est)
    rng = SplitMix64(derive_seed(seed, "selection"))
    pairs = []
    failures = 0
    r1_max = 0.0
    r2_max = 0.0
    dirs = sphere_directions(m, max(4, samples // 4), derive_seed(seed, "sel-dirs"))
    targets = [ybar + frac * radius * np.asarray(v) for v in dirs for frac in (0.25, 0.5, 1.0)]
    while len(targets) < samples:
        targets.append(rng.in_ball(ybar, radius, "euclidean"))
    for y in targets[:samples]:
        dy = float(np.linalg.norm(y - ybar))
        if dy <= 1e-14:
            continue
        t = dy / c
        res = solve_preimage_picard(f, A, xbar, y, t)
        if not res.converged:
            failures += 1
            continue
        sigma = res.x
        r1 = float(np.linalg.norm(sigma - xbar)) / dy
        r2 = float(np.linalg.norm(sigma - xbar - pinv.B @ (y - ybar))) / dy
        r1_max = max(r1_max, r1)
        r2_max = max(r2_max, r2)
        pairs.append({"y": [float(v) for v in y], "sigma": [float(v) for v in sigma], "calm_ratio": r1, "corrected_ratio": r2})
    calm_bound = 1.0 / (sur_A - calm_est)
    corrected_bound = calm_est / (sur_A * (sur_A - calm_est))
    ok = r1_max <= calm_bound + tol and r2_max <= corrected_bound + tol
    return SelectionTrace(pairs, r1_max, r2_max, calm_bound, corrected_bound, failures, bool(ok), seed)


# ---------------------------------------------------------------------------
# ROSL / strong-monotonicity covering checks


def _support_extremum(vs: ValueSet, d: np.ndarray, maximize: bool) -> float:
    """sup (or inf) of <d, y> over the value set; +-inf for unbounded sets."""
    sign = 1.0 if maximize else -1.0
    if isinstance(vs, FinitePoints):
        vals = vs.points @ d
        return float(vals.max() if maximize else vals.min())
    if isinstance(vs, BoxSet):
        total = 0.0
        for di, lo, hi in zip(d, vs.lo, vs.hi):
            pick = hi if di * sign > 0 else lo
            if di == 0:
                continue
            if not np.isfinite(pick):
                return sign * INF
            total += di * pick
        return total
    if isinstance(vs, UnionSet):
        vals = [_support_extremum(p, d, maximize) for p in vs.parts]
        return max(vals) if maximize else min(vals)
    if isinstance(vs, PolyhedralSet):
        if vs.dim == 1:
            pts, ivs = vs.interval_structure_1d()
            cands = list(pts) + [b for iv in ivs for b in iv]
            vals = [d[0] * c for c in cands if np.isfinite(c)]
            if any(not np.isfinite(c) for iv in ivs for c in iv):
                # a ray: unbounded on the side the ray opens toward
                for lo, hi in ivs:
                    if maximize and ((d[0] > 0 and hi == INF) or (d[0] < 0 and lo == -INF)):
                        return INF
                    if not maximize and ((d[0] > 0 and lo == -INF) or (d[0] < 0 and hi == INF)):
                        return -INF
            return max(vals) if maximize else min(vals)
        from scipy.optimize import linprog

        best = -sign * INF
        for A, b in vs.pieces:
            res = linprog(-sign * d, A_ub=A, b_ub=b, bounds=[(None, None)] * vs.dim, method="highs")
            if res.status == 3:  # unbounded
                return sign * INF
            if res.success:
                val = sign * float(-res.fun) if maximize else float(res.fun)
                val = float(d @ res.x)
                best = max(best, val) if maximize else min(best, val)
        return best
    raise UnsupportedOperation(f"support function unavailable for {type(vs).__name__}")


ROSL_CONDITIONS = ("C1", "C2", "ROSLw", "ROSL")


def rosl_check(
    F: SetMap,
    xbar,
    ybar,
    ell: float,
    r: float,
    condition: str = "C2",
    samples: int = 200,
    seed: int = 42,
    t_grid: list[float] | None = None,
) -> CoveringReport:
    """Verify a one-sided inner-product condition and its covering conclusion.

    C1/C2 certify B[ybar, ell t] subset F(B[xbar, t]) for t in (0, r];
    ROSLw certifies the distance bound ||x - xbar|| <= dist(y, F(xbar))/ell;
    ROSL certifies uniform covering around nearby graph points.  The inner
    existential over F(x) is solved by support-function extremization
    (closed form for finite sets and boxes, LP for polyhedral values).
    """
    if condition not in ROSL_CONDITIONS:
        raise ValueError(f"condition must be one of {ROSL_CONDITIONS}")
    if ell <= 0 or r <= 0:
        raise ValueError("need ell, r > 0")
    xbar = as_vector(xbar, F.n)
    ybar = as_vector(ybar, F.m)
    check_on_graph(F, GraphPoint(xbar, ybar))
    report = CoveringReport(
        check=f"rosl:{condition}",
        constants={"ell": ell, "r": r},
        t_grid=list(t_grid) if t_grid else [r * k / 3 for k in range(1, 4)],
        seed=seed,
    )
    rng = SplitMix64(derive_seed(seed, "rosl"))
    region = 2 * r if condition == "ROSL" else r

    def exists_inner(x, anchor, d, need):
        """max over y in F(x) of <anchor - y, d> >= need, via support inf."""
        vs = F.value_set(x)
        if vs.is_empty():
            return False, INF
        inner_min = _support_extremum(vs, d, maximize=False)
        val = float(anchor @ d) - inner_min
        return val >= need - STRICT_SLACK, val

    for _ in range(samples):
        xv = rng.in_ball(xbar, region, "euclidean")
        d = xv - xbar
        nd2 = float(d @ d)
        if condition == "C1":
            vs = F.value_set(xv)
            if vs.is_empty():
                report.condition_violations.append({"x": list(xv), "reason": "empty value"})
                continue
            val = _support_extremum(vs, d, maximize=True) - float(ybar @ d)
            if val < ell * nd2 - STRICT_SLACK:
                report.condition_violations.append({"x": list(xv), "lhs": val, "rhs": ell * nd2})
        elif condition == "C2":
            ok, val = exists_inner(xv, ybar, d, ell * nd2)
            if not ok:
                report.condition_violations.append({"x": list(xv), "lhs": val, "rhs": ell * nd2})
        elif condition == "ROSLw":
            for yb in F.value_set(xbar).members_near(ybar, 4 * r, 2, rng):
                ok, val = exists_inner(xv, yb, d, ell * nd2)
                if not ok:
                    report.condition_violations.append(
                        {"x": list(xv), "ybar_prime": list(yb), "lhs": val, "rhs": ell * nd2}
                    )
        else:  # ROSL
            xw = rng.in_ball(xbar, region, "euclidean")
            dp = xw - xv
            nd2p = float(dp @ dp)
            for yv in F.value_set(xv).members_near(ybar, 4 * r, 2, rng):
                ok, val = exists_inner(xw, yv, dp, ell * nd2p)
                if not ok:
                    report.condition_violations.append(
                        {"x": list(xv), "x_prime": list(xw), "y": list(yv), "lhs": val, "rhs": ell * nd2p}
                    )
    if report.condition_violations:
        report.notes.append("condition violated: conclusion not tested")
        return report.finalize()

    def attained(center_x, target, t):
        dpre, _ = preimage_search(center_x, F, target, Ball(center_x, 1.02 * t + 1e-9))
        return dpre <= t * (1 + COVER_RTOL) + COVER_ATOL, dpre

    if condition in ("C1", "C2"):
        for t in report.t_grid:
            for v in sphere_directions(F.m, 8, derive_seed(seed, f"rosl-dirs{t}")):
                for frac in (0.5, 1.0):
                    target = ybar + frac * ell * t * np.asarray(v)
                    ok, dpre = attained(xbar, target, t)
                    entry = {"t": t, "target": [float(u) for u in target], "preimage_distance": dpre}
                    (report.attained if ok else report.unattained).append(entry)
    elif condition == "ROSLw":
        for _ in range(min(samples, 64)):
            yv = rng.in_ball(ybar, r * ell, "euclidean")
            dy = dist_to_value_set(yv, F, xbar)
            if dy > r * ell or dy <= TOL_FEAS:
                continue
            bound = dy / ell
            dpre, _ = preimage_search(xbar, F, yv, Ball(xbar, 1.05 * bound + 1e-9))
            ok = dpre <= bound * (1 + COVER_RTOL) + COVER_ATOL
            entry = {"y": [float(u) for u in yv], "bound": bound, "preimage_distance": dpre}
            (report.attained if ok else report.unattained).append(entry)
    else:  # ROSL: uniform covering around nearby graph points
        pts = graph_sample(F, GraphPoint(xbar, ybar), r, 8, derive_seed(seed, "rosl-gp"))
        for gp in [GraphPoint(xbar, ybar)] + pts:
            for t in report.t_grid:
                for v in sphere_directions(F.m, 4, derive_seed(seed, f"rosl-a{t}")):
                    target = gp.y + ell * t * np.asarray(v)
                    ok, dpre = attained(gp.x, target, t)
                    entry = {
                        "x": [float(u) for u in gp.x],
                        "t": t,
                        "target": [float(u) for u in target],
                        "preimage_distance": dpre,
                    }
                    (report.attained if ok else report.unattained).append(entry)
    return report.finalize()
