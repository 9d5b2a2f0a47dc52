"""Bundled example maps and problems with documented reference values.

Each entry packages a builder plus the reference values its documentation
promises, with a provenance tag ("analytic" for hand-derivable values,
"measured" for values computed at build time) and the tolerance at which
the suite asserts them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import GraphPoint
from .newton import ExactJacobian, GEProblem, PiecewiseJacobian
from .rng import SplitMix64, derive_seed
from .setmaps import Epigraph, FiniteValued, NormalConeBox, PolyhedralGraph, SingleValued


class UnknownExample(KeyError):
    pass


@dataclass
class CorpusEntry:
    name: str
    description: str
    objects: dict
    references: dict = field(default_factory=dict)


def _arr(x):
    return np.asarray(x, dtype=float)


def _two_branch():
    F = FiniteValued([lambda x: _arr(x), lambda x: 0.0 * _arr(x)])
    # same graph in half-space form: the lines y = x and y = 0
    poly = PolyhedralGraph([([[1, -1], [-1, 1]], [0, 0]), ([[0, 1], [0, -1]], [0, 0])], 1, 1)
    return CorpusEntry(
        name="two_branch",
        description="x -> {x, 0}: graph is two lines through the origin; open at (0,0) "
        "with rate 1 but not open around it",
        objects={"setmap": F, "setmap_polyhedral": poly, "point": GraphPoint([0.0], [0.0])},
        references={
            "lopen": {"value": 1.0, "tol": 0.1, "provenance": "analytic"},
            "sur": {"value": 0.0, "tol": 0.1, "provenance": "analytic"},
            "lopen_times_semireg": {"value": 1.0, "tol": 0.02, "provenance": "analytic"},
            "coderivative_bound": {"value": float("inf"), "provenance": "analytic"},
        },
    )


def sinkink_fn(x):
    x = _arr(x)
    with np.errstate(all="ignore"):
        safe = np.where(x == 0.0, 1.0, x)
        out = np.where(x == 0.0, 0.0, x + x * np.abs(x) * np.abs(np.sin(1.0 / safe)))
    return out


def _sinkink():
    f = SingleValued(sinkink_fn)
    return CorpusEntry(
        name="sinkink",
        description="x -> x + x|x||sin(1/x)|: differentiable at 0 with slope 1 but with "
        "openness rates collapsing to 0 along a sequence of kinks",
        objects={"setmap": f, "point": GraphPoint([0.0], [0.0])},
        references={
            "lopen_at_zero": {"value": 1.0, "tol": 0.15, "provenance": "analytic"},
            "liminf_pointwise_lopen": {"value": 0.0, "tol": 0.1, "provenance": "analytic"},
            "sweep_window": {"value": [1e-4, 1e-1], "provenance": "analytic"},
        },
    )


def staircase_fn(x):
    x = _arr(x)
    out = np.where(x <= 0, x, np.where(x > 0.5, x - 0.5, 0.0))
    mid = (x > 0) & (x <= 0.5)
    with np.errstate(all="ignore"):
        n = np.floor(1.0 / np.where(mid, x, 1.0)) + 1.0
    return np.where(mid, x - 1.0 / n, out)


def _staircase():
    F = Epigraph(staircase_fn)
    refs = {
        "sur": {"value": 0.0, "tol": 0.1, "provenance": "analytic"},
        "covering_rate": {
            "value": {n: 1.0 / n for n in range(5, 11)},
            "rtol": 0.1,
            "at": {n: {"x": 1.0 / n + 1.0 / n**2, "t": 1.0 / n} for n in range(5, 11)},
            "provenance": "analytic",
        },
    }
    return CorpusEntry(
        name="staircase",
        description="epigraph of a staircase with steps accumulating at 0: unit openness "
        "on the boundary but vanishing covering rates along x_n = 1/n + 1/n^2",
        objects={"setmap": F, "point": GraphPoint([0.0], [0.0]), "boundary_fn": staircase_fn},
        references=refs,
    )


def _sum_remark():
    F = FiniteValued([lambda x: _arr(x), lambda x: 0.0 * _arr(x) - 1.0])
    G = FiniteValued([lambda x: 0.0 * _arr(x), lambda x: 0.0 * _arr(x) + 1.0])
    return CorpusEntry(
        name="sum_remark",
        description="F = {x, -1}, G = {0, 1}: the sum is open at (0,0) with rate 1 yet "
        "not open around it, so the sum estimate cannot be strengthened",
        objects={"F": F, "G": G, "point": ([0.0], [0.0], [0.0])},
        references={
            "sur_F": {"value": 1.0, "tol": 0.1, "provenance": "analytic"},
            "lip_G": {"value": 0.0, "tol": 0.05, "provenance": "analytic"},
            "lopen_sum": {"value": 1.0, "tol": 0.1, "provenance": "analytic"},
            "sur_sum": {"value": 0.0, "tol": 0.1, "provenance": "analytic"},
        },
    )


def _abs_newton():
    f = SingleValued(lambda x: np.abs(_arr(x)))
    H = PiecewiseJacobian(
        [lambda x: [[-1.0]], lambda x: [[1.0]]],
        lambda x: [0, 1] if abs(float(x[0])) <= 1e-12 else ([1] if float(x[0]) > 0 else [0]),
    )
    problem = GEProblem(f, None, known_solution=[0.0])
    return CorpusEntry(
        name="abs_newton",
        description="|x| = 0 with the two-piece slope oracle: not semiregular at 0, yet "
        "every partial linearization is regular and the iteration solves it in one step",
        objects={"problem": problem, "H": H, "starts": [0.3, -0.3, 0.01, -0.01]},
        references={
            "iterations": {"value": 1, "provenance": "analytic"},
            "sur_per_matrix": {"value": [1.0, 1.0], "provenance": "analytic"},
        },
    )


def smooth2d_fn(x):
    x = _arr(x)
    return np.array([x[0] + 0.3 + 0.1 * np.sin(x[1]), 1.2 * x[1] - 0.6 + 0.1 * x[0] ** 2])


def smooth2d_jac(x):
    return [[1.0, 0.1 * np.cos(float(x[1]))], [0.2 * float(x[0]), 1.2]]


def _smooth2d_boxvi():
    f = SingleValued(smooth2d_fn, 2, 2, vectorized=False)
    box = NormalConeBox([0.0, 0.0], [1.0, 1.0])
    problem = GEProblem(f, box, known_solution=[0.0, 0.5])
    return CorpusEntry(
        name="smooth2d_boxvi",
        description="smooth strictly complementary variational inequality on the unit "
        "box with solution (0, 0.5): coordinate 1 active at its lower bound",
        objects={"problem": problem, "H": ExactJacobian(smooth2d_jac), "x0": [0.3, 0.7]},
        references={
            "t_hat_eta03": {"value": 0.5, "kind": "upper_bound", "provenance": "measured"},
            "superlinear_exact": {"value": True, "provenance": "analytic"},
            "reduced_sur": {"value": 1.2, "provenance": "analytic"},
        },
    )


def _linear_random(seed: int = 7):
    rng = SplitMix64(derive_seed(seed, "linear_random"))
    while True:
        A = np.array([[rng.uniform(-2, 2) for _ in range(3)] for _ in range(2)])
        sigma_min = float(np.linalg.svd(A, compute_uv=False)[-1])
        if sigma_min >= 0.2:
            break
    scale = 0.1 * sigma_min

    def perturbed(x):
        x = np.atleast_1d(_arr(x))
        return A @ x + scale * np.array([np.sin(x[0]), 1.0 - np.cos(x[1])])

    f = SingleValued(perturbed, 3, 2, vectorized=False)
    return CorpusEntry(
        name="linear_random",
        description="seeded surjective 2x3 matrix plus a small smooth perturbation "
        "whose calmness at 0 stays below 0.2 of the smallest singular value",
        objects={"A": A, "f": f, "xbar": np.zeros(3)},
        references={
            "sigma_min": {"value": sigma_min, "provenance": "measured"},
            "calm_perturbation_bound": {"value": 0.2 * sigma_min, "provenance": "analytic"},
        },
    )


_BUILDERS = {
    "two_branch": _two_branch,
    "sinkink": _sinkink,
    "staircase": _staircase,
    "sum_remark": _sum_remark,
    "abs_newton": _abs_newton,
    "smooth2d_boxvi": _smooth2d_boxvi,
    "linear_random": _linear_random,
}


def corpus_names() -> list[str]:
    return sorted(_BUILDERS)


def load_example(name: str, seed: int | None = None) -> CorpusEntry:
    """Build a bundled example by name; raises UnknownExample otherwise."""
    if name not in _BUILDERS:
        raise UnknownExample(f"unknown example {name!r}; available: {', '.join(corpus_names())}")
    if name == "linear_random" and seed is not None:
        return _BUILDERS[name](seed)
    return _BUILDERS[name]()
