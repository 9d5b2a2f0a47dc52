"""reglab — a finite-dimensional laboratory for metric (semi)regularity.

Estimate regularity moduli of set-valued maps by direct sampling of their
definitions, certify descent/perturbation/sum criteria with replayable
witnesses, run constructive covering checks, and solve generalized equations
with an inexact Newton-type iteration.
"""

__version__ = "0.1.0"

from .certify import (
    CertificateReport,
    DescentForm,
    check_descent_certificate,
    verify_linear_perturbation,
    verify_setvalued_perturbation,
    verify_sum_distance_bound,
    verify_sum_semiregularity,
)
from .corpus import CorpusEntry, corpus_names, load_example
from .covering import (
    CoveringReport,
    PseudoInverse,
    SelectionTrace,
    build_selection,
    covering_check_kaluza,
    pseudo_inverse,
    rosl_check,
    solve_preimage_picard,
)
from .geometry import Ball, GraphPoint, vec_dist, vec_norm
from .moduli import (
    LiminfSchedule,
    LinearModuli,
    ModulusEstimate,
    SlopeProfile,
    convex_process_sur,
    estimate_modulus,
    frechet_coderivative_bound,
    largest_covered_c,
    linear_moduli,
    slope_sandwich,
    starshape_bound,
)
from .newton import (
    ClarkeSampleJacobian,
    DerivativeOracle,
    ExactJacobian,
    FiniteDifferenceJacobian,
    GEProblem,
    InexactnessModel,
    IterationTrace,
    PiecewiseJacobian,
    RateReport,
    check_newton_assumptions,
    clarke_sample,
    detect_convergence_radius,
    measure_noncompactness,
    rate_report,
    run_newton,
    solve_subproblem,
)
from .setmaps import (
    Epigraph,
    FiniteValued,
    InverseView,
    LinearOp,
    NormalConeBox,
    PolyhedralGraph,
    SetMap,
    SingleValued,
    SumMap,
    build_setmap,
    dist_to_preimage,
    dist_to_value_set,
    graph_sample,
    preimage_search,
    values,
)

__all__ = [
    "Ball",
    "GraphPoint",
    "vec_dist",
    "vec_norm",
    "SetMap",
    "SingleValued",
    "FiniteValued",
    "Epigraph",
    "LinearOp",
    "NormalConeBox",
    "PolyhedralGraph",
    "SumMap",
    "InverseView",
    "build_setmap",
    "values",
    "dist_to_value_set",
    "dist_to_preimage",
    "preimage_search",
    "graph_sample",
    "LiminfSchedule",
    "ModulusEstimate",
    "LinearModuli",
    "SlopeProfile",
    "estimate_modulus",
    "linear_moduli",
    "convex_process_sur",
    "starshape_bound",
    "slope_sandwich",
    "frechet_coderivative_bound",
    "largest_covered_c",
    "DescentForm",
    "CertificateReport",
    "check_descent_certificate",
    "verify_linear_perturbation",
    "verify_setvalued_perturbation",
    "verify_sum_semiregularity",
    "verify_sum_distance_bound",
    "PseudoInverse",
    "CoveringReport",
    "SelectionTrace",
    "pseudo_inverse",
    "solve_preimage_picard",
    "covering_check_kaluza",
    "build_selection",
    "rosl_check",
    "GEProblem",
    "DerivativeOracle",
    "ExactJacobian",
    "FiniteDifferenceJacobian",
    "ClarkeSampleJacobian",
    "PiecewiseJacobian",
    "InexactnessModel",
    "IterationTrace",
    "RateReport",
    "clarke_sample",
    "measure_noncompactness",
    "check_newton_assumptions",
    "solve_subproblem",
    "run_newton",
    "rate_report",
    "detect_convergence_radius",
    "CorpusEntry",
    "corpus_names",
    "load_example",
]
