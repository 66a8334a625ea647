"""Heights maps and extremal stretch computations on flat models.

Subpackages cover four engines plus a command-line front end:

- core: marked tori, quadratic differentials, curve classes, affine
  representatives of marking matrices.
- torus: the heights map, the extremal stretch ratio and its attainment,
  the conjugate-differential relation, and stretch-map reconstruction.
- cylinders: Jenkins-Strebel style cylinder chains, circumference-scaling
  chain maps, the extremal functional over the weight cone (with genuine
  non-attainment), and truncation/doubling bookkeeping.
- dirichlet: discrete closed 1-forms on a torus grid with prescribed
  periods, Dirichlet energy, harmonic minimization, and the quasiconformal
  pushforward energy bound.
- variational: the constant-Beltrami path, transported norms h(t), the
  variational derivative h'(t) with a finite-difference oracle, and the
  truncation-gap functional A(t) on cylinder chains.

All values are immutable after construction and safe to share between
concurrent tasks.
"""

from .core import (
    CrossCheckError,
    CurveClass,
    LinearFoliation,
    MarkedTorusMap,
    MarkingError,
    ToleranceError,
    TorusQuadDiff,
    UpperHalfPoint,
    canonical_sqrt,
    compose_maps,
    foliation_of_diff,
    inverse_map,
    parse_marked_map,
)
from .cylinders import (
    ChainMap,
    ConeDifferential,
    ConeExtremal,
    CylinderChain,
    DeclaredBound,
    DivergenceError,
    Expression,
    ExpressionError,
    chain_norm,
    chain_pushforward,
    cone_extremal,
    exhaustion_diagnostics,
    load_chain_spec,
    truncate_and_double,
)
from .dirichlet import (
    GridOneForm,
    HarmonicResult,
    dirichlet_gap,
    form_from_components,
    form_from_rows,
    form_to_rows,
    grid_energy,
    harmonic_minimize,
    pushforward_energy,
    pushforward_energy_bound,
    realizing_differential,
)
from .torus import (
    ConjugateCheck,
    ExtremalReport,
    check_conjugate_relation,
    construct_teichmuller_map,
    curve_height,
    extremal_ratio,
    grid_extremal_ratio,
    heights_map,
    maximizing_differential,
    qd_norm,
    quasi_invariance_check,
    ratio,
    theta_sweep,
    verify_homotopic,
)
from .variational import (
    GAUGES,
    BeltramiPath,
    HPrimeResult,
    PathPoint,
    PathReport,
    a_of_t,
    h_of_t,
    h_prime,
    path_point,
    torus_path_report,
)

__version__ = "0.1.0"

__all__ = [
    # core
    "CrossCheckError", "CurveClass", "LinearFoliation", "MarkedTorusMap",
    "MarkingError", "ToleranceError", "TorusQuadDiff", "UpperHalfPoint",
    "canonical_sqrt", "compose_maps", "foliation_of_diff", "inverse_map",
    "parse_marked_map",
    # torus engine
    "ConjugateCheck", "ExtremalReport", "check_conjugate_relation",
    "construct_teichmuller_map", "curve_height", "extremal_ratio",
    "grid_extremal_ratio", "heights_map", "maximizing_differential",
    "qd_norm", "quasi_invariance_check", "ratio", "theta_sweep",
    "verify_homotopic",
    # cylinder engine
    "ChainMap", "ConeDifferential", "ConeExtremal", "CylinderChain",
    "DeclaredBound", "DivergenceError", "Expression", "ExpressionError",
    "chain_norm", "chain_pushforward", "cone_extremal",
    "exhaustion_diagnostics", "load_chain_spec", "truncate_and_double",
    # dirichlet engine
    "GridOneForm", "HarmonicResult", "dirichlet_gap", "form_from_components",
    "form_from_rows", "form_to_rows", "grid_energy", "harmonic_minimize",
    "pushforward_energy", "pushforward_energy_bound", "realizing_differential",
    # variational engine
    "GAUGES", "BeltramiPath", "HPrimeResult", "PathPoint", "PathReport",
    "a_of_t", "h_of_t", "h_prime", "path_point", "torus_path_report",
    "__version__",
]
