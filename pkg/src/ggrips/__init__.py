"""Gauss-Radau rational collocation for infinite-horizon optimal control.

The pipeline: build a Gegenbauer Radau grid, attach switched barycentric
weights and the integration matrix, map the horizon [0, inf) onto [-1, 1),
transcribe the control problem to an equality-constrained NLP, and solve it
with an augmented-Lagrangian method.
"""

from .analysis import (
    ErrorReport,
    SweepAxes,
    SweepResult,
    divergence_profile,
    divergence_study,
    error_report,
    lebesgue_study,
    run_point,
    sweep,
    truncation_bound,
)
from .barycentric import (
    BarycentricWeights,
    RationalInterpolant,
    WeightScheme,
    direct_weights,
    interp_eval,
    lebesgue_constant,
    weights_switch,
    weights_thm,
)
from .gegenbauer import (
    GegenbauerBasis,
    LegendreGaussRule,
    RadauGrid,
    eval_gegenbauer,
    ggr_nodes,
    lambda_norm,
    lg_rule,
)
from .maps import DomainMap, MapKind, map_derivative, map_forward, map_inverse
from .operators import (
    DifferentiationMatrix,
    IntegrationMatrix,
    apply_grim,
    build_grdm,
    build_grim,
)
from .problems import (
    ExactSolution,
    IhocProblem,
    eval_exact,
    example1,
    example2,
    get_problem,
    problem_names,
)
from .solver import SolveReport, SolverConfig, SolveStatus, solve
from .transcription import (
    NlpFunctions,
    Trajectory,
    Transcription,
    TranscriptionForm,
    recover,
    transcribe,
)

__version__ = "0.1.0"
