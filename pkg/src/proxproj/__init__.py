"""proxproj: feasible-iterate solvers for norm-tolerance linear constraints.

The core primitive is an exact Euclidean projection onto
{x : ||A x - b|| <= eps}, obtained from a scalar root-find; a
Douglas-Rachford driver alternates it with proximal steps so that every
solution estimate is feasible.  Specialized solvers cover basis pursuit,
low-rank + sparse decomposition, grid earth mover's distances, and stable
matrix completion, alongside the reference first-order baselines used for
benchmarking.
"""

from .engine import SolverConfig, SolverState, pp_step, run_pp, run_pp_vector
from .errors import (
    ConfigError,
    ConvergenceError,
    FactorizationError,
    FormatError,
    IllConditionedError,
    IllPosedError,
    NotSpdError,
    ProxProjError,
    SingularMatrixError,
)
from .linalg import (
    SpdSolver,
    SvdFactorization,
    TridiagonalMatrix,
    spd_solve,
    svd,
    thomas_solve,
)
from .metrics import IterateLog, MetricRow
from .problems import BpProblem, EmdProblem, SmcProblem, SpcpProblem
from .projection import (
    ConstraintSpec,
    TauBracket,
    project,
    project_eps_zero,
    solve_tau,
    solve_tau_spectrum,
)
from .prox import (
    ObservationMask,
    ball_project,
    mask_project,
    mask_project_perp,
    shrink,
    svt,
)

__version__ = "0.1.0"

__all__ = [
    "SolverConfig", "SolverState", "pp_step", "run_pp", "run_pp_vector",
    "ConstraintSpec", "TauBracket", "project", "project_eps_zero",
    "solve_tau", "solve_tau_spectrum",
    "shrink", "svt", "ball_project", "ObservationMask",
    "mask_project", "mask_project_perp",
    "svd", "SvdFactorization", "SpdSolver", "spd_solve",
    "TridiagonalMatrix", "thomas_solve",
    "BpProblem", "SpcpProblem", "EmdProblem", "SmcProblem",
    "IterateLog", "MetricRow",
    "ProxProjError", "FactorizationError", "NotSpdError",
    "SingularMatrixError", "IllConditionedError", "ConvergenceError",
    "IllPosedError", "ConfigError", "FormatError",
]
