"""Range-based sensor network localization as a non-convex potential game.

Builds noise-free localization instances, runs a primal-dual saddle
iteration over a canonical dual reformulation of the shared potential, and
certifies whether the computed stationary point is the global equilibrium
via an executable duality-relation check.
"""

from .certify import (
    DEFAULT_EPS_CERT,
    Certificate,
    ErrorReport,
    Verdict,
    brute_force_global_min,
    certify,
    default_eps_stat,
    error_report,
    favorable_dual,
    worst_deviation_regret,
)
from .duality import (
    complementary_function,
    complementary_grad_tau,
    complementary_grad_x,
    conjugate_edge_potential,
    dual_range_box,
    duality_map,
    duality_map_inverse,
    edge_potential,
    edge_squared_distances,
    grounded_laplacian,
    position_hessian,
    position_hessian_fd_gap,
)
from .errors import (
    DisconnectedNodeWarning,
    GroundTruthRequired,
    IngestError,
    NotAPlayer,
    NotRigid,
    RigidityGenerationFailed,
    SnlGameError,
    TooFewAnchors,
    TooLarge,
)
from .game import (
    DeviationCheck,
    StrategyProfile,
    default_boxes,
    deviation_identity,
    grad_payoff,
    grad_potential,
    nash_stationarity_residual,
    payoff,
    potential,
    stationarity_threshold,
)
from .kernels import NUMBA_ENABLED
from .network import (
    Edge,
    EdgeKind,
    EdgeSet,
    NodeId,
    NodeKind,
    SensorNetwork,
    build_edge_set,
    generate_random_instance,
    is_generically_globally_rigid,
    is_generically_rigid,
    passes_rigidity_screen,
    rigidity_matrix,
)
from .projection import (
    ProjectionReport,
    is_dual_feasible,
    project_box,
    project_dual_feasible,
)
from .scenarios import (
    default_anchor_count,
    default_radius,
    ingest_csv,
    load_result,
    load_scenario,
    run_sweep,
    save_result,
    save_scenario,
    scenario_document,
    scenario_fingerprint,
    write_trace_csv,
)
from .solver import (
    SaddleTrace,
    SolveStatus,
    SolverConfig,
    descent_success_rate,
    solve_descent,
    solve_saddle,
    step_size,
)

__version__ = "0.1.0"
