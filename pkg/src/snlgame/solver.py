"""The saddle iteration and the plain-descent baseline.

One outer iteration first lifts the dual vector along the dual gradient of
the mixed function and projects it back onto the dual feasible set, then
moves every player against the position gradient evaluated at the
pre-update pair (Jacobi style, matching the listing order; a Gauss-Seidel
variant that uses the fresh dual is available behind a flag). The step
sequence decays as alpha0 * (k+1)^(-decay); iteration stops when both
displacement norms drop below the tolerance.

The baseline runs projected gradient descent directly on the potential with
the same schedule; it exists to exhibit stationary points that the
duality-relation certificate rejects.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import kernels
from .duality import dual_range_box
from .errors import SnlGameError
from .game import StrategyProfile, default_boxes


class SolveStatus(Enum):
    CONVERGED = "converged"
    MAX_ITER = "max-iter"
    PROJECTION_FAILURE = "projection-failure"


_STATUS_BY_CODE = {
    kernels.STATUS_CONVERGED: SolveStatus.CONVERGED,
    kernels.STATUS_MAX_ITER: SolveStatus.MAX_ITER,
    kernels.STATUS_PROJECTION_FAILURE: SolveStatus.PROJECTION_FAILURE,
}


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the saddle iteration.

    alpha0/decay set the step sequence alpha0 * (k+1)^(-decay); decay must
    lie in (0.5, 1] so the steps are square-summable but not summable.
    The defaults were tuned empirically: residuals at the displacement stop
    scale like tol divided by the final step, so alpha0 must keep the step
    near the capture threshold of typical unit-box instances until the
    iteration locks in. tau_init "zero" starts the dual at the origin
    (always feasible, and the exact-data optimum); "small-positive" starts
    it at tau_init_eps on every non anchor-anchor slot.
    """

    alpha0: float = 2.0
    decay: float = 0.51
    tol: float = 1e-5
    max_iter: int = 200_000
    seed: int = 0
    init_mode: str = "random"          # "random" | "provided"
    x0: np.ndarray | None = None
    tau_init: str = "zero"             # "zero" | "small-positive"
    tau_init_eps: float = 1e-3
    gauss_seidel: bool = False
    tau_nonneg: bool = False
    proj_tol: float = 1e-7
    proj_max_iter: int = 500
    nash_every: int = 100
    nash_probe_step: float = 1.0
    snapshot_every: int = 0            # 0 disables iterate snapshots

    def __post_init__(self):
        if self.alpha0 <= 0.0:
            raise ValueError("alpha0 must be positive")
        if not 0.5 < self.decay <= 1.0:
            raise ValueError("decay must lie in (0.5, 1]")
        if self.tol <= 0.0 or self.proj_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1 or self.proj_max_iter < 1:
            raise ValueError("iteration budgets must be at least 1")
        if self.init_mode not in ("random", "provided"):
            raise ValueError("init_mode must be 'random' or 'provided'")
        if self.init_mode == "provided" and self.x0 is None:
            raise ValueError("init_mode 'provided' needs x0")
        if self.tau_init not in ("zero", "small-positive"):
            raise ValueError("tau_init must be 'zero' or 'small-positive'")


def step_size(cfg, k):
    """Step used at 0-based iteration k: alpha0 * (k+1)^(-decay)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return cfg.alpha0 * (k + 1.0) ** (-cfg.decay)


@dataclass
class SaddleTrace:
    """Per-iteration record; row k (1-based) describes the k-th update.

    ``nash_residual`` holds the worst per-player stationarity residual at
    the sampled iterations and NaN elsewhere. Snapshot arrays are present
    only when the config asked for iterate thinning.
    """

    k: np.ndarray
    alpha: np.ndarray
    potential: np.ndarray
    psi: np.ndarray
    dx_norm: np.ndarray
    dtau_norm: np.ndarray
    nash_residual: np.ndarray
    status: SolveStatus
    snapshot_k: np.ndarray | None = None
    snapshot_x: np.ndarray | None = None
    snapshot_tau: np.ndarray | None = None

    @property
    def iterations(self):
        return int(self.k[-1]) if self.k.size else 0


def _initial_positions(boxes, cfg):
    lo, hi = boxes[..., 0], boxes[..., 1]
    if cfg.init_mode == "provided":
        x0 = np.ascontiguousarray(cfg.x0, dtype=np.float64)
        if x0.shape != lo.shape:
            raise ValueError("provided x0 has the wrong shape")
        if np.any(x0 < lo) or np.any(x0 > hi):
            raise ValueError("provided x0 leaves the boxes")
        return x0.copy()
    rng = np.random.default_rng(cfg.seed)
    return lo + rng.random(lo.shape) * (hi - lo)


def _initial_tau(edges, cfg, rng_box):
    tau0 = np.zeros(edges.q)
    if cfg.tau_init == "small-positive":
        tau0[edges.active] = cfg.tau_init_eps
        tau0 = np.minimum(np.maximum(tau0, rng_box[:, 0]), rng_box[:, 1])
    return tau0


def _resolve_boxes(net, boxes):
    if boxes is None:
        return default_boxes(net.n_free, net.dimension)
    return np.ascontiguousarray(boxes, dtype=np.float64)


def _trace_from_arrays(done, status_code, alpha0, decay, P, psi, dx, dtau, nash,
                       snap_x, snap_tau, snap_k, n_snap, snapshot_every):
    ks = np.arange(1, done + 1, dtype=np.int64)
    alphas = alpha0 * ks.astype(np.float64) ** (-decay)
    trace = SaddleTrace(
        k=ks,
        alpha=alphas,
        potential=np.asarray(P[:done]).copy(),
        psi=np.asarray(psi[:done]).copy() if psi is not None else np.full(done, np.nan),
        dx_norm=np.asarray(dx[:done]).copy(),
        dtau_norm=np.asarray(dtau[:done]).copy() if dtau is not None else np.full(done, np.nan),
        nash_residual=np.asarray(nash[:done]).copy(),
        status=_STATUS_BY_CODE[status_code],
    )
    if snapshot_every > 0:
        trace.snapshot_k = np.asarray(snap_k[:n_snap]).copy()
        trace.snapshot_x = np.asarray(snap_x[:n_snap]).copy()
        if snap_tau is not None:
            trace.snapshot_tau = np.asarray(snap_tau[:n_snap]).copy()
    return trace


def solve_saddle(net, edges, boxes=None, cfg=None):
    """Run the saddle iteration; returns (profile, tau, trace).

    Deterministic for a fixed config seed: repeated runs produce
    bit-identical iterates and traces.
    """
    cfg = cfg or SolverConfig()
    boxes = _resolve_boxes(net, boxes)
    x0 = _initial_positions(boxes, cfg)
    rng_box = dual_range_box(net, edges, boxes=boxes)
    tau0 = _initial_tau(edges, cfg, rng_box)
    gain = edges.laplacian_gain
    dual_step = 1.0 / gain if gain > 0.0 else 1.0

    out = kernels.saddle_core(
        x0, tau0, net.anchor_positions, edges.idx_i, edges.idx_j, edges.dsq,
        np.ascontiguousarray(boxes[..., 0]), np.ascontiguousarray(boxes[..., 1]),
        np.ascontiguousarray(rng_box[:, 0]), np.ascontiguousarray(rng_box[:, 1]),
        float(cfg.alpha0), float(cfg.decay), float(cfg.tol), int(cfg.max_iter),
        float(dual_step), float(cfg.proj_tol), int(cfg.proj_max_iter),
        bool(cfg.tau_nonneg), bool(cfg.gauss_seidel),
        int(cfg.nash_every), float(cfg.nash_probe_step), int(cfg.snapshot_every),
    )
    (x, tau, done, status_code, P, psi, dx, dtau, nash,
     snap_x, snap_tau, snap_k, n_snap) = out
    trace = _trace_from_arrays(
        int(done), int(status_code), cfg.alpha0, cfg.decay,
        P, psi, dx, dtau, nash, snap_x, snap_tau, snap_k, int(n_snap),
        cfg.snapshot_every,
    )
    profile = StrategyProfile(np.asarray(x), boxes)
    return profile, np.asarray(tau), trace


def solve_descent(net, edges, boxes=None, cfg=None):
    """Projected gradient descent on the potential; returns (profile, trace)."""
    cfg = cfg or SolverConfig()
    boxes = _resolve_boxes(net, boxes)
    x0 = _initial_positions(boxes, cfg)
    out = kernels.descent_core(
        x0, net.anchor_positions, edges.idx_i, edges.idx_j, edges.dsq,
        np.ascontiguousarray(boxes[..., 0]), np.ascontiguousarray(boxes[..., 1]),
        float(cfg.alpha0), float(cfg.decay), float(cfg.tol), int(cfg.max_iter),
        int(cfg.nash_every), float(cfg.nash_probe_step), int(cfg.snapshot_every),
    )
    x, done, status_code, P, dx, nash, snap_x, snap_k, n_snap = out
    trace = _trace_from_arrays(
        int(done), int(status_code), cfg.alpha0, cfg.decay,
        P, None, dx, None, nash, snap_x, None, snap_k, int(n_snap),
        cfg.snapshot_every,
    )
    return StrategyProfile(np.asarray(x), boxes), trace


def descent_success_rate(net, edges, boxes=None, cfg=None, seeds=100, p_tol=1e-3):
    """Fraction of random starts from which plain descent reaches the minimum.

    Reported as an empirical statistic; nothing about it is guaranteed.
    """
    cfg = cfg or SolverConfig()
    hits = 0
    for s in range(seeds):
        run_cfg = replace(cfg, seed=cfg.seed + s, init_mode="random", x0=None)
        _, trace = solve_descent(net, edges, boxes=boxes, cfg=run_cfg)
        if trace.potential[-1] <= p_tol:
            hits += 1
    return hits / seeds
