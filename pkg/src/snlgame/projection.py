"""Projections the saddle iteration needs: player boxes and the dual set.

The dual feasible set intersects the componentwise dual range box with the
spectrahedron of dual vectors whose grounded Laplacian is positive
semidefinite. Membership is decided on the N x N Laplacian directly: the
full position Hessian is a Kronecker product with the identity, which
preserves eigenvalue signs.

The Euclidean projection onto that intersection has no closed form, so it
is computed by accelerated projected gradient ascent on the PSD multiplier
of the constraint (eigenvalue clipping is the multiplier projection); the
box part folds into the inner primal update. The iteration stops once the
candidate stalls below tolerance and verifiably sits inside the set at the
same tolerance, which also makes the operator exactly idempotent: feasible
inputs return unchanged through the fast path.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .duality import dual_range_box, grounded_laplacian


@dataclass(frozen=True)
class ProjectionReport:
    """Outcome of one dual projection call.

    ``converged`` is False when the inner iteration budget ran out; the
    partial result is still returned and the caller decides how to proceed.
    """

    projected: np.ndarray
    iterations: int
    infeasibility_before: float
    residual: float
    converged: bool


def project_box(v, box):
    """Componentwise clamp of v into the box ([..., 0] lows, [..., 1] highs)."""
    v = np.asarray(v, dtype=np.float64)
    box = np.asarray(box, dtype=np.float64)
    return np.minimum(np.maximum(v, box[..., 0]), box[..., 1])


def is_dual_feasible(tau, net, edges, tol=1e-8, boxes=None):
    """True when L(tau) is PSD up to a relative slack and tau sits in its box."""
    if tol < 0.0:
        raise ValueError("tol must be nonnegative")
    tau = np.ascontiguousarray(tau, dtype=np.float64)
    if edges.q == 0:
        return True
    rng_box = dual_range_box(net, edges, boxes=boxes)
    lo, hi = rng_box[:, 0], rng_box[:, 1]
    scale_box = 1.0 + max(
        float(np.max(np.abs(lo))), float(np.max(np.abs(hi)))
    )
    gap = float(np.max(np.abs(tau - np.minimum(np.maximum(tau, lo), hi))))
    if gap > tol * scale_box:
        return False
    L = grounded_laplacian(tau, net, edges)
    w = np.linalg.eigvalsh(L)
    scale = 1.0 + max(abs(w[0]), abs(w[-1]))
    return bool(w[0] >= -tol * scale)


def project_dual_feasible(
    tau0, net, edges, tol=1e-8, max_iter=500, boxes=None, nonneg_only=False
):
    """Euclidean projection of tau0 onto the dual feasible set.

    ``nonneg_only`` switches to the eigendecomposition-free inner
    approximation (nonnegative orthant intersected with the dual range box);
    it changes the iterate path of the solver but never yields an infeasible
    point, since nonnegative edge weights make the grounded Laplacian
    diagonally dominant.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    tau0 = np.ascontiguousarray(tau0, dtype=np.float64)
    if edges.q == 0:
        return ProjectionReport(tau0.copy(), 1, 0.0, 0.0, True)
    rng_box = dual_range_box(net, edges, boxes=boxes)
    lo = np.ascontiguousarray(rng_box[:, 0])
    hi = np.ascontiguousarray(rng_box[:, 1])

    L0 = grounded_laplacian(tau0, net, edges)
    w0 = np.linalg.eigvalsh(L0)
    infeas0 = max(0.0, -float(w0[0]))

    if nonneg_only:
        projected = np.minimum(np.maximum(tau0, np.maximum(lo, 0.0)), hi)
        return ProjectionReport(projected, 1, infeas0, 0.0, True)

    gain = edges.laplacian_gain
    if gain <= 0.0:
        # No active edges constrain the Laplacian; the box is the whole set.
        projected = np.minimum(np.maximum(tau0, lo), hi)
        return ProjectionReport(projected, 1, infeas0, 0.0, True)

    Z0 = np.zeros((edges.n_free, edges.n_free))
    tau, _, iters, ok, infeas, resid = kernels.project_dual_core(
        tau0, edges.idx_i, edges.idx_j, edges.n_free, lo, hi,
        1.0 / gain, float(tol), int(max_iter), Z0,
    )
    return ProjectionReport(np.asarray(tau), int(iters), float(infeas), float(resid), bool(ok))
