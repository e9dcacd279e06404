"""Canonical transformation to edge variables and the mixed saddle function.

The change of variables maps each edge to its squared estimated distance,
turning the quartic potential into a convex quadratic of the edge vector.
Its gradient defines an invertible pairing with a dual vector ``tau``; the
Legendre conjugate and the mixed (complementary) function follow. The dual
Hessian of the mixed function in the positions is position-free: twice the
Kronecker product of a dual-weighted grounded Laplacian with the identity.

Anchor-anchor slots are kept in the edge index for bookkeeping but are inert
here: their position terms are constants and their optimal dual components
are exactly zero, so the mixed function, its gradients, and the Laplacian
all skip them (the slots stay pinned to zero).
"""

import numpy as np

from . import kernels
from .game import boxes_of, positions_of


def edge_squared_distances(x, net, edges):
    """Per-edge squared distances at the estimate; anchors substituted."""
    pos = positions_of(x)
    return np.asarray(
        kernels.edge_sq_dists(pos, net.anchor_positions, edges.idx_i, edges.idx_j)
    )


def edge_potential(xi, edges):
    """Convex quadratic misfit in edge variables; composes to the potential."""
    xi = np.asarray(xi, dtype=np.float64)
    return float(kernels.potential_value(xi, edges.dsq))


def duality_map(xi, edges):
    """Gradient pairing from edge variables to the dual vector."""
    return 2.0 * (np.asarray(xi, dtype=np.float64) - edges.dsq)


def duality_map_inverse(tau, edges):
    """Inverse pairing: edge variables from a dual vector."""
    return 0.5 * np.asarray(tau, dtype=np.float64) + edges.dsq


def conjugate_edge_potential(tau, edges):
    """Legendre conjugate of the edge-variable misfit; convex in tau."""
    tau = np.asarray(tau, dtype=np.float64)
    return float(np.sum(0.25 * tau * tau + edges.dsq * tau))


def complementary_function(x, tau, net, edges):
    """Mixed saddle value: dual-weighted misfit minus the dual quadratic."""
    xi = edge_squared_distances(x, net, edges)
    tau = np.ascontiguousarray(tau, dtype=np.float64)
    return float(
        kernels.complementary_value(xi, edges.dsq, tau, edges.idx_i, edges.n_free)
    )


def complementary_grad_x(x, tau, net, edges):
    """Position gradient of the mixed saddle function, shape (N, n)."""
    pos = positions_of(x)
    tau = np.ascontiguousarray(tau, dtype=np.float64)
    return np.asarray(
        kernels.complementary_grad_x(
            pos, net.anchor_positions, edges.idx_i, edges.idx_j, tau
        )
    )


def complementary_grad_tau(x, tau, net, edges):
    """Dual gradient of the mixed saddle function, shape (q,).

    Vanishes exactly where tau matches the duality map of the current edge
    variables; anchor-anchor slots are pinned to zero.
    """
    xi = edge_squared_distances(x, net, edges)
    tau = np.ascontiguousarray(tau, dtype=np.float64)
    return np.asarray(
        kernels.complementary_grad_tau(xi, edges.dsq, tau, edges.idx_i, edges.n_free)
    )


def grounded_laplacian(tau, net, edges):
    """Dual-weighted grounded Laplacian L(tau) over free nodes, (N, N).

    The position Hessian of the mixed function is 2 * kron(L, I_n); both
    sensor-sensor endpoints contribute, sensor-anchor edges only ground the
    diagonal, anchor-anchor edges contribute nothing.
    """
    tau = np.ascontiguousarray(tau, dtype=np.float64)
    return np.asarray(
        kernels.grounded_laplacian(tau, edges.idx_i, edges.idx_j, edges.n_free)
    )


def position_hessian(tau, net, edges):
    """Full (nN, nN) position Hessian 2 * kron(L(tau), I_n)."""
    L = grounded_laplacian(tau, net, edges)
    return 2.0 * np.kron(L, np.eye(net.dimension))


def position_hessian_fd_gap(x, tau, net, edges, step=1e-3):
    """Max |assembled Hessian - central-difference Hessian| at x.

    The mixed function is quadratic in the positions, so the gap is pure
    roundoff and must be independent of where x sits.
    """
    pos = positions_of(x)
    N, n = pos.shape
    m = N * n
    H = position_hessian(tau, net, edges)
    flat = pos.ravel().copy()

    def f(v):
        return complementary_function(v.reshape(N, n), tau, net, edges)

    fd = np.empty((m, m))
    for a in range(m):
        for b in range(m):
            vpp = flat.copy(); vpp[a] += step; vpp[b] += step
            vpm = flat.copy(); vpm[a] += step; vpm[b] -= step
            vmp = flat.copy(); vmp[a] -= step; vmp[b] += step
            vmm = flat.copy(); vmm[a] -= step; vmm[b] -= step
            fd[a, b] = (f(vpp) - f(vpm) - f(vmp) + f(vmm)) / (4.0 * step * step)
    return float(np.max(np.abs(H - fd)))


def dual_range_box(net, edges, boxes=None):
    """Componentwise bounds for the dual vector, shape (q, 2).

    Edge variables live in [0, D^2] where D is the largest distance the
    boxes allow for that edge, so the dual image is the box
    [-2 d^2, 2 (D^2 - d^2)] per edge. Anchor-anchor slots are pinned to
    [0, 0] (anchors are fixed, so their edge variables never move).
    """
    b = boxes_of(None, boxes, net)
    lo_b, hi_b = b[..., 0], b[..., 1]
    anchors = net.anchor_positions
    q = edges.q
    out = np.zeros((q, 2))
    nf = edges.n_free
    for e in range(q):
        i, j = int(edges.idx_i[e]), int(edges.idx_j[e])
        if i >= nf:
            continue  # anchor-anchor slot stays [0, 0]
        if j < nf:
            m = np.maximum(hi_b[i] - lo_b[j], hi_b[j] - lo_b[i])
        else:
            a = anchors[j - nf]
            m = np.maximum(hi_b[i] - a, a - lo_b[i])
        m = np.maximum(m, 0.0)
        dmax_sq = float(np.dot(m, m))
        out[e, 0] = -2.0 * edges.dsq[e]
        out[e, 1] = 2.0 * (dmax_sq - edges.dsq[e])
    return out
