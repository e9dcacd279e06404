"""Game layer: payoffs, the shared potential, gradients, and stationarity.

Each free node is a player choosing its position estimate inside a compact
box. A player's payoff sums the squared range misfits over its incident
edges; anchor-neighbor terms are included so that any unilateral deviation
changes the payoff and the network potential by exactly the same amount
(the edges not touching the deviating player cancel, and every edge that
does touch it appears in both functions).
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NotAPlayer
from .network import NodeId, NodeKind


def default_boxes(n_free, dimension, lo=0.0, hi=1.0):
    """Per-player axis-aligned boxes, unit cube by default, shape (N, n, 2)."""
    boxes = np.empty((n_free, dimension, 2))
    boxes[..., 0] = lo
    boxes[..., 1] = hi
    return boxes


@dataclass(frozen=True)
class StrategyProfile:
    """Stacked position estimates constrained to per-player boxes."""

    positions: np.ndarray
    boxes: np.ndarray

    def __post_init__(self):
        pos = np.ascontiguousarray(self.positions, dtype=np.float64)
        boxes = np.ascontiguousarray(self.boxes, dtype=np.float64)
        if pos.ndim != 2:
            raise ValueError("positions must have shape (N, n)")
        if boxes.shape != pos.shape + (2,):
            raise ValueError("boxes must have shape (N, n, 2)")
        if np.any(boxes[..., 1] < boxes[..., 0]):
            raise ValueError("boxes must be nonempty")
        if not np.all(np.isfinite(pos)) or not np.all(np.isfinite(boxes)):
            raise ValueError("positions and boxes must be finite")
        if np.any(pos < boxes[..., 0]) or np.any(pos > boxes[..., 1]):
            raise ValueError("positions must lie inside their boxes")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "boxes", boxes)

    @property
    def n_players(self):
        return self.positions.shape[0]


def positions_of(x):
    """Accept a StrategyProfile or a bare (N, n) array."""
    if isinstance(x, StrategyProfile):
        return x.positions
    return np.ascontiguousarray(x, dtype=np.float64)


def boxes_of(x, boxes, net):
    if boxes is not None:
        return np.ascontiguousarray(boxes, dtype=np.float64)
    if isinstance(x, StrategyProfile):
        return x.boxes
    return default_boxes(net.n_free, net.dimension)


def _player_index(i, net):
    """0-based free-node index for a 1-based NodeId/int, or NotAPlayer."""
    idx = i.index if isinstance(i, NodeId) else int(i)
    if idx < 1 or idx > net.n_nodes:
        raise ValueError(f"node index {idx} outside 1..{net.n_nodes}")
    if idx > net.n_free:
        raise NotAPlayer(f"node {idx} is an anchor, not a player")
    return idx - 1


def payoff(i, x, net, edges):
    """Player i's summed squared range misfit over its incident edges."""
    idx = _player_index(i, net)
    pos = positions_of(x)
    xi = kernels.edge_sq_dists(pos, net.anchor_positions, edges.idx_i, edges.idx_j)
    mask = (edges.idx_i == idx) | (edges.idx_j == idx)
    r = xi[mask] - edges.dsq[mask]
    return float(np.dot(r, r))


def potential(x, net, edges):
    """Network-wide potential: the total squared range misfit."""
    pos = positions_of(x)
    xi = kernels.edge_sq_dists(pos, net.anchor_positions, edges.idx_i, edges.idx_j)
    return float(kernels.potential_value(xi, edges.dsq))


def grad_potential(x, net, edges):
    """Gradient of the potential, shape (N, n)."""
    pos = positions_of(x)
    return np.asarray(
        kernels.potential_grad(pos, net.anchor_positions, edges.idx_i, edges.idx_j, edges.dsq)
    )


def grad_payoff(i, x, net, edges):
    """Gradient of player i's payoff in its own block.

    Equals the matching block of the potential gradient (shared code path).
    """
    idx = _player_index(i, net)
    return grad_potential(x, net, edges)[idx]


@dataclass(frozen=True)
class DeviationCheck:
    """Unilateral deviation bookkeeping for the shared-potential identity."""

    player: NodeId
    x_from: np.ndarray
    x_to: np.ndarray
    delta_potential: float
    delta_payoff: float

    @property
    def residual(self):
        return abs(self.delta_potential - self.delta_payoff)


def deviation_identity(i, x, x_prime_i, net, edges):
    """Evaluate the potential/payoff changes for one unilateral deviation."""
    idx = _player_index(i, net)
    pos = positions_of(x)
    x_prime_i = np.asarray(x_prime_i, dtype=np.float64)
    if isinstance(x, StrategyProfile):
        box = x.boxes[idx]
        if np.any(x_prime_i < box[:, 0]) or np.any(x_prime_i > box[:, 1]):
            raise ValueError("deviation leaves the player's box")
    pos2 = pos.copy()
    pos2[idx] = x_prime_i
    d_p = potential(pos2, net, edges) - potential(pos, net, edges)
    d_j = payoff(idx + 1, pos2, net, edges) - payoff(idx + 1, pos, net, edges)
    return DeviationCheck(
        player=NodeId(idx + 1, NodeKind.NON_ANCHOR),
        x_from=pos[idx].copy(),
        x_to=x_prime_i.copy(),
        delta_potential=d_p,
        delta_payoff=d_j,
    )


def nash_stationarity_residual(x, net, edges, probe_step=1.0, boxes=None):
    """Per-player projected-gradient residuals; zero iff first-order stationary.

    r_i = || x_i - clip(x_i - probe_step * grad J_i, box_i) ||. For a convex
    compact box this vanishes exactly when the negative payoff gradient sits
    in the normal cone at x_i, for any probe_step > 0.
    """
    if probe_step <= 0.0:
        raise ValueError("probe_step must be positive")
    pos = positions_of(x)
    b = boxes_of(x, boxes, net)
    return np.asarray(
        kernels.nash_residual(
            pos, net.anchor_positions, edges.idx_i, edges.idx_j, edges.dsq,
            np.ascontiguousarray(b[..., 0]), np.ascontiguousarray(b[..., 1]),
            float(probe_step),
        )
    )


def stationarity_threshold(dimension):
    """Default per-player residual threshold for declaring stationarity."""
    return 1e-5 * np.sqrt(dimension)
