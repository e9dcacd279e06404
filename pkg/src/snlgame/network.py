"""Network instances: construction, sensing graph, and rigidity screens.

Node indexing convention (public API): global indices are 1-based, free
(non-anchor) nodes are 1..N and anchors are N+1..N+M. Internal arrays are
0-based with the same ordering; ``EdgeSet`` carries both views.
"""

import warnings
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from . import kernels
from .errors import (
    DisconnectedNodeWarning,
    GroundTruthRequired,
    NotRigid,
    TooFewAnchors,
)


class NodeKind(Enum):
    NON_ANCHOR = "non-anchor"
    ANCHOR = "anchor"


class EdgeKind(Enum):
    SS = "sensor-sensor"
    SA = "sensor-anchor"
    AA = "anchor-anchor"


@dataclass(frozen=True)
class NodeId:
    """Global 1-based node index plus its role."""

    index: int
    kind: NodeKind

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("node indices are 1-based")


@dataclass(frozen=True)
class SensorNetwork:
    """A static range-sensing network with exact anchor coordinates.

    ``ground_truth`` holds the true free-node positions; it is required by
    every operation that derives measurements (the distance data is exact by
    construction, so edges and measured distances come from it).
    """

    dimension: int
    anchor_positions: np.ndarray
    sensing_radius: float
    ground_truth: np.ndarray | None = None

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        anchors = np.ascontiguousarray(self.anchor_positions, dtype=np.float64)
        if anchors.ndim != 2 or anchors.shape[1] != self.dimension:
            raise ValueError("anchor_positions must have shape (M, n)")
        if anchors.shape[0] < 1:
            raise ValueError("at least one anchor is required")
        if not np.all(np.isfinite(anchors)):
            raise ValueError("anchor positions must be finite")
        object.__setattr__(self, "anchor_positions", anchors)
        if self.ground_truth is not None:
            gt = np.ascontiguousarray(self.ground_truth, dtype=np.float64)
            if gt.ndim != 2 or gt.shape[1] != self.dimension:
                raise ValueError("ground_truth must have shape (N, n)")
            if gt.shape[0] < 1:
                raise ValueError("ground_truth needs at least one node")
            if not np.all(np.isfinite(gt)):
                raise ValueError("ground truth positions must be finite")
            object.__setattr__(self, "ground_truth", gt)
        if not (self.sensing_radius > 0.0 or self.sensing_radius == 0.0):
            raise ValueError("sensing_radius must be a nonnegative finite number")

    @property
    def n_anchors(self):
        return self.anchor_positions.shape[0]

    @property
    def n_free(self):
        if self.ground_truth is None:
            raise GroundTruthRequired("network has no ground-truth positions")
        return self.ground_truth.shape[0]

    @property
    def n_nodes(self):
        return self.n_free + self.n_anchors

    def node(self, index):
        """NodeId for a 1-based global index."""
        if self.ground_truth is None:
            raise GroundTruthRequired("network has no ground-truth positions")
        total = self.n_nodes
        if not 1 <= index <= total:
            raise ValueError(f"node index {index} outside 1..{total}")
        kind = NodeKind.NON_ANCHOR if index <= self.n_free else NodeKind.ANCHOR
        return NodeId(index, kind)

    def true_positions(self):
        """All true positions stacked free-nodes-first, shape (N+M, n)."""
        if self.ground_truth is None:
            raise GroundTruthRequired("network has no ground-truth positions")
        return np.concatenate((self.ground_truth, self.anchor_positions), axis=0)


@dataclass(frozen=True)
class Edge:
    """An indexed measurement edge; ``i.index < j.index`` in global order."""

    i: NodeId
    j: NodeId
    kind: EdgeKind
    distance: float

    def __post_init__(self):
        if not self.i.index < self.j.index:
            raise ValueError("edges are stored with i < j")
        if self.distance < 0.0:
            raise ValueError("distances are nonnegative")


@dataclass
class EdgeSet:
    """Deterministically ordered edges plus the flat arrays kernels consume.

    The list order is the edge index bijection (edge k <-> slot k). Instances
    are treated as immutable after construction.
    """

    edges: tuple
    idx_i: np.ndarray
    idx_j: np.ndarray
    dsq: np.ndarray
    n_free: int
    n_anchors: int
    kind_codes: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        self.idx_i = np.ascontiguousarray(self.idx_i, dtype=np.int64)
        self.idx_j = np.ascontiguousarray(self.idx_j, dtype=np.int64)
        self.dsq = np.ascontiguousarray(self.dsq, dtype=np.float64)
        if self.kind_codes is None:
            ss = self.idx_j < self.n_free
            aa = self.idx_i >= self.n_free
            codes = np.ones(len(self.dsq), dtype=np.int8)
            codes[ss] = 0
            codes[aa] = 2
            self.kind_codes = codes

    @property
    def q(self):
        return len(self.dsq)

    def __len__(self):
        return self.q

    @property
    def active(self):
        """Boolean mask of non anchor-anchor slots."""
        return self.idx_i < self.n_free

    @cached_property
    def laplacian_gain(self):
        """Squared operator norm of the tau -> grounded-Laplacian map.

        Used as the Lipschitz constant of the dual projection's gradient.
        The Gram matrix has an explicit sparse structure: 4 (SS) or 1 (SA)
        on the diagonal and +1 for every pair of active edges sharing a
        free node.
        """
        q = self.q
        if q == 0:
            return 0.0
        G = np.zeros((q, q))
        incident = [[] for _ in range(self.n_free)]
        for e in range(q):
            i, j = self.idx_i[e], self.idx_j[e]
            if i >= self.n_free:
                continue
            if j < self.n_free:
                G[e, e] = 4.0
                incident[i].append(e)
                incident[j].append(e)
            else:
                G[e, e] = 1.0
                incident[i].append(e)
        for lst in incident:
            for a in range(len(lst)):
                for b in range(a + 1, len(lst)):
                    G[lst[a], lst[b]] += 1.0
                    G[lst[b], lst[a]] += 1.0
        if not G.any():
            return 0.0
        return float(np.linalg.eigvalsh(G)[-1])


def _kind_for(i0, j0, n_free):
    if j0 < n_free:
        return EdgeKind.SS
    if i0 < n_free:
        return EdgeKind.SA
    return EdgeKind.AA


def build_edge_set(net):
    """Derive the sensing graph and exact squared-distance measurements.

    Pairs at true distance <= sensing radius become SS/SA edges; every
    anchor pair is an AA edge regardless of distance. Ordering is
    lexicographic in the 1-based global pair (i, j), so repeated calls on
    the same network agree exactly.
    """
    if net.ground_truth is None:
        raise GroundTruthRequired("edge construction needs true positions")
    pos = net.true_positions()
    V = pos.shape[0]
    N = net.n_free
    r2 = net.sensing_radius * net.sensing_radius
    diff = pos[:, None, :] - pos[None, :, :]
    sq = np.einsum("abk,abk->ab", diff, diff)
    ii, jj = [], []
    for a in range(V):
        for b in range(a + 1, V):
            if a >= N or sq[a, b] <= r2:
                ii.append(a)
                jj.append(b)
    idx_i = np.asarray(ii, dtype=np.int64)
    idx_j = np.asarray(jj, dtype=np.int64)
    dsq = kernels.edge_sq_dists(net.ground_truth, net.anchor_positions, idx_i, idx_j)
    dsq = np.asarray(dsq, dtype=np.float64)

    edges = []
    for e in range(len(idx_i)):
        i0, j0 = int(idx_i[e]), int(idx_j[e])
        kind = _kind_for(i0, j0, N)
        ni = NodeId(i0 + 1, NodeKind.NON_ANCHOR if i0 < N else NodeKind.ANCHOR)
        nj = NodeId(j0 + 1, NodeKind.NON_ANCHOR if j0 < N else NodeKind.ANCHOR)
        edges.append(Edge(ni, nj, kind, float(np.sqrt(dsq[e]))))

    degree = np.zeros(V, dtype=np.int64)
    np.add.at(degree, idx_i, 1)
    np.add.at(degree, idx_j, 1)
    lonely = np.nonzero(degree == 0)[0]
    if lonely.size:
        warnings.warn(
            f"nodes with no incident edge (1-based): {[int(v) + 1 for v in lonely]}",
            DisconnectedNodeWarning,
            stacklevel=2,
        )
    return EdgeSet(tuple(edges), idx_i, idx_j, dsq, N, net.n_anchors)


def generate_random_instance(dimension, n_free, n_anchors, sensing_radius, seed):
    """Uniform random instance on the unit hypercube; anchors drawn first."""
    if dimension not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    if n_free < 1:
        raise ValueError("need at least one free node")
    if n_anchors < dimension + 1:
        raise TooFewAnchors(
            f"{n_anchors} anchors cannot pin a frame in R^{dimension}; "
            f"need at least {dimension + 1}"
        )
    rng = np.random.default_rng(seed)
    anchors = rng.random((n_anchors, dimension))
    truth = rng.random((n_free, dimension))
    return SensorNetwork(
        dimension=dimension,
        anchor_positions=anchors,
        sensing_radius=float(sensing_radius),
        ground_truth=truth,
    )


def _rigidity_rows(pos, idx_i, idx_j):
    q = idx_i.shape[0]
    V, n = pos.shape
    R = np.zeros((q, n * V))
    for e in range(q):
        i, j = idx_i[e], idx_j[e]
        d = pos[i] - pos[j]
        R[e, n * i : n * i + n] = d
        R[e, n * j : n * j + n] = -d
    return R


def rigidity_matrix(net, edges):
    """Edge-wise position-difference matrix at the true positions, (q, n(N+M))."""
    return _rigidity_rows(net.true_positions(), edges.idx_i, edges.idx_j)


def _numeric_rank(s, tol):
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


_PERTURBATION = 1e-3
_RANK_TOL = 1e-8


def _generic_positions(net, seed):
    rng = np.random.default_rng(seed)
    pos = net.true_positions()
    return pos + _PERTURBATION * rng.standard_normal(pos.shape)


def is_generically_rigid(net, edges, seed=0):
    """Randomized rank test of the rigidity matrix at perturbed positions."""
    pos = _generic_positions(net, seed)
    V, n = pos.shape
    required = n * V - n * (n + 1) // 2
    R = _rigidity_rows(pos, edges.idx_i, edges.idx_j)
    s = np.linalg.svd(R, compute_uv=False)
    return _numeric_rank(s, _RANK_TOL) >= required


def is_generically_globally_rigid(net, edges, seed=0):
    """Randomized stress-matrix test for generic global rigidity.

    Draws an equilibrium stress from the left null space of the rigidity
    matrix at generically perturbed positions and checks the stress-matrix
    rank condition rank = V - n - 1. When the framework is minimally rigid
    (trivial stress space) the answer falls back to a single-edge redundancy
    probe, which fails any non-simplex minimal framework.

    Raises NotRigid when the framework is not even generically rigid.
    """
    if not is_generically_rigid(net, edges, seed=seed):
        raise NotRigid("framework fails the generic rigidity rank test")
    pos = _generic_positions(net, seed)
    V, n = pos.shape
    q = edges.q
    required = n * V - n * (n + 1) // 2
    R = _rigidity_rows(pos, edges.idx_i, edges.idx_j)
    U, s, _ = np.linalg.svd(R, full_matrices=True)
    rank = _numeric_rank(s, _RANK_TOL)
    nullity = q - rank
    if nullity <= 0:
        if V <= n + 1:
            return True
        # Minimally rigid beyond a simplex: removing any edge breaks rigidity.
        keep = np.ones(q, dtype=bool)
        for e in range(q):
            keep[e] = False
            Re = _rigidity_rows(pos, edges.idx_i[keep], edges.idx_j[keep])
            se = np.linalg.svd(Re, compute_uv=False)
            broke = _numeric_rank(se, _RANK_TOL) < required
            keep[e] = True
            if broke:
                return False
        return True
    rng = np.random.default_rng(seed + 1)
    w = U[:, rank:] @ rng.standard_normal(nullity)
    w /= np.linalg.norm(w)
    S = np.zeros((V, V))
    for e in range(q):
        i, j = edges.idx_i[e], edges.idx_j[e]
        S[i, j] -= w[e]
        S[j, i] -= w[e]
        S[i, i] += w[e]
        S[j, j] += w[e]
    lam = np.linalg.eigvalsh(S)
    mags = np.abs(lam)
    rank_s = int(np.count_nonzero(mags > _RANK_TOL * max(mags.max(), 1e-300)))
    return rank_s == V - n - 1


def passes_rigidity_screen(net, edges, seed=0):
    """True when the instance is both generically rigid and globally rigid."""
    try:
        return is_generically_globally_rigid(net, edges, seed=seed)
    except NotRigid:
        return False
