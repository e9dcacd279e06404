"""Independent reference computations used to check the library.

Everything in here deliberately avoids the package's kernels: plain Python
loops, math.fsum accumulation, and generic finite differences, so the two
sides of every comparison share no arithmetic path.
"""

import itertools
import math

import numpy as np


def scalar_potential(x, net, edges):
    """Potential recomputed edge by edge with scalar arithmetic."""
    x = np.asarray(x, dtype=float)
    anchors = net.anchor_positions
    nf = edges.n_free
    terms = []
    for e in range(edges.q):
        i, j = int(edges.idx_i[e]), int(edges.idx_j[e])
        pi = x[i] if i < nf else anchors[i - nf]
        pj = x[j] if j < nf else anchors[j - nf]
        sq = math.fsum((float(pi[k]) - float(pj[k])) ** 2 for k in range(len(pi)))
        terms.append((sq - float(edges.dsq[e])) ** 2)
    return math.fsum(terms)


def fd_gradient(f, x, h=1e-6):
    """Central finite differences of a scalar function of an array."""
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    g = np.empty(flat.size)
    for a in range(flat.size):
        vp = flat.copy()
        vp[a] += h
        vm = flat.copy()
        vm[a] -= h
        g[a] = (f(vp.reshape(x.shape)) - f(vm.reshape(x.shape))) / (2.0 * h)
    return g.reshape(x.shape)


def fd_hessian(f, x, h=1e-3):
    """Central second differences, full dense Hessian."""
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    m = flat.size
    H = np.empty((m, m))
    for a in range(m):
        for b in range(m):
            vpp = flat.copy(); vpp[a] += h; vpp[b] += h
            vpm = flat.copy(); vpm[a] += h; vpm[b] -= h
            vmp = flat.copy(); vmp[a] -= h; vmp[b] += h
            vmm = flat.copy(); vmm[a] -= h; vmm[b] -= h
            H[a, b] = (
                f(vpp.reshape(x.shape)) - f(vpm.reshape(x.shape))
                - f(vmp.reshape(x.shape)) + f(vmm.reshape(x.shape))
            ) / (4.0 * h * h)
    return H


def grid_project_dual(tau0, net, edges, boxes=None, levels=60, pts=13, psd_tol=1e-11):
    """Zooming grid search for the Euclidean projection onto the dual set.

    Only sensible for q <= 3 active coordinates; anchor-anchor slots are
    pinned to zero up front. The window re-centers on the incumbent each
    level and only shrinks when the incumbent is interior, so the search can
    track an optimum that slides along the curved feasible boundary.
    """
    from snlgame.duality import dual_range_box, grounded_laplacian

    tau0 = np.asarray(tau0, dtype=float)
    box = dual_range_box(net, edges, boxes=boxes)
    active = [e for e in range(edges.q) if box[e, 0] != box[e, 1]]
    assert len(active) <= 3, "oracle is for tiny duals only"

    def feasible(t):
        L = grounded_laplacian(t, net, edges)
        w = np.linalg.eigvalsh(L)
        return w[0] >= -psd_tol * (1.0 + abs(w).max())

    lo = box[active, 0].copy()
    hi = box[active, 1].copy()
    half = 0.5 * (hi - lo)
    centre = 0.5 * (hi + lo)
    best = None
    best_d = np.inf
    for _ in range(levels):
        win_lo = np.maximum(box[active, 0], centre - half)
        win_hi = np.minimum(box[active, 1], centre + half)
        axes = [np.linspace(win_lo[a], win_hi[a], pts) for a in range(len(active))]
        level_best = None
        level_d = np.inf
        for combo in itertools.product(*axes):
            t = np.zeros(edges.q)
            t[active] = combo
            t = np.minimum(np.maximum(t, box[:, 0]), box[:, 1])
            if not feasible(t):
                continue
            d = float(np.sum((t - tau0) ** 2))
            if d < level_d:
                level_d = d
                level_best = t.copy()
        if level_best is not None and level_d < best_d:
            best_d = level_d
            best = level_best
        assert best is not None, "no feasible grid point found"
        prev_centre = centre
        centre = best[active]
        at_edge = np.any(
            (np.abs(centre - win_lo) < 1e-15) | (np.abs(centre - win_hi) < 1e-15)
        )
        moved = np.max(np.abs(centre - prev_centre)) if prev_centre is not None else 0.0
        if not at_edge and moved <= np.max(half):
            half = half * 0.45
        if np.max(half) < 1e-9:
            break
    return best
