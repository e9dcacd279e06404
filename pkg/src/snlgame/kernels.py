"""Twin numeric kernels: numba-compiled loops with pure-numpy fallbacks.

Every hot kernel exists in two interchangeable builds. The names the rest of
the package imports (``edge_sq_dists``, ``potential_value``, ``saddle_core``,
...) are bound once at import time: the numba build when numba is installed
and ``SNLGAME_NO_NUMBA`` is unset, the numpy build otherwise. Both builds
stay reachable through ``NUMPY_IMPL`` / ``NUMBA_IMPL`` so the parity tests
and ``benchmarks/bench_kernels.py`` can compare them head to head.

Shared conventions: node indices are 0-based and global with the free nodes
first and the anchors after them; an edge is listed as ``ei[e] < ej[e]``; an
edge is anchor-anchor exactly when ``ei[e] >= n_free`` (and those slots are
inert in the mixed saddle function, its gradients, and the dual Hessian).
"""

import os

import numpy as np

_ENV_FLAG = "SNLGAME_NO_NUMBA"


def _numba_requested():
    if os.environ.get(_ENV_FLAG, "").strip().lower() in ("1", "true", "yes", "on"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_requested()

# Solver status codes shared by both builds.
STATUS_CONVERGED = 0
STATUS_MAX_ITER = 1
STATUS_PROJECTION_FAILURE = 2


# ---------------------------------------------------------------------------
# numpy build
# ---------------------------------------------------------------------------

def _stack(x, anchors):
    return np.concatenate((x, anchors), axis=0)


def edge_sq_dists_np(x, anchors, ei, ej):
    """Squared Euclidean length of every edge at the stacked positions."""
    pos = _stack(x, anchors)
    d = pos[ei] - pos[ej]
    return np.einsum("ek,ek->e", d, d)


def potential_value_np(xi, dsq):
    """Sum of squared misfits between edge values and measured squares."""
    r = xi - dsq
    return float(np.dot(r, r))


def potential_grad_np(x, anchors, ei, ej, dsq):
    """Gradient of the network potential with respect to free positions."""
    N = x.shape[0]
    pos = _stack(x, anchors)
    diff = pos[ei] - pos[ej]
    coef = 4.0 * (np.einsum("ek,ek->e", diff, diff) - dsq)
    contrib = coef[:, None] * diff
    grad = np.zeros_like(x)
    mi = ei < N
    mj = ej < N
    np.add.at(grad, ei[mi], contrib[mi])
    np.add.at(grad, ej[mj], -contrib[mj])
    return grad


def complementary_value_np(xi, dsq, tau, ei, n_free):
    """Mixed saddle function: dual-weighted misfit minus the dual quadratic."""
    act = ei < n_free
    t = tau[act]
    return float(np.dot(t, xi[act] - dsq[act]) - 0.25 * np.dot(t, t))


def complementary_grad_x_np(x, anchors, ei, ej, tau):
    """Position gradient of the mixed saddle function (linear in tau)."""
    N = x.shape[0]
    pos = _stack(x, anchors)
    diff = pos[ei] - pos[ej]
    contrib = (2.0 * tau)[:, None] * diff
    grad = np.zeros_like(x)
    mi = ei < N
    mj = ej < N
    np.add.at(grad, ei[mi], contrib[mi])
    np.add.at(grad, ej[mj], -contrib[mj])
    return grad


def complementary_grad_tau_np(xi, dsq, tau, ei, n_free):
    """Dual gradient of the mixed saddle function; anchor-anchor slots stay 0."""
    g = (xi - dsq) - 0.5 * tau
    g[ei >= n_free] = 0.0
    return g


def grounded_laplacian_np(tau, ei, ej, n_free):
    """Dual-weighted grounded Laplacian over the free nodes."""
    L = np.zeros((n_free, n_free))
    ss = ej < n_free
    sa = (ei < n_free) & (ej >= n_free)
    np.add.at(L, (ei[ss], ei[ss]), tau[ss])
    np.add.at(L, (ej[ss], ej[ss]), tau[ss])
    np.add.at(L, (ei[ss], ej[ss]), -tau[ss])
    np.add.at(L, (ej[ss], ei[ss]), -tau[ss])
    np.add.at(L, (ei[sa], ei[sa]), tau[sa])
    return L


def laplacian_adjoint_np(Z, ei, ej, n_free):
    """Adjoint of the tau -> grounded-Laplacian map, evaluated at Z."""
    q = ei.shape[0]
    out = np.zeros(q)
    ss = ej < n_free
    sa = (ei < n_free) & (ej >= n_free)
    out[ss] = Z[ei[ss], ei[ss]] + Z[ej[ss], ej[ss]] - 2.0 * Z[ei[ss], ej[ss]]
    out[sa] = Z[ei[sa], ei[sa]]
    return out


def batch_potential_np(xb, anchors, ei, ej, dsq):
    """Network potential for a batch of candidate position blocks."""
    B = xb.shape[0]
    pos = np.concatenate(
        (xb, np.broadcast_to(anchors, (B,) + anchors.shape)), axis=1
    )
    diff = pos[:, ei, :] - pos[:, ej, :]
    r = np.einsum("bek,bek->be", diff, diff) - dsq
    return np.einsum("be,be->b", r, r)


def nash_residual_np(x, anchors, ei, ej, dsq, lo, hi, gamma):
    """Per-player projected-gradient stationarity residuals."""
    g = potential_grad_np(x, anchors, ei, ej, dsq)
    stepped = np.minimum(np.maximum(x - gamma * g, lo), hi)
    d = x - stepped
    return np.sqrt(np.einsum("ik,ik->i", d, d))


def project_dual_core_np(tau0, ei, ej, n_free, lo, hi, step, tol, max_iter, Z0):
    """Euclidean projection onto the PSD-feasible dual set (accelerated dual ascent).

    Returns (tau, Z, iterations, converged, infeasibility_before, last_change).
    ``Z`` is the dual matrix iterate; passing it back in warm-starts the next
    projection of a nearby point.
    """
    tau_c = np.minimum(np.maximum(tau0, lo), hi)
    box_scale = 1.0 + max(
        float(np.max(np.abs(lo))) if lo.size else 0.0,
        float(np.max(np.abs(hi))) if hi.size else 0.0,
    )
    box_gap = float(np.max(np.abs(tau0 - tau_c))) if tau0.size else 0.0
    L0 = grounded_laplacian_np(tau0, ei, ej, n_free)
    w0 = np.linalg.eigh(L0)[0]
    lam_scale = 1.0 + max(abs(w0[0]), abs(w0[-1]))
    infeas0 = max(0.0, -w0[0])
    if box_gap <= tol * box_scale and w0[0] >= -tol * lam_scale:
        return tau0.copy(), Z0, 1, True, infeas0, 0.0

    Z = Z0.copy()
    Y = Z0.copy()
    t = 1.0
    tau_prev = np.minimum(np.maximum(tau0 + laplacian_adjoint_np(Z, ei, ej, n_free), lo), hi)
    tau = tau_prev
    converged = False
    change = 0.0
    it = 0
    for it in range(1, max_iter + 1):
        tau_y = np.minimum(np.maximum(tau0 + laplacian_adjoint_np(Y, ei, ej, n_free), lo), hi)
        Ly = grounded_laplacian_np(tau_y, ei, ej, n_free)
        G = Y - step * Ly
        w, U = np.linalg.eigh(G)
        Znew = (U * np.maximum(w, 0.0)) @ U.T
        Znew = 0.5 * (Znew + Znew.T)
        if float(np.sum((Y - Znew) * (Znew - Z))) > 0.0:
            t = 1.0
            Y = Znew.copy()
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            Y = Znew + ((t - 1.0) / t_next) * (Znew - Z)
            t = t_next
        Z = Znew
        tau = np.minimum(np.maximum(tau0 + laplacian_adjoint_np(Z, ei, ej, n_free), lo), hi)
        change = float(np.sqrt(np.sum((tau - tau_prev) ** 2)))
        tau_prev = tau
        if change <= tol:
            wf = np.linalg.eigh(grounded_laplacian_np(tau, ei, ej, n_free))[0]
            sc = 1.0 + max(abs(wf[0]), abs(wf[-1]))
            if wf[0] >= -tol * sc:
                converged = True
                break
    return tau, Z, it, converged, infeas0, change


def saddle_core_np(
    x0, tau0, anchors, ei, ej, dsq, box_lo, box_hi, tau_lo, tau_hi,
    alpha0, decay, tol, max_iter, dual_step, proj_tol, proj_max_iter,
    tau_nonneg, gauss_seidel, nash_every, nash_gamma, snapshot_every,
):
    """Projected dual-ascent / primal-descent saddle iteration."""
    N, n = x0.shape
    q = tau0.shape[0]
    x = x0.copy()
    tau = tau0.copy()
    Z = np.zeros((N, N))
    P_hist = np.empty(max_iter)
    psi_hist = np.empty(max_iter)
    dx_hist = np.empty(max_iter)
    dtau_hist = np.empty(max_iter)
    nash_hist = np.full(max_iter, np.nan)
    cap = max_iter // snapshot_every + 1 if snapshot_every > 0 else 0
    snap_x = np.empty((cap, N, n))
    snap_tau = np.empty((cap, q))
    snap_k = np.empty(cap, dtype=np.int64)
    n_snap = 0
    tl_nonneg = np.maximum(tau_lo, 0.0)
    status = STATUS_MAX_ITER
    done = max_iter
    fail_streak = 0
    for k in range(max_iter):
        a = alpha0 * (k + 1.0) ** (-decay)
        xi = edge_sq_dists_np(x, anchors, ei, ej)
        gtau = complementary_grad_tau_np(xi, dsq, tau, ei, N)
        raw = tau + a * gtau
        if tau_nonneg:
            tau_new = np.minimum(np.maximum(raw, tl_nonneg), tau_hi)
        else:
            tau_new, Z, _, ok, _, _ = project_dual_core_np(
                raw, ei, ej, N, tau_lo, tau_hi, dual_step, proj_tol, proj_max_iter, Z
            )
            if ok:
                fail_streak = 0
            else:
                fail_streak += 1
        use_tau = tau_new if gauss_seidel else tau
        gx = complementary_grad_x_np(x, anchors, ei, ej, use_tau)
        x_new = np.minimum(np.maximum(x - a * gx, box_lo), box_hi)
        dx = float(np.sqrt(np.sum((x_new - x) ** 2)))
        dtau = float(np.sqrt(np.sum((tau_new - tau) ** 2)))
        x = x_new
        tau = tau_new
        xi_new = edge_sq_dists_np(x, anchors, ei, ej)
        P_hist[k] = potential_value_np(xi_new, dsq)
        psi_hist[k] = complementary_value_np(xi_new, dsq, tau, ei, N)
        dx_hist[k] = dx
        dtau_hist[k] = dtau
        if nash_every > 0 and (k + 1) % nash_every == 0:
            r = nash_residual_np(x, anchors, ei, ej, dsq, box_lo, box_hi, nash_gamma)
            nash_hist[k] = float(np.max(r)) if r.size else 0.0
        if snapshot_every > 0 and (k + 1) % snapshot_every == 0:
            snap_x[n_snap] = x
            snap_tau[n_snap] = tau
            snap_k[n_snap] = k + 1
            n_snap += 1
        if fail_streak >= 2:
            status = STATUS_PROJECTION_FAILURE
            done = k + 1
            break
        if dx <= tol and dtau <= tol:
            status = STATUS_CONVERGED
            done = k + 1
            break
    return (
        x, tau, done, status, P_hist, psi_hist, dx_hist, dtau_hist, nash_hist,
        snap_x, snap_tau, snap_k, n_snap,
    )


def descent_core_np(
    x0, anchors, ei, ej, dsq, box_lo, box_hi,
    alpha0, decay, tol, max_iter, nash_every, nash_gamma, snapshot_every,
):
    """Plain projected gradient descent on the network potential."""
    N, n = x0.shape
    x = x0.copy()
    P_hist = np.empty(max_iter)
    dx_hist = np.empty(max_iter)
    nash_hist = np.full(max_iter, np.nan)
    cap = max_iter // snapshot_every + 1 if snapshot_every > 0 else 0
    snap_x = np.empty((cap, N, n))
    snap_k = np.empty(cap, dtype=np.int64)
    n_snap = 0
    status = STATUS_MAX_ITER
    done = max_iter
    for k in range(max_iter):
        a = alpha0 * (k + 1.0) ** (-decay)
        g = potential_grad_np(x, anchors, ei, ej, dsq)
        x_new = np.minimum(np.maximum(x - a * g, box_lo), box_hi)
        dx = float(np.sqrt(np.sum((x_new - x) ** 2)))
        x = x_new
        xi = edge_sq_dists_np(x, anchors, ei, ej)
        P_hist[k] = potential_value_np(xi, dsq)
        dx_hist[k] = dx
        if nash_every > 0 and (k + 1) % nash_every == 0:
            r = nash_residual_np(x, anchors, ei, ej, dsq, box_lo, box_hi, nash_gamma)
            nash_hist[k] = float(np.max(r)) if r.size else 0.0
        if snapshot_every > 0 and (k + 1) % snapshot_every == 0:
            snap_x[n_snap] = x
            snap_k[n_snap] = k + 1
            n_snap += 1
        if dx <= tol:
            status = STATUS_CONVERGED
            done = k + 1
            break
    return x, done, status, P_hist, dx_hist, nash_hist, snap_x, snap_k, n_snap


NUMPY_IMPL = {
    "edge_sq_dists": edge_sq_dists_np,
    "potential_value": potential_value_np,
    "potential_grad": potential_grad_np,
    "complementary_value": complementary_value_np,
    "complementary_grad_x": complementary_grad_x_np,
    "complementary_grad_tau": complementary_grad_tau_np,
    "grounded_laplacian": grounded_laplacian_np,
    "laplacian_adjoint": laplacian_adjoint_np,
    "batch_potential": batch_potential_np,
    "nash_residual": nash_residual_np,
    "project_dual_core": project_dual_core_np,
    "saddle_core": saddle_core_np,
    "descent_core": descent_core_np,
}


# ---------------------------------------------------------------------------
# numba build
# ---------------------------------------------------------------------------

NUMBA_IMPL = None

if NUMBA_ENABLED:
    from numba import njit

    @njit(cache=True)
    def _edge_sq_dists_nb(x, anchors, ei, ej):
        N = x.shape[0]
        n = x.shape[1]
        q = ei.shape[0]
        out = np.empty(q)
        for e in range(q):
            i = ei[e]
            j = ej[e]
            acc = 0.0
            for k in range(n):
                pi = x[i, k] if i < N else anchors[i - N, k]
                pj = x[j, k] if j < N else anchors[j - N, k]
                d = pi - pj
                acc += d * d
            out[e] = acc
        return out

    @njit(cache=True)
    def _potential_value_nb(xi, dsq):
        acc = 0.0
        for e in range(xi.shape[0]):
            r = xi[e] - dsq[e]
            acc += r * r
        return acc

    @njit(cache=True)
    def _potential_grad_nb(x, anchors, ei, ej, dsq):
        N = x.shape[0]
        n = x.shape[1]
        grad = np.zeros((N, n))
        for e in range(ei.shape[0]):
            i = ei[e]
            j = ej[e]
            acc = 0.0
            for k in range(n):
                pi = x[i, k] if i < N else anchors[i - N, k]
                pj = x[j, k] if j < N else anchors[j - N, k]
                d = pi - pj
                acc += d * d
            coef = 4.0 * (acc - dsq[e])
            for k in range(n):
                pi = x[i, k] if i < N else anchors[i - N, k]
                pj = x[j, k] if j < N else anchors[j - N, k]
                g = coef * (pi - pj)
                if i < N:
                    grad[i, k] += g
                if j < N:
                    grad[j, k] -= g
        return grad

    @njit(cache=True)
    def _complementary_value_nb(xi, dsq, tau, ei, n_free):
        acc = 0.0
        for e in range(xi.shape[0]):
            if ei[e] < n_free:
                t = tau[e]
                acc += t * (xi[e] - dsq[e]) - 0.25 * t * t
        return acc

    @njit(cache=True)
    def _complementary_grad_x_nb(x, anchors, ei, ej, tau):
        N = x.shape[0]
        n = x.shape[1]
        grad = np.zeros((N, n))
        for e in range(ei.shape[0]):
            i = ei[e]
            j = ej[e]
            c = 2.0 * tau[e]
            for k in range(n):
                pi = x[i, k] if i < N else anchors[i - N, k]
                pj = x[j, k] if j < N else anchors[j - N, k]
                g = c * (pi - pj)
                if i < N:
                    grad[i, k] += g
                if j < N:
                    grad[j, k] -= g
        return grad

    @njit(cache=True)
    def _complementary_grad_tau_nb(xi, dsq, tau, ei, n_free):
        q = xi.shape[0]
        out = np.empty(q)
        for e in range(q):
            if ei[e] < n_free:
                out[e] = (xi[e] - dsq[e]) - 0.5 * tau[e]
            else:
                out[e] = 0.0
        return out

    @njit(cache=True)
    def _grounded_laplacian_nb(tau, ei, ej, n_free):
        L = np.zeros((n_free, n_free))
        for e in range(ei.shape[0]):
            i = ei[e]
            j = ej[e]
            if i < n_free:
                t = tau[e]
                L[i, i] += t
                if j < n_free:
                    L[j, j] += t
                    L[i, j] -= t
                    L[j, i] -= t
        return L

    @njit(cache=True)
    def _laplacian_adjoint_nb(Z, ei, ej, n_free):
        q = ei.shape[0]
        out = np.zeros(q)
        for e in range(q):
            i = ei[e]
            j = ej[e]
            if i < n_free:
                if j < n_free:
                    out[e] = Z[i, i] + Z[j, j] - 2.0 * Z[i, j]
                else:
                    out[e] = Z[i, i]
        return out

    @njit(cache=True)
    def _batch_potential_nb(xb, anchors, ei, ej, dsq):
        B = xb.shape[0]
        N = xb.shape[1]
        n = xb.shape[2]
        q = ei.shape[0]
        out = np.empty(B)
        for b in range(B):
            acc = 0.0
            for e in range(q):
                i = ei[e]
                j = ej[e]
                s = 0.0
                for k in range(n):
                    pi = xb[b, i, k] if i < N else anchors[i - N, k]
                    pj = xb[b, j, k] if j < N else anchors[j - N, k]
                    d = pi - pj
                    s += d * d
                r = s - dsq[e]
                acc += r * r
            out[b] = acc
        return out

    @njit(cache=True)
    def _nash_residual_nb(x, anchors, ei, ej, dsq, lo, hi, gamma):
        N = x.shape[0]
        n = x.shape[1]
        g = _potential_grad_nb(x, anchors, ei, ej, dsq)
        r = np.empty(N)
        for i in range(N):
            acc = 0.0
            for k in range(n):
                v = x[i, k] - gamma * g[i, k]
                if v < lo[i, k]:
                    v = lo[i, k]
                elif v > hi[i, k]:
                    v = hi[i, k]
                d = x[i, k] - v
                acc += d * d
            r[i] = np.sqrt(acc)
        return r

    @njit(cache=True)
    def _clip_vec_nb(v, lo, hi):
        out = np.empty(v.shape[0])
        for e in range(v.shape[0]):
            u = v[e]
            if u < lo[e]:
                u = lo[e]
            elif u > hi[e]:
                u = hi[e]
            out[e] = u
        return out

    @njit(cache=True)
    def _project_dual_core_nb(tau0, ei, ej, n_free, lo, hi, step, tol, max_iter, Z0):
        q = tau0.shape[0]
        box_scale = 1.0
        box_gap = 0.0
        for e in range(q):
            al = abs(lo[e])
            ah = abs(hi[e])
            if al > box_scale - 1.0:
                box_scale = 1.0 + al
            if ah > box_scale - 1.0:
                box_scale = 1.0 + ah
            c = tau0[e]
            if c < lo[e]:
                c = lo[e]
            elif c > hi[e]:
                c = hi[e]
            g = abs(tau0[e] - c)
            if g > box_gap:
                box_gap = g
        L0 = _grounded_laplacian_nb(tau0, ei, ej, n_free)
        w0 = np.linalg.eigh(L0)[0]
        lam_scale = 1.0 + max(abs(w0[0]), abs(w0[-1]))
        infeas0 = -w0[0] if w0[0] < 0.0 else 0.0
        if box_gap <= tol * box_scale and w0[0] >= -tol * lam_scale:
            return tau0.copy(), Z0, 1, True, infeas0, 0.0

        Z = Z0.copy()
        Y = Z0.copy()
        t = 1.0
        tau_prev = _clip_vec_nb(tau0 + _laplacian_adjoint_nb(Z, ei, ej, n_free), lo, hi)
        tau = tau_prev
        converged = False
        change = 0.0
        it = 0
        for it in range(1, max_iter + 1):
            tau_y = _clip_vec_nb(tau0 + _laplacian_adjoint_nb(Y, ei, ej, n_free), lo, hi)
            Ly = _grounded_laplacian_nb(tau_y, ei, ej, n_free)
            G = Y - step * Ly
            w, U = np.linalg.eigh(G)
            Znew = (U * np.maximum(w, 0.0)) @ U.T
            Znew = 0.5 * (Znew + Znew.T)
            if np.sum((Y - Znew) * (Znew - Z)) > 0.0:
                t = 1.0
                Y = Znew.copy()
            else:
                t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
                Y = Znew + ((t - 1.0) / t_next) * (Znew - Z)
                t = t_next
            Z = Znew
            tau = _clip_vec_nb(tau0 + _laplacian_adjoint_nb(Z, ei, ej, n_free), lo, hi)
            acc = 0.0
            for e in range(q):
                d = tau[e] - tau_prev[e]
                acc += d * d
            change = np.sqrt(acc)
            tau_prev = tau
            if change <= tol:
                wf = np.linalg.eigh(_grounded_laplacian_nb(tau, ei, ej, n_free))[0]
                sc = 1.0 + max(abs(wf[0]), abs(wf[-1]))
                if wf[0] >= -tol * sc:
                    converged = True
                    break
        return tau, Z, it, converged, infeas0, change

    @njit(cache=True)
    def _saddle_core_nb(
        x0, tau0, anchors, ei, ej, dsq, box_lo, box_hi, tau_lo, tau_hi,
        alpha0, decay, tol, max_iter, dual_step, proj_tol, proj_max_iter,
        tau_nonneg, gauss_seidel, nash_every, nash_gamma, snapshot_every,
    ):
        N = x0.shape[0]
        n = x0.shape[1]
        q = tau0.shape[0]
        x = x0.copy()
        tau = tau0.copy()
        Z = np.zeros((N, N))
        P_hist = np.empty(max_iter)
        psi_hist = np.empty(max_iter)
        dx_hist = np.empty(max_iter)
        dtau_hist = np.empty(max_iter)
        nash_hist = np.full(max_iter, np.nan)
        cap = max_iter // snapshot_every + 1 if snapshot_every > 0 else 0
        snap_x = np.empty((cap, N, n))
        snap_tau = np.empty((cap, q))
        snap_k = np.empty(cap, dtype=np.int64)
        n_snap = 0
        tl_nonneg = np.maximum(tau_lo, 0.0)
        status = STATUS_MAX_ITER
        done = max_iter
        fail_streak = 0
        for k in range(max_iter):
            a = alpha0 * (k + 1.0) ** (-decay)
            xi = _edge_sq_dists_nb(x, anchors, ei, ej)
            gtau = _complementary_grad_tau_nb(xi, dsq, tau, ei, N)
            raw = tau + a * gtau
            if tau_nonneg:
                tau_new = _clip_vec_nb(raw, tl_nonneg, tau_hi)
            else:
                tau_new, Z, _, ok, _, _ = _project_dual_core_nb(
                    raw, ei, ej, N, tau_lo, tau_hi, dual_step, proj_tol, proj_max_iter, Z
                )
                if ok:
                    fail_streak = 0
                else:
                    fail_streak += 1
            use_tau = tau_new if gauss_seidel else tau
            gx = _complementary_grad_x_nb(x, anchors, ei, ej, use_tau)
            x_new = np.empty((N, n))
            dx_acc = 0.0
            for i in range(N):
                for c in range(n):
                    v = x[i, c] - a * gx[i, c]
                    if v < box_lo[i, c]:
                        v = box_lo[i, c]
                    elif v > box_hi[i, c]:
                        v = box_hi[i, c]
                    x_new[i, c] = v
                    d = v - x[i, c]
                    dx_acc += d * d
            dx = np.sqrt(dx_acc)
            dtau_acc = 0.0
            for e in range(q):
                d = tau_new[e] - tau[e]
                dtau_acc += d * d
            dtau = np.sqrt(dtau_acc)
            x = x_new
            tau = tau_new
            xi_new = _edge_sq_dists_nb(x, anchors, ei, ej)
            P_hist[k] = _potential_value_nb(xi_new, dsq)
            psi_hist[k] = _complementary_value_nb(xi_new, dsq, tau, ei, N)
            dx_hist[k] = dx
            dtau_hist[k] = dtau
            if nash_every > 0 and (k + 1) % nash_every == 0:
                r = _nash_residual_nb(x, anchors, ei, ej, dsq, box_lo, box_hi, nash_gamma)
                mx = 0.0
                for i in range(N):
                    if r[i] > mx:
                        mx = r[i]
                nash_hist[k] = mx
            if snapshot_every > 0 and (k + 1) % snapshot_every == 0:
                for i in range(N):
                    for c in range(n):
                        snap_x[n_snap, i, c] = x[i, c]
                for e in range(q):
                    snap_tau[n_snap, e] = tau[e]
                snap_k[n_snap] = k + 1
                n_snap += 1
            if fail_streak >= 2:
                status = STATUS_PROJECTION_FAILURE
                done = k + 1
                break
            if dx <= tol and dtau <= tol:
                status = STATUS_CONVERGED
                done = k + 1
                break
        return (
            x, tau, done, status, P_hist, psi_hist, dx_hist, dtau_hist, nash_hist,
            snap_x, snap_tau, snap_k, n_snap,
        )

    @njit(cache=True)
    def _descent_core_nb(
        x0, anchors, ei, ej, dsq, box_lo, box_hi,
        alpha0, decay, tol, max_iter, nash_every, nash_gamma, snapshot_every,
    ):
        N = x0.shape[0]
        n = x0.shape[1]
        x = x0.copy()
        P_hist = np.empty(max_iter)
        dx_hist = np.empty(max_iter)
        nash_hist = np.full(max_iter, np.nan)
        cap = max_iter // snapshot_every + 1 if snapshot_every > 0 else 0
        snap_x = np.empty((cap, N, n))
        snap_k = np.empty(cap, dtype=np.int64)
        n_snap = 0
        status = STATUS_MAX_ITER
        done = max_iter
        for k in range(max_iter):
            a = alpha0 * (k + 1.0) ** (-decay)
            g = _potential_grad_nb(x, anchors, ei, ej, dsq)
            x_new = np.empty((N, n))
            dx_acc = 0.0
            for i in range(N):
                for c in range(n):
                    v = x[i, c] - a * g[i, c]
                    if v < box_lo[i, c]:
                        v = box_lo[i, c]
                    elif v > box_hi[i, c]:
                        v = box_hi[i, c]
                    x_new[i, c] = v
                    d = v - x[i, c]
                    dx_acc += d * d
            dx = np.sqrt(dx_acc)
            x = x_new
            xi = _edge_sq_dists_nb(x, anchors, ei, ej)
            P_hist[k] = _potential_value_nb(xi, dsq)
            dx_hist[k] = dx
            if nash_every > 0 and (k + 1) % nash_every == 0:
                r = _nash_residual_nb(x, anchors, ei, ej, dsq, box_lo, box_hi, nash_gamma)
                mx = 0.0
                for i in range(N):
                    if r[i] > mx:
                        mx = r[i]
                nash_hist[k] = mx
            if snapshot_every > 0 and (k + 1) % snapshot_every == 0:
                for i in range(N):
                    for c in range(n):
                        snap_x[n_snap, i, c] = x[i, c]
                snap_k[n_snap] = k + 1
                n_snap += 1
            if dx <= tol:
                status = STATUS_CONVERGED
                done = k + 1
                break
        return x, done, status, P_hist, dx_hist, nash_hist, snap_x, snap_k, n_snap

    NUMBA_IMPL = {
        "edge_sq_dists": _edge_sq_dists_nb,
        "potential_value": _potential_value_nb,
        "potential_grad": _potential_grad_nb,
        "complementary_value": _complementary_value_nb,
        "complementary_grad_x": _complementary_grad_x_nb,
        "complementary_grad_tau": _complementary_grad_tau_nb,
        "grounded_laplacian": _grounded_laplacian_nb,
        "laplacian_adjoint": _laplacian_adjoint_nb,
        "batch_potential": _batch_potential_nb,
        "nash_residual": _nash_residual_nb,
        "project_dual_core": _project_dual_core_nb,
        "saddle_core": _saddle_core_nb,
        "descent_core": _descent_core_nb,
    }


_ACTIVE = NUMBA_IMPL if NUMBA_ENABLED else NUMPY_IMPL

edge_sq_dists = _ACTIVE["edge_sq_dists"]
potential_value = _ACTIVE["potential_value"]
potential_grad = _ACTIVE["potential_grad"]
complementary_value = _ACTIVE["complementary_value"]
complementary_grad_x = _ACTIVE["complementary_grad_x"]
complementary_grad_tau = _ACTIVE["complementary_grad_tau"]
grounded_laplacian = _ACTIVE["grounded_laplacian"]
laplacian_adjoint = _ACTIVE["laplacian_adjoint"]
batch_potential = _ACTIVE["batch_potential"]
nash_residual = _ACTIVE["nash_residual"]
project_dual_core = _ACTIVE["project_dual_core"]
saddle_core = _ACTIVE["saddle_core"]
descent_core = _ACTIVE["descent_core"]
