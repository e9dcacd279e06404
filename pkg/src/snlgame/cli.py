"""Command-line surface.

Exit codes: 0 success (and certified, where a certificate is produced),
1 usage or runtime error, 2 ran to completion but not certified.
"""

import sys
import time
import warnings

import click
import numpy as np

from .certify import Verdict, certify, error_report
from .duality import (
    complementary_function,
    complementary_grad_tau,
    complementary_grad_x,
    conjugate_edge_potential,
    duality_map,
    edge_potential,
    edge_squared_distances,
    position_hessian_fd_gap,
)
from .errors import SnlGameError
from .game import default_boxes, grad_potential, potential
from .network import build_edge_set, generate_random_instance, passes_rigidity_screen
from .scenarios import (
    config_from_dict,
    default_anchor_count,
    default_radius,
    ingest_csv,
    load_result,
    load_scenario,
    network_from_scenario,
    result_document,
    run_sweep,
    save_result,
    save_scenario,
    scenario_document,
    write_trace_csv,
)
from .solver import SolverConfig, solve_saddle

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CERTIFIED = 2


@click.group()
@click.option("--seed", type=int, default=0, show_default=True, help="Random seed.")
@click.option("--tol", type=float, default=1e-5, show_default=True,
              help="Termination tolerance on both displacement norms.")
@click.option("--alpha0", type=float, default=2.0, show_default=True,
              help="Initial step size.")
@click.option("--gamma", type=float, default=0.51, show_default=True,
              help="Step decay exponent in (0.5, 1].")
@click.option("--radius", type=float, default=None,
              help="Sensing radius in normalized units "
                   "[default: 2.5*sqrt(log(V)/V), a density heuristic].")
@click.option("--max-iter", type=int, default=200_000, show_default=True,
              help="Iteration budget.")
@click.option("--tau-nonneg", is_flag=True,
              help="Use the eigendecomposition-free inner approximation of the "
                   "dual feasible set (nonnegative orthant within the range box).")
@click.option("--trace-every", type=int, default=1, show_default=True,
              help="Write every k-th trace row.")
@click.pass_context
def cli(ctx, seed, tol, alpha0, gamma, radius, max_iter, tau_nonneg, trace_every):
    """Sensor network localization via a potential-game saddle solver."""
    ctx.ensure_object(dict)
    ctx.obj.update(
        seed=seed, tol=tol, alpha0=alpha0, gamma=gamma, radius=radius,
        max_iter=max_iter, tau_nonneg=tau_nonneg, trace_every=trace_every,
    )


def _config_from_ctx(obj, overrides=None):
    merged = {
        "alpha0": obj["alpha0"],
        "decay": obj["gamma"],
        "tol": obj["tol"],
        "max_iter": obj["max_iter"],
        "seed": obj["seed"],
        "tau_nonneg": obj["tau_nonneg"],
    }
    merged.update(overrides or {})
    return SolverConfig(**merged)


@cli.command()
@click.option("--dim", type=click.Choice(["2", "3"]), default="2", show_default=True)
@click.option("--nodes", "-n", type=int, required=True, help="Free (non-anchor) node count.")
@click.option("--anchors", "-m", type=int, default=None,
              help="Anchor count [default: max(dim+1, ceil(N/5)), a heuristic "
                   "sweep rule; pick your own for real deployments].")
@click.option("--require-rigid", is_flag=True,
              help="Fail unless the instance passes the rigidity screens.")
@click.option("--out", type=click.Path(writable=True), required=True)
@click.pass_context
def generate(ctx, dim, nodes, anchors, require_rigid, out):
    """Generate a random scenario file."""
    obj = ctx.obj
    dim = int(dim)
    m = anchors if anchors is not None else default_anchor_count(dim, nodes)
    radius = obj["radius"] if obj["radius"] is not None else default_radius(nodes + m)
    net = generate_random_instance(dim, nodes, m, radius, obj["seed"])
    edges = build_edge_set(net)
    if require_rigid and not passes_rigidity_screen(net, edges):
        raise click.ClickException("instance failed the rigidity screens; re-seed")
    save_scenario(scenario_document(net), out)
    click.echo(f"wrote {out}: N={nodes} M={m} q={edges.q}")
    return EXIT_OK


@cli.command()
@click.argument("scenario", type=click.Path(exists=True))
@click.option("--out", type=click.Path(writable=True), default="result.json",
              show_default=True)
@click.option("--trace", type=click.Path(writable=True), default=None,
              help="Also write the iteration trace CSV here.")
@click.pass_context
def solve(ctx, scenario, out, trace):
    """Solve a scenario and certify the computed point."""
    obj = ctx.obj
    doc = load_scenario(scenario)
    net, boxes, overrides = network_from_scenario(doc)
    edges = build_edge_set(net)
    cfg = _config_from_ctx(obj, overrides)
    t0 = time.perf_counter()
    profile, tau, tr = solve_saddle(net, edges, boxes=boxes, cfg=cfg)
    wall = time.perf_counter() - t0
    cert = certify(profile, tau, net, edges)
    err = error_report(profile, net) if net.ground_truth is not None else None
    save_result(result_document(doc, profile, tau, tr, cert, err, cfg, wall), out)
    if trace:
        write_trace_csv(tr, trace, every=obj["trace_every"])
    click.echo(
        f"status={tr.status.value} iterations={tr.iterations} "
        f"P={tr.potential[-1]:.3e} verdict={cert.verdict.value}"
        + (f" rmse={err.rmse:.3e}" if err else "")
    )
    return EXIT_OK if cert.verdict is Verdict.GLOBAL_NE else EXIT_NOT_CERTIFIED


@cli.command("certify")
@click.argument("result", type=click.Path(exists=True))
@click.pass_context
def certify_cmd(ctx, result):
    """Re-verify the certificate stored in a result document."""
    doc = load_result(result)
    net, boxes, _ = network_from_scenario(doc["scenario"])
    edges = build_edge_set(net)
    x = np.asarray(doc["positions"], dtype=np.float64)
    tau = np.asarray(doc["tau"], dtype=np.float64)
    cert = certify(x, tau, net, edges, boxes=boxes)
    stored = doc.get("certificate", {}).get("verdict")
    click.echo(
        f"verdict={cert.verdict.value} (stored: {stored}) "
        f"max_duality_residual={cert.max_residual:.3e} "
        f"r_x={cert.stationary_residual_x:.3e} r_tau={cert.stationary_residual_tau:.3e}"
    )
    return EXIT_OK if cert.verdict is Verdict.GLOBAL_NE else EXIT_NOT_CERTIFIED


@cli.command()
@click.option("--sizes", default="10,20,35,50", show_default=True,
              help="Comma-separated free-node counts.")
@click.option("--seeds", type=int, default=3, show_default=True)
@click.option("--out-dir", type=click.Path(), default=None,
              help="Directory for per-run results, traces, and summary.csv.")
@click.pass_context
def sweep(ctx, sizes, seeds, out_dir):
    """Generate-solve-certify over a grid of sizes and seeds."""
    obj = ctx.obj
    try:
        size_list = [int(s) for s in sizes.split(",") if s.strip()]
    except ValueError:
        raise click.ClickException(f"cannot parse sizes {sizes!r}")
    if not size_list:
        raise click.ClickException("sizes must be nonempty")
    cfg = _config_from_ctx(obj)
    rows = run_sweep(size_list, seeds=seeds, radius=obj["radius"], cfg=cfg,
                     out_dir=out_dir)
    header = f"{'N':>4} {'seed':>4} {'q':>5} {'iters':>8} {'status':>12} " \
             f"{'verdict':>16} {'rmse':>10} {'P':>10}"
    click.echo(header)
    for r in rows:
        click.echo(
            f"{r['N']:>4} {r['seed']:>4} {r['q']:>5} {r['iterations']:>8} "
            f"{r['status']:>12} {r['verdict']:>16} {r['rmse']:>10.2e} {r['P']:>10.2e}"
        )
    certified = sum(r["verdict"] == Verdict.GLOBAL_NE.value for r in rows)
    click.echo(f"certified {certified}/{len(rows)} runs")
    return EXIT_OK


@cli.command()
@click.argument("csvfile", type=click.Path(exists=True))
@click.option("--x-col", required=True)
@click.option("--y-col", required=True)
@click.option("--z-col", default=None)
@click.option("--anchor-col", required=True)
@click.option("--out", type=click.Path(writable=True), required=True)
@click.pass_context
def ingest(ctx, csvfile, x_col, y_col, z_col, anchor_col, out):
    """Ingest a CSV of coordinates into a normalized scenario file."""
    obj = ctx.obj
    radius = obj["radius"] if obj["radius"] is not None else 0.5
    net = ingest_csv(
        csvfile, x_col=x_col, y_col=y_col, z_col=z_col, anchor_col=anchor_col,
        sensing_radius=radius,
    )
    save_scenario(scenario_document(net), out)
    click.echo(
        f"wrote {out}: N={net.n_free} M={net.n_anchors} dim={net.dimension} "
        f"radius={net.sensing_radius}"
    )
    return EXIT_OK


@cli.command()
@click.option("--nodes", type=int, default=4, show_default=True)
@click.option("--anchors", type=int, default=3, show_default=True)
@click.option("--checks", type=int, default=20, show_default=True,
              help="Random evaluation points per suite.")
@click.pass_context
def gradcheck(ctx, nodes, anchors, checks):
    """Finite-difference verification of every gradient and the dual Hessian."""
    obj = ctx.obj
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        net = generate_random_instance(2, nodes, anchors, 2.0, obj["seed"])
        edges = build_edge_set(net)
    rng = np.random.default_rng(obj["seed"] + 1)
    N, n = nodes, 2
    h = 1e-6
    all_ok = True

    def fd_grad(f, v0):
        g = np.empty(v0.size)
        flat = v0.ravel()
        for a in range(flat.size):
            vp = flat.copy(); vp[a] += h
            vm = flat.copy(); vm[a] -= h
            g[a] = (f(vp.reshape(v0.shape)) - f(vm.reshape(v0.shape))) / (2 * h)
        return g.reshape(v0.shape)

    def report(name, err, tol):
        nonlocal all_ok
        ok = err <= tol
        all_ok &= ok
        click.echo(f"{'PASS' if ok else 'FAIL'} {name}: max rel err {err:.3e} (tol {tol:.0e})")

    worst = 0.0
    for _ in range(checks):
        x = rng.random((N, n))
        g = grad_potential(x, net, edges)
        fd = fd_grad(lambda v: potential(v, net, edges), x)
        worst = max(worst, np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(g))))
    report("potential gradient", worst, 1e-6)

    worst = 0.0
    for _ in range(checks):
        x = rng.random((N, n))
        tau = rng.standard_normal(edges.q)
        tau[~edges.active] = 0.0
        g = complementary_grad_x(x, tau, net, edges)
        fd = fd_grad(lambda v: complementary_function(v, tau, net, edges), x)
        worst = max(worst, np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(g))))
    report("mixed-function position gradient", worst, 1e-6)

    worst = 0.0
    for _ in range(checks):
        x = rng.random((N, n))
        tau = rng.standard_normal(edges.q)
        tau[~edges.active] = 0.0
        g = complementary_grad_tau(x, tau, net, edges)
        fd = fd_grad(lambda t: complementary_function(x, t, net, edges), tau)
        fd[~edges.active] = 0.0
        worst = max(worst, np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(g))))
    report("mixed-function dual gradient", worst, 1e-6)

    worst = 0.0
    for _ in range(2):
        x = rng.random((N, n))
        tau = rng.standard_normal(edges.q)
        tau[~edges.active] = 0.0
        worst = max(worst, position_hessian_fd_gap(x, tau, net, edges))
    report("position Hessian assembly", worst, 1e-4)

    worst = 0.0
    for _ in range(checks):
        xi = rng.random(edges.q) * 2.0
        tau = duality_map(xi, edges)
        gap = abs(float(np.dot(xi, tau)) - edge_potential(xi, edges)
                  - conjugate_edge_potential(tau, edges))
        worst = max(worst, gap / (1.0 + abs(float(np.dot(xi, tau)))))
    report("conjugacy identity", worst, 1e-9)

    worst = 0.0
    for _ in range(checks):
        x = rng.random((N, n))
        xi = edge_squared_distances(x, net, edges)
        tau = duality_map(xi, edges)
        p = potential(x, net, edges)
        gap = abs(complementary_function(x, tau, net, edges) - p)
        worst = max(worst, gap / (1.0 + abs(p)))
    report("complementarity identity", worst, 1e-9)

    return EXIT_OK if all_ok else EXIT_ERROR


def main(argv=None):
    """Entry point returning the exit code instead of raising SystemExit."""
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        rv = cli.main(args=argv, standalone_mode=False, obj={})
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return EXIT_ERROR
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return EXIT_ERROR
    except click.exceptions.Abort:
        return EXIT_ERROR
    except SnlGameError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_ERROR
    if rv is None:
        return EXIT_OK
    return int(rv)


def app():
    sys.exit(main())


if __name__ == "__main__":
    app()
