"""Serialization, CSV ingestion, trace sinks, and the experiment sweep.

Scenario files are schema-versioned JSON; traces are CSV with a fixed
column order so downstream plotting never has to guess. Result documents
embed the scenario (plus its content hash) so a certificate can be
re-verified offline from the one file.
"""

import csv
import hashlib
import json
import math
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from .certify import certify, error_report
from .errors import IngestError, RigidityGenerationFailed
from .game import default_boxes
from .network import (
    SensorNetwork,
    build_edge_set,
    generate_random_instance,
    passes_rigidity_screen,
)
from .solver import SolverConfig, SolveStatus, solve_saddle

SCHEMA_VERSION = 1

_SOLVER_KEYS = (
    "alpha0", "decay", "tol", "max_iter", "seed", "tau_init", "tau_init_eps",
    "gauss_seidel", "tau_nonneg", "proj_tol", "proj_max_iter", "nash_every",
    "snapshot_every",
)

TRACE_COLUMNS = ("k", "alpha", "P", "Psi", "dx_norm", "dtau_norm", "nash_residual")


# ---------------------------------------------------------------------------
# scenario documents
# ---------------------------------------------------------------------------

def scenario_document(net, boxes=None, solver=None):
    """Build the JSON-ready scenario dict for a network."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "dimension": int(net.dimension),
        "anchors": [[float(v) for v in row] for row in net.anchor_positions],
        "ground_truth": (
            None
            if net.ground_truth is None
            else [[float(v) for v in row] for row in net.ground_truth]
        ),
        "sensing_radius": float(net.sensing_radius),
        "boxes": None if boxes is None else np.asarray(boxes, dtype=float).tolist(),
        "solver": dict(solver) if solver else None,
    }
    return doc


def network_from_scenario(doc):
    """Rebuild (network, boxes, solver overrides) from a scenario dict."""
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
    dim = int(doc["dimension"])
    anchors = np.asarray(doc["anchors"], dtype=np.float64)
    gt = doc.get("ground_truth")
    truth = None if gt is None else np.asarray(gt, dtype=np.float64)
    net = SensorNetwork(
        dimension=dim,
        anchor_positions=anchors,
        sensing_radius=float(doc["sensing_radius"]),
        ground_truth=truth,
    )
    boxes = doc.get("boxes")
    if boxes is not None:
        boxes = np.asarray(boxes, dtype=np.float64)
    solver = doc.get("solver") or {}
    unknown = set(solver) - set(_SOLVER_KEYS)
    if unknown:
        raise ValueError(f"unknown solver keys in scenario: {sorted(unknown)}")
    return net, boxes, solver


def save_scenario(doc, path):
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_scenario(path):
    doc = json.loads(Path(path).read_text())
    network_from_scenario(doc)  # validate eagerly
    return doc


def scenario_fingerprint(doc):
    """Content hash of the canonical scenario encoding."""
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------------------
# result documents
# ---------------------------------------------------------------------------

def result_document(scenario, profile, tau, trace, certificate, err, cfg, wall_time_s):
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario_fingerprint": scenario_fingerprint(scenario),
        "scenario": scenario,
        "positions": [[float(v) for v in row] for row in profile.positions],
        "tau": [float(v) for v in tau],
        "certificate": certificate.to_dict(),
        "error_report": None if err is None else err.to_dict(),
        "iterations": int(trace.iterations),
        "status": trace.status.value,
        "final_potential": float(trace.potential[-1]) if trace.k.size else None,
        "config": config_to_dict(cfg),
        "wall_time_s": float(wall_time_s),
    }


def save_result(doc, path):
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_result(path):
    return json.loads(Path(path).read_text())


def config_to_dict(cfg):
    return {
        "alpha0": cfg.alpha0,
        "decay": cfg.decay,
        "tol": cfg.tol,
        "max_iter": cfg.max_iter,
        "seed": cfg.seed,
        "tau_init": cfg.tau_init,
        "tau_init_eps": cfg.tau_init_eps,
        "gauss_seidel": cfg.gauss_seidel,
        "tau_nonneg": cfg.tau_nonneg,
        "proj_tol": cfg.proj_tol,
        "proj_max_iter": cfg.proj_max_iter,
        "nash_every": cfg.nash_every,
        "snapshot_every": cfg.snapshot_every,
    }


def config_from_dict(d):
    return SolverConfig(**d)


# ---------------------------------------------------------------------------
# trace sink
# ---------------------------------------------------------------------------

def write_trace_csv(trace, path, every=1):
    """Write trace rows; column order is fixed for downstream plotting."""
    if every < 1:
        raise ValueError("every must be at least 1")
    rows = trace.k.size
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for r in range(rows):
            if (r + 1) % every and r != rows - 1:
                continue
            nash = trace.nash_residual[r]
            w.writerow(
                [
                    int(trace.k[r]),
                    repr(float(trace.alpha[r])),
                    repr(float(trace.potential[r])),
                    "" if math.isnan(trace.psi[r]) else repr(float(trace.psi[r])),
                    repr(float(trace.dx_norm[r])),
                    "" if math.isnan(trace.dtau_norm[r]) else repr(float(trace.dtau_norm[r])),
                    "" if math.isnan(nash) else repr(float(nash)),
                ]
            )


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

_TRUTHY = {"1", "true", "yes", "y", "t"}
_FALSY = {"0", "false", "no", "n", "f", ""}


def _parse_flag(raw, row):
    v = raw.strip().lower()
    if v in _TRUTHY:
        return True
    if v in _FALSY:
        return False
    try:
        return float(v) != 0.0
    except ValueError:
        raise IngestError(row, f"cannot interpret anchor flag {raw!r}") from None


def ingest_csv(path, x_col, y_col, anchor_col, z_col=None, sensing_radius=0.5):
    """Read sensor coordinates from CSV and min-max normalize each axis.

    Axes are normalized over all nodes jointly; a constant axis maps to 0.5
    (with a warning). Row numbers in errors are physical 1-based lines, the
    header being row 1.
    """
    cols = [x_col, y_col] + ([z_col] if z_col else [])
    coords, flags = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise IngestError(1, "missing header row")
        missing = [c for c in cols + [anchor_col] if c not in reader.fieldnames]
        if missing:
            raise IngestError(1, f"missing columns {missing}")
        for lineno, rec in enumerate(reader, start=2):
            vals = []
            for c in cols:
                raw = rec.get(c)
                if raw is None or raw.strip() == "":
                    raise IngestError(lineno, f"missing value for column {c!r}")
                try:
                    vals.append(float(raw))
                except ValueError:
                    raise IngestError(
                        lineno, f"cannot parse {raw!r} in column {c!r}"
                    ) from None
            coords.append(vals)
            flags.append(_parse_flag(rec.get(anchor_col, ""), lineno))
    if not coords:
        raise IngestError(2, "no data rows")
    pts = np.asarray(coords, dtype=np.float64)
    for k in range(pts.shape[1]):
        lo, hi = pts[:, k].min(), pts[:, k].max()
        if hi > lo:
            pts[:, k] = (pts[:, k] - lo) / (hi - lo)
        else:
            warnings.warn(
                f"axis {k} is constant; normalizing to 0.5", UserWarning, stacklevel=2
            )
            pts[:, k] = 0.5
    flags = np.asarray(flags, dtype=bool)
    if not flags.any():
        raise IngestError(2, "no anchor rows flagged")
    if flags.all():
        raise IngestError(2, "every row is an anchor; nothing to localize")
    dim = pts.shape[1]
    if flags.sum() < dim + 1:
        warnings.warn(
            f"only {int(flags.sum())} anchors for dimension {dim}; "
            "localization may not be unique",
            UserWarning,
            stacklevel=2,
        )
    return SensorNetwork(
        dimension=dim,
        anchor_positions=pts[flags],
        sensing_radius=float(sensing_radius),
        ground_truth=pts[~flags],
    )


# ---------------------------------------------------------------------------
# experiment sweep
# ---------------------------------------------------------------------------

def default_anchor_count(dimension, n_free):
    """Heuristic sweep default: enough anchors to keep instances well pinned.

    Tuned so the saddle iteration reliably certifies on random unit-box
    instances; real deployments should pick their own anchor budget.
    """
    return max(dimension + 1, math.ceil(n_free / 3) + 4)


def default_radius(n_nodes):
    """Heuristic sensing radius keeping random unit-box instances densely
    connected: 2.5 * sqrt(log(V) / V) for V total nodes."""
    return 2.5 * math.sqrt(math.log(n_nodes) / n_nodes)


_MAX_GENERATION_ATTEMPTS = 50

SWEEP_COLUMNS = (
    "N", "M", "seed", "instance_seed", "attempts", "q", "status", "verdict",
    "iterations", "P", "rmse", "max_error", "tau_inf", "max_duality_residual",
    "wall_time_s",
)


def rigid_random_instance(n_free, n_anchors, radius, seed, dimension=2):
    """Re-seed until the rigidity screens pass; deterministic per seed."""
    for attempt in range(_MAX_GENERATION_ATTEMPTS):
        inst_seed = seed * _MAX_GENERATION_ATTEMPTS * 2 + attempt
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            net = generate_random_instance(dimension, n_free, n_anchors, radius, inst_seed)
            edges = build_edge_set(net)
        if passes_rigidity_screen(net, edges):
            return net, edges, attempt + 1, inst_seed
    raise RigidityGenerationFailed(
        f"no rigid instance with N={n_free}, M={n_anchors}, radius={radius} "
        f"after {_MAX_GENERATION_ATTEMPTS} attempts (base seed {seed})"
    )


def run_sweep(sizes, seeds=3, radius=None, cfg=None, out_dir=None, dimension=2,
              anchors_rule=default_anchor_count):
    """Solve, certify, and summarize a grid of instance sizes and seeds.

    For each (N, seed) cell a rigid random instance is generated (re-seeding
    as needed), solved with the saddle iteration, and certified with the
    solver's own dual vector. ``radius=None`` applies the size-aware default
    rule per cell. Returns the summary rows sorted by (N, seed); ``out_dir``
    additionally receives one result document and trace per cell plus a
    summary.csv.
    """
    if not sizes:
        raise ValueError("sizes must be nonempty")
    cfg = cfg or SolverConfig()
    out = None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
    rows = []
    for n_free in sizes:
        m = anchors_rule(dimension, n_free)
        cell_radius = radius if radius is not None else default_radius(n_free + m)
        for s in range(seeds):
            cell_seed = 100_000 * n_free + s
            net, edges, attempts, inst_seed = rigid_random_instance(
                n_free, m, cell_radius, cell_seed, dimension=dimension
            )
            run_cfg = replace(cfg, seed=s)
            t0 = time.perf_counter()
            profile, tau, trace = solve_saddle(net, edges, cfg=run_cfg)
            wall = time.perf_counter() - t0
            cert = certify(profile, tau, net, edges)
            err = error_report(profile, net)
            row = {
                "N": n_free,
                "M": m,
                "seed": s,
                "instance_seed": inst_seed,
                "attempts": attempts,
                "q": edges.q,
                "status": trace.status.value,
                "verdict": cert.verdict.value,
                "iterations": trace.iterations,
                "P": float(trace.potential[-1]),
                "rmse": err.rmse,
                "max_error": err.max_error,
                "tau_inf": float(np.max(np.abs(tau))) if tau.size else 0.0,
                "max_duality_residual": cert.max_residual,
                "wall_time_s": wall,
            }
            rows.append(row)
            if out is not None:
                scen = scenario_document(net)
                doc = result_document(scen, profile, tau, trace, cert, err, run_cfg, wall)
                save_result(doc, out / f"run_N{n_free}_s{s}.json")
                write_trace_csv(trace, out / f"trace_N{n_free}_s{s}.csv")
    rows.sort(key=lambda r: (r["N"], r["seed"]))
    if out is not None:
        with open(out / "summary.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
            w.writeheader()
            w.writerows(rows)
    return rows
