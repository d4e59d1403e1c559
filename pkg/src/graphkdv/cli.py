"""Batch command-line front end.

    graphkdv <experiment> --config cfg.json [--out DIR] [overrides...]
    graphkdv sweep --config cfg.json [--out DIR]
    graphkdv report --out DIR

Exit codes: 0 all configured checks pass, 1 an assertion failed, 2 config
error.  GRAPHKDV_THREADS caps the sweep worker pool.  Outputs are
deterministic for identical config and seed.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, RunManifest, EXPERIMENTS
from .csvio import ensure_dir, write_csv, write_json, write_graph_function, \
    read_graph_function, write_spacetime_field


def _override(cfg_data: dict, args) -> dict:
    mapping = {
        "Z": args.Z, "beta": args.beta, "alpha": args.alpha,
        "T": args.T, "dt": args.dt, "L": args.L, "h": args.h,
        "tau_min": args.tau_min, "tau_max": args.tau_max,
        "tau_points": args.tau_points, "solver": args.solver,
        "side": args.side, "profile": args.profile,
        "initial_csv": args.initial, "boundary_csv": args.boundary,
        "seed": args.seed,
    }
    for key, val in mapping.items():
        if val is not None:
            cfg_data[key] = val
    return cfg_data


def run_experiment(cfg: RunConfig, out_dir: str) -> RunManifest:
    t0 = time.monotonic()
    ensure_dir(out_dir)
    manifest = RunManifest.start(cfg, __version__)
    kind = cfg.experiment
    fn = _RUNNERS[kind]
    fn(cfg, out_dir, manifest)
    manifest.finish(t0)
    manifest.write(os.path.join(out_dir, "manifest.json"))
    return manifest


# ---------------------------------------------------------------------------
# experiment runners
# ---------------------------------------------------------------------------

def _run_profiles(cfg, out_dir, mf):
    from .graph import GraphGrid, StarGraph, check_domain_AZ
    from .profiles import ProfileParams, build_UZ, profile_summary

    params = ProfileParams(cfg.alpha, cfg.beta, cfg.Z)
    grid = GraphGrid.from_length(cfg.L, cfg.h)
    g = build_UZ(params, grid, StarGraph(1, 1))
    path = os.path.join(out_dir, "profile.csv")
    write_graph_function(path, g)
    side = profile_summary(params)
    write_json(os.path.join(out_dir, "profile.json"), side)
    ok, res = check_domain_AZ(g, cfg.Z, tol=1e-6)
    mf.checks["domain_conditions"] = ok
    mf.headline.update(side)
    mf.headline["residuals"] = res
    mf.outputs += ["profile.csv", "profile.json"]


def _run_roots(cfg, out_dir, mf):
    from .roots import cubic_roots_limit, vieta_residuals

    taus = np.linspace(cfg.tau_min, cfg.tau_max, cfg.tau_points)
    r0, r1, r2, p, q, kb = cubic_roots_limit(taus, cfg.beta)
    rows = [(t, a.real, a.imag, b.real, b.imag, c.real, c.imag, pp, qq, kk)
            for t, a, b, c, pp, qq, kk in zip(taus, r0, r1, r2, p, q, kb)]
    write_csv(os.path.join(out_dir, "roots.csv"),
              ["tau", "re_r0", "im_r0", "re_r1", "im_r1", "re_r2", "im_r2",
               "p", "q", "k_beta"], rows)
    e1, e2, e3 = vieta_residuals(r0, r1, r2, taus, cfg.beta)
    mf.checks["vieta"] = bool(max(e1.max(), e2.max(), e3.max()) < 1e-9)
    mf.checks["r2_imaginary"] = bool(np.abs(r2.real).max() < 1e-9)
    mf.headline["max_vieta_residual"] = float(max(e1.max(), e2.max(), e3.max()))
    mf.outputs.append("roots.csv")


def _run_trace_matrix(cfg, out_dir, mf):
    from .roots import cubic_roots_limit
    from .trace_matrix import (coupling_matrix_entries, det_cofactor,
                               det_closed_form, probe_highfreq_bounds)

    taus = np.linspace(cfg.tau_min, cfg.tau_max, cfg.tau_points)
    r0, r1, r2, p, q, kb = cubic_roots_limit(taus, cfg.beta)
    M = coupling_matrix_entries(r0, r1, r2, cfg.Z)
    dets = det_cofactor(M)
    closed = det_closed_form(p, q, kb, cfg.Z)
    rows = [(t, d.real, d.imag, c.real, c.imag, abs(d - c))
            for t, d, c in zip(taus, dets, closed)]
    write_csv(os.path.join(out_dir, "trace_matrix.csv"),
              ["tau", "re_det", "im_det", "re_closed", "im_closed", "abs_diff"],
              rows)
    rel = np.abs(dets - closed) / np.abs(dets)
    mf.checks["det_closed_form"] = bool(rel.max() < 1e-10)
    probe_grid = np.geomspace(2.5, 1e4, 200)
    report = probe_highfreq_bounds(cfg.beta, probe_grid)
    write_json(os.path.join(out_dir, "highfreq_probe.json"), report)
    mf.headline["highfreq_violations"] = report["violations"]
    mf.outputs += ["trace_matrix.csv", "highfreq_probe.json"]


def _run_linear_ibvp(cfg, out_dir, mf):
    from .ibvp import linear_ibvp_left, linear_ibvp_right
    from .potentials import TimeSeries, smooth_window

    if cfg.boundary_csv:
        raw = np.loadtxt(cfg.boundary_csv, delimiter=",", skiprows=1)
        t_in, vals = raw[:, 0], raw[:, 1]
        dt_in = t_in[1] - t_in[0]
        series = TimeSeries(t_in[0], dt_in, vals)
    else:
        n = 256
        dtb = cfg.T / n
        tb = dtb * np.arange(n)
        series = TimeSeries(0.0, dtb, np.sin(6 * tb) * smooth_window(tb / cfg.T, 0.5, 1.0))
    x_out = np.linspace(0, 4, 33) if cfg.side == "right" else -np.linspace(0, 4, 33)
    t_out = np.linspace(0, min(cfg.T, 1.0), 17)
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    if cfg.side == "right":
        field = linear_ibvp_right(zero, series, cfg.beta, x_out, t_out)
    else:
        zero_series = TimeSeries(series.t0, series.dt, np.zeros(series.n))
        field = linear_ibvp_left(zero, series, zero_series, cfg.beta, x_out, t_out)
    write_spacetime_field(os.path.join(out_dir, "ibvp_field.csv"), field)
    mf.checks["finite"] = bool(np.all(np.isfinite(field.values)))
    mf.outputs.append("ibvp_field.csv")


def _initial_data(cfg):
    from .graph import GraphGrid, StarGraph
    from .profiles import ProfileParams, build_UZ

    grid = GraphGrid.from_length(cfg.L, cfg.h)
    if cfg.initial_csv:
        return read_graph_function(cfg.initial_csv)
    if cfg.profile != "UZ":
        raise ConfigError("profile must be 'UZ' or initial_csv given")
    params = ProfileParams(cfg.alpha, cfg.beta, cfg.Z)
    return build_UZ(params, grid, StarGraph(1, 1))


def _run_evolve(cfg, out_dir, mf):
    from .fd import FDConfig, fd_solve
    from .graph_evolution import EvolutionConfig, evolve_linear, picard_solve
    from .graph import sobolev_norm

    u0 = _initial_data(cfg)
    if cfg.solver == "fd":
        fdc = FDConfig(length=cfg.L, h=cfg.h, dt=cfg.dt)
        res = fd_solve(u0, cfg.Z, cfg.alpha, cfg.beta, cfg.T, dt=cfg.dt,
                       config=fdc, snapshot_every=max(1, int(round(cfg.T / cfg.dt)) // 8))
        for k, (tv, g) in enumerate(res.snapshots):
            write_graph_function(os.path.join(out_dir, f"snapshot_{k:03d}.csv"), g)
            mf.outputs.append(f"snapshot_{k:03d}.csv")
        mf.headline["l2_drift"] = float(res.l2_norms[-1] / res.l2_norms[0] - 1)
        mf.headline["max_vertex_residual"] = float(np.abs(res.vertex_residuals).max())
        mf.checks["no_blowup"] = not res.blew_up
        norms = res.l2_norms
        times = res.times
    elif cfg.solver == "group":
        evc = EvolutionConfig()
        t_eval = np.linspace(0, min(cfg.T, 0.5), 9)
        t_eval = np.round(t_eval / evc.dt) * evc.dt
        field = evolve_linear(u0, t_eval, cfg.Z, cfg.beta, cfg.alpha, config=evc)
        for k in range(len(field.t)):
            write_graph_function(os.path.join(out_dir, f"snapshot_{k:03d}.csv"),
                                 field.snapshot(k))
            mf.outputs.append(f"snapshot_{k:03d}.csv")
        norms = field.l2_norms()
        times = field.t
        mf.headline["l2_drift"] = float(norms[-1] / norms[0] - 1)
        mf.headline["max_vertex_residual"] = float(field.vertex_residuals().max())
        mf.checks["l2_conservation"] = bool(abs(mf.headline["l2_drift"]) < 1e-4)
    elif cfg.solver == "picard":
        field, report = picard_solve(u0, cfg.Z, cfg.alpha, cfg.beta,
                                     min(cfg.T, 0.5))
        for k in range(len(field.t)):
            write_graph_function(os.path.join(out_dir, f"snapshot_{k:03d}.csv"),
                                 field.snapshot(k))
            mf.outputs.append(f"snapshot_{k:03d}.csv")
        norms = field.l2_norms()
        times = field.t
        mf.headline["picard_diffs"] = report.diffs
        mf.checks["picard_converged"] = report.converged
    else:
        raise ConfigError(f"unknown solver {cfg.solver!r}")
    write_csv(os.path.join(out_dir, "norms.csv"), ["t", "l2_norm"],
              list(zip(times, norms)))
    mf.outputs.append("norms.csv")


def _run_spectrum(cfg, out_dir, mf):
    from .profiles import ProfileParams
    from .instability import unstable_eigenpair

    params = ProfileParams(cfg.alpha, cfg.beta, cfg.Z)
    res = unstable_eigenpair(params, length=cfg.eigen_length,
                             h_coarse=cfg.eigen_h, ladder=cfg.eigen_ladder)
    rows = [(w.real, w.imag) for w in np.sort_complex(res.eigenvalues)]
    write_csv(os.path.join(out_dir, "spectrum.csv"), ["re", "im"], rows)
    sel = {
        "lambda": res.lam,
        "residual": res.residual,
        "converged": res.converged,
        "grid_ladder": [[h, l] for h, l in res.grid_ladder],
        "multiplicity": res.multiplicity,
        "message": res.message,
    }
    write_json(os.path.join(out_dir, "eigenpair.json"), sel)
    if res.psi is not None:
        write_graph_function(os.path.join(out_dir, "eigenfunction.csv"), res.psi)
        mf.outputs.append("eigenfunction.csv")
    mf.checks["unstable_eigenvalue"] = bool(res.converged and (res.lam or 0) > 0)
    mf.headline["lambda"] = res.lam
    mf.outputs += ["spectrum.csv", "eigenpair.json"]


def _run_instability(cfg, out_dir, mf):
    from .fd import FDConfig
    from .profiles import ProfileParams
    from .instability import unstable_eigenpair, instability_experiment

    params = ProfileParams(cfg.alpha, cfg.beta, cfg.Z)
    eig = unstable_eigenpair(params, length=cfg.eigen_length,
                             h_coarse=cfg.eigen_h, ladder=cfg.eigen_ladder)
    if eig.psi is None:
        mf.checks["unstable_eigenvalue"] = False
        mf.headline["lambda"] = None
        mf.headline["message"] = eig.message
        return
    fdc = FDConfig(length=cfg.L, h=cfg.h, dt=cfg.dt)
    fit = instability_experiment(params, eig.psi, eig.lam,
                                 delta_rel=cfg.delta_rel, T=cfg.T,
                                 fd_config=fdc, dt=cfg.dt)
    write_csv(os.path.join(out_dir, "deviation.csv"),
              ["t", "deviation", "deviation_from_profile"],
              list(zip(fit.times, fit.deviations, fit.reference_deviations)))
    out = {
        "lambda": eig.lam,
        "lambda_fit": fit.lambda_fit,
        "ratio": fit.lambda_fit / eig.lam if eig.lam else None,
        "r_squared": fit.r_squared,
        "fit_window": list(fit.fit_window),
        "delta": fit.delta,
    }
    write_json(os.path.join(out_dir, "growth_fit.json"), out)
    mf.headline.update(out)
    mf.checks["growth_matches_eigenvalue"] = bool(
        eig.lam and abs(fit.lambda_fit / eig.lam - 1) < 0.2 and fit.r_squared > 0.99)
    mf.outputs += ["deviation.csv", "growth_fit.json"]


def _run_probes(cfg, out_dir, mf):
    from .bourgain import BourgainWeights, estimate_probes
    from .roots import probe_root_bounds
    from .trace_matrix import probe_highfreq_bounds

    w = BourgainWeights(beta=cfg.beta)
    rep = estimate_probes(w, n_samples=cfg.probe_samples, seed=cfg.seed,
                          psi_prefactor=cfg.psi_prefactor)
    taus = np.linspace(-100, 100, 2001)
    rep["root_bounds"] = probe_root_bounds(cfg.beta, taus)
    rep["highfreq"] = probe_highfreq_bounds(cfg.beta, np.geomspace(2.5, 1e4, 200))
    write_json(os.path.join(out_dir, "probes.json"), rep)
    mf.checks["probes_finite"] = all(
        rep[k]["violations"] == 0 for k in ("group", "duhamel", "bilinear"))
    mf.headline["group_constant"] = rep["group"]["constant"]
    mf.outputs.append("probes.json")


_RUNNERS = {
    "profiles": _run_profiles,
    "roots": _run_roots,
    "trace-matrix": _run_trace_matrix,
    "linear-ibvp": _run_linear_ibvp,
    "evolve": _run_evolve,
    "spectrum": _run_spectrum,
    "instability": _run_instability,
    "probes": _run_probes,
}


# ---------------------------------------------------------------------------
# sweep and report
# ---------------------------------------------------------------------------

def run_sweep(cfg: RunConfig, out_dir: str) -> int:
    """Grid sweep over Z and/or beta; one row per grid point, deterministic order."""
    sweep = cfg.values.get("sweep") or {}
    zs = sweep.get("Z", [cfg.Z])
    betas = sweep.get("beta", [cfg.beta])
    points = []
    seen = set()
    dups = 0
    for b in betas:
        for z in zs:
            key = (float(z), float(b))
            if key in seen:
                dups += 1
                continue
            seen.add(key)
            points.append(key)
    if dups:
        print(f"warning: {dups} duplicate grid points removed", file=sys.stderr)
    ensure_dir(out_dir)
    rows = []
    max_workers = int(os.environ.get("GRAPHKDV_THREADS", "0")) or None

    def job(point):
        z, b = point
        sub = dict(cfg.to_dict())
        sub["Z"] = z
        sub["beta"] = b
        sub.pop("sweep", None)
        sub_cfg = RunConfig.from_dict(sub)
        sub_dir = os.path.join(out_dir, f"Z_{z}_beta_{b}")
        try:
            manifest = run_experiment(sub_cfg, sub_dir)
            lam = manifest.headline.get("lambda")
            return (z, b, "ok" if manifest.passed() else "fail",
                    lam if lam is not None else "")
        except Exception as exc:  # row failures recorded, sweep continues
            return (z, b, f"error:{type(exc).__name__}", "")

    if len(points) == 0:
        write_csv(os.path.join(out_dir, "sweep.csv"),
                  ["Z", "beta", "status", "lambda"], [])
        return 0
    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as ex:
        results = list(ex.map(job, points))
    rows = sorted(results, key=lambda r: (r[1], r[0]))
    write_csv(os.path.join(out_dir, "sweep.csv"),
              ["Z", "beta", "status", "lambda"], rows)
    return 0 if all(r[2] == "ok" for r in rows) else 1


def run_report(out_dir: str) -> int:
    """Collate manifests under a directory into a summary."""
    found = []
    missing = []
    for root, _dirs, files in os.walk(out_dir):
        if "manifest.json" in files:
            with open(os.path.join(root, "manifest.json"), encoding="utf-8") as fh:
                found.append((root, json.load(fh)))
    if not found:
        print(f"no manifests found under {out_dir}", file=sys.stderr)
        return 1
    passed = [r for r, m in found if all(m.get("checks", {}).values())]
    failed = [r for r, m in found if not all(m.get("checks", {}).values())]
    print(f"runs: {len(found)}  passed: {len(passed)}  failed: {len(failed)}")
    for r, m in found:
        status = "PASS" if all(m.get("checks", {}).values()) else "FAIL"
        head = m.get("headline", {})
        lam = head.get("lambda")
        ratio = head.get("ratio")
        extra = ""
        if lam is not None:
            extra += f" lambda={lam}"
        if ratio is not None:
            extra += f" lambda_fit/lambda={ratio}"
        print(f"  [{status}] {r}{extra}")
    rows = []
    for r, m in found:
        head = m.get("headline", {})
        rows.append((r, "pass" if all(m.get("checks", {}).values()) else "fail",
                     head.get("lambda", ""), head.get("lambda_fit", "")))
    write_csv(os.path.join(out_dir, "summary.csv"),
              ["run", "status", "lambda", "lambda_fit"], rows)
    _ = missing
    return 0 if not failed else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser():
    p = argparse.ArgumentParser(prog="graphkdv",
                                description="KdV on a balanced star graph: "
                                            "batch experiments")
    sub = p.add_subparsers(dest="command", required=True)
    for name in list(EXPERIMENTS) + ["sweep"]:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--Z", type=float, default=None)
        sp.add_argument("--beta", type=float, default=None)
        sp.add_argument("--alpha", type=float, default=None)
        sp.add_argument("--T", type=float, default=None)
        sp.add_argument("--dt", type=float, default=None)
        sp.add_argument("--L", type=float, default=None)
        sp.add_argument("--h", type=float, default=None)
        sp.add_argument("--tau-min", dest="tau_min", type=float, default=None)
        sp.add_argument("--tau-max", dest="tau_max", type=float, default=None)
        sp.add_argument("--tau-points", dest="tau_points", type=int, default=None)
        sp.add_argument("--solver", choices=("fd", "picard", "group"), default=None)
        sp.add_argument("--side", choices=("left", "right"), default=None)
        sp.add_argument("--profile", default=None)
        sp.add_argument("--initial", default=None)
        sp.add_argument("--boundary", default=None)
        sp.add_argument("--seed", type=int, default=None)
    rp = sub.add_parser("report")
    rp.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "report":
        return run_report(args.out)
    try:
        data = {}
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
            if not isinstance(data, dict):
                raise ConfigError("config root must be a JSON object")
        if args.command != "sweep":
            data["experiment"] = args.command
        elif "experiment" not in data:
            raise ConfigError("sweep config must name an experiment")
        data = _override(data, args)
        cfg = RunConfig.from_dict(data)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out or cfg.out_dir
    np.random.seed(cfg.seed)  # legacy global seed for any library fallback
    if args.command == "sweep":
        return run_sweep(cfg, out_dir)
    try:
        manifest = run_experiment(cfg, out_dir)
    except Exception as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    return 0 if manifest.passed() else 1


if __name__ == "__main__":
    sys.exit(main())
