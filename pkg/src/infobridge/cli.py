"""Batch front door.

Subcommands
-----------
simulate      write sampled paths (``paths.csv``)
survival      conditional survival curve from one information state
              (``survival.csv``)
compensator   ensemble run with compensator curves, summary statistics,
              martingale residual gates and a pass/fail report
              (``curves.csv``, ``summary.csv``, ``residuals.csv``,
              ``report.txt``)
convergence   window-approximation gaps against the local-time compensator
              on fixed seeds (``convergence.csv``, ``report.txt``)

Exit codes: 0 success / all gates pass, 1 gate failure, 2 configuration
error, 3 I/O error.  Worker count comes from the INFOBRIDGE_WORKERS
environment variable (default: available CPUs).
"""

import argparse
import math
import os
import sys

import numpy as np

from . import laws
from .compensator import build_curve, laplacian_approximation
from .config import load_config
from .distributions import parse_distribution
from .ensemble import (
    build_job,
    run_ensemble,
    summarize_table,
    write_curves_csv,
    write_paths_csv,
    write_residuals_csv,
    write_summary_csv,
    _fmt,
)
from .errors import ConfigError, DomainError, InfoBridgeError, InsufficientPaths
from .localtime import occupation_estimate, tanaka_estimate
from .paths import RandomStream, TimeGrid, sample_path_direct
from .quadrature import QuadratureSpec

EXIT_OK = 0
EXIT_GATE_FAIL = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def _context(cfg):
    quad = QuadratureSpec(rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
                          tail_cutoff_mass=cfg.tail_cutoff_mass)
    return laws.ModelContext(parse_distribution(cfg.dist), quad)


def _outdir(cfg):
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


def cmd_simulate(cfg):
    ctx = _context(cfg)
    grid = TimeGrid.regular(cfg.t_max, cfg.dt)
    out = _outdir(cfg)
    paths = (sample_path_direct(ctx, grid, RandomStream(cfg.seed, i))
             for i in range(cfg.paths))
    with open(os.path.join(out, "paths.csv"), "w", newline="") as fh:
        write_paths_csv(paths, fh)
    return EXIT_OK


def cmd_survival(cfg, t, x):
    ctx = _context(cfg)
    if not (0.0 < t < min(cfg.t_max, ctx.t1)):
        raise DomainError(f"t={t} must lie in (0, min(t_max, t1))")
    if x == 0.0:
        raise DomainError("x must be nonzero (zero encodes the default state)")
    grid = TimeGrid.regular(cfg.t_max, cfg.dt)
    us = grid.knots[grid.knots >= t]
    if us[0] != t:
        us = np.concatenate([[t], us])
    out = _outdir(cfg)
    with open(os.path.join(out, "survival.csv"), "w", newline="") as fh:
        fh.write("u,P_tau_gt_u\n")
        for u in us:
            p = laws.survival_probability(t, float(u), x, ctx)
            fh.write(f"{_fmt(u)},{_fmt(p)}\n")
    return EXIT_OK


def _gate_lines(report):
    lines = []
    mult = report.gate_multiplier
    ok_all = True
    for j, t in enumerate(report.times):
        gap = abs(report.mean_K[j] - report.F[j])
        gate = mult * report.stderr_K[j]
        ok = gap <= gate
        ok_all &= ok
        lines.append(f"{'PASS' if ok else 'FAIL'} mean_K vs F(t) at t={t:g}: "
                     f"|{report.mean_K[j]:.6f} - {report.F[j]:.6f}| = {gap:.6f} "
                     f"<= {gate:.6f}")
        gap = abs(report.mean_K[j] - report.mean_H[j])
        gate = mult * math.hypot(report.stderr_H[j], report.stderr_K[j])
        ok = gap <= gate
        ok_all &= ok
        lines.append(f"{'PASS' if ok else 'FAIL'} mean_K vs mean_H at t={t:g}: "
                     f"gap = {gap:.6f} <= {gate:.6f}")
    for (s, t, label, res, se, ok) in report.residuals:
        ok_all &= ok
        lines.append(f"{'PASS' if ok else 'FAIL'} residual (s={s:g}, t={t:g}, "
                     f"{label}): {res:+.6f} within {mult:g} x {se:.6f}")
    return lines, ok_all


def cmd_compensator(cfg):
    ctx = _context(cfg)
    grid = TimeGrid.regular(cfg.t_max, cfg.dt)
    out = _outdir(cfg)
    report_path = os.path.join(out, "report.txt")
    try:
        job = build_job(ctx, grid, cfg)
        table = run_ensemble(job, cfg.paths, workers=cfg.workers or None)
        report = summarize_table(table, ctx, cfg.report_times,
                                 residual_matrix=cfg.residual_pairs,
                                 functionals=cfg.functionals,
                                 gate_multiplier=cfg.gate_multiplier)
    except InsufficientPaths as exc:
        with open(report_path, "w", newline="") as fh:
            fh.write(f"FAIL insufficient paths: {exc}\n")
        return EXIT_GATE_FAIL
    with open(os.path.join(out, "curves.csv"), "w", newline="") as fh:
        write_curves_csv(table, fh)
    with open(os.path.join(out, "summary.csv"), "w", newline="") as fh:
        write_summary_csv(report, fh)
    with open(os.path.join(out, "residuals.csv"), "w", newline="") as fh:
        write_residuals_csv(report, fh)
    lines, ok = _gate_lines(report)
    with open(report_path, "w", newline="") as fh:
        fh.write(f"paths: {report.n_paths}\n")
        for line in lines:
            fh.write(line + "\n")
        fh.write(("ALL GATES PASS" if ok else "GATE FAILURES PRESENT") + "\n")
    return EXIT_OK if ok else EXIT_GATE_FAIL


def cmd_convergence(cfg):
    if not cfg.kh:
        raise ConfigError("convergence needs a nonempty list of window lags (kh)")
    if len(cfg.kh) > 1 and not all(a > b for a, b in zip(cfg.kh, cfg.kh[1:])):
        raise ConfigError("window lags must be strictly decreasing")
    ctx = _context(cfg)
    grid = TimeGrid.regular(cfg.t_max, cfg.dt)
    eps = cfg.lt_eps_coeff * cfg.dt ** cfg.lt_eps_power
    weights = laws.compensator_weights(ctx, grid.knots, grid.dt)
    times = cfg.report_times
    gaps = np.zeros((len(cfg.kh), len(times)))
    for i in range(cfg.paths):
        path = sample_path_direct(ctx, grid, RandomStream(cfg.seed, i))
        if len(path.grid.knots) != len(grid.knots):
            w = np.insert(weights, path.grid.index_of(path.tau), 0.0)
        else:
            w = weights
        if cfg.lt_estimator == "tanaka":
            lt = tanaka_estimate(path, 0.0)
        else:
            lt = occupation_estimate(path, 0.0, eps)
        curve = build_curve(path, lt, ctx, weights=w)
        idx = [path.grid.index_of(t) for t in times]
        kref = curve.K[idx]
        for a, h in enumerate(cfg.kh):
            kh = laplacian_approximation(path, h, ctx)[idx]
            gaps[a] += np.abs(kh - kref)
    gaps /= cfg.paths
    out = _outdir(cfg)
    with open(os.path.join(out, "convergence.csv"), "w", newline="") as fh:
        fh.write("h,t,abs_gap_Kh_K\n")
        for a, h in enumerate(cfg.kh):
            for j, t in enumerate(times):
                fh.write(f"{_fmt(h)},{_fmt(t)},{_fmt(gaps[a, j])}\n")
    lines = []
    ok_all = True
    for j, t in enumerate(times):
        if len(cfg.kh) < 2:
            lines.append(f"TREND t={t:g}: insufficient points")
            continue
        ok = bool(np.all(np.diff(gaps[:, j]) < 0.0))
        ok_all &= ok
        lines.append(f"{'PASS' if ok else 'FAIL'} TREND t={t:g}: gaps "
                     + " > ".join(f"{g:.6f}" for g in gaps[:, j])
                     + (" decreasing" if ok else " not decreasing"))
    with open(os.path.join(out, "report.txt"), "w", newline="") as fh:
        for line in lines:
            fh.write(line + "\n")
        fh.write(("TREND OK" if ok_all else "TREND FAILURES PRESENT") + "\n")
    return EXIT_OK if ok_all else EXIT_GATE_FAIL


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="infobridge",
        description="Monte Carlo engine for the bridge-information default model")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_tx in (("simulate", False), ("survival", True),
                           ("compensator", False), ("convergence", False)):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--dist", default=None)
        p.add_argument("--paths", type=int, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--t-max", dest="t_max", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--zero-k", dest="zero_k", action="store_true",
                       default=None)
        if needs_tx:
            p.add_argument("--t", type=float, required=True)
            p.add_argument("--x", type=float, required=True)
    return parser


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(
            args.config, command=args.command, dist=args.dist, paths=args.paths,
            dt=args.dt, t_max=args.t_max, seed=args.seed, out=args.out,
            zero_k=args.zero_k)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "survival":
            return cmd_survival(cfg, args.t, args.x)
        if args.command == "compensator":
            return cmd_compensator(cfg)
        return cmd_convergence(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"argument error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InfoBridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GATE_FAIL


if __name__ == "__main__":
    sys.exit(main())
