"""Config-driven Monte Carlo over path ensembles.

A job bundles everything one path needs (context, grid, precomputed
compensator weights, drift table, probe times); workers map fixed-size
chunks of path indices to blocks of per-path statistics.  Path ``i`` always
uses the stream keyed by (master seed, i), chunk boundaries do not depend on
the worker count, and blocks are written back by chunk index, so the
assembled arrays — and every CSV derived from them — are bit-identical no
matter how many processes run the job.

Reductions (means, standard errors, martingale residuals) reuse the exact
formulas of the per-path module and are cross-checked against them in the
tests.
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import laws
from .compensator import parse_functional
from .errors import DomainError, InsufficientPaths
from .localtime import BandCreditTable, occupation_estimate, tanaka_estimate
from .paths import RandomStream, sample_path_direct
from .compensator import EnsembleReport, laplacian_approximation

__all__ = [
    "EnsembleJob",
    "EnsembleTable",
    "build_job",
    "run_ensemble",
    "resolve_workers",
    "table_martingale_residual",
    "summarize_table",
    "write_paths_csv",
    "write_curves_csv",
    "write_summary_csv",
    "write_residuals_csv",
]

WORKERS_ENV = "INFOBRIDGE_WORKERS"
_CHUNK = 512


@dataclass(frozen=True)
class EnsembleJob:
    """Everything a worker needs to reduce one path to its statistics."""

    ctx: "laws.ModelContext"
    grid: "object"
    master_seed: int
    eps: float
    estimator: str                      # 'occupation' | 'tanaka'
    weights: np.ndarray                 # compensator weights on the base knots
    times: tuple                        # where H and K are recorded
    s_nodes: tuple                      # where beta is recorded
    kh: tuple = ()                      # window lags recorded at `times`
    zero_k: bool = False
    credit_table: object = None         # precomputed occupation step credits
    drift_table: object = None          # enables b and its quadratic variation
    b_nodes: tuple = ()                 # where b is recorded
    qv_nodes: tuple = ()                # where the quadratic variation of b is recorded
    lt_probe: tuple = ()                # (t, x) pairs for estimator cross-probes


@dataclass
class EnsembleTable:
    """Struct-of-arrays holding one row of statistics per path."""

    job: EnsembleJob
    tau: np.ndarray
    H: np.ndarray        # (n, len(times))
    K: np.ndarray        # (n, len(times))
    beta: np.ndarray     # (n, len(s_nodes))
    Kh: np.ndarray       # (n, len(kh), len(times))
    b: np.ndarray        # (n, len(b_nodes))
    qv_b: np.ndarray     # (n, len(qv_nodes))
    lt_occ: np.ndarray   # (n, len(lt_probe))
    lt_tan: np.ndarray   # (n, len(lt_probe))

    @property
    def n_paths(self):
        return len(self.tau)

    def time_index(self, t):
        try:
            return self.job.times.index(t)
        except ValueError:
            raise DomainError(f"time {t} was not recorded") from None

    def s_index(self, s):
        try:
            return self.job.s_nodes.index(s)
        except ValueError:
            raise DomainError(f"state time {s} was not recorded") from None


def build_job(ctx, grid, cfg_like):
    """Assemble an EnsembleJob from a run configuration.

    Records H/K at the union of report times and residual-pair endpoints,
    and the information value at every residual-pair start.
    """
    eps = cfg_like.lt_eps_coeff * cfg_like.dt ** cfg_like.lt_eps_power
    pair_times = [t for pair in cfg_like.residual_pairs for t in pair]
    times = tuple(sorted(set(cfg_like.report_times) | set(pair_times)))
    s_nodes = tuple(sorted({s for s, _ in cfg_like.residual_pairs}))
    for t in times:
        grid.index_of(t)  # validates alignment
    weights = laws.compensator_weights(ctx, grid.knots, grid.dt)
    step = float(grid.knots[1] - grid.knots[0])
    table = BandCreditTable(step, eps) if cfg_like.lt_estimator == "occupation" else None
    return EnsembleJob(
        ctx=ctx, grid=grid, master_seed=cfg_like.seed, eps=eps,
        estimator=cfg_like.lt_estimator, weights=weights,
        times=times, s_nodes=s_nodes, kh=tuple(cfg_like.kh),
        zero_k=cfg_like.zero_k, credit_table=table,
    )


def _path_row(job, i):
    """All recorded statistics of path ``i``."""
    path = sample_path_direct(job.ctx, job.grid, RandomStream(job.master_seed, i))
    knots = path.grid.knots
    if len(knots) != len(job.grid.knots):
        pos = path.grid.index_of(path.tau)
        weights = np.insert(job.weights, pos, 0.0)
    else:
        weights = job.weights
    if job.estimator == "tanaka":
        lt = tanaka_estimate(path, 0.0)
    else:
        lt = occupation_estimate(path, 0.0, job.eps,
                                 credit_table=job.credit_table)
    if job.zero_k:
        kcum = np.zeros(len(knots))
    else:
        kincr = weights[:-1] * np.diff(lt.values)
        kincr[0] = 0.0
        kcum = np.concatenate([[0.0], np.cumsum(kincr)])

    t_idx = np.searchsorted(knots, np.asarray(job.times))
    row = {
        "tau": path.tau,
        "H": (np.asarray(job.times) >= path.tau).astype(float),
        "K": kcum[t_idx],
        "beta": path.beta[np.searchsorted(knots, np.asarray(job.s_nodes))]
        if job.s_nodes else np.empty(0),
    }
    if job.kh:
        kh = np.empty((len(job.kh), len(job.times)))
        for a, h in enumerate(job.kh):
            kh[a] = laplacian_approximation(path, h, job.ctx)[t_idx]
        row["Kh"] = kh
    if job.drift_table is not None:
        from .paths import recover_b
        b = recover_b(path, job.ctx, drift_table=job.drift_table)
        row["b"] = b[np.searchsorted(knots, np.asarray(job.b_nodes))] \
            if job.b_nodes else np.empty(0)
        if job.qv_nodes:
            d = np.diff(b)
            qv = np.concatenate([[0.0], np.cumsum(d * d)])
            row["qv_b"] = qv[np.searchsorted(knots, np.asarray(job.qv_nodes))]
        else:
            row["qv_b"] = np.empty(0)
    if job.lt_probe:
        occ = np.empty(len(job.lt_probe))
        tan = np.empty(len(job.lt_probe))
        for a, (t, x) in enumerate(job.lt_probe):
            j = path.grid.index_of(t)
            occ[a] = occupation_estimate(path, x, job.eps).values[j]
            tan[a] = tanaka_estimate(path, x).values[j]
        row["lt_occ"] = occ
        row["lt_tan"] = tan
    return row


_JOB = None


def _set_job(job):
    global _JOB
    _JOB = job


def _run_chunk(bounds):
    start, stop = bounds
    job = _JOB
    nt, ns = len(job.times), len(job.s_nodes)
    n = stop - start
    block = {
        "tau": np.empty(n), "H": np.empty((n, nt)), "K": np.empty((n, nt)),
        "beta": np.empty((n, ns)),
        "Kh": np.empty((n, len(job.kh), nt)),
        "b": np.empty((n, len(job.b_nodes))),
        "qv_b": np.empty((n, len(job.qv_nodes))),
        "lt_occ": np.empty((n, len(job.lt_probe))),
        "lt_tan": np.empty((n, len(job.lt_probe))),
    }
    for k, i in enumerate(range(start, stop)):
        row = _path_row(job, i)
        block["tau"][k] = row["tau"]
        block["H"][k] = row["H"]
        block["K"][k] = row["K"]
        block["beta"][k] = row["beta"]
        if job.kh:
            block["Kh"][k] = row["Kh"]
        if job.drift_table is not None:
            block["b"][k] = row["b"]
            block["qv_b"][k] = row["qv_b"]
        if job.lt_probe:
            block["lt_occ"][k] = row["lt_occ"]
            block["lt_tan"][k] = row["lt_tan"]
    return start, block


def resolve_workers(explicit=None):
    """Worker count: explicit argument, else the environment, else the CPUs."""
    if explicit:
        return max(1, int(explicit))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_ensemble(job, n_paths, workers=None):
    """Run ``n_paths`` paths of the job; bit-identical for any worker count."""
    if n_paths < 1:
        raise InsufficientPaths("need at least one path")
    workers = resolve_workers(workers)
    chunks = [(a, min(a + _CHUNK, n_paths)) for a in range(0, n_paths, _CHUNK)]
    nt, ns = len(job.times), len(job.s_nodes)
    table = EnsembleTable(
        job=job,
        tau=np.empty(n_paths),
        H=np.empty((n_paths, nt)),
        K=np.empty((n_paths, nt)),
        beta=np.empty((n_paths, ns)),
        Kh=np.empty((n_paths, len(job.kh), nt)),
        b=np.empty((n_paths, len(job.b_nodes))),
        qv_b=np.empty((n_paths, len(job.qv_nodes))),
        lt_occ=np.empty((n_paths, len(job.lt_probe))),
        lt_tan=np.empty((n_paths, len(job.lt_probe))),
    )

    def paste(start, block):
        stop = start + len(block["tau"])
        for name in ("tau", "H", "K", "beta", "Kh", "b", "qv_b", "lt_occ", "lt_tan"):
            getattr(table, name)[start:stop] = block[name]

    if workers <= 1 or len(chunks) <= 1:
        _set_job(job)
        for bounds in chunks:
            paste(*_run_chunk(bounds))
    else:
        import multiprocessing as mp

        mp_ctx = mp.get_context("fork")
        with mp_ctx.Pool(workers, initializer=_set_job, initargs=(job,)) as pool:
            for start, block in pool.imap(_run_chunk, chunks):
                paste(start, block)
    return table


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def table_martingale_residual(table, s, t, functional, zero_k=False):
    """Martingale residual from a statistics table (same formula as the
    pairwise version in the compensator module)."""
    if not (0.0 < s < t):
        raise DomainError(f"need 0 < s < t, got s={s}, t={t}")
    _check_paths(table.n_paths)
    label, fn = functional if isinstance(functional, tuple) else parse_functional(functional)
    js, jt = table.time_index(s), table.time_index(t)
    k_s = np.zeros(table.n_paths) if zero_k else table.K[:, js]
    k_t = np.zeros(table.n_paths) if zero_k else table.K[:, jt]
    z = fn(table.beta[:, table.s_index(s)])
    ys = ((table.H[:, jt] - k_t) - (table.H[:, js] - k_s)) * z
    return float(ys.mean()), float(ys.std(ddof=1) / math.sqrt(len(ys)))


def _check_paths(n):
    if n < 100:
        raise InsufficientPaths(f"need at least 100 paths, got {n}")


def summarize_table(table, ctx, report_times, residual_matrix=(),
                    functionals=("one",), gate_multiplier=3.0):
    """EnsembleReport from a statistics table."""
    if table.n_paths < 1:
        raise InsufficientPaths("empty ensemble")
    times = np.asarray(report_times, dtype=float)
    cols = [table.time_index(float(t)) for t in times]
    hs = table.H[:, cols]
    ks = table.K[:, cols]
    n = table.n_paths
    rows = []
    for (s, t) in residual_matrix:
        for spec in functionals:
            label, fn = parse_functional(spec) if isinstance(spec, str) else spec
            res, se = table_martingale_residual(table, s, t, (label, fn))
            rows.append((s, t, label, res, se, abs(res) <= gate_multiplier * se))
    return EnsembleReport(
        times=times,
        mean_H=hs.mean(axis=0),
        mean_K=ks.mean(axis=0),
        F=np.asarray(ctx.dist.cdf_F(times), dtype=float),
        stderr_H=hs.std(axis=0, ddof=1) / math.sqrt(n),
        stderr_K=ks.std(axis=0, ddof=1) / math.sqrt(n),
        n_paths=n,
        residuals=rows,
        gate_multiplier=gate_multiplier,
    )


# ---------------------------------------------------------------------------
# CSV artifacts (17 significant digits, locale-free)
# ---------------------------------------------------------------------------

def _fmt(x):
    return format(float(x), ".17g")


def write_paths_csv(paths, fh):
    """``path_id,t,beta,in_default`` with one row per knot per path."""
    fh.write("path_id,t,beta,in_default\n")
    for i, p in enumerate(paths):
        mask = p.grid.knots >= p.tau
        for t, b, d in zip(p.grid.knots, p.beta, mask):
            fh.write(f"{i},{_fmt(t)},{_fmt(b)},{1 if d else 0}\n")


def write_curves_csv(table, fh):
    """``path_id,t,H,K`` (+ ``Kh_<h>`` per configured lag) at the report times."""
    heads = "".join(f",Kh_{h:g}" for h in table.job.kh)
    fh.write("path_id,t,H,K" + heads + "\n")
    for i in range(table.n_paths):
        for j, t in enumerate(table.job.times):
            extra = "".join("," + _fmt(table.Kh[i, a, j])
                            for a in range(len(table.job.kh)))
            fh.write(f"{i},{_fmt(t)},{_fmt(table.H[i, j])},{_fmt(table.K[i, j])}"
                     + extra + "\n")


def write_summary_csv(report, fh):
    fh.write("t,mean_H,mean_K,F_t,stderr_H,stderr_K\n")
    for j in range(len(report.times)):
        fh.write(",".join(_fmt(v) for v in (
            report.times[j], report.mean_H[j], report.mean_K[j], report.F[j],
            report.stderr_H[j], report.stderr_K[j])) + "\n")


def write_residuals_csv(report, fh):
    fh.write("s,t,functional,residual,stderr,pass\n")
    for (s, t, label, res, se, ok) in report.residuals:
        fh.write(f"{_fmt(s)},{_fmt(t)},{label},{_fmt(res)},{_fmt(se)},"
                 f"{1 if ok else 0}\n")
