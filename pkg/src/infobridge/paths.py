"""Discretized realizations of the information process.

Two constructions of the same law:

* ``sample_path_direct`` draws the default time, then builds the bridge from
  plain Brownian increments through
  ``beta_t = W_t - t / max(tau, t) * W_{max(tau, t)}``;
* ``sample_path_given_tau`` fixes the pinning horizon and samples the exact
  Gaussian bridge transitions sequentially (via the equivalent martingale
  cumulative form, which is the same recursion with the draws consumed in
  the same order).

The default state is encoded exactly: at every knot at or after the default
time the stored value is literal floating-point zero, so downstream modules
can detect default without tolerance thresholds.  The default time itself is
inserted as an extra knot, which keeps the frozen tail, the quadratic
variation and the local time free of O(dt) bias at the default.

Randomness comes from counter-based streams: path ``i`` of master seed ``m``
uses a Philox generator keyed by the 128-bit pair (m, i), so ensembles are
reproducible path-by-path no matter how work is scheduled across processes.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "TimeGrid",
    "RandomStream",
    "InformationPath",
    "sample_path_direct",
    "sample_path_given_tau",
    "quadratic_variation",
    "running_max_abs",
    "recover_b",
    "restrict_path",
]

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing knots from 0 to t_max with gaps at most dt."""

    knots: np.ndarray
    dt: float
    t_max: float

    @classmethod
    def regular(cls, t_max, dt):
        if dt <= 0.0:
            raise DomainError(f"dt must be positive, got {dt}")
        if t_max <= dt:
            raise DomainError(f"t_max must exceed dt, got t_max={t_max}, dt={dt}")
        n = int(math.ceil(t_max / dt - 1e-12))
        knots = np.linspace(0.0, t_max, n + 1)
        return cls(knots, dt, float(t_max))

    def with_knot(self, t):
        """Grid with ``t`` inserted (no-op if t is already a knot or outside)."""
        if not (0.0 < t < self.t_max):
            return self
        pos = int(np.searchsorted(self.knots, t))
        if pos < len(self.knots) and self.knots[pos] == t:
            return self
        return TimeGrid(np.insert(self.knots, pos, t), self.dt, self.t_max)

    @property
    def steps(self):
        return np.diff(self.knots)

    def index_of(self, t):
        """Index of the knot equal to ``t``; raises if absent."""
        pos = int(np.searchsorted(self.knots, t))
        if pos >= len(self.knots) or self.knots[pos] != t:
            raise DomainError(f"time {t} is not a grid knot")
        return pos


@dataclass(frozen=True)
class RandomStream:
    """Counter-based random stream for one path of one ensemble.

    Streams with distinct (master_seed, path_index) pairs are independent by
    the keying scheme of the underlying Philox generator, and a given pair
    always reproduces the same draws.
    """

    master_seed: int
    path_index: int = 0

    def generator(self):
        key = (int(self.master_seed) & _U64) | (int(self.path_index) << 64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class InformationPath:
    """One discretized realization of (default time, information process)."""

    tau: float
    grid: TimeGrid
    beta: np.ndarray
    construction: str

    @property
    def default_mask(self):
        """True at knots at or after the default time."""
        return self.grid.knots >= self.tau

    def validate(self):
        """Check the exact-zero encoding of the default state."""
        k = self.grid.knots
        if self.beta[0] != 0.0:
            raise AssertionError("path must start at zero")
        after = self.beta[k >= self.tau]
        if after.size and np.any(after != 0.0):
            raise AssertionError("nonzero value at or after the default time")
        before = self.beta[(k > 0.0) & (k < self.tau)]
        if before.size and np.any(before == 0.0):
            raise AssertionError("exact zero before the default time")


def _generator_of(rng):
    return rng.generator() if hasattr(rng, "generator") else rng


def sample_path_direct(ctx, grid, rng):
    """Draw the default time, then the bridge from raw Brownian increments.

    The draw order per stream is fixed: one uniform for the default time,
    one standard normal per grid step (default knot included when inserted),
    and one extra normal to reach the default time when it lies beyond the
    grid horizon.
    """
    gen = _generator_of(rng)
    tau = float(ctx.dist.quantile(gen.random()))
    g = grid.with_knot(tau)
    knots = g.knots
    steps = np.diff(knots)
    dw = np.sqrt(steps) * gen.standard_normal(len(steps))
    w = np.concatenate([[0.0], np.cumsum(dw)])
    if tau <= g.t_max:
        w_tau = w[g.index_of(tau)]
    else:
        w_tau = w[-1] + math.sqrt(tau - g.t_max) * gen.standard_normal()
    beta = np.where(knots < tau, w - knots / tau * w_tau, 0.0)
    beta[0] = 0.0
    return InformationPath(tau, g, beta, "direct")


def sample_path_given_tau(r, ctx, grid, rng):
    """Exact sequential bridge transitions for a fixed pinning horizon r.

    Given the value at t_k, the value at t_{k+1} < r is Gaussian with mean
    scaled by (r - t_{k+1}) / (r - t_k) and variance
    (t_{k+1} - t_k)(r - t_{k+1}) / (r - t_k); from r on the path is zero.
    The recursion is evaluated in its equivalent cumulative form
    beta_k = (r - t_k) * sum_j z_j * sqrt(dt_j / ((r - t_j)(r - t_{j+1}))).
    """
    if r <= 0.0:
        raise DomainError(f"bridge length must be positive, got {r}")
    gen = _generator_of(rng)
    g = grid.with_knot(r)
    knots = g.knots
    live = knots[1:] < r  # steps whose right endpoint needs a draw
    t0, t1 = knots[:-1][live], knots[1:][live]
    z = gen.standard_normal(int(live.sum()))
    dm = z * np.sqrt((t1 - t0) / ((r - t0) * (r - t1)))
    m = np.cumsum(dm)
    beta = np.zeros(len(knots))
    beta[1:][live] = (r - t1) * m
    return InformationPath(float(r), g, beta, "bridge_conditional")


def quadratic_variation(path):
    """Running sum of squared increments; flat from the default time on."""
    d = np.diff(path.beta)
    return np.concatenate([[0.0], np.cumsum(d * d)])


def running_max_abs(path):
    """Running maximum of the absolute information value."""
    return np.maximum.accumulate(np.abs(path.beta))


def recover_b(path, ctx, drift_table=None):
    """Driving Brownian motion (stopped at default) recovered from the path.

    Adds back the mean-reversion drift via a left-endpoint Riemann sum over
    the full steps before the default time; the final partial step into the
    default knot is skipped (the drift integrand blows up there while staying
    integrable, and the omitted contribution vanishes with dt).

    With ``drift_table`` the drift is interpolated; otherwise it is evaluated
    by adaptive quadrature per knot, which is accurate but slow.
    """
    from .laws import mean_reversion_drift

    knots = path.grid.knots
    beta = path.beta
    steps = np.diff(knots)
    left_t = knots[:-1]
    left_x = beta[:-1]
    include = knots[1:] < path.tau
    incr = np.zeros(len(steps))
    if np.any(include):
        if drift_table is not None:
            u = drift_table.evaluate(left_t[include], left_x[include])
        else:
            u = np.array([
                mean_reversion_drift(float(s), float(x), ctx) if s > 0.0 else 0.0
                for s, x in zip(left_t[include], left_x[include])
            ])
        incr[include] = u * steps[include]
    return beta + np.concatenate([[0.0], np.cumsum(incr)])


def restrict_path(path, coarse_grid):
    """The same realization viewed on a coarser grid.

    Keeps the knots of ``coarse_grid`` (plus the default knot when it lies
    inside) by selecting them from the fine path; every requested knot must
    be present.  Used for step-halving control runs.
    """
    g = coarse_grid.with_knot(path.tau)
    idx = np.searchsorted(path.grid.knots, g.knots)
    if np.any(idx >= len(path.grid.knots)) or np.any(path.grid.knots[idx] != g.knots):
        raise DomainError("coarse grid is not a subset of the path grid")
    return InformationPath(path.tau, g, path.beta[idx].copy(), path.construction)
