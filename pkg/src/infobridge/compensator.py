"""Compensation of the default indicator along simulated paths.

The default indicator H jumps from 0 to 1 at the default time.  Its
compensator K is the increasing process that makes H - K a martingale; for
the information process it is the integral of

    f(s) / survivor_density(s, 0)

against the local-time measure of the path at level zero, stopped at the
default time.  This module computes K path by path from an estimated
local-time curve, together with the window approximation

    K^h_t = integral of (1/h) P(default in (s, s+h) | state at s) ds

whose h -> 0 limit recovers K, and the Monte Carlo machinery (martingale
residuals, ensemble summaries) used to verify the compensator property.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import laws
from .errors import DomainError, InsufficientPaths
from .paths import TimeGrid
from .quadrature import integrate_finite

__all__ = [
    "CompensatorCurve",
    "indicator_curve",
    "compensator_curve",
    "laplacian_approximation",
    "averaged_gaussian_kernel",
    "build_curve",
    "parse_functional",
    "martingale_residual",
    "ensemble_summary",
    "EnsembleReport",
]


@dataclass(frozen=True)
class CompensatorCurve:
    """Per-path curves on the path grid: indicator, survivor flag, compensator."""

    grid: TimeGrid
    tau: float
    H: np.ndarray
    G: np.ndarray
    K: np.ndarray
    Kh: dict = field(default_factory=dict)

    def at(self, curve, t):
        return float(curve[self.grid.index_of(t)])


def indicator_curve(path):
    """Default indicator H on the path grid (1 from the default knot on)."""
    return (path.grid.knots >= path.tau).astype(float)


def compensator_curve(path, lt, ctx, weights=None):
    """Compensator of the default indicator along one path.

    Accumulates weight(s) * (local-time increment at level 0) over the steps
    before the default time, where weight(s) = f(s) / survivor_density(s, 0).
    Accumulation starts at the first positive knot: the step out of the time
    origin is skipped, and the local-time mass omitted there carries total
    compensator weight F(dt), negligible at any usable step size.

    ``lt`` must be a local-time curve at level 0 on the same grid; pass
    ``weights`` (from ``laws.compensator_weights``) to amortize the per-knot
    integrals across an ensemble.
    """
    if lt.x != 0.0:
        raise DomainError(f"compensator needs the local time at level 0, got {lt.x}")
    if lt.values.shape != path.beta.shape or not np.array_equal(
            lt.grid.knots, path.grid.knots):
        raise DomainError("local-time curve lives on a different grid")
    if weights is None:
        weights = laws.compensator_weights(ctx, path.grid.knots, path.grid.dt)
    incr = weights[:-1] * np.diff(lt.values)
    incr[0] = 0.0
    return np.concatenate([[0.0], np.cumsum(incr)])


def laplacian_approximation(path, h, ctx):
    """Window approximation of the compensator with lag h.

    Each step before the default time contributes its length times the
    conditional rate (1/h) P(tau in (s, s+h) | beta_s, tau > s) evaluated at
    the left knot; steps from the default time on contribute nothing (the
    conditional jump probability is zero once the default has happened).
    The time-zero knot uses the rate of the first positive knot, matching the
    compensator's time-zero convention.
    """
    if h <= 0.0:
        raise DomainError(f"window lag must be positive, got {h}")
    knots = path.grid.knots
    steps = np.diff(knots)
    incr = np.zeros(len(steps))
    left = np.arange(1, len(steps))
    live = knots[left] < min(path.tau, ctx.t1)
    idx = left[live]
    if len(idx):
        rates = laws.hazard_window_rates(ctx, knots[idx], path.beta[idx], h)
        incr[idx] = steps[idx] * rates
        if knots[0] < path.tau and idx[0] == 1:
            incr[0] = steps[0] * rates[0]
    return np.concatenate([[0.0], np.cumsum(incr)])


def averaged_gaussian_kernel(h, x, spec=None):
    """Average over u in (0, h] of the centered Gaussian density at x.

    A probability density in x for every h in (0, 1]; concentrates to the
    Dirac mass at zero as h shrinks.  Evaluated by quadrature after the
    substitution u = z**2, which removes the u**-0.5 endpoint behavior.
    """
    if not (0.0 < h <= 1.0):
        raise DomainError(f"kernel lag must lie in (0, 1], got {h}")
    x2 = x * x

    def integrand(u):
        return math.exp(-0.5 * math.log(2.0 * math.pi * u) - x2 / (2.0 * u))

    pts = None if x == 0.0 else [x2 / 16.0, x2, min(16.0 * x2, h)]
    val, _ = integrate_finite(integrand, 0.0, h, singular_at_a=True,
                              interior_points=pts)
    return val / h


def build_curve(path, lt, ctx, h_values=(), weights=None, zero_k=False):
    """Assemble the per-path curve bundle (indicator, compensator, windows)."""
    H = indicator_curve(path)
    if zero_k:
        K = np.zeros_like(H)
    else:
        K = compensator_curve(path, lt, ctx, weights=weights)
    Kh = {h: laplacian_approximation(path, h, ctx) for h in h_values}
    return CompensatorCurve(path.grid, path.tau, H, 1.0 - H, K, Kh)


# ---------------------------------------------------------------------------
# ensemble reductions
# ---------------------------------------------------------------------------

def parse_functional(text):
    """Functional of the information value used in martingale tests.

    ``one`` (constant), ``abs_beta`` (absolute value), or
    ``indicator_beta_above:<c>``.  Returns (label, callable on arrays).
    """
    text = text.strip()
    if text == "one":
        return "one", lambda b: np.ones_like(b)
    if text == "abs_beta":
        return "abs_beta", np.abs
    if text.startswith("indicator_beta_above:"):
        c = float(text.split(":", 1)[1])
        return f"indicator_beta_above({c:g})", lambda b: (b > c).astype(float)
    raise DomainError(f"unknown functional {text!r}")


def _min_paths(n):
    if n < 100:
        raise InsufficientPaths(f"need at least 100 paths, got {n}")


def martingale_residual(ensemble, s, t, functional):
    """Monte Carlo test statistic for the compensated-indicator martingale.

    ``ensemble`` is a sequence of (InformationPath, CompensatorCurve) pairs;
    the statistic is the sample mean of ((H_t - K_t) - (H_s - K_s)) * Z_s
    with Z_s the chosen functional of the information value at s, returned
    with its standard error.  Small for every adapted functional exactly when
    K compensates H.
    """
    if not (0.0 < s < t):
        raise DomainError(f"need 0 < s < t, got s={s}, t={t}")
    pairs = list(ensemble)
    _min_paths(len(pairs))
    label, fn = functional if isinstance(functional, tuple) else parse_functional(functional)
    ys = np.empty(len(pairs))
    for i, (path, curve) in enumerate(pairs):
        g = curve.grid
        mart_t = curve.at(curve.H, t) - curve.at(curve.K, t)
        mart_s = curve.at(curve.H, s) - curve.at(curve.K, s)
        z = fn(np.asarray(path.beta[g.index_of(s)]))
        ys[i] = (mart_t - mart_s) * float(z)
    return float(ys.mean()), float(ys.std(ddof=1) / math.sqrt(len(ys)))


@dataclass(frozen=True)
class EnsembleReport:
    """Cross-path summary: per-time means/errors and the residual test table."""

    times: np.ndarray
    mean_H: np.ndarray
    mean_K: np.ndarray
    F: np.ndarray
    stderr_H: np.ndarray
    stderr_K: np.ndarray
    n_paths: int
    residuals: list = field(default_factory=list)
    # residual rows: (s, t, label, residual, stderr, passed)
    gate_multiplier: float = 3.0

    def all_gates_pass(self):
        for k in range(len(self.times)):
            if abs(self.mean_K[k] - self.F[k]) > self.gate_multiplier * self.stderr_K[k]:
                return False
            comb = math.hypot(self.stderr_H[k], self.stderr_K[k])
            if abs(self.mean_K[k] - self.mean_H[k]) > self.gate_multiplier * comb:
                return False
        return all(row[5] for row in self.residuals)


def ensemble_summary(ensemble, report_times, ctx, residual_matrix=(),
                     functionals=("one",), gate_multiplier=3.0):
    """Summarize an ensemble of (path, curve) pairs at the report times.

    ``residual_matrix`` is a sequence of (s, t) pairs; every configured
    functional is tested on each pair.  Gates compare |mean_K - F(t)| and
    |mean_K - mean_H| against ``gate_multiplier`` standard errors, and each
    residual against its own standard error.
    """
    pairs = list(ensemble)
    if not pairs:
        raise InsufficientPaths("empty ensemble")
    times = np.asarray(report_times, dtype=float)
    n = len(pairs)
    hs = np.empty((n, len(times)))
    ks = np.empty((n, len(times)))
    for i, (_, curve) in enumerate(pairs):
        for j, t in enumerate(times):
            hs[i, j] = curve.at(curve.H, t)
            ks[i, j] = curve.at(curve.K, t)
    rows = []
    for (s, t) in residual_matrix:
        for spec in functionals:
            label, fn = parse_functional(spec) if isinstance(spec, str) else spec
            res, se = martingale_residual(pairs, s, t, (label, fn))
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
