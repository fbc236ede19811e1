"""Conditional laws of the information process.

The information process is a Brownian bridge from 0 to 0 whose pinning
horizon is the random default time tau with density f.  Writing
p(t, x, y) for the Gaussian density and ``bridge_density(t, r, x)`` for the
time-t marginal density of a bridge of length r, every analytic quantity of
the model reduces to tail integrals of ``bridge_density(t, v, x) * f(v)``:

* ``survivor_density(s, x)``   -- subprobability density of the information
  value at ``x`` on the event that default has not yet happened,
  ``integral over v in (s, inf) of bridge_density(s, v, x) f(v)``;
* its reciprocal, which normalizes the a-posteriori law of tau and weighs
  the local-time measure inside the default compensator;
* ``posterior_density(t, r, x)`` -- conditional density of tau at r given a
  current information value x and no default yet;
* ``survival_probability`` / ``conditional_expectation`` -- integrals of
  Borel functions against that posterior;
* ``mean_reversion_drift(s, x)`` -- conditional mean of beta_s / (tau - s)
  on survival, the drift removed when recovering the driving Brownian
  motion.

Numerical scaling
-----------------
The bridge exponent splits as

    -v x^2 / (2 s (v - s)) = -x^2/(2s) - x^2/(2 (v - s)),

so every tail integral is computed in the "scaled" form with the constant
factor exp(-x^2/(2s)) pulled out.  Ratios of scaled integrals (posterior,
survival, drift, hazard rates) then remain finite for arbitrarily large |x|,
and products are assembled in log space and exponentiated once.  The scaled
integrand retains an integrable (v-s)**-0.5 endpoint singularity that the
quadrature layer removes by substitution.

Two evaluation routes exist for the tail integrals: scalar adaptive
quadrature (the reference used by the public operations) and a fixed-rule
Gauss-Legendre panel scheme vectorized over grid knots (used to build the
weight and drift tables that large ensembles need).  The two routes are
cross-checked in the test suite.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import DefaultDistribution
from .errors import DomainError, IntegrabilityError
from .quadrature import QuadratureSpec, integrate_finite, integrate_semi_infinite

__all__ = [
    "ModelContext",
    "gaussian_density",
    "bridge_density",
    "survivor_density",
    "inverse_survivor_density",
    "survivor_density_floor",
    "posterior_density",
    "conditional_expectation",
    "survival_probability",
    "mean_reversion_drift",
    "DriftTable",
]

_POSTERIOR_FLUSH = 1e-300


@dataclass(frozen=True)
class ModelContext:
    """A default-time law together with the quadrature policy used on it.

    Carries a small memo table for the scaled survivor integral: posterior,
    survival and drift evaluations at a fixed state (s, x) all divide by the
    same tail integral, and curve evaluations repeat states heavily.
    """

    dist: DefaultDistribution
    quad: QuadratureSpec = field(default_factory=QuadratureSpec)
    _memo: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def t1(self):
        return self.dist.effective_horizon()

    def _check_interior_time(self, s, name="s"):
        if not (0.0 < s < self.t1):
            raise DomainError(f"{name}={s} outside (0, t1={self.t1})")


def gaussian_density(t, x, y):
    """Density at x of a Gaussian with mean y and variance t (t > 0)."""
    if t <= 0.0:
        raise DomainError(f"variance must be positive, got {t}")
    return math.exp(-0.5 * math.log(2.0 * math.pi * t) - (x - y) ** 2 / (2.0 * t))


def bridge_density(t, r, x):
    """Time-t marginal density at x of a 0-to-0 bridge of length r.

    Zero for r <= t: a bridge of length r sits at 0 from time r on.
    """
    if t <= 0.0:
        raise DomainError(f"time must be positive, got {t}")
    if r <= t:
        return 0.0
    return gaussian_density(t * (r - t) / r, x, 0.0)


# ---------------------------------------------------------------------------
# scaled tail integrals, scalar adaptive route
# ---------------------------------------------------------------------------

def _scaled_survivor_integrand(s, x, f):
    """Integrand of the scaled survivor density: the exp(-x^2/(2s)) factor
    is pulled out, leaving exp(-x^2/(2(v-s))) which vanishes at v = s."""
    x2 = x * x

    def integrand(v):
        w = v - s
        fv = f(v)
        if fv == 0.0 or w <= 0.0:
            return 0.0
        return math.sqrt(v / (2.0 * math.pi * s * w)) * math.exp(-x2 / (2.0 * w)) * fv

    return integrand


def _tail_kwargs(ctx):
    """How to cut the tail of an integral against f: at the effective horizon
    when it is finite (f vanishes beyond it exactly), else at the envelope
    quantile prescribed by the quadrature policy."""
    if math.isfinite(ctx.t1):
        return {"truncation": ctx.t1}
    return {"envelope": ctx.dist}


def _layer_points(s, x):
    """Sharp-feature hints for the adaptive rule: after v = s + z**2 the
    factor exp(-x^2/(2(v-s))) turns on around z ~ |x|/sqrt(2)."""
    if x == 0.0:
        return None
    half_x2 = 0.5 * x * x
    return [s + half_x2 / 16.0, s + half_x2, s + 16.0 * half_x2]


def _scaled_survivor(s, x, ctx):
    """Scaled survivor density: survivor_density * exp(+x^2/(2s)).

    Even in x; memoized on the context at the level |x|.
    """
    key = (s, abs(x))
    cached = ctx._memo.get(key)
    if cached is not None:
        return cached
    f = ctx.dist.density_f
    val, _ = integrate_semi_infinite(
        _scaled_survivor_integrand(s, x, lambda v: float(f(v))),
        s, ctx.quad, singular_at_a=True,
        interior_points=_layer_points(s, x), **_tail_kwargs(ctx))
    if len(ctx._memo) > 100_000:
        ctx._memo.clear()
    ctx._memo[key] = val
    return val


def survivor_density(s, x, ctx):
    """Joint density of {information value = x, no default by s}.

    Strictly positive on 0 < s < t1; decreasing in |x|.
    """
    ctx._check_interior_time(s)
    return math.exp(-x * x / (2.0 * s)) * _scaled_survivor(s, x, ctx)


def inverse_survivor_density(s, x, ctx):
    """Reciprocal of ``survivor_density``; normalizes the posterior law of tau."""
    ctx._check_interior_time(s)
    with np.errstate(over="ignore"):
        return float(np.exp(x * x / (2.0 * s)) / _scaled_survivor(s, x, ctx))


def survivor_density_floor(t0, t, x, ctx):
    """A strictly positive lower bound for ``survivor_density(s, x)`` on s in [t0, t].

    Obtained by bounding the bridge prefactor below by (2 pi t)**-0.5 and the
    exponent by its worst case over the window, then integrating f beyond t.
    """
    if not (0.0 < t0 < t < ctx.t1):
        raise DomainError(f"need 0 < t0 < t < t1, got t0={t0}, t={t}, t1={ctx.t1}")
    f = ctx.dist.density_f
    x2 = x * x
    pref = 1.0 / math.sqrt(2.0 * math.pi * t)

    def integrand(v):
        w = v - t
        fv = float(f(v))
        if fv == 0.0 or w <= 0.0:
            return 0.0
        return pref * math.exp(-x2 * t / (2.0 * t0 * w)) * fv

    val, _ = integrate_semi_infinite(integrand, t, ctx.quad,
                                     singular_at_a=True, **_tail_kwargs(ctx))
    return math.exp(-x2 / (2.0 * t0)) * val


def _log_scaled_bridge(t, r, x):
    """log of the scaled bridge density: bridge_density * exp(+x^2/(2t))."""
    w = r - t
    return 0.5 * math.log(r / (2.0 * math.pi * t * w)) - x * x / (2.0 * w)


def posterior_density(t, r, x, ctx):
    """A-posteriori density of tau at r given information value x at t < tau.

    Zero for r <= t.  Values that would underflow past 1e-300 are flushed to
    exact zero rather than left subnormal.
    """
    ctx._check_interior_time(t, "t")
    if r <= t:
        return 0.0
    fr = float(ctx.dist.density_f(r))
    if fr == 0.0:
        return 0.0
    log_post = (_log_scaled_bridge(t, r, x) + math.log(fr)
                - math.log(_scaled_survivor(t, x, ctx)))
    if log_post < -690.0:
        return 0.0
    val = math.exp(log_post)
    return 0.0 if val < _POSTERIOR_FLUSH else val


def conditional_expectation(g_of_tau, t, x, ctx, g_breakpoints=None):
    """Posterior mean of ``g_of_tau(tau)`` given information value x at t < tau.

    Computed as the ratio of two scaled tail integrals, so the overall
    exp(-x^2/(2t)) factor cancels.  Jumps or kinks of ``g_of_tau`` (digital
    payoffs, indicators) should be declared through ``g_breakpoints`` so the
    subdivision starts on them.  Raises IntegrabilityError when the integrand
    is still non-negligible at the truncation point, i.e. the envelope
    distribution cannot bound ``|g_of_tau| * f``.
    """
    ctx._check_interior_time(t, "t")
    f = ctx.dist.density_f
    base = _scaled_survivor_integrand(t, x, lambda v: float(f(v)))

    def integrand(v):
        return g_of_tau(v) * base(v)

    denom = _scaled_survivor(t, x, ctx)
    if not math.isfinite(ctx.t1):
        # Preflight at the truncation point: the envelope only bounds the
        # tail if the integrand is already negligible out there.
        t_cut = float(ctx.dist.quantile(1.0 - ctx.quad.tail_cutoff_mass))
        try:
            probe = abs(integrand(t_cut)) * max(t_cut - t, 1.0)
        except OverflowError:
            probe = math.inf
        if not math.isfinite(probe) or probe > max(
                1e6 * ctx.quad.abs_tol, 1e3 * ctx.quad.tail_cutoff_mass * denom):
            raise IntegrabilityError(
                "integrand not negligible at the truncation point; "
                "tail envelope cannot bound |g(tau)| f(tau)")
    interior = list(_layer_points(t, x) or [])
    if g_breakpoints is not None:
        interior.extend(g_breakpoints)
    num, _ = integrate_semi_infinite(integrand, t, ctx.quad, singular_at_a=True,
                                     interior_points=interior or None,
                                     **_tail_kwargs(ctx))
    return num / denom


def survival_probability(t, u, x, ctx):
    """P(tau > u | information value x at time t, no default by t).

    Equals 1 at u = t, is nonincreasing in u, and vanishes as u approaches
    the effective horizon of the default law.
    """
    ctx._check_interior_time(t, "t")
    if u < t:
        raise DomainError(f"need u >= t, got t={t}, u={u}")
    if not (u < ctx.t1):
        return 0.0
    if u == t:
        return 1.0
    f = ctx.dist.density_f
    num, _ = integrate_semi_infinite(
        _scaled_survivor_integrand(t, x, lambda v: float(f(v))),
        u, ctx.quad, singular_at_a=True, **_tail_kwargs(ctx))
    return min(1.0, max(0.0, num / _scaled_survivor(t, x, ctx)))


def mean_reversion_drift(s, x, ctx):
    """Conditional mean of beta_s / (tau - s) on survival, given beta_s = x.

    This is the drift that pulls the information process toward zero as the
    default approaches.  It is odd in x and defined as 0 at x = 0, where the
    conditioning event coincides with default having already happened and the
    stopped drift integral no longer sees the value.
    """
    ctx._check_interior_time(s)
    if x == 0.0:
        return 0.0
    f = ctx.dist.density_f
    base = _scaled_survivor_integrand(s, x, lambda v: float(f(v)))

    def integrand(v):
        return base(v) / (v - s)

    num, _ = integrate_semi_infinite(integrand, s, ctx.quad, singular_at_a=True,
                                     interior_points=_layer_points(s, x),
                                     **_tail_kwargs(ctx))
    return x * num / _scaled_survivor(s, x, ctx)


# ---------------------------------------------------------------------------
# vectorized fixed-rule route (tables for large ensembles)
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_PANELS_LIN = 8
_PANELS_LOG = 12
_LAYER_DECADES = 4.5  # log window below |x|/sqrt(2): exp(-x^2/(2 z^2)) is 0 there


def _panel_nodes(lo, hi, n_panels):
    """Gauss-Legendre nodes/weights on n_panels equal panels of [lo, hi] per row."""
    lo = np.asarray(lo, dtype=float)[:, None]
    hi = np.asarray(hi, dtype=float)[:, None]
    edges = lo + (hi - lo) * np.linspace(0.0, 1.0, n_panels + 1)[None, :]
    mid = 0.5 * (edges[:, 1:] + edges[:, :-1])
    half = 0.5 * (edges[:, 1:] - edges[:, :-1])
    z = mid[:, :, None] + half[:, :, None] * _GL_X[None, None, :]
    w = half[:, :, None] * _GL_W[None, None, :]
    n = lo.shape[0]
    return z.reshape(n, -1), w.reshape(n, -1)


def _scaled_tail_vec(s, x, ctx, reversion=False, upper=None):
    """Vectorized scaled tail integrals over v in (s, upper or tail cutoff).

    With ``reversion=False`` this is the scaled survivor density (or, with
    ``upper = s + h``, the scaled h-window numerator of the hazard rate);
    with ``reversion=True`` the integrand carries an extra (v - s)**-1 and
    yields the scaled drift integral, which requires x != 0.

    Uses the substitution v = s + z**2.  Rows with |x| effectively zero get
    linear panels in z; other rows get log-spaced panels resolving the
    boundary layer of exp(-x^2/(2 z^2)) at z ~ |x|.
    """
    s = np.asarray(s, dtype=float)
    x = np.asarray(x, dtype=float)
    s, x = np.broadcast_arrays(s, x)
    out = np.zeros(s.shape, dtype=float)
    if upper is None:
        if math.isfinite(ctx.t1):
            t_cut = float(ctx.t1)
        else:
            t_cut = float(ctx.dist.quantile(1.0 - ctx.quad.tail_cutoff_mass))
        hi_v = np.full(s.shape, t_cut)
    else:
        hi_v = np.broadcast_to(np.asarray(upper, dtype=float), s.shape)
    live = hi_v > s
    if not np.any(live):
        return out
    sl, xl, hl = s[live], np.abs(x[live]), hi_v[live]
    z_hi = np.sqrt(hl - sl)
    layer = xl / math.sqrt(2.0)
    f = ctx.dist.density_f

    def accumulate(zn, wn, s_rows, x_rows, jacobian):
        v = s_rows[:, None] + zn * zn
        with np.errstate(divide="ignore", over="ignore"):
            core = 2.0 * np.sqrt(v / (2.0 * math.pi * s_rows[:, None]))
            expo = -0.5 * (x_rows[:, None] / zn) ** 2
            vals = core * np.exp(expo) * f(v)
            if reversion:
                vals = vals / (zn * zn)
        return np.sum(vals * wn * jacobian, axis=1)

    vals_live = np.zeros(sl.shape)

    lin = layer <= z_hi * 1e-8
    if np.any(lin):
        if reversion:
            raise DomainError("drift integral requires a nonzero level x")
        zn, wn = _panel_nodes(np.zeros(lin.sum()), z_hi[lin], _PANELS_LIN)
        vals_live[lin] = accumulate(zn, wn, sl[lin], xl[lin], 1.0)
    logr = ~lin
    if np.any(logr):
        lo_w = np.log(layer[logr]) - _LAYER_DECADES
        hi_w = np.log(z_hi[logr])
        # If the boundary layer sits beyond the upper limit the integral is
        # effectively zero; integrate a short window under it anyway.
        lo_w = np.where(lo_w < hi_w - 1e-12, lo_w, hi_w - 9.0)
        wn_nodes, wn_weights = _panel_nodes(lo_w, hi_w, _PANELS_LOG)
        zn = np.exp(wn_nodes)
        vals_live[logr] = accumulate(zn, wn_weights, sl[logr], xl[logr], zn)

    out[live] = vals_live
    return out


def scaled_survivor_grid(s, x, ctx, upper=None):
    """Vectorized scaled survivor density (see ``_scaled_tail_vec``)."""
    return _scaled_tail_vec(s, x, ctx, reversion=False, upper=upper)


def scaled_reversion_grid(s, x, ctx):
    """Vectorized scaled drift integral; requires nonzero x."""
    return _scaled_tail_vec(s, x, ctx, reversion=True)


def compensator_weights(ctx, knots, dt):
    """Per-knot weight f(s) / survivor_density(s, 0) driving the compensator.

    The knot at time zero carries the weight evaluated at s = dt instead
    (the weight vanishes like sqrt(s) there, so the choice only matters at
    order dt).  Knots at or beyond the effective horizon get weight zero;
    the local-time measure carries no mass there.
    """
    knots = np.asarray(knots, dtype=float)
    s_eval = np.where(knots <= 0.0, dt, knots)
    w = np.zeros(knots.shape)
    live = s_eval < ctx.t1
    dens = scaled_survivor_grid(s_eval[live], 0.0, ctx)
    fvals = np.asarray(ctx.dist.density_f(s_eval[live]), dtype=float)
    w[live] = np.where(dens > 0.0, fvals / np.where(dens > 0.0, dens, 1.0), 0.0)
    return w


def hazard_window_rates(ctx, s, x, h):
    """Vectorized conditional rate (1/h) P(tau in (s, s+h) | beta_s = x, tau > s).

    Ratio of the h-window numerator to the survivor density; the common
    exp(-x^2/(2s)) scale cancels, so the rate is stable for any |x|.
    """
    s = np.asarray(s, dtype=float)
    num = scaled_survivor_grid(s, x, ctx, upper=s + h)
    den = scaled_survivor_grid(s, x, ctx)
    out = np.zeros(s.shape)
    ok = den > 0.0
    out[ok] = num[ok] / den[ok] / h
    return np.clip(out, 0.0, 1.0 / h)


class DriftTable:
    """Tabulated mean-reversion drift on a (time, level) grid.

    Stores u(s, x) for x >= 0 on a log-spaced level grid (plus the x -> 0+
    limit f(s)/survivor_density(s, 0) at the first column) and evaluates by
    bilinear interpolation with odd reflection in x.  Built once per run
    configuration; large ensembles interpolate instead of integrating per
    knot.
    """

    def __init__(self, s_nodes, x_nodes, values):
        self.s_nodes = s_nodes
        self.x_nodes = x_nodes
        self.values = values

    @classmethod
    def build(cls, ctx, s_nodes, x_max=None, n_x=140, x_min=1e-3):
        s_nodes = np.asarray(s_nodes, dtype=float)
        if x_max is None:
            x_max = 8.0 * math.sqrt(max(float(s_nodes[-1]), 1.0))
        x_pos = np.geomspace(x_min, x_max, n_x - 1)
        x_nodes = np.concatenate([[0.0], x_pos])
        s_eval = s_nodes.copy()
        if s_eval[0] <= 0.0:
            s_eval[0] = s_eval[1] if len(s_eval) > 1 else ctx.t1 * 0.5
        live = s_eval < ctx.t1
        values = np.zeros((len(s_nodes), n_x))
        dens0 = scaled_survivor_grid(s_eval[live], 0.0, ctx)
        f_live = np.asarray(ctx.dist.density_f(s_eval[live]), dtype=float)
        col0 = np.zeros(live.sum())
        ok = dens0 > 0.0
        col0[ok] = f_live[ok] / dens0[ok]
        values[live, 0] = col0
        for j, xj in enumerate(x_pos, start=1):
            den = scaled_survivor_grid(s_eval[live], xj, ctx)
            num = scaled_reversion_grid(s_eval[live], xj, ctx)
            col = np.zeros(live.sum())
            okj = den > 0.0
            col[okj] = xj * num[okj] / den[okj]
            values[live, j] = col
        return cls(s_nodes, x_nodes, values)

    def evaluate(self, s, beta):
        """Interpolated drift at times ``s`` and information values ``beta``."""
        s = np.asarray(s, dtype=float)
        beta = np.asarray(beta, dtype=float)
        ax = np.clip(np.abs(beta), 0.0, self.x_nodes[-1])
        si = np.clip(np.searchsorted(self.s_nodes, s, side="right") - 1,
                     0, len(self.s_nodes) - 2)
        sw = (s - self.s_nodes[si]) / (self.s_nodes[si + 1] - self.s_nodes[si])
        sw = np.clip(sw, 0.0, 1.0)
        xi = np.clip(np.searchsorted(self.x_nodes, ax, side="right") - 1,
                     0, len(self.x_nodes) - 2)
        xw = (ax - self.x_nodes[xi]) / (self.x_nodes[xi + 1] - self.x_nodes[xi])
        v00 = self.values[si, xi]
        v01 = self.values[si, xi + 1]
        v10 = self.values[si + 1, xi]
        v11 = self.values[si + 1, xi + 1]
        interp = (1 - sw) * ((1 - xw) * v00 + xw * v01) + sw * ((1 - xw) * v10 + xw * v11)
        return np.sign(beta) * interp
