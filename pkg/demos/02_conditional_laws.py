"""Conditional laws: posterior of the default time and survival curves.

Given the information value x at time t (and no default yet), the posterior
density of the default time and every conditional probability derived from
it come out of one-dimensional quadrature against the default density.
"""

import numpy as np

from infobridge import (
    DefaultDistribution,
    ModelContext,
    conditional_expectation,
    mean_reversion_drift,
    posterior_density,
    survival_probability,
)

ctx = ModelContext(DefaultDistribution.exponential(1.0))
t = 1.0

print("Posterior density of the default time at t = 1 (no default so far):")
print("  r      x = -1.0   x = -0.1   x = +0.5")
for r in (1.05, 1.25, 1.75, 2.5, 4.0):
    vals = [posterior_density(t, r, x, ctx) for x in (-1.0, -0.1, 0.5)]
    print(f"  {r:4.2f}   " + "   ".join(f"{v:8.4f}" for v in vals))
print("  (a value near zero pulls the posterior toward an imminent default)")

print()
print("Survival curves P(tau > u | beta_1 = x):")
us = np.arange(1.0, 3.01, 0.25)
for x in (0.1, 0.5, 1.5):
    curve = [survival_probability(t, float(u), x, ctx) for u in us]
    print(f"  x = {x:3.1f}: " + " ".join(f"{v:.3f}" for v in curve))

print()
print("Posterior mean time to default, E[tau - t | beta_t = x, tau > t]:")
for x in (0.1, 0.5, 1.5):
    m = conditional_expectation(lambda r: r, t, x, ctx) - t
    print(f"  x = {x:3.1f}: {m:.4f}")

print()
print("Mean-reversion drift toward zero (odd in x, strong near default):")
for x in (-1.0, -0.1, 0.1, 1.0):
    print(f"  u(1, {x:+.1f}) = {mean_reversion_drift(1.0, x, ctx):+.4f}")
