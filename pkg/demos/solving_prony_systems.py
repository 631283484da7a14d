"""
Solving Prony systems
=====================

From ``2d`` moments to ``d`` spikes, and what happens when that fails.
"""

# %%
# A symmetric pair of unit spikes at +-0.5 has moments (2, 0, 0.5, 0).
import numpy as np

from pronylab import core, solvability

pair = core.SpikeSignal([1.0, 1.0], [-0.5, 0.5])
mu = core.moments(pair, 4)
print("moments:", mu)

# %%
# The Hankel system gives the monic polynomial whose roots are the nodes;
# the same polynomial comes straight from the nodes via Vieta.
q = core.hankel_map(mu)
print("HM(mu) low coefficients:", q.low_coeffs)
print("VM(X)  low coefficients:", core.vieta(pair.nodes).low_coeffs)
print("Pade numerator:", core.pade_numerator(mu, q))

out = core.prony_solve(mu)
print(out.status, out.signal)

# %%
# Four qualitatively different inputs.
cases = {
    "generic": [2, 0, 0.5, 0],
    "one spike seen as two": [1, 1, 1, 1],
    "complex pair": [2, 0, -0.5, 0],
    "no solution": [0, 0, 0, 1],
}
for name, m in cases.items():
    out = core.prony_solve(m)
    v = solvability.solvable(m)
    print(f"{name:>22}: status={out.status:<15} rank={v.rank}  solvable={v.solvable}")

# %%
# Real solvability: with a nonsingular Hankel matrix the system has a real
# solution exactly when HM(mu) has only real roots. Mixed-sign amplitudes
# are fine; positivity of the Hankel matrix is sufficient, not necessary.
mixed = core.moments(core.SpikeSignal([1, -1], [-0.3, 0.3]), 4)
v = solvability.real_solvable(mixed)
print("mixed-sign pair: real_solvable =", v.real_solvable,
      " positive definite =", solvability.hamburger_positive_definite(mixed))

# %%
# Many systems at once.
rng = np.random.default_rng(0)
A = rng.uniform(0.5, 2, (5, 3))
X = np.sort(rng.uniform(-1, 1, (5, 3)), axis=1)
batch = core.solve_many(core.moments_many(A, X, 6))
print("batch statuses:", batch.status)
print("max node error:", np.max(np.abs(batch.nodes - X)))
