"""
Error amplification for clustered spikes
========================================

How far can a reconstruction move when every moment is off by at most eps
and the nodes sit in an interval of half-length h?
"""

# %%
import numpy as np

from pronylab import error_geometry as eg

h = 0.1
F = eg.regular_cluster(2, h)  # unit spikes at -h and h
eps = h**3
samples = eg.sample_error_set(F, eps, 5000, seed=0)
print(f"{samples.n} real signals in the error set (discarded {samples.discard_fraction:.1%})")

# %%
# In model coordinates (nodes rescaled to [-1, 1]) the error set sits
# between two boxes of moment deviations.
res = eg.sandwich_check(F, eps, samples)
print(res)

# %%
# Worst-case errors: nodes move by about eps / h^2, amplitudes by eps / h^3.
rep = eg.worst_case_errors(F, eps, 5000, seed=0, delta_qs=(2,))
print(f"rho_X = {rep.rho_X:.4g}  (eps/h^2 = {eps / h**2:.4g})")
print(f"rho_A = {rep.rho_A:.4g}  (eps/h^3 = {eps / h**3:.4g})")
print("distance to the Prony curve part (model space):", rep.delta_q_max_distance)

# %%
# Exponents from a sweep in h with eps = h^3.
res = eg.scaling_experiment(2, [0.1, 0.07, 0.05, 0.035, 0.025], 3, n=2000, seed=0)
print(f"slopes: nodes {res.slope_X:.3f}, amplitudes {res.slope_A:.3f}")
for row in zip(res.h, res.rho_X, res.rho_A):
    print("h = {:.3f}  rho_X = {:.3e}  rho_A = {:.3e}".format(*row))

# %%
# Shifting the cluster away from 0 only changes constants.
shifted = eg.regular_cluster(2, h, kappa=1.0)
print("kappa = 1:", eg.sandwich_check(shifted, eps, eg.sample_error_set(shifted, eps, 5000)))
print("bi-Lipschitz ratios (median):", np.median(eg.bilipschitz_ratios(eg.normalize(F)[0], 1e-5)))
