"""
Prony curves
============

Fix every moment but the last. The polynomials that remain form a line,
and walking along it shows nodes colliding and escaping.
"""

# %%
import numpy as np

from pronylab import core, varieties

# Any three moments define a curve. Here m = (2, 0, -2), so the polynomial at t = m_3 is z^2 + t/2 z + 1.
curve = varieties.prony_curve([2.0, 0.0, -2.0])
print("slope:", curve.slope, " intercept:", curve.intercept)
print("Hankel matrix (same for every t):\n", curve.hankel)

# %%
# Trace the curve. Real signals exist only where the polynomial has real
# roots, here for |t| >= 4.
trace = varieties.trace_curve(curve, -10, 10, 201)
print("hyperbolicity changes at t =", np.round(trace.crossings, 9))

# %%
# Approaching t = 4 from the real side the nodes merge and the amplitudes
# grow like one over the gap.
for off in (1e-2, 1e-4, 1e-6):
    s = curve.signal(4 + off)
    print(f"t = 4 + {off:.0e}: nodes {s.nodes}, amplitudes {s.amplitudes}")

# %%
# Far out one node runs off to infinity while the other settles near 0.
for t in (1e2, 1e3, 1e4):
    print(f"t = {t:.0e}: nodes {curve.signal(t).nodes}")

report = varieties.collision_diagnostics(varieties.trace_curve(curve, -1e3, 1e3, 2001))
for esc in report.escapes:
    print("escape direction", esc.direction, "growth exponents", np.round(esc.growth_exponents, 3))

# %%
# A noisy last moment can leave the real region. Restricting the estimate
# to the curve finds the closest real signal instead of projecting complex
# roots onto the real line.
noisy = np.array([2.0, 0.0, -2.0, 3.0])
print("status at the noisy point:", core.prony_solve(noisy).status)
est = varieties.curve_restricted_estimate(noisy, t_range=(-10, 10), full_output=True)
proj = varieties.real_projection_estimate(noisy)
print(f"curve estimate t = {est.t:.6f}, residual {est.residual:.4f}")
print(f"real projection residual {np.max(np.abs(core.moments(proj, 4) - noisy)):.4f}")
