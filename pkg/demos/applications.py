"""
Three classical problems, one solver
====================================

Gaussian quadrature, fitting sums of exponentials, and writing a binary
form as a sum of powers of linear forms.
"""

# %%
import numpy as np

from pronylab import applications as app

# Gauss-Legendre rules from the moments of Lebesgue measure on [-1, 1].
for d in (2, 3, 4):
    mom = [(1 - (-1) ** (k + 1)) / (k + 1) for k in range(2 * d)]
    q = app.gauss_quadrature_from_moments(mom)
    print(f"d = {d}: nodes {np.round(q.nodes, 12)}, weights {np.round(q.weights, 12)}")
print("integral of x^2 with d = 2:", app.gauss_quadrature_from_moments([2, 0, 2 / 3, 0])(lambda x: x**2))

# %%
# Equispaced samples of 1.5 e^{-0.3 k} + 0.7 e^{0.4 k}.
y = [1.5 * np.exp(-0.3 * k) + 0.7 * np.exp(0.4 * k) for k in range(4)]
fit = app.exponential_fit(y)
print("exponents:", fit.exponents, " amplitudes:", fit.amplitudes)

# A negative node has no real exponent.
print(app.exponential_fit([1.0, -1.0]).exponents)

# %%
# (x + 2y)^3 + (x - y)^3 has coefficients (2, 3, 15, 7).
b = app.binary_form_coefficients([(1, 2), (1, -1)], 3)
dec = app.waring_decompose(b)
print("coefficients:", b)
print("forms (eta, zeta):", [(round(float(e), 12), round(float(z), 12)) for e, z in dec.forms])

# A quintic with three terms, one of them with a negative weight.
b5 = app.binary_form_coefficients([(1.0, 0.5), (-0.8, 0.8), (1.2, -1.8)], 5)
print("quintic xi:", np.round(app.waring_decompose(b5).xi, 12))
