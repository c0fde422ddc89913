"""Brownian motion with a time-dependent drift.

The generator matrices at different times commute here, so the transition
matrix is a plain exponential of the integrated generator.  We compare the
first two moments against the Gaussian closed form.
"""
import numpy as np

from polymag import builtin, generator_matrix, moments, transition_matrix

spec = builtin("bm-drift", {"a": "t"})
print("H_t at t = 0.5 on {1, x, x^2, x^3}:")
print(np.asarray(generator_matrix(spec, 0.5, 3)))

s, t, x = 0.0, 1.0, 0.2
res = transition_matrix(spec, s, t, 2)
print(f"\nmethod chosen: {res.method}")
m1, m2 = moments(spec, s, t, [x], [(1,), (2,)])
mean, var = x + (t * t - s * s) / 2, t - s
print(f"E[X_t]   = {m1:.12f}  (closed form {mean:.12f})")
print(f"E[X_t^2] = {m2:.12f}  (closed form {mean**2 + var:.12f})")
assert np.isclose(m1, mean) and np.isclose(m2, mean**2 + var)
