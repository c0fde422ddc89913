"""Ornstein-Uhlenbeck with a time-varying mean level.

Generators at different times do not commute, so the solver falls back
on the third-order Magnus expansion, split into pieces small enough for
the series to converge.  We print the Magnus terms and compare the result
with a fine RK4 solution.
"""
import numpy as np

from polymag import builtin, magnus_terms, norm_integral, transition_matrix

spec = builtin("ou-theta-t", {"theta": 1.0})
s, t = 0.0, 1.0
terms = magnus_terms(spec, s, t, 2)
np.set_printoptions(precision=6, suppress=True)
print("Omega1 =\n", terms.omega1)
print("Omega2 =\n", terms.omega2, "\n  (expected (t-s)^3/12 * [[0,1,0],[0,0,2],[0,0,0]])")
print("Omega3 =\n", terms.omega3, "\n  (zero by time-reversal symmetry)")

print(f"\nint ||H|| dt over [0, 1] = {norm_integral(spec, s, t, 2):.4f}")
magnus = transition_matrix(spec, s, t, 2, "magnus3")
ode = transition_matrix(spec, s, t, 2, "ode", ode_steps=4096)
print(f"magnus3 pieces: {magnus.subintervals}, max |magnus3 - RK4| = {np.abs(magnus.matrix - ode.matrix).max():.2e}")
