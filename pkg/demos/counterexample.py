"""A drift quadratic in the state breaks the polynomial property.

The generator then maps x^k to degree k + 1, so no finite moment matrix
exists.  The library refuses rather than truncating silently.
"""
from polymag import DegreeOverflow, builtin, generator_matrix

spec = builtin("quadratic-drift-counterexample")
for k in (1, 2):
    try:
        generator_matrix(spec, 0.5, k)
    except DegreeOverflow as exc:
        print(f"k = {k}: DegreeOverflow: {exc}")
