"""Two-dimensional process: X is a Brownian motion, Y = A0 + A1 X + A2 X^2.

Y is driven by the same noise as X, so the diffusion matrix has rank one.
Mixed moments like E[X Y] come from one transition matrix on the
two-variable monomial basis.
"""
from polymag import builtin, enumerate_basis, validate_spec
from polymag.processes import check_point
from polymag.validation import run_validation

params = {"A0": 0.0, "A1": 1.0, "A2": 0.5}
spec = builtin("affine-square", params)
print("basis of degree 2:", enumerate_basis(2, 2).exponents)
s, t, x = check_point("affine-square", params)
report = run_validation(spec, s, t, x, kmax=2, n_paths=50_000)
for row in report.rows:
    print(row.k, {k: round(v, 5) for k, v in row.values.items()})
for v in report.verdicts:
    print(f"{'ok  ' if v.passed else 'FAIL'} {v.name}: {v.detail}")
