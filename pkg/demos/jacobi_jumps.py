"""A Jacobi diffusion on [0, 1] with jumps that keep the state inside.

The jump kernel enters the generator only through its moments; the
sampler that Monte Carlo uses must agree with them.  We check the sampler
against the declared moments, then compare matrix and simulated moments.
"""
from polymag import SimConfig, builtin, estimate_moments, kernel_consistency_check, moments

spec = builtin("jacobi-jumps")
for x in (0.1, 0.5, 0.9):
    report = kernel_consistency_check(spec.sampler, spec, 0.0, [x], n=200_000, seed=1)
    print(f"kernel at x = {x}: consistent = {report.consistent}")

s, t, x = 0.0, 1.0, [0.5]
kidxs = [(1,), (2,), (3,)]
exact = moments(spec, s, t, x, kidxs)
est = estimate_moments(spec, s, t, x, kidxs, SimConfig(100_000, 500, 7, "euler-projected"))
for k, e, m in zip(kidxs, exact, est):
    print(f"k = {k[0]}: matrix {e:.5f}   mc {m.mean:.5f} +/- {m.stderr:.5f}")
