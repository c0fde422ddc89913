import math

import numpy as np
import pytest

from polymag.errors import DiffusionNotPSD, MissingSampler
from polymag.genmat import StateSpace, build_spec
from polymag.kernels import JacobiJumpKernel
from polymag.mc import (
    SimConfig,
    estimate_moment,
    kernel_consistency_check,
    psd_factor,
    simulate_paths,
)
from polymag.magnus import moment
from polymag.processes import builtin


def test_pure_drift_paths_are_deterministic():
    spec = build_spec(1, 2, 1.0, [builtin("bm-drift", {"a": 1.0}).drift[0]], [[0.0]])
    X = simulate_paths(spec, 0.2, 0.8, [0.5], SimConfig(100, 50, 3))
    np.testing.assert_allclose(X, 1.1, atol=1e-14)


def test_bm_drift_mean_within_three_stderr():
    est = estimate_moment(builtin("bm-drift", {"a": "t"}), 0.0, 1.0, [0.25], (1,), SimConfig(40_000, 400, 11))
    # left-endpoint Euler drift is low by dt/2 for a(t) = t
    assert abs(est.mean - (0.25 + 0.5)) <= 3 * est.stderr + 1.0 / 800


def test_zero_index_moment():
    est = estimate_moment(builtin("ou-tx"), 0.0, 1.0, [0.3], (0,), SimConfig(500, 10, 1))
    assert est.mean == 1.0 and est.stderr == 0.0


def test_brownian_second_moment():
    est = estimate_moment(builtin("bm-drift", {"a": 0.0}), 0.0, 1.0, [0.0], (2,), SimConfig(40_000, 50, 5))
    assert abs(est.mean - 1.0) <= 3 * est.stderr


def test_ou_first_moment_against_matrix():
    spec = builtin("ou-theta-t")
    est = estimate_moment(spec, 0.0, 1.0, [0.5], (1,), SimConfig(40_000, 400, 2))
    exact = moment(spec, 0.0, 1.0, [0.5], (1,))
    assert abs(est.mean - exact) <= 3 * est.stderr + 2e-3


def test_results_do_not_depend_on_worker_count():
    spec = builtin("jacobi-jumps")
    a = simulate_paths(spec, 0.0, 0.5, [0.4], SimConfig(20_000, 20, 9, "euler-projected", workers=1))
    b = simulate_paths(spec, 0.0, 0.5, [0.4], SimConfig(20_000, 20, 9, "euler-projected", workers=4))
    np.testing.assert_array_equal(a, b)
    c = simulate_paths(spec, 0.0, 0.5, [0.4], SimConfig(20_000, 20, 10, "euler-projected"))
    assert not np.array_equal(a, c)


def test_bias_halves_with_step_count():
    spec = builtin("bm-drift", {"a": "t"})
    bias = []
    for n in (4, 8):
        est = estimate_moment(spec, 0.0, 1.0, [0.0], (1,), SimConfig(200_000, n, 21))
        bias.append(0.5 - est.mean)
    assert 1.6 <= bias[0] / bias[1] <= 2.5


def test_projection_keeps_paths_in_box():
    spec = builtin("jacobi", {"b": 2.0})
    X = simulate_paths(spec, 0.0, 1.0, [1.9], SimConfig(5_000, 50, 4, "euler-projected"))
    assert spec.state_space.contains(X).all()


def test_negative_variance_needs_projection():
    spec = builtin("jacobi")
    with pytest.raises(DiffusionNotPSD):
        simulate_paths(spec, 0.0, 1.0, [0.98], SimConfig(5_000, 50, 4, "euler"))


def test_missing_sampler():
    spec = build_spec(1, 2, 1.0, [0.0], [[1.0]], jump_moments={(2,): 0.5})
    with pytest.raises(MissingSampler, match="sampler"):
        simulate_paths(spec, 0.0, 1.0, [0.0])


def test_psd_factor_handles_rank_deficiency():
    v = np.array([1.0, 2.0, -0.5])
    cov = np.outer(v, v)[None]
    L = psd_factor(cov)
    np.testing.assert_allclose(L[0] @ L[0].T, cov[0], atol=1e-12)
    with pytest.raises(DiffusionNotPSD):
        psd_factor(np.array([[[1.0, 2.0], [2.0, 1.0]]]))


def test_kernel_intensity_is_one():
    k = JacobiJumpKernel(-0.5, -0.1)
    np.testing.assert_array_equal(k.intensity(0.0, np.array([[0.1], [0.9]])), [1.0, 1.0])
    # total mass of the density: -1/log(a/b) * log(b/a) = 1
    assert -1.0 / math.log(0.5 / 0.1) * math.log(0.1 / 0.5) == pytest.approx(1.0)


def test_kernel_second_moment_formula():
    a, b, x = -0.5, -0.1, 0.7
    k = JacobiJumpKernel(a, b)
    poly = k.moment_polys(2)[(2,)]
    expected = x**2 * (b**2 - a**2) / (-2 * math.log(a / b))
    assert poly.evaluate(0.0, np.array([[x]]))[0] == pytest.approx(expected, rel=1e-14)


def test_zero_kernel_is_trivially_consistent():
    spec = builtin("ou-theta-t")
    report = kernel_consistency_check(None, spec, 0.5, [0.1])
    assert report.consistent and all(c.declared == 0.0 for c in report.checks)


def test_kernel_consistency_flags_wrong_moments():
    good = builtin("jacobi-jumps")
    assert kernel_consistency_check(good.sampler, good, 0.0, [0.6], n=200_000, seed=3).consistent
    other = builtin("jacobi-jumps", {"a": -0.9})
    assert not kernel_consistency_check(other.sampler, good, 0.0, [0.6], n=200_000, seed=3).consistent


def test_kernel_check_needs_enough_draws():
    spec = builtin("jacobi-jumps")
    with pytest.raises(ValueError):
        kernel_consistency_check(spec.sampler, spec, 0.0, [0.5], n=100)


def test_upward_kernel_moments():
    spec = builtin("jacobi-jumps", {"alpha": 0.3})
    report = kernel_consistency_check(spec.sampler, spec, 0.0, [0.35], n=400_000, seed=8)
    assert report.intensity == 2.0 and report.consistent


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(n_paths=0)
    with pytest.raises(ValueError):
        SimConfig(scheme="milstein")
