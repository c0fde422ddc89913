import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polymag.errors import DegreeOverflow, SpecError
from polymag.genmat import (
    ProcessSpec,
    StateSpace,
    apply_generator,
    build_spec,
    commutator_probe,
    generator_matrix,
    validate_spec,
)
from polymag.polyalg import Polynomial, enumerate_basis
from polymag.processes import builtin

from conftest import CLOSED


def _mono(d, m, k, c=1.0):
    return Polynomial.monomial(enumerate_basis(d, m), k, c)


def test_bm_drift_generator_on_x():
    spec = builtin("bm-drift", {"a": "t"})
    g = apply_generator(spec, 0.4, _mono(1, 1, (1,)))
    assert g.terms() == {(0,): 0.4}


def test_ou_generator_on_x():
    spec = builtin("ou-theta-t", {"theta": 2.0})
    g = apply_generator(spec, 0.25, _mono(1, 1, (1,)))
    assert g.terms() == {(0,): 0.5, (1,): -1.0}


def test_jacobi_generator_on_x_squared():
    spec = builtin("jacobi", {"a": "0.3 + 0.1*t", "b": 2.0})
    t = 0.5
    a = 0.3 + 0.1 * t
    g = apply_generator(spec, t, _mono(1, 2, (2,)))
    # 2 a x + b x - x^2
    assert g.terms() == pytest.approx({(1,): 2 * a + 2.0, (2,): -1.0})


@pytest.mark.parametrize("t", [0.0, 0.3, 0.99])
def test_generator_matrix_displays(t):
    bm = np.asarray(generator_matrix(builtin("bm-drift", {"a": "t"}), t, 2))
    np.testing.assert_array_equal(bm, [[0, t, 1], [0, 0, 2 * t], [0, 0, 0]])
    ou = np.asarray(generator_matrix(builtin("ou-theta-t", {"theta": 1.0}), t, 2))
    np.testing.assert_array_equal(ou, [[0, t, 1], [0, -1, 2 * t], [0, 0, -2]])


def test_quadratic_drift_overflows():
    spec = builtin("quadratic-drift-counterexample")
    with pytest.raises(DegreeOverflow):
        generator_matrix(spec, 0.5, 2)
    with pytest.raises(DegreeOverflow):
        apply_generator(spec, 0.5, _mono(1, 2, (1,)))


def test_commutator_probe_examples():
    assert commutator_probe(builtin("bm-drift"), 0.0, 1.0, 2, grid=50).max_norm <= 1e-12
    ou = commutator_probe(builtin("ou-theta-t"), 0.0, 1.0, 2)
    assert not ou.commuting and ou.max_norm > 0.1
    tx = builtin("ou-tx")
    assert commutator_probe(tx, 0.0, 1.0, 1).commuting
    assert not commutator_probe(tx, 0.0, 1.0, 2).commuting


@pytest.mark.parametrize("name", CLOSED)
def test_structural_invariants(name, specs, rng):
    spec = specs[name]
    k = spec.m
    basis = enumerate_basis(spec.d, k)
    for t in rng.uniform(0, spec.T, 4):
        H = np.asarray(generator_matrix(spec, t, k))
        # constants are killed, degrees never increase
        assert np.all(H[:, 0] == 0.0)
        deg = np.array(basis.degrees)
        assert np.all(H[deg[:, None] > deg[None, :]] == 0.0)
        # matrix agrees with the operator on random polynomials
        f = Polynomial(basis, rng.normal(size=basis.N))
        x = spec.state_space.sample(rng, 1)[0]
        direct = apply_generator(spec, t, f)(x)
        via_matrix = basis.monomials(x) @ H @ f.coeffs
        assert direct == pytest.approx(via_matrix, rel=1e-10, abs=1e-10)


@pytest.mark.parametrize("name", CLOSED)
def test_generator_is_linear(name, specs, rng):
    spec = specs[name]
    basis = enumerate_basis(spec.d, spec.m)
    f = Polynomial(basis, rng.integers(-5, 5, basis.N).astype(float))
    g = Polynomial(basis, rng.integers(-5, 5, basis.N).astype(float))
    lhs = apply_generator(spec, 0.5, f * 2.0 + g * -3.0)
    rhs = apply_generator(spec, 0.5, f) * 2.0 + apply_generator(spec, 0.5, g) * -3.0
    np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, rtol=1e-13, atol=1e-12)


@pytest.mark.parametrize("name", CLOSED)
def test_generator_continuous_in_time(name, specs):
    spec = specs[name]
    H = lambda t: np.asarray(generator_matrix(spec, t, spec.m))
    gaps = [np.abs(H(0.5 + h) - H(0.5)).max() for h in (1e-2, 1e-4, 1e-6)]
    assert gaps[2] <= gaps[1] <= gaps[0] and gaps[2] < 1e-4


def test_piecewise_coefficients_are_continuous():
    spec = builtin("bm-drift", {"a": "piecewise(1; 0.5: 2*t)"})
    below = np.asarray(generator_matrix(spec, 0.5 - 1e-12, 2))
    at = np.asarray(generator_matrix(spec, 0.5, 2))
    np.testing.assert_allclose(below, at, atol=1e-11)


def test_spec_rejects_bad_structure():
    with pytest.raises(SpecError):
        build_spec(1, 3, 1.0, [0.0], [[1.0]])  # odd m
    with pytest.raises(SpecError):
        build_spec(1, 2, 1.0, [0.0], [[1.0]], jump_moments={(3,): 1.0})
    with pytest.raises(SpecError):
        build_spec(2, 2, 1.0, [0.0, 0.0], [[1.0, 0.5], [0.0, 1.0]])  # asymmetric


def test_validate_spec_catches_negative_diffusion():
    spec = build_spec(1, 2, 1.0, [0.0], [[-1.0]])
    with pytest.raises(SpecError, match="semi-definite"):
        validate_spec(spec)


def test_jump_covariance_can_repair_diffusion():
    # c = -0.1 but int xi^2 K = 0.5 makes a = c + 0.5 positive
    spec = build_spec(1, 2, 1.0, [0.0], [[-0.1]], jump_moments={(2,): 0.5})
    validate_spec(spec)


def test_time_outside_horizon():
    with pytest.raises(ValueError):
        generator_matrix(builtin("bm-drift"), 1.5, 2)


@given(st.floats(0, 1), st.floats(-3, 3))
def test_generator_kills_constants(t, c):
    spec = builtin("ou-theta-t")
    g = apply_generator(spec, t, _mono(1, 4, (0,), c))
    assert g.norm() == 0.0
