import numpy as np
import pytest

from polymag.errors import SpecError
from polymag.timefuncs import T_IDENTITY, TimeCoefficient, TimePoly


def test_polynomial_integral_is_exact():
    c = TimeCoefficient.polynomial([1.0, 0.0, 3.0])  # 1 + 3 t^2
    assert c.integral(0.5, 2.0) == pytest.approx(1.5 + (8.0 - 0.125), rel=1e-15)


def test_piecewise_evaluation_and_integral():
    c = TimeCoefficient.piecewise([0.5], [[1.0], [0.0, 2.0]])
    assert c(0.25) == 1.0 and c(0.75) == 1.5
    np.testing.assert_allclose(c(np.array([0.0, 0.5, 1.0])), [1.0, 1.0, 2.0])
    # 0.4 on the flat part, t^2 from 0.5 to 0.9
    assert c.integral(0.1, 0.9) == pytest.approx(0.4 + 0.81 - 0.25, rel=1e-14)


def test_piecewise_rejects_jumps():
    with pytest.raises(SpecError):
        TimeCoefficient.piecewise([0.5], [[1.0], [0.0, 1.0]])


def test_merging_equal_pieces():
    c = TimeCoefficient.piecewise([0.3], [[2.0], [2.0]])
    assert c.breakpoints == () and c.is_constant


def test_arithmetic_across_breakpoints():
    a = TimeCoefficient.piecewise([0.5], [[1.0], [0.0, 2.0]])
    b = T_IDENTITY
    prod = a * b
    for t in (0.2, 0.5, 0.8):
        assert prod(t) == pytest.approx(a(t) * b(t))
    assert (a - a).is_zero


def test_timepoly_evaluate_and_freeze():
    x = TimePoly.variable(2, 0)
    y = TimePoly.variable(2, 1)
    p = TimePoly.constant(2, T_IDENTITY) * x * y + 3.0
    X = np.array([[1.0, 2.0], [0.5, -1.0]])
    np.testing.assert_allclose(p.evaluate(0.5, X), [4.0, 2.75])
    frozen = p.at(0.5)
    assert frozen([1.0, 2.0]) == pytest.approx(4.0)
    assert p.degree == 2


def test_timepoly_power_rejects_negative():
    with pytest.raises(SpecError):
        TimePoly.variable(1, 0) ** -1


def test_callables_are_not_coefficients():
    with pytest.raises(TypeError):
        TimeCoefficient.coerce(np.sin)
