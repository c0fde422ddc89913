import re

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polymag.errors import DegreeOverflow, SpecError
from polymag.genmat import generator_matrix
from polymag.kernels import JacobiJumpKernel
from polymag.processes import BUILTINS, builtin, parse_expression, parse_spec, to_document

from conftest import CLOSED

OU_DOC = """\
# minimal document
[meta]
d = 1
m = 2
T = 1
state_space = R

[drift]
1: t - x

[diffusion]
11: 1
"""


def test_minimal_document():
    spec = parse_spec(OU_DOC)
    assert spec.d == 1 and spec.m == 2
    X = np.array([[0.3], [-1.0]])
    np.testing.assert_allclose(spec.drift[0].evaluate(0.7, X), [0.4, 1.7])
    np.testing.assert_allclose(spec.diffusion[0][0].evaluate(0.7, X), [1.0, 1.0])


def _error(doc):
    with pytest.raises(SpecError) as info:
        parse_spec(doc)
    return info.value


def test_drift_degree_violation():
    err = _error(OU_DOC.replace("1: t - x", "1: x^2"))
    assert "degree" in str(err) and err.line == 9


def test_jump_moment_degree_violation():
    err = _error(OU_DOC + "[jump_moments]\n(2): x^3\n")
    assert "degree" in str(err) and err.line == 14


def test_diffusion_degree_violation():
    err = _error(OU_DOC.replace("11: 1", "11: x^3 + 1"))
    assert err.line == 12


def test_unknown_sampler():
    err = _error(OU_DOC + "[sampler]\nname = cauchy\n")
    assert "unknown sampler" in str(err)


@pytest.mark.parametrize(
    "replacement, line, column",
    [
        ("1: t - $x", 9, 8),
        ("1: t - (x", 9, 10),
        ("1: t ^ 1.5", 9, 8),
        ("1: y + t", 9, 4),
        ("1: 1e999 * x", 9, 4),
    ],
)
def test_syntax_errors_carry_location(replacement, line, column):
    err = _error(OU_DOC.replace("1: t - x", replacement))
    assert (err.line, err.column) == (line, column)
    assert str(err).startswith(f"line {line}, column {column}:")


def test_structural_errors():
    assert "missing" in str(_error("[meta]\nd = 1\n"))
    assert "section" in str(_error(OU_DOC + "[extras]\n"))
    assert "upper triangle" in str(_error(OU_DOC.replace("d = 1", "d = 2").replace("t - x", "t - x1").replace("11: 1", "21: 1")))
    assert "out of range" in str(_error(OU_DOC.replace("1: t - x", "2: t")))
    assert "duplicate" in str(_error(OU_DOC + "[drift]\n1: x\n"))
    assert "semi-definite" in str(_error(OU_DOC.replace("11: 1", "11: -1")))


def test_multivariate_expressions():
    p = parse_expression("(x1 + 2*x2)^2 - t*x3", 3)
    X = np.array([[1.0, 1.0, 2.0]])
    assert p.evaluate(0.5, X)[0] == pytest.approx(8.0)
    with pytest.raises(SpecError):
        parse_expression("x", 2)


def test_unicode_operators():
    assert parse_expression("2·x − t", 1) == parse_expression("2*x - t", 1)


def test_piecewise_with_state_dependence():
    p = parse_expression("piecewise(x; 0.5: 2*t*x)", 1)
    X = np.array([[3.0]])
    assert p.evaluate(0.25, X)[0] == 3.0 and p.evaluate(0.75, X)[0] == 4.5
    with pytest.raises(SpecError, match="nested"):
        parse_expression("piecewise(piecewise(1; 0.2: 5*t); 0.5: 1)", 1)


@pytest.mark.parametrize("name", CLOSED)
def test_round_trip(name, specs):
    spec = specs[name]
    again = parse_spec(to_document(spec))
    assert again == spec
    assert again.sampler == spec.sampler


@pytest.mark.parametrize(
    "name, params",
    [
        ("bm-drift", {"a": "piecewise(1; 0.5: 2*t)"}),
        ("jacobi", {"a": "0.2 - 0.05*t^2", "b": 3.0}),
        ("jacobi-jumps", {"alpha": 0.3, "kappa": 2.0}),
        ("affine-square", {"A0": 1.0, "A1": -0.5, "A2": 0.25, "a": "1 + t"}),
        ("ou-theta-t", {"theta": -1.0 / 3.0, "m": 6, "T": 2.5}),
    ],
)
def test_round_trip_with_parameters(name, params):
    spec = builtin(name, params)
    assert parse_spec(to_document(spec)) == spec


@pytest.mark.parametrize("name", CLOSED)
def test_builtins_are_degree_closed(name, specs):
    spec = specs[name]
    for t in np.linspace(0.0, spec.T, 7):
        generator_matrix(spec, t, spec.m)


def test_counterexample_overflows():
    spec = builtin("quadratic-drift-counterexample", {"a": "t", "b": 1.0})
    with pytest.raises(DegreeOverflow):
        generator_matrix(spec, 0.5, 2)


def test_bm_drift_matrix_from_builtin():
    H = np.asarray(generator_matrix(builtin("bm-drift", {"a": "t"}), 0.3, 2))
    np.testing.assert_array_equal(H, [[0, 0.3, 1], [0, 0, 0.6], [0, 0, 0]])


def test_jacobi_jumps_intensity_one():
    spec = builtin("jacobi-jumps", {"a": -0.5, "b": -0.1})
    assert isinstance(spec.sampler, JacobiJumpKernel)
    np.testing.assert_array_equal(spec.sampler.intensity(0.0, np.linspace(0, 1, 5)[:, None]), 1.0)


def test_affine_square_drift_and_diffusion():
    A0, A1, A2 = 0.5, 1.5, 0.25
    spec = builtin("affine-square", {"A0": A0, "A1": A1, "A2": A2, "a": "2"})
    X = np.array([[0.4, A0 + A1 * 0.4 + A2 * 0.16]])
    slope = A1 + 2 * A2 * 0.4
    # Ito: dY = (A1 + 2 A2 X) dX + A2 dt
    assert spec.drift[1].evaluate(0.0, X)[0] == pytest.approx(2.0 * slope + A2)
    cov = spec.total_covariance(0.0, X)[0]
    np.testing.assert_allclose(cov, [[1.0, slope], [slope, slope**2]])


@pytest.mark.parametrize(
    "name, params",
    [
        ("jacobi", {"b": 0.0}),
        ("jacobi", {"b": -1.0}),
        ("jacobi-jumps", {"a": -0.1, "b": -0.5}),
        ("jacobi-jumps", {"a": -1.5}),
        ("jacobi-jumps", {"alpha": 1.0}),
        ("ou-theta-t", {"theta": "x"}),
        ("bm-drift", {"a": "x + t"}),
        ("bm-drift", {"m": 3}),
        ("bm-drift", {"sigma": 1.0}),
    ],
)
def test_bad_builtin_parameters(name, params):
    with pytest.raises(SpecError):
        builtin(name, params)


def test_unknown_builtin():
    with pytest.raises(SpecError, match="unknown builtin"):
        builtin("heston")


# -- fuzzing -------------------------------------------------------------------

DOCS = [to_document(builtin(n)) for n in CLOSED] + [OU_DOC]
TOKENS = ["x", "x1", "x2", "t", "(", ")", "^", "*", "+", "-", ":", ";", ",", "=", "[", "]", "1", "0.5",
          "1e308", "99", "piecewise(", "[drift]", "[meta]", "\n", " ", "#", "d", "m", "T", "R+", "box(0, 1)"]


def _mutate(doc, ops):
    pieces = re.findall(r"\w+|\s+|[^\w\s]", doc)
    for kind, pos, tok in ops:
        if not pieces:
            break
        i = pos % len(pieces)
        if kind == 0:
            del pieces[i]
        elif kind == 1:
            pieces.insert(i, tok)
        else:
            pieces[i] = tok
    return "".join(pieces)


@given(
    st.sampled_from(DOCS),
    st.lists(st.tuples(st.integers(0, 2), st.integers(0, 10_000), st.sampled_from(TOKENS)), min_size=1, max_size=6),
)
def test_mutated_documents_fail_only_with_diagnostics(doc, ops):
    text = _mutate(doc, ops)
    try:
        parse_spec(text)
    except SpecError as exc:
        assert exc.line is None or exc.line >= 1
        if exc.line is not None:
            assert exc.column is not None and exc.column >= 1


@given(st.text(max_size=200))
def test_arbitrary_text_fails_only_with_diagnostics(text):
    try:
        parse_spec(text)
    except SpecError:
        pass


@given(st.text(alphabet="xt0123456789.+-*^() ;:e", max_size=40))
def test_arbitrary_expressions(text):
    try:
        parse_expression(text, 1)
    except SpecError:
        pass
