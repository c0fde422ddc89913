"""Built-in process catalog.

Each builtin takes a parameter map whose values may be numbers or, for
time coefficients, expression strings such as ``"0.3 + 0.1*t"`` or
``"piecewise(1; 0.5: 2*t)"``.  ``m`` and ``T`` are accepted by every entry
(defaults 4 and 1).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..errors import SpecError
from ..genmat import ProcessSpec, StateSpace, build_spec, validate_spec
from ..kernels import JacobiJumpKernel
from ..timefuncs import T_IDENTITY, TimeCoefficient, TimePoly
from .parser import parse_time_coefficient

DEFAULT_M = 4
DEFAULT_T = 1.0


@dataclass(frozen=True)
class Builtin:
    name: str
    factory: Callable[..., ProcessSpec]
    defaults: dict
    summary: str
    # (s, t, x) used by the validation suite and the Monte Carlo cross-check
    check_point: Callable[[dict], tuple[float, float, tuple[float, ...]]]
    closed: bool = True


BUILTINS: dict[str, Builtin] = {}


def _coef(name, value) -> TimeCoefficient:
    if isinstance(value, TimeCoefficient):
        return value
    if isinstance(value, str):
        try:
            return TimeCoefficient.constant(float(value))
        except ValueError:
            pass
        try:
            return parse_time_coefficient(value)
        except SpecError as exc:
            raise SpecError(f"parameter {name}: {exc}") from None
    try:
        return TimeCoefficient.constant(float(value))
    except (TypeError, ValueError):
        raise SpecError(f"parameter {name} must be a number or a time expression, got {value!r}") from None


def _num(name, value) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise SpecError(f"parameter {name} must be a number, got {value!r}") from None


def _register(name, defaults, summary, check_point, closed=True):
    def deco(fn):
        BUILTINS[name] = Builtin(name, fn, defaults, summary, check_point, closed)
        return fn

    return deco


def _x(d=1, i=0):
    return TimePoly.variable(d, i)


def _c(d, v):
    return TimePoly.constant(d, v)


@_register("bm-drift", {"a": T_IDENTITY}, "Brownian motion with drift a(t)", lambda p: (0.0, 1.0, (0.0,)))
def _bm_drift(a, m, T):
    return build_spec(1, m, T, [_c(1, _coef("a", a))], [[1.0]], name="bm-drift")


@_register("ou-theta-t", {"theta": 1.0}, "OU process with drift theta*t - x", lambda p: (0.0, 1.0, (0.5,)))
def _ou_theta_t(theta, m, T):
    theta = _num("theta", theta)
    drift = _c(1, T_IDENTITY * theta) - _x()
    return build_spec(1, m, T, [drift], [[1.0]], name="ou-theta-t")


@_register("ou-tx", {}, "linear drift t*x, unit diffusion; non-commuting generators", lambda p: (0.0, 1.0, (0.5,)))
def _ou_tx(m, T):
    drift = _c(1, T_IDENTITY) * _x()
    return build_spec(1, m, T, [drift], [[1.0]], name="ou-tx")


def _jacobi_point(p):
    return (0.0, 0.25, (0.3 * _num("b", p["b"]),))


@_register("jacobi", {"a": "0.3 + 0.1*t", "b": 1.0}, "Jacobi diffusion on [0, b] with drift a(t)", _jacobi_point)
def _jacobi(a, b, m, T):
    b = _num("b", b)
    if not b > 0:
        raise SpecError(f"jacobi needs b > 0, got {b}")
    x = _x()
    return build_spec(
        1, m, T, [_c(1, _coef("a", a))], [[x * (b - x)]],
        state_space=StateSpace.box(1, 0.0, b), name="jacobi",
    )


@_register(
    "jacobi-jumps",
    {"kappa": 1.0, "theta": 0.5, "a": -0.5, "b": -0.1, "alpha": None},
    "Jacobi process on [0, 1] with log-uniform proportional jumps",
    lambda p: (0.0, 1.0, (0.5,)),
)
def _jacobi_jumps(kappa, theta, a, b, alpha, m, T):
    kappa, theta = _num("kappa", kappa), _num("theta", theta)
    kernel = JacobiJumpKernel(_num("a", a), _num("b", b), None if alpha is None else _num("alpha", alpha))
    x = _x()
    return build_spec(
        1, m, T, [kappa * (theta - x)], [[x * (1.0 - x)]],
        jump_moments=kernel.moment_polys(m), state_space=StateSpace.box(1, 0.0, 1.0),
        sampler=kernel, name="jacobi-jumps",
    )


def _affine_point(p):
    A0, A1, A2 = (_num(k, p[k]) for k in ("A0", "A1", "A2"))
    x = 0.5
    return (0.0, 1.0, (x, A0 + A1 * x + A2 * x * x))


@_register(
    "affine-square",
    {"A0": 0.0, "A1": 1.0, "A2": 0.5, "a": T_IDENTITY},
    "(X, Y = A0 + A1 X + A2 X^2) for dX = a(t) dt + dW; polynomial but not affine",
    _affine_point,
)
def _affine_square(A0, A1, A2, a, m, T):
    # A0 only enters through the initial condition of Y.
    _num("A0", A0)
    A1, A2 = _num("A1", A1), _num("A2", A2)
    a = _c(2, _coef("a", a))
    X = _x(2, 0)
    slope = A1 + 2.0 * A2 * X
    drift_y = a * slope + A2
    return build_spec(
        2, m, T, [a, drift_y], [[1.0, slope], [slope, slope * slope]], name="affine-square",
    )


@_register(
    "quadratic-drift-counterexample",
    {"a": 0.0, "b": 0.0},
    "drift a(t) + b(t) x + x^2; not degree-preserving",
    lambda p: (0.0, 1.0, (0.0,)),
    closed=False,
)
def _quadratic(a, b, m, T):
    x = _x()
    drift = _c(1, _coef("a", a)) + _c(1, _coef("b", b)) * x + x * x
    return build_spec(1, m, T, [drift], [[1.0]], name="quadratic-drift-counterexample")


def _resolve(name: str, params: dict | None) -> tuple[Builtin, dict]:
    try:
        entry = BUILTINS[name]
    except KeyError:
        raise SpecError(f"unknown builtin {name!r}; known: {', '.join(sorted(BUILTINS))}") from None
    merged = dict(entry.defaults)
    merged.update({"m": DEFAULT_M, "T": DEFAULT_T})
    for k, v in (params or {}).items():
        if k not in merged:
            allowed = ", ".join(sorted(merged))
            raise SpecError(f"unknown parameter {k!r} for builtin {name!r}; allowed: {allowed}")
        merged[k] = v
    return entry, merged


def builtin(name: str, params: dict | None = None) -> ProcessSpec:
    """Construct a catalog process.

    Closed builtins are validated (degree bounds and sampled positive
    semi-definiteness); the quadratic-drift counterexample is returned as is.
    """
    entry, p = _resolve(name, params)
    m = p.pop("m")
    try:
        m = int(m)
    except (TypeError, ValueError):
        raise SpecError(f"parameter m must be an integer, got {m!r}") from None
    p["m"] = m
    p["T"] = _num("T", p["T"])
    spec = entry.factory(**p)
    if entry.closed:
        validate_spec(spec)
    return spec


def check_point(name: str, params: dict | None = None) -> tuple[float, float, tuple[float, ...]]:
    """Default ``(s, t, x)`` for validating a builtin."""
    entry, p = _resolve(name, params)
    return entry.check_point(p)
