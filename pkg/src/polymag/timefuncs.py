"""Continuous piecewise-polynomial functions of time, and polynomials in x over them.

:class:`TimeCoefficient` is the only kind of time dependence a process
specification may carry.  :class:`TimePoly` is a polynomial in the state
``x`` whose coefficients are :class:`TimeCoefficient` objects; drift,
diffusion and jump-moment entries are all ``TimePoly``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import SpecError
from .polyalg import (
    ZERO_DEGREE,
    MultiIndex,
    Polynomial,
    _graded_key,
    enumerate_basis,
    unit_index,
)

CONTINUITY_RTOL = 1e-12


def _trim(c) -> tuple[float, ...]:
    c = [float(v) for v in c]
    while c and c[-1] == 0.0:
        c.pop()
    return tuple(c)


def _format_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return repr(float(v)).removesuffix(".0") if v != 0 else "0"
    return repr(float(v))


def _format_poly(coeffs: Sequence[float], var: str = "t") -> str:
    parts = []
    for p, c in enumerate(coeffs):
        if c == 0.0:
            continue
        mag = _format_number(abs(c))
        if p == 0:
            term = mag
        else:
            mono = var if p == 1 else f"{var}^{p}"
            term = mono if mag == "1" else f"{mag}*{mono}"
        sign = "-" if c < 0 else "+"
        parts.append((sign, term))
    if not parts:
        return "0"
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, term in parts[1:]:
        out += f" {sign} {term}"
    return out


@dataclass(frozen=True)
class TimeCoefficient:
    """Continuous function of ``t`` that is polynomial between breakpoints.

    ``pieces[j]`` holds ascending power coefficients in ``t`` (not in
    ``t - breakpoint``) valid on ``[breakpoints[j-1], breakpoints[j])``; the
    first and last pieces extend to -inf and +inf.
    """

    pieces: tuple[tuple[float, ...], ...] = ((),)
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.pieces) != len(self.breakpoints) + 1:
            raise ValueError("need exactly one more piece than breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError(f"breakpoints must be strictly increasing: {self.breakpoints}")

    @classmethod
    def constant(cls, c: float) -> "TimeCoefficient":
        return cls(((_trim([c])),))

    @classmethod
    def polynomial(cls, coeffs: Sequence[float]) -> "TimeCoefficient":
        return cls((_trim(coeffs),))

    @classmethod
    def piecewise(
        cls, breakpoints: Sequence[float], pieces: Sequence[Sequence[float]]
    ) -> "TimeCoefficient":
        """Build from ascending power coefficients per segment and check continuity."""
        tc = cls(tuple(_trim(p) for p in pieces), tuple(float(b) for b in breakpoints))
        tc.check_continuity()
        return tc._canonical()

    @classmethod
    def coerce(cls, value) -> "TimeCoefficient":
        if isinstance(value, TimeCoefficient):
            return value
        if callable(value):
            raise TypeError("time coefficients must be polynomial or piecewise-polynomial, not callables")
        return cls.constant(float(value))

    def check_continuity(self) -> None:
        for j, b in enumerate(self.breakpoints):
            left = float(npoly.polyval(b, self.pieces[j] or (0.0,)))
            right = float(npoly.polyval(b, self.pieces[j + 1] or (0.0,)))
            if abs(left - right) > CONTINUITY_RTOL * max(1.0, abs(left), abs(right)):
                raise SpecError(
                    f"piecewise coefficient is discontinuous at t={b}: {left!r} vs {right!r}"
                )

    def _canonical(self) -> "TimeCoefficient":
        pieces = [self.pieces[0]]
        breaks = []
        for b, p in zip(self.breakpoints, self.pieces[1:]):
            if p == pieces[-1]:
                continue
            breaks.append(b)
            pieces.append(p)
        return TimeCoefficient(tuple(pieces), tuple(breaks))

    @property
    def is_zero(self) -> bool:
        return all(len(p) == 0 for p in self.pieces)

    @property
    def is_constant(self) -> bool:
        return not self.breakpoints and len(self.pieces[0]) <= 1

    @property
    def degree(self) -> int:
        return max(len(p) for p in self.pieces) - 1

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if not self.breakpoints:
            out = npoly.polyval(t_arr, self.pieces[0] or (0.0,))
            return out if t_arr.ndim else float(out)
        seg = np.searchsorted(self.breakpoints, t_arr, side="right")
        out = np.zeros(t_arr.shape)
        for j, p in enumerate(self.pieces):
            mask = seg == j
            if p and np.any(mask):
                out[mask] = npoly.polyval(t_arr[mask], p)
        return out if t_arr.ndim else float(out)

    def _antiderivative_pieces(self):
        """Per-piece antiderivatives, shifted so the result is continuous."""
        anti = [npoly.polyint(p) if p else np.zeros(1) for p in self.pieces]
        offsets = [0.0]
        for j, b in enumerate(self.breakpoints):
            jump = npoly.polyval(b, anti[j]) + offsets[j] - npoly.polyval(b, anti[j + 1])
            offsets.append(jump)
        return anti, offsets

    def integral(self, s: float, t: float) -> float:
        """Exact ``int_s^t f(u) du``."""
        anti, offsets = self._antiderivative_pieces()

        def F(u):
            j = int(np.searchsorted(self.breakpoints, u, side="right"))
            return npoly.polyval(u, anti[j]) + offsets[j]

        return float(F(t) - F(s))

    def _refine(self, breaks: tuple[float, ...]) -> list[tuple[float, ...]]:
        """Pieces of ``self`` on the segments of a finer breakpoint grid."""
        edges = np.concatenate(([-np.inf], breaks, [np.inf]))
        out = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            if np.isinf(lo) and np.isinf(hi):
                probe = 0.0
            elif np.isinf(lo):
                probe = hi - 1.0
            elif np.isinf(hi):
                probe = lo + 1.0
            else:
                probe = 0.5 * (lo + hi)
            j = int(np.searchsorted(self.breakpoints, probe, side="right"))
            out.append(self.pieces[j])
        return out

    def _binary(self, other, op) -> "TimeCoefficient":
        other = TimeCoefficient.coerce(other)
        breaks = tuple(sorted(set(self.breakpoints) | set(other.breakpoints)))
        a = self._refine(breaks)
        b = other._refine(breaks)
        pieces = tuple(_trim(op(np.array(p or (0.0,)), np.array(q or (0.0,)))) for p, q in zip(a, b))
        return TimeCoefficient(pieces, breaks)._canonical()

    def __add__(self, other):
        return self._binary(other, npoly.polyadd)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, npoly.polysub)

    def __rsub__(self, other):
        return TimeCoefficient.coerce(other) - self

    def __mul__(self, other):
        return self._binary(other, npoly.polymul)

    __rmul__ = __mul__

    def __neg__(self):
        return TimeCoefficient(tuple(tuple(-v for v in p) for p in self.pieces), self.breakpoints)

    def to_expr(self) -> str:
        if not self.breakpoints:
            return _format_poly(self.pieces[0])
        parts = [_format_poly(self.pieces[0])]
        for b, p in zip(self.breakpoints, self.pieces[1:]):
            parts.append(f"{_format_number(b)}: {_format_poly(p)}")
        return "piecewise(" + "; ".join(parts) + ")"

    def __str__(self) -> str:
        return self.to_expr()


ZERO = TimeCoefficient.constant(0.0)
ONE = TimeCoefficient.constant(1.0)
T_IDENTITY = TimeCoefficient.polynomial([0.0, 1.0])


@dataclass(frozen=True)
class TimePoly:
    """Polynomial in ``x`` (``d`` variables) with time-dependent coefficients."""

    d: int
    terms: tuple[tuple[MultiIndex, TimeCoefficient], ...] = field(default=())

    @classmethod
    def from_dict(cls, d: int, terms: Mapping[MultiIndex, object]) -> "TimePoly":
        acc: dict[MultiIndex, TimeCoefficient] = {}
        for k, c in terms.items():
            k = tuple(int(v) for v in k)
            if len(k) != d or any(v < 0 for v in k):
                raise SpecError(f"bad exponent {k} for d={d}")
            c = TimeCoefficient.coerce(c)
            acc[k] = acc[k] + c if k in acc else c
        items = sorted(((k, c) for k, c in acc.items() if not c.is_zero), key=lambda kc: _graded_key(kc[0]))
        return cls(d, tuple(items))

    @classmethod
    def constant(cls, d: int, c) -> "TimePoly":
        return cls.from_dict(d, {(0,) * d: c})

    @classmethod
    def variable(cls, d: int, i: int) -> "TimePoly":
        return cls.from_dict(d, {unit_index(d, i): ONE})

    def as_dict(self) -> dict[MultiIndex, TimeCoefficient]:
        return dict(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def degree(self):
        return max((sum(k) for k, _ in self.terms), default=ZERO_DEGREE)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return tuple(sorted({b for _, c in self.terms for b in c.breakpoints}))

    def at(self, t: float, m: int | None = None) -> Polynomial:
        """Freeze time; the result lives on the degree-``m`` basis (default: own degree)."""
        if m is None:
            m = max(int(self.degree), 0) if self.terms else 0
        basis = enumerate_basis(self.d, m)
        return Polynomial.from_terms(basis, {k: c(t) for k, c in self.terms})

    def evaluate(self, t: float, X) -> np.ndarray:
        """Values at time ``t`` for states ``X`` of shape ``(n, d)``."""
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[:-1])
        for k, c in self.terms:
            v = c(t)
            if v == 0.0:
                continue
            term = np.full(X.shape[:-1], v)
            for i, ki in enumerate(k):
                if ki:
                    term = term * X[..., i] ** ki
            out += term
        return out

    def _coerce(self, other) -> "TimePoly":
        if isinstance(other, TimePoly):
            if other.d != self.d:
                raise SpecError(f"dimension mismatch {self.d} vs {other.d}")
            return other
        return TimePoly.constant(self.d, other)

    def __add__(self, other):
        other = self._coerce(other)
        acc = self.as_dict()
        for k, c in other.terms:
            acc[k] = acc[k] + c if k in acc else c
        return TimePoly.from_dict(self.d, acc)

    __radd__ = __add__

    def __neg__(self):
        return TimePoly(self.d, tuple((k, -c) for k, c in self.terms))

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        acc: dict[MultiIndex, TimeCoefficient] = {}
        for k1, c1 in self.terms:
            for k2, c2 in other.terms:
                k = tuple(a + b for a, b in zip(k1, k2))
                c = c1 * c2
                acc[k] = acc[k] + c if k in acc else c
        return TimePoly.from_dict(self.d, acc)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise SpecError(f"only non-negative integer powers are allowed, got {n!r}")
        out = TimePoly.constant(self.d, 1.0)
        for _ in range(n):
            out = out * self
        return out

    def x_free(self) -> bool:
        return all(sum(k) == 0 for k, _ in self.terms)

    def to_expr(self, names: Sequence[str] | None = None) -> str:
        if names is None:
            names = ["x"] if self.d == 1 else [f"x{i + 1}" for i in range(self.d)]
        if not self.terms:
            return "0"
        parts = []
        for k, c in self.terms:
            mono = "*".join(
                names[i] if ki == 1 else f"{names[i]}^{ki}" for i, ki in enumerate(k) if ki
            )
            cexpr = c.to_expr()
            if not mono:
                parts.append(f"({cexpr})" if (" " in cexpr and not cexpr.startswith("piecewise")) else cexpr)
            elif cexpr in ("1", "-1"):
                parts.append(cexpr[:-1] + mono)
            elif " " in cexpr:
                parts.append(f"({cexpr})*{mono}")
            else:
                parts.append(f"{cexpr}*{mono}")
        return " + ".join(parts).replace(" + -", " - ")
