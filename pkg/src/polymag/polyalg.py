"""Graded monomial bases and dense polynomial arithmetic on R^d.

Multi-indices are plain tuples of non-negative ints.  A :class:`MonomialBasis`
lists every multi-index of total degree at most ``m`` in graded order
(degree ascending, ties broken lexicographically with ``x1`` first), so the
degree-``k`` basis is always a prefix of the degree-``m`` basis for ``k <= m``.
"""
from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .errors import DegreeOverflow

MultiIndex = tuple[int, ...]

#: degree of the zero polynomial
ZERO_DEGREE = -math.inf


def index_degree(k: MultiIndex) -> int:
    return sum(k)


def index_factorial(k: MultiIndex) -> int:
    """Exact ``k! = k_1! ... k_d!``."""
    return math.prod(math.factorial(ki) for ki in k)


def unit_index(d: int, i: int) -> MultiIndex:
    return tuple(1 if j == i else 0 for j in range(d))


def as_multi_index(k, d: int | None = None) -> MultiIndex:
    k = tuple(int(ki) for ki in np.atleast_1d(k))
    if any(ki < 0 for ki in k):
        raise ValueError(f"multi-index entries must be non-negative, got {k}")
    if d is not None and len(k) != d:
        raise ValueError(f"multi-index {k} has length {len(k)}, expected {d}")
    return k


def _graded_key(k: MultiIndex):
    return (sum(k), tuple(-ki for ki in k))


class MonomialBasis:
    """Ordered basis ``{x^k : |k| <= m}`` of polynomials on R^d.

    Instances are immutable and cached per ``(d, m)``; build them with
    :func:`enumerate_basis`.
    """

    __slots__ = ("d", "m", "order", "_index", "exponents", "degrees")

    def __init__(self, d: int, m: int, order: tuple[MultiIndex, ...]):
        self.d = d
        self.m = m
        self.order = order
        self._index = {k: i for i, k in enumerate(order)}
        self.exponents = np.array(order, dtype=np.int64).reshape(len(order), d)
        self.exponents.setflags(write=False)
        self.degrees = self.exponents.sum(axis=1)
        self.degrees.setflags(write=False)

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self):
        return iter(self.order)

    def __getitem__(self, i: int) -> MultiIndex:
        return self.order[i]

    def __contains__(self, k) -> bool:
        return k in self._index

    def __repr__(self) -> str:
        return f"MonomialBasis(d={self.d}, m={self.m}, N={len(self)})"

    def __eq__(self, other) -> bool:
        return isinstance(other, MonomialBasis) and (self.d, self.m) == (other.d, other.m)

    def __hash__(self) -> int:
        return hash((MonomialBasis, self.d, self.m))

    def __reduce__(self):
        return (enumerate_basis, (self.d, self.m))

    @property
    def N(self) -> int:
        return len(self.order)

    def index(self, k: MultiIndex) -> int:
        try:
            return self._index[tuple(k)]
        except KeyError:
            raise KeyError(f"multi-index {tuple(k)} not in {self!r}") from None

    def prefix(self, k: int) -> "MonomialBasis":
        """The degree-``k`` basis; its order is a prefix of this one."""
        if k > self.m:
            raise ValueError(f"degree {k} exceeds basis degree {self.m}")
        return enumerate_basis(self.d, k)

    def monomials(self, x) -> np.ndarray:
        """Evaluate every basis monomial at ``x``.

        ``x`` of shape ``(d,)`` gives shape ``(N,)``; shape ``(n, d)`` gives
        ``(n, N)``.
        """
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.d,):
            raise ValueError(f"point has shape {x.shape}, expected trailing dimension {self.d}")
        out = np.ones(x.shape[:-1] + (self.N,))
        for i in range(self.d):
            powers = x[..., i, None] ** np.arange(self.m + 1)
            out *= powers[..., self.exponents[:, i]]
        return out


@lru_cache(maxsize=None)
def enumerate_basis(d: int, m: int) -> MonomialBasis:
    """All multi-indices of ``d`` variables with degree at most ``m``, graded order.

    >>> enumerate_basis(2, 1).order
    ((0, 0), (1, 0), (0, 1))
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if m < 0:
        raise ValueError(f"degree must be >= 0, got {m}")
    order = [k for k in itertools.product(range(m + 1), repeat=d) if sum(k) <= m]
    order.sort(key=_graded_key)
    return MonomialBasis(d, m, tuple(order))


class Polynomial:
    """Dense coefficient vector over a :class:`MonomialBasis`.

    Supports ``+``, ``-``, scalar ``*`` and evaluation via ``p(x)``.  Sums of
    polynomials on bases of different degree are promoted to the larger basis.
    """

    __slots__ = ("basis", "coeffs")

    def __init__(self, basis: MonomialBasis, coeffs):
        coeffs = np.array(coeffs, dtype=float)
        if coeffs.shape != (basis.N,):
            raise ValueError(f"expected {basis.N} coefficients, got shape {coeffs.shape}")
        coeffs.setflags(write=False)
        self.basis = basis
        self.coeffs = coeffs

    @classmethod
    def from_terms(cls, basis: MonomialBasis, terms: Mapping[MultiIndex, float]) -> "Polynomial":
        c = np.zeros(basis.N)
        for k, v in terms.items():
            c[basis.index(tuple(k))] += v
        return cls(basis, c)

    @classmethod
    def zero(cls, basis: MonomialBasis) -> "Polynomial":
        return cls(basis, np.zeros(basis.N))

    @classmethod
    def monomial(cls, basis: MonomialBasis, k: MultiIndex, c: float = 1.0) -> "Polynomial":
        return cls.from_terms(basis, {tuple(k): c})

    @property
    def d(self) -> int:
        return self.basis.d

    @property
    def degree(self):
        nz = np.nonzero(self.coeffs)[0]
        if nz.size == 0:
            return ZERO_DEGREE
        return int(self.basis.degrees[nz].max())

    def terms(self) -> dict[MultiIndex, float]:
        return {self.basis[i]: float(self.coeffs[i]) for i in np.nonzero(self.coeffs)[0]}

    def norm(self) -> float:
        """Max-abs coefficient; on R^d this is the infimum norm over representations."""
        return float(np.abs(self.coeffs).max(initial=0.0))

    def lift(self, basis: MonomialBasis) -> "Polynomial":
        """Re-express on another basis of the same dimension."""
        if basis.d != self.d:
            raise ValueError(f"cannot move a {self.d}-variate polynomial to {basis!r}")
        if basis.m >= self.basis.m:
            c = np.zeros(basis.N)
            c[: self.basis.N] = self.coeffs
            return Polynomial(basis, c)
        if self.degree > basis.m:
            raise DegreeOverflow(f"degree {self.degree} does not fit in {basis!r}")
        return Polynomial(basis, self.coeffs[: basis.N])

    def __call__(self, x):
        return self.basis.monomials(x) @ self.coeffs

    def _promote(self, other: "Polynomial"):
        if not isinstance(other, Polynomial):
            return NotImplemented
        if other.d != self.d:
            raise ValueError(f"dimension mismatch: {self.d} vs {other.d}")
        basis = self.basis if self.basis.m >= other.basis.m else other.basis
        return self.lift(basis), other.lift(basis)

    def __add__(self, other):
        pair = self._promote(other)
        if pair is NotImplemented:
            return pair
        a, b = pair
        return Polynomial(a.basis, a.coeffs + b.coeffs)

    def __sub__(self, other):
        pair = self._promote(other)
        if pair is NotImplemented:
            return pair
        a, b = pair
        return Polynomial(a.basis, a.coeffs - b.coeffs)

    def __neg__(self):
        return Polynomial(self.basis, -self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, Polynomial):
            return NotImplemented
        return Polynomial(self.basis, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial) or other.d != self.d:
            return NotImplemented
        a, b = self._promote(other)
        return bool(np.array_equal(a.coeffs, b.coeffs))

    __hash__ = None

    def __repr__(self) -> str:
        terms = self.terms()
        if not terms:
            return "Polynomial(0)"
        return "Polynomial(" + " + ".join(f"{v!r}*x^{k}" for k, v in terms.items()) + ")"


def evaluate(p: Polynomial, x) -> float:
    """``sum_k alpha_k x^k`` at a single point ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.d,):
        raise ValueError(f"point has shape {x.shape}, expected ({p.d},)")
    return float(p(x))


def multiply(p: Polynomial, q: Polynomial, target_m: int) -> Polynomial:
    """Exact product of ``p`` and ``q`` on the degree-``target_m`` basis.

    Raises :class:`DegreeOverflow` if a coefficient above ``target_m`` survives.
    """
    if p.d != q.d:
        raise ValueError(f"dimension mismatch: {p.d} vs {q.d}")
    basis = enumerate_basis(p.d, target_m)
    out = np.zeros(basis.N)
    overflow: dict[MultiIndex, float] = {}
    for kp, cp in p.terms().items():
        for kq, cq in q.terms().items():
            k = tuple(a + b for a, b in zip(kp, kq))
            if sum(k) > target_m:
                overflow[k] = overflow.get(k, 0.0) + cp * cq
            else:
                out[basis.index(k)] += cp * cq
    bad = {k: v for k, v in overflow.items() if v != 0.0}
    if bad:
        k = max(bad, key=sum)
        raise DegreeOverflow(f"product has nonzero coefficient at x^{k}, degree {sum(k)} > {target_m}")
    return Polynomial(basis, out)


def partial_derivative(p: Polynomial, i: int) -> Polynomial:
    """Exact derivative with respect to coordinate ``i`` (0-based)."""
    if not 0 <= i < p.d:
        raise IndexError(f"coordinate {i} out of range for d={p.d}")
    basis = p.basis
    out = np.zeros(basis.N)
    for j in np.nonzero(p.coeffs)[0]:
        k = basis[j]
        if k[i] == 0:
            continue
        kk = k[:i] + (k[i] - 1,) + k[i + 1:]
        out[basis.index(kk)] += k[i] * p.coeffs[j]
    return Polynomial(basis, out)


def derivative(p: Polynomial, orders: MultiIndex) -> Polynomial:
    """``D^l p`` by iterating :func:`partial_derivative`."""
    for i, n in enumerate(orders):
        for _ in range(n):
            p = partial_derivative(p, i)
    return p


def basis_polynomials(basis: MonomialBasis) -> Iterable[Polynomial]:
    for k in basis:
        yield Polynomial.monomial(basis, k)
