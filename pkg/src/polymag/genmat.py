"""Process specifications and the representing matrix of their generator.

For a polynomial jump-diffusion with characteristics ``(b, c, K)`` the
generator acts on a polynomial ``f`` as

    G_t f = sum_i D_i f b^i + 1/2 sum_ij D_ij f c^ij
            + sum_{2 <= |l| <= deg f} D^l f / l! * int xi^l K_t(., d xi)

and maps the degree-``k`` polynomials into themselves.  Its matrix on the
graded monomial basis (column ``j`` = coefficients of ``G_t v_j``) is what
the Kolmogorov forward equation propagates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import DegreeOverflow, SpecError
from .kernels import JumpKernelSampler
from .linalg import commutator, spectral_norms
from .polyalg import (
    MonomialBasis,
    MultiIndex,
    Polynomial,
    as_multi_index,
    derivative,
    enumerate_basis,
    index_factorial,
    multiply,
    partial_derivative,
    unit_index,
)
from .timefuncs import TimeCoefficient, TimePoly

MAX_DEGREE = 12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class StateSpace:
    """One of ``R^d``, ``R_+^p x R^(d-p)`` or the box ``[lower, upper]^d``."""

    kind: str
    d: int
    p: int = 0
    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self):
        if self.kind not in ("R", "R+", "box"):
            raise SpecError(f"unknown state space kind {self.kind!r}")
        if self.kind == "R+" and not 1 <= self.p <= self.d:
            raise SpecError(f"R+^p needs 1 <= p <= d, got p={self.p}, d={self.d}")
        if self.kind == "box" and not self.lower < self.upper:
            raise SpecError(f"box needs lower < upper, got [{self.lower}, {self.upper}]")

    @classmethod
    def reals(cls, d: int) -> "StateSpace":
        return cls("R", d)

    @classmethod
    def positive(cls, d: int, p: int | None = None) -> "StateSpace":
        return cls("R+", d, p=d if p is None else p)

    @classmethod
    def box(cls, d: int, lower: float, upper: float) -> "StateSpace":
        return cls("box", d, lower=float(lower), upper=float(upper))

    def contains(self, X, tol: float = 0.0) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "R":
            return np.all(np.isfinite(X), axis=1)
        if self.kind == "R+":
            return np.all(X[:, : self.p] >= -tol, axis=1) & np.all(np.isfinite(X), axis=1)
        return np.all((X >= self.lower - tol) & (X <= self.upper + tol), axis=1)

    def project(self, X: np.ndarray) -> np.ndarray:
        if self.kind == "R":
            return X
        if self.kind == "R+":
            X = X.copy()
            X[:, : self.p] = np.maximum(X[:, : self.p], 0.0)
            return X
        return np.clip(X, self.lower, self.upper)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "box":
            return rng.uniform(self.lower, self.upper, size=(n, self.d))
        X = rng.normal(scale=2.0, size=(n, self.d))
        if self.kind == "R+":
            X[:, : self.p] = rng.exponential(2.0, size=(n, self.p))
        return X

    def to_text(self) -> str:
        if self.kind == "R":
            return "R"
        if self.kind == "R+":
            return f"R+^{self.p}"
        return f"box({self.lower!r}, {self.upper!r})"


def _as_timepoly(d: int, v) -> TimePoly:
    if isinstance(v, TimePoly):
        if v.d != d:
            raise SpecError(f"coefficient has d={v.d}, expected {d}")
        return v
    return TimePoly.constant(d, v)


@dataclass(frozen=True)
class ProcessSpec:
    """Time-dependent polynomial characteristics of a jump-diffusion.

    ``drift[i]`` is ``b^i(t, x)``, ``diffusion[i][j]`` is ``c^ij(t, x)`` and
    ``jump_moments`` maps a multi-index ``l`` (``2 <= |l| <= m``) to the
    polynomial ``x -> int xi^l K_t(x, d xi)``.  Missing moments are zero.

    Structural invariants are enforced on construction; degree bounds and
    positive semi-definiteness are checked by :func:`validate_spec`, because
    non-closed specs are useful as counterexamples.
    """

    d: int
    m: int
    T: float
    drift: tuple[TimePoly, ...]
    diffusion: tuple[tuple[TimePoly, ...], ...]
    jump_moments: tuple[tuple[MultiIndex, TimePoly], ...] = ()
    state_space: StateSpace | None = None
    sampler: JumpKernelSampler | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        d = self.d
        if d < 1:
            raise SpecError(f"dimension must be >= 1, got {d}")
        if self.m < 2 or self.m % 2:
            raise SpecError(f"moment degree bound m must be even and >= 2, got {self.m}")
        if self.m > MAX_DEGREE:
            raise SpecError(f"moment degree bound m={self.m} exceeds the supported {MAX_DEGREE}")
        if not self.T > 0:
            raise SpecError(f"horizon T must be positive, got {self.T}")
        drift = tuple(_as_timepoly(d, b) for b in self.drift)
        if len(drift) != d:
            raise SpecError(f"need {d} drift entries, got {len(drift)}")
        diffusion = tuple(tuple(_as_timepoly(d, c) for c in row) for row in self.diffusion)
        if len(diffusion) != d or any(len(row) != d for row in diffusion):
            raise SpecError(f"diffusion must be {d}x{d}")
        for i in range(d):
            for j in range(i):
                if diffusion[i][j] != diffusion[j][i]:
                    raise SpecError(f"diffusion not symmetric at ({i + 1},{j + 1})")
        raw = self.jump_moments.items() if isinstance(self.jump_moments, Mapping) else self.jump_moments
        moments: dict[MultiIndex, TimePoly] = {}
        for l, poly in raw:
            l = as_multi_index(l, d)
            if not 2 <= sum(l) <= self.m:
                raise SpecError(f"jump moment index {l} must have 2 <= |l| <= m={self.m}")
            if l in moments:
                raise SpecError(f"duplicate jump moment {l}")
            poly = _as_timepoly(d, poly)
            if not poly.is_zero:
                moments[l] = poly
        jm = tuple(sorted(moments.items(), key=lambda kv: (sum(kv[0]), tuple(-v for v in kv[0]))))
        ss = self.state_space or StateSpace.reals(d)
        if ss.d != d:
            raise SpecError(f"state space dimension {ss.d} != {d}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "drift", drift)
        object.__setattr__(self, "diffusion", diffusion)
        object.__setattr__(self, "jump_moments", jm)
        object.__setattr__(self, "state_space", ss)

    @property
    def jump_moment_map(self) -> dict[MultiIndex, TimePoly]:
        return dict(self.jump_moments)

    @property
    def has_jumps(self) -> bool:
        return bool(self.jump_moments)

    def basis(self, k: int | None = None) -> MonomialBasis:
        return enumerate_basis(self.d, self.m if k is None else k)

    def coefficient_functions(self) -> list[TimeCoefficient]:
        out = [c for b in self.drift for _, c in b.terms]
        out += [c for row in self.diffusion for e in row for _, c in e.terms]
        out += [c for _, p in self.jump_moments for _, c in p.terms]
        return out

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """All time breakpoints of all coefficients inside ``(0, T)``."""
        pts = {b for c in self.coefficient_functions() for b in c.breakpoints}
        return tuple(sorted(b for b in pts if 0.0 < b < self.T))

    def total_covariance(self, t: float, X) -> np.ndarray:
        """``a^ij = c^ij + int xi_i xi_j K``, shape ``(n, d, d)``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d = self.d
        out = np.empty((X.shape[0], d, d))
        jm = self.jump_moment_map
        for i in range(d):
            for j in range(d):
                v = self.diffusion[i][j].evaluate(t, X)
                l = tuple(a + b for a, b in zip(unit_index(d, i), unit_index(d, j)))
                if l in jm:
                    v = v + jm[l].evaluate(t, X)
                out[:, i, j] = v
        return out


def check_time(spec: ProcessSpec, t: float) -> float:
    """Times live in ``[0, T]``; ``T`` itself is reached by continuous extension."""
    t = float(t)
    if not 0.0 <= t <= spec.T:
        raise ValueError(f"time {t} outside [0, {spec.T}]")
    return t


def validate_spec(spec: ProcessSpec, *, n_samples: int = 64, seed: int = 0) -> None:
    """Degree bounds and sampled positive semi-definiteness of ``a(t, x)``.

    Raises :class:`SpecError` on the first violation.
    """
    for i, b in enumerate(spec.drift):
        if b.degree > 1:
            raise SpecError(f"drift {i + 1} has degree {b.degree} in x, at most 1 allowed")
    for i, row in enumerate(spec.diffusion):
        for j, c in enumerate(row):
            if c.degree > 2:
                raise SpecError(f"diffusion {i + 1}{j + 1} has degree {c.degree} in x, at most 2 allowed")
    for l, p in spec.jump_moments:
        if p.degree > sum(l):
            raise SpecError(f"jump moment {l} has degree {p.degree} in x, at most {sum(l)} allowed")
    rng = np.random.default_rng(seed)
    X = spec.state_space.sample(rng, n_samples)
    ts = rng.uniform(0.0, spec.T, size=n_samples)
    for t, x in zip(ts, X):
        a = spec.total_covariance(t, x[None])[0]
        lam = np.linalg.eigvalsh(0.5 * (a + a.T))
        if lam[0] < -PSD_TOL * max(1.0, abs(lam[-1])):
            raise SpecError(
                f"a(t, x) = c + jump covariance is not positive semi-definite at t={t:.6g}, "
                f"x={x.tolist()} (smallest eigenvalue {lam[0]:.3g})"
            )


# -- generator, direct route -------------------------------------------------


def apply_generator(spec: ProcessSpec, t: float, f: Polynomial) -> Polynomial:
    """``G_t f`` by explicit polynomial algebra at the frozen time ``t``.

    Every product is expanded on the basis of degree ``deg f``; a surviving
    higher-degree coefficient raises :class:`DegreeOverflow`.
    """
    t = check_time(spec, t)
    if f.d != spec.d:
        raise ValueError(f"polynomial has d={f.d}, spec has d={spec.d}")
    deg = f.degree
    if deg == -math.inf or deg == 0:
        return Polynomial.zero(f.basis)
    deg = int(deg)
    if deg > spec.m:
        raise ValueError(f"deg f = {deg} exceeds the spec's moment bound m = {spec.m}")
    d = spec.d
    out = Polynomial.zero(enumerate_basis(d, deg))
    for i in range(d):
        Di = partial_derivative(f, i)
        out = out + multiply(Di, spec.drift[i].at(t), deg)
        for j in range(d):
            Dij = partial_derivative(Di, j)
            out = out + 0.5 * multiply(Dij, spec.diffusion[i][j].at(t), deg)
    for l, poly in spec.jump_moments:
        if sum(l) > deg:
            continue
        Dl = derivative(f, l)
        out = out + multiply(Dl, poly.at(t), deg) * (1.0 / index_factorial(l))
    return out.lift(f.basis) if f.basis.m >= deg else out


# -- generator, matrix route -------------------------------------------------


def _operator_matrix(basis: MonomialBasis, orders: MultiIndex, weight: float, mult: MultiIndex) -> np.ndarray:
    """Matrix of ``f -> weight * D^orders f * x^mult`` on ``basis``."""
    N = len(basis)
    M = np.zeros((N, N))
    gain = sum(mult) - sum(orders)
    for j, e in enumerate(basis):
        if any(ei < li for ei, li in zip(e, orders)):
            continue
        if gain > 0:
            raise DegreeOverflow(
                f"term D^{orders} f * x^{mult} maps degree {sum(e)} to {sum(e) + gain}"
            )
        coef = weight * math.prod(math.perm(ei, li) for ei, li in zip(e, orders))
        target = tuple(ei - li + ki for ei, li, ki in zip(e, orders, mult))
        M[basis.index(target), j] += coef
    return M


def _generator_terms(spec: ProcessSpec):
    """Yield ``(orders, weight, TimePoly)`` for each term of the generator."""
    d = spec.d
    for i in range(d):
        yield unit_index(d, i), 1.0, spec.drift[i]
        for j in range(d):
            l = tuple(a + b for a, b in zip(unit_index(d, i), unit_index(d, j)))
            yield l, 0.5, spec.diffusion[i][j]
    for l, poly in spec.jump_moments:
        yield l, 1.0 / index_factorial(l), poly


class GeneratorFamily:
    """``t -> H_t`` written as ``sum_c phi_c(t) M_c`` with constant matrices ``M_c``.

    Built once per ``(spec, k)`` and cached; evaluating at many times is a
    single matrix product.
    """

    def __init__(self, spec: ProcessSpec, k: int):
        if not 0 <= k <= spec.m:
            raise ValueError(f"degree k={k} must lie in [0, m={spec.m}]")
        self.spec = spec
        self.k = k
        self.basis = enumerate_basis(spec.d, k)
        N = len(self.basis)
        acc: dict[TimeCoefficient, np.ndarray] = {}
        for orders, weight, poly in _generator_terms(spec):
            for mult, coef in poly.terms:
                M = _operator_matrix(self.basis, orders, weight, mult)
                if not M.any():
                    continue
                acc[coef] = acc[coef] + M if coef in acc else M
        self.coefficients = list(acc)
        self.matrices = np.array(list(acc.values())).reshape(len(acc), N, N)

    @property
    def N(self) -> int:
        return len(self.basis)

    def weights(self, ts) -> np.ndarray:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if not self.coefficients:
            return np.zeros((ts.size, 0))
        return np.stack([np.broadcast_to(c(ts), ts.shape) for c in self.coefficients], axis=-1)

    def at(self, t: float) -> np.ndarray:
        return self.at_many(np.array([t]))[0]

    def at_many(self, ts) -> np.ndarray:
        """``H`` at each time in ``ts``; shape ``(n, N, N)``."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if not self.coefficients:
            return np.zeros((ts.size, self.N, self.N))
        return np.einsum("nc,cij->nij", self.weights(ts), self.matrices)


@lru_cache(maxsize=256)
def generator_family(spec: ProcessSpec, k: int) -> GeneratorFamily:
    return GeneratorFamily(spec, k)


@dataclass(frozen=True)
class GeneratorMatrix:
    t: float
    basis: MonomialBasis
    entries: np.ndarray

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def generator_matrix(spec: ProcessSpec, t: float, k: int | None = None) -> GeneratorMatrix:
    """Representing matrix of ``G_t`` on the degree-``k`` basis (default ``m``)."""
    t = check_time(spec, t)
    fam = generator_family(spec, spec.m if k is None else k)
    H = fam.at(t)
    H.setflags(write=False)
    return GeneratorMatrix(t, fam.basis, H)


class CommutatorReport(NamedTuple):
    commuting: bool
    max_norm: float
    tol: float


def commutator_probe(
    spec: ProcessSpec,
    s: float,
    t: float,
    k: int,
    grid: int = 12,
    tol: float | None = None,
) -> CommutatorReport:
    """Largest ``||[H_u, H_v]||_2`` over a ``grid x grid`` sample of ``[s, t]^2``.

    With ``tol=None`` the tolerance is ``1e-12 * max ||H_u||_2^2`` on the grid.
    """
    if grid < 2:
        raise ValueError("grid must be >= 2")
    s, t = check_time(spec, s), check_time(spec, t)
    fam = generator_family(spec, k)
    Hs = fam.at_many(np.linspace(s, t, grid))
    C = commutator(Hs[:, None], Hs[None, :]).reshape(-1, fam.N, fam.N)
    worst = float(spectral_norms(C).max(initial=0.0))
    if tol is None:
        tol = 1e-12 * float(spectral_norms(Hs).max(initial=0.0)) ** 2
    return CommutatorReport(worst <= tol, worst, float(tol))


def build_spec(
    d: int,
    m: int,
    T: float,
    drift: Sequence,
    diffusion: Sequence[Sequence],
    jump_moments: Mapping | None = None,
    state_space: StateSpace | None = None,
    sampler: JumpKernelSampler | None = None,
    name: str = "",
) -> ProcessSpec:
    """Convenience constructor accepting lists, dicts and scalars."""
    return ProcessSpec(
        d=d,
        m=m,
        T=T,
        drift=tuple(drift),
        diffusion=tuple(tuple(row) for row in diffusion),
        jump_moments=tuple((jump_moments or {}).items()),
        state_space=state_space,
        sampler=sampler,
        name=name,
    )
