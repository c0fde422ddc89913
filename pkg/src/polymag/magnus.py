"""Transition matrices from the matrix Kolmogorov forward equation.

``P_{s,t}`` solves ``dP/dt = P H_t`` with ``P_{s,s} = I``.  Three routes:

* ``exact``: ``exp(int_s^t H_u du)``, valid when the family ``H`` commutes;
* ``magnus3``: ``exp(Omega_1 + Omega_2 + Omega_3)`` on equal subintervals,
  composed left to right;
* ``ode``: classical RK4 with a fixed step count, used as a reference.

Moments are read off as ``E[X_t^k | X_s = x] = v(x) P_{s,t} e_k`` where
``v(x)`` is the row of basis monomials at ``x``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NumericalError
from .genmat import GeneratorFamily, ProcessSpec, check_time, commutator_probe, generator_family
from .linalg import commutator, matrix_exp, spectral_norms
from .polyalg import MultiIndex, as_multi_index
from .quadrature import QuadratureConfig, panel_rule, refine

METHODS = ("auto", "exact", "magnus3", "ode")
GATE = math.pi
SAFETY = 0.9
DEFAULT_ODE_STEPS = 2048
DEFAULT_TOL = 1e-6
MAX_SUBINTERVALS = 4096


@dataclass(frozen=True)
class MagnusTerms:
    s: float
    t: float
    omega1: np.ndarray
    omega2: np.ndarray
    omega3: np.ndarray
    panels: int = 1

    @property
    def total(self) -> np.ndarray:
        return self.omega1 + self.omega2 + self.omega3


@dataclass(frozen=True)
class TransitionResult:
    """``P_{s,t}`` on the degree-``k`` basis plus solve diagnostics.

    ``error_estimate`` is the max-abs change under a refinement (interval
    doubling for ``magnus3``, step halving for ``ode``); ``residual`` is the
    spectral norm of ``dP/dt - P H_t`` at ``t`` by central differences.
    """

    s: float
    t: float
    matrix: np.ndarray
    method: str
    subintervals: int
    norm_integral: float
    residual: Optional[float] = None
    error_estimate: Optional[float] = None
    commutator_norm: Optional[float] = None

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


def _segments(spec: ProcessSpec, s: float, t: float) -> tuple[float, ...]:
    return tuple(b for b in spec.breakpoints if s < b < t)


def _family(spec: ProcessSpec, k: int | None) -> GeneratorFamily:
    k = spec.m if k is None else k
    return generator_family(spec, k)


# -- norms and Magnus terms ---------------------------------------------------


def _norm_integral(fam: GeneratorFamily, s, t, q: QuadratureConfig) -> float:
    if t <= s:
        return 0.0
    breaks = _segments(fam.spec, s, t)

    def estimate(panels):
        u, w = panel_rule(s, t, breaks, panels, q.gl_order)
        return (np.array(w @ spectral_norms(fam.at_many(u))),)

    (val,), _ = refine(estimate, q)
    return float(val)


def norm_integral(spec: ProcessSpec, s: float, t: float, k: int | None = None, q: QuadratureConfig | None = None) -> float:
    """``int_s^t ||H_u||_2 du`` by breakpoint-aligned adaptive Gauss-Legendre."""
    s, t = check_time(spec, s), check_time(spec, t)
    if t < s:
        raise ValueError(f"need s <= t, got s={s}, t={t}")
    return _norm_integral(_family(spec, k), s, t, q or QuadratureConfig())


def _omega_estimate(fam: GeneratorFamily, s: float, t: float, breaks, panels: int, order: int, third: bool):
    """Omega_1..3 from nested rules with ``panels`` panels per segment."""
    N = fam.N
    u, wu = panel_rule(s, t, breaks, panels, order)
    Hu = fam.at_many(u)
    om1 = np.tensordot(wu, Hu, axes=1)
    # inner integrals over [s, u]; H is linear in the coefficient weights, so
    # integrate the scalar weights first and contract with the matrices once
    v, wv = panel_rule(s, u, breaks, panels, order)
    nu, nv = v.shape
    Hv = fam.at_many(v.ravel()).reshape(nu, nv, N, N)
    Iu = np.matmul(wv[:, None, :], Hv.reshape(nu, nv, N * N)).reshape(nu, N, N)
    om2 = -0.5 * np.tensordot(wu, commutator(Hu, Iu), axes=1)
    if not third:
        return om1, om2, np.zeros_like(om1)
    w_nodes, ww = panel_rule(s, v, breaks, panels, order)
    if fam.coefficients:
        phi = fam.weights(w_nodes.ravel()).reshape(w_nodes.shape + (-1,))
        integrated = np.matmul(ww[..., None, :], phi)[..., 0, :]
        Jv = (integrated @ fam.matrices.reshape(len(fam.coefficients), N * N)).reshape(nu, nv, N, N)
    else:
        Jv = np.zeros((nu, nv, N, N))
    inner = commutator(Hv, Jv)
    Ku = np.matmul(wv[:, None, :], inner.reshape(nu, nv, N * N)).reshape(nu, N, N)
    inner = commutator(Jv, commutator(Hv, Hu[:, None]))
    Lu = np.matmul(wv[:, None, :], inner.reshape(nu, nv, N * N)).reshape(nu, N, N)
    om3 = np.tensordot(wu, commutator(Hu, Ku) + Lu, axes=1) / 6.0
    return om1, om2, om3


def _magnus_terms(fam: GeneratorFamily, s: float, t: float, q: QuadratureConfig, third: bool = True) -> MagnusTerms:
    N = fam.N
    if t <= s:
        z = np.zeros((N, N))
        return MagnusTerms(s, t, z, z.copy(), z.copy())
    breaks = _segments(fam.spec, s, t)
    probe = np.linspace(s, t, 5)
    scale = (t - s) * float(spectral_norms(fam.at_many(probe)).max(initial=0.0))
    floors = (scale, scale**2, scale**3)
    (o1, o2, o3), panels = refine(
        lambda p: _omega_estimate(fam, s, t, breaks, p, q.gl_order, third), q, floors
    )
    return MagnusTerms(s, t, o1, o2, o3, panels)


def magnus_terms(spec: ProcessSpec, s: float, t: float, k: int | None = None, q: QuadratureConfig | None = None) -> MagnusTerms:
    """First three Magnus terms for ``dP/dt = P H_t`` on ``[s, t]``.

    ``Omega_1 = int H_u``, ``Omega_2 = -1/2 int_{v<u} [H_u, H_v]`` and
    ``Omega_3 = 1/6 int_{w<v<u} [H_u,[H_v,H_w]] + [H_w,[H_v,H_u]]``.
    """
    s, t = check_time(spec, s), check_time(spec, t)
    if t < s:
        raise ValueError(f"need s <= t, got s={s}, t={t}")
    return _magnus_terms(_family(spec, k), s, t, q or QuadratureConfig())


# -- solvers -----------------------------------------------------------------


def _exact(fam, s, t, q):
    om = _magnus_terms(fam, s, t, q, third=False).omega1
    return matrix_exp(om)


def _magnus_piecewise(fam, s, t, n, q):
    edges = np.linspace(s, t, n + 1)
    P = np.eye(fam.N)
    for a, b in zip(edges[:-1], edges[1:]):
        P = P @ matrix_exp(_magnus_terms(fam, a, b, q).total)
    return P


def _gate_subintervals(fam, s, t, q, minimum=1) -> tuple[int, float]:
    """Fewest equal pieces with ``int ||H|| < 0.9 pi`` on each."""
    total = _norm_integral(fam, s, t, q)
    n = max(minimum, math.ceil(total / (SAFETY * GATE)) or 1)
    while n <= MAX_SUBINTERVALS:
        edges = np.linspace(s, t, n + 1)
        if all(_norm_integral(fam, a, b, q) < SAFETY * GATE for a, b in zip(edges[:-1], edges[1:])):
            return n, total
        n += 1
    raise NumericalError(f"more than {MAX_SUBINTERVALS} subintervals needed for the Magnus gate")


def gate_subintervals(spec: ProcessSpec, s: float, t: float, k: int | None = None, q: QuadratureConfig | None = None) -> int:
    """Recommended number of equal pieces so each satisfies the Magnus gate."""
    s, t = check_time(spec, s), check_time(spec, t)
    if t <= s:
        return 1
    return _gate_subintervals(_family(spec, k), s, t, q or QuadratureConfig())[0]


def _rk4(fam, s, t, steps):
    """Classical RK4 for ``dP/dt = P H_t``; steps are spread over breakpoint segments."""
    edges = [s, *_segments(fam.spec, s, t), t]
    lengths = np.diff(edges)
    counts = np.maximum(1, np.round(steps * lengths / (t - s)).astype(int))
    P = np.eye(fam.N)
    for a, length, n in zip(edges[:-1], lengths, counts):
        h = length / n
        left = a + h * np.arange(n)
        H = fam.at_many(np.concatenate([left, left + 0.5 * h, left + h])).reshape(3, n, fam.N, fam.N)
        for i in range(n):
            H0, Hm, H1 = H[0, i], H[1, i], H[2, i]
            k1 = P @ H0
            k2 = (P + 0.5 * h * k1) @ Hm
            k3 = (P + 0.5 * h * k2) @ Hm
            k4 = (P + h * k3) @ H1
            P = P + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(P)):
        raise NumericalError("RK4 integration produced non-finite values")
    return P


def _solve(fam, s, t, method, q, n=1, steps=DEFAULT_ODE_STEPS):
    if t <= s:
        return np.eye(fam.N)
    if method == "exact":
        return _exact(fam, s, t, q)
    if method == "magnus3":
        return _magnus_piecewise(fam, s, t, n, q)
    return _rk4(fam, s, t, steps)


def _residual(fam, s, t, method, q, n, steps, P):
    """Spectral norm of the forward-equation defect ``dP/dt - P H_t`` at ``t``."""
    T = fam.spec.T
    h = 1e-5 * max(t - s, 1e-2)
    if t - s < 2 * h and t + 2 * h > T:
        return None
    solve = lambda tt: _solve(fam, s, tt, method, q, n, steps)
    if t - h >= s and t + h <= T:
        dP = (solve(t + h) - solve(t - h)) / (2 * h)
    elif t + 2 * h <= T:
        dP = (-3 * P + 4 * solve(t + h) - solve(t + 2 * h)) / (2 * h)
    else:
        dP = (3 * P - 4 * solve(t - h) + solve(t - 2 * h)) / (2 * h)
    return float(spectral_norms((dP - P @ fam.at(t))[None])[0])


def _backward_residual(fam, s, t, method, q, n, steps, P):
    """Spectral norm of the backward-equation defect ``dP/ds + H_s P`` at ``s``."""
    h = 1e-5 * max(t - s, 1e-2)
    if t - s < 2 * h and s < 2 * h:
        return None
    solve = lambda ss: _solve(fam, ss, t, method, q, n, steps)
    if s - h >= 0.0 and s + h <= t:
        dP = (solve(s + h) - solve(s - h)) / (2 * h)
    elif s + 2 * h <= t:
        dP = (-3 * P + 4 * solve(s + h) - solve(s + 2 * h)) / (2 * h)
    else:
        dP = (3 * P - 4 * solve(s - h) + solve(s - 2 * h)) / (2 * h)
    return float(spectral_norms((dP + fam.at(s) @ P)[None])[0])


def kolmogorov_defects(
    spec: ProcessSpec, s: float, t: float, k: int | None = None, method: str = "auto", **kwargs
) -> tuple[float | None, float | None]:
    """Forward and backward equation defects of the computed ``P_{s,t}``.

    Derivatives are central differences with the piece count (or step
    count) of the main solve held fixed, so the discretization error is a
    smooth function of ``s`` and ``t``.  ``None`` marks a defect that cannot
    be differenced inside ``[0, T]``.
    """
    res = transition_matrix(spec, s, t, k, method, residual=True, **kwargs)
    if t == s:
        return 0.0, 0.0
    fam = _family(spec, k)
    q = kwargs.get("q") or QuadratureConfig()
    steps = kwargs.get("ode_steps", DEFAULT_ODE_STEPS)
    back = _backward_residual(fam, res.s, res.t, res.method, q, res.subintervals, steps, res.matrix)
    return res.residual, back


def transition_matrix(
    spec: ProcessSpec,
    s: float,
    t: float,
    k: int | None = None,
    method: str = "auto",
    q: QuadratureConfig | None = None,
    *,
    tol: float | None = DEFAULT_TOL,
    ode_steps: int = DEFAULT_ODE_STEPS,
    min_subintervals: int = 1,
    residual: bool = True,
) -> TransitionResult:
    """Representing matrix of ``P_{s,t}`` on the degree-``k`` basis.

    ``method="auto"`` takes the exact exponential when the commutator probe
    finds the family commuting, otherwise ``magnus3``.  For ``magnus3`` the
    interval is first split into the fewest equal pieces whose norm integral
    stays below ``0.9 pi``; with ``tol`` set, the piece count is then doubled
    until successive results differ by at most ``tol * max(1, max|P|)``.
    ``tol=None`` keeps the gate-only split.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    s, t = check_time(spec, s), check_time(spec, t)
    if t < s:
        raise ValueError(f"need s <= t, got s={s}, t={t}")
    if ode_steps < 1:
        raise ValueError("ode_steps must be positive")
    q = q or QuadratureConfig()
    fam = _family(spec, k)
    N = fam.N
    comm = None
    if method == "auto":
        if t > s:
            report = commutator_probe(spec, s, t, fam.k)
            comm = report.max_norm
            method = "exact" if report.commuting else "magnus3"
        else:
            method = "exact"
    if t == s:
        return TransitionResult(s, t, np.eye(N), method, 1, 0.0, 0.0 if residual else None, 0.0, comm)

    n, err = 1, None
    if method == "magnus3":
        n, total = _gate_subintervals(fam, s, t, q, min_subintervals)
        P = _magnus_piecewise(fam, s, t, n, q)
        if tol is not None:
            while True:
                if 2 * n > MAX_SUBINTERVALS:
                    raise NumericalError(f"magnus3 did not reach tol={tol} within {MAX_SUBINTERVALS} subintervals")
                P2 = _magnus_piecewise(fam, s, t, 2 * n, q)
                err = float(np.max(np.abs(P2 - P)))
                n, P = 2 * n, P2
                if err <= tol * max(1.0, float(np.max(np.abs(P)))):
                    break
    else:
        total = _norm_integral(fam, s, t, q)
        if method == "exact":
            P = _exact(fam, s, t, q)
        else:
            P = _rk4(fam, s, t, ode_steps)
            half = _rk4(fam, s, t, max(1, ode_steps // 2))
            err = float(np.max(np.abs(P - half)))
            n = ode_steps
    res = _residual(fam, s, t, method, q, n, ode_steps, P) if residual else None
    return TransitionResult(s, t, P, method, n, total, res, err, comm)


def moment(
    spec: ProcessSpec,
    s: float,
    t: float,
    x,
    kidx,
    method: str = "auto",
    q: QuadratureConfig | None = None,
    *,
    tol: float | None = DEFAULT_TOL,
    ode_steps: int = DEFAULT_ODE_STEPS,
) -> float:
    """``E[X_t^kidx | X_s = x]`` via the degree-``|kidx|`` transition matrix."""
    kidx = as_multi_index(kidx, spec.d)
    return float(moments(spec, s, t, x, [kidx], method, q, tol=tol, ode_steps=ode_steps)[0])


def moments(
    spec: ProcessSpec,
    s: float,
    t: float,
    x,
    kidxs,
    method: str = "auto",
    q: QuadratureConfig | None = None,
    *,
    tol: float | None = DEFAULT_TOL,
    ode_steps: int = DEFAULT_ODE_STEPS,
) -> np.ndarray:
    """Several conditional moments from one transition matrix.

    The degree-``k`` basis is a prefix of the degree-``K`` basis and ``P`` is
    block upper-triangular, so one solve at the largest degree serves all.
    """
    kidxs: list[MultiIndex] = [as_multi_index(k, spec.d) for k in kidxs]
    x = np.asarray(x, dtype=float).reshape(spec.d)
    if not spec.state_space.contains(x[None], tol=1e-12)[0]:
        warnings.warn(f"initial state {x.tolist()} lies outside the state space {spec.state_space.to_text()}")
    K = max(sum(k) for k in kidxs)
    if K > spec.m:
        raise ValueError(f"moment degree {K} exceeds m={spec.m}")
    res = transition_matrix(spec, s, t, K, method, q, tol=tol, ode_steps=ode_steps, residual=False)
    basis = generator_family(spec, K).basis
    row = basis.monomials(x) @ res.matrix
    return np.array([row[basis.index(k)] for k in kidxs])
