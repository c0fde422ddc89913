"""Cross-checks between the moment routes and the evolution-system invariants.

:func:`run_validation` compares the matrix moments (auto, magnus3 and RK4),
a Gaussian closed form where one exists, and Monte Carlo estimates, and runs
the invariant suite on a few random time triples.  :func:`evolution_checks`
is the invariant suite on its own.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DegreeOverflow
from .genmat import ProcessSpec, generator_matrix
from .magnus import kolmogorov_defects, transition_matrix
from .mc import SimConfig, kernel_consistency_check, moment_statistics, simulate_paths
from .polyalg import MultiIndex, enumerate_basis

MATRIX_TOL = 1e-5
MC_SIGMAS = 4.0
MC_SLACK = 0.01

# thresholds of the evolution-system suite
COMPOSITION_TOL = 1e-6
CONSTANT_TOL = 1e-12
TRIANGULAR_TOL = 1e-10
EQUATION_TOL = 1e-4


@dataclass(frozen=True)
class Verdict:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class MomentRow:
    k: MultiIndex
    values: dict[str, float] = field(default_factory=dict)
    mc_stderr: float | None = None


@dataclass
class ValidationReport:
    spec_name: str
    s: float
    t: float
    x: tuple[float, ...]
    rows: list[MomentRow]
    verdicts: list[Verdict]
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)


def moment_indices(d: int, kmax: int) -> list[MultiIndex]:
    """All multi-indices with ``1 <= |k| <= kmax`` in graded order."""
    return [k for k in enumerate_basis(d, kmax).exponents if sum(k) >= 1]


def gaussian_moments(spec: ProcessSpec, s, t, x, kidxs) -> list[float] | None:
    """Closed-form moments when ``X`` is a Gaussian additive process.

    Applies for ``d = 1``, state-independent drift and diffusion and no
    jumps: ``X_t ~ N(x + int b, int c)``.  Returns ``None`` otherwise.
    """
    if spec.d != 1 or spec.has_jumps:
        return None
    b, c = spec.drift[0], spec.diffusion[0][0]
    if not (b.x_free() and c.x_free()):
        return None
    coef = lambda p: p.as_dict().get((0,))
    mean = float(x[0]) + (coef(b).integral(s, t) if coef(b) else 0.0)
    var = coef(c).integral(s, t) if coef(c) else 0.0
    out = []
    for (k,) in kidxs:
        # E[(mu + sigma Z)^k] with E[Z^j] = (j-1)!! for even j
        total = 0.0
        for j in range(0, k + 1, 2):
            dfact = math.prod(range(j - 1, 0, -2)) if j else 1
            total += math.comb(k, j) * mean ** (k - j) * var ** (j / 2) * dfact
        out.append(total)
    return out


def evolution_checks(spec: ProcessSpec, s: float, u: float, t: float, k: int | None = None, tol: float = 1e-8) -> dict[str, float]:
    """Defects of the evolution-system properties for ``s <= u <= t``.

    Keys: ``identity``, ``composition`` (relative to ``max(1, |P_st|)``),
    ``constant``, ``triangular``, ``forward``, ``backward``.
    """
    k = spec.m if k is None else k
    basis = enumerate_basis(spec.d, k)
    P_ss = transition_matrix(spec, s, s, k, residual=False).matrix
    P_su = transition_matrix(spec, s, u, k, tol=tol, residual=False).matrix
    P_ut = transition_matrix(spec, u, t, k, tol=tol, residual=False).matrix
    P_st = transition_matrix(spec, s, t, k, tol=tol, residual=False).matrix
    N = basis.N
    e0 = np.zeros(N)
    e0[0] = 1.0
    deg = np.array(basis.degrees)
    lower = deg[:, None] > deg[None, :]
    fwd, back = kolmogorov_defects(spec, s, t, k, tol=tol)
    return {
        "identity": float(np.max(np.abs(P_ss - np.eye(N)))),
        "composition": float(np.max(np.abs(P_su @ P_ut - P_st)) / max(1.0, np.max(np.abs(P_st)))),
        "constant": float(np.max(np.abs(P_st[:, 0] - e0))),
        "triangular": float(np.max(np.abs(P_st[lower]), initial=0.0)),
        "forward": 0.0 if fwd is None else fwd,
        "backward": 0.0 if back is None else back,
    }


EVOLUTION_LIMITS = {
    "identity": 0.0,
    "composition": COMPOSITION_TOL,
    "constant": CONSTANT_TOL,
    "triangular": TRIANGULAR_TOL,
    "forward": EQUATION_TOL,
    "backward": EQUATION_TOL,
}


def run_validation(
    spec: ProcessSpec,
    s: float,
    t: float,
    x,
    kmax: int = 2,
    n_paths: int = 100_000,
    n_steps: int = 500,
    seed: int = 0,
    n_triples: int = 3,
    kernel_draws: int = 100_000,
) -> ValidationReport:
    """Moments by every applicable route plus agreement and invariant verdicts."""
    start = time.perf_counter()
    x = tuple(float(v) for v in np.asarray(x, dtype=float).reshape(spec.d))
    if kmax > spec.m:
        raise ValueError(f"kmax={kmax} exceeds m={spec.m}")
    verdicts: list[Verdict] = []
    rng = np.random.default_rng(seed)

    for tp in np.linspace(0.0, spec.T, 5):
        try:
            generator_matrix(spec, tp, spec.m)
        except DegreeOverflow as exc:
            verdicts.append(Verdict("degree-closure", False, str(exc)))
            break
    else:
        verdicts.append(Verdict("degree-closure", True, f"generator closed on degree {spec.m}"))
    if not verdicts[-1].passed:
        return ValidationReport(spec.name, s, t, x, [], verdicts, time.perf_counter() - start)

    kidxs = moment_indices(spec.d, kmax)
    rows = [MomentRow(k) for k in kidxs]
    basis = enumerate_basis(spec.d, kmax)
    mono = basis.monomials(np.array(x))
    for method in ("auto", "magnus3", "ode"):
        P = transition_matrix(spec, s, t, kmax, method, residual=False).matrix
        vals = mono @ P
        for row in rows:
            row.values["matrix" if method == "auto" else method] = float(vals[basis.index(row.k)])
    closed = gaussian_moments(spec, s, t, x, kidxs)
    if closed is not None:
        for row, v in zip(rows, closed):
            row.values["closed_form"] = v

    def agree(name, a, b, tol):
        worst = max(abs(r.values[a] - r.values[b]) / max(1.0, abs(r.values[b])) for r in rows)
        verdicts.append(Verdict(name, worst <= tol, f"max relative gap {worst:.3g} (tol {tol:g})"))

    agree("magnus3-vs-ode", "magnus3", "ode", MATRIX_TOL)
    agree("matrix-vs-ode", "matrix", "ode", MATRIX_TOL)
    if closed is not None:
        agree("matrix-vs-closed-form", "matrix", "closed_form", 1e-9)

    if not spec.has_jumps or spec.sampler is not None:
        scheme = "euler" if spec.state_space.kind == "R" else "euler-projected"
        X = simulate_paths(spec, s, t, x, SimConfig(n_paths, n_steps, seed, scheme))
        worst = 0.0
        ok = True
        for row in rows:
            mean, se = moment_statistics(X, row.k)
            row.values["mc"] = mean
            row.mc_stderr = se
            gap = abs(mean - row.values["matrix"])
            ok &= gap <= MC_SIGMAS * se + MC_SLACK
            worst = max(worst, gap / (MC_SIGMAS * se + MC_SLACK))
        verdicts.append(Verdict("matrix-vs-mc", bool(ok), f"worst gap / (4 se + 0.01) = {worst:.3g}"))
        inside = spec.state_space.contains(X, tol=1e-12)
        verdicts.append(Verdict(
            "state-space", bool(inside.all()),
            f"{int((~inside).sum())} of {len(inside)} paths outside {spec.state_space.to_text()}",
        ))
    if spec.sampler is not None:
        report = kernel_consistency_check(spec.sampler, spec, s, x, n=kernel_draws, seed=seed)
        bad = [c.index for c in report.checks if not c.ok]
        verdicts.append(Verdict("kernel-consistency", report.consistent, f"failing indices {bad}" if bad else "all moments within 4 se"))

    for _ in range(n_triples):
        a, b, c = np.sort(rng.uniform(0.0, spec.T, 3))
        defects = evolution_checks(spec, a, b, c, kmax)
        failing = [key for key, v in defects.items() if v > EVOLUTION_LIMITS[key]]
        verdicts.append(Verdict(
            f"evolution({a:.3f},{b:.3f},{c:.3f})", not failing,
            ", ".join(f"{key}={v:.2g}" for key, v in defects.items()),
        ))
    return ValidationReport(spec.name, s, t, x, rows, verdicts, time.perf_counter() - start)
