"""Monte Carlo paths for polynomial jump-diffusions.

Euler-Maruyama with coefficients frozen at the left end of each step, plus
compound-Poisson jumps drawn from the spec's kernel sampler.  The generator
uses compensated jumps, so the simulated drift is ``b - int xi K``.

Paths are simulated in fixed-size blocks, each with its own Philox stream
keyed by ``(seed, block index)``, so results do not depend on how many
worker threads run the blocks.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DiffusionNotPSD, MissingSampler
from .genmat import ProcessSpec, check_time
from .kernels import JumpKernelSampler
from .polyalg import MultiIndex, as_multi_index

BLOCK_SIZE = 8192
PSD_TOL = 1e-10
SCHEMES = ("euler", "euler-projected")


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 10_000
    n_steps: int = 200
    seed: int = 0
    scheme: str = "euler"
    workers: int | None = None

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1:
            raise ValueError("n_paths and n_steps must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    stderr: float
    n_paths: int
    elapsed: float = field(default=0.0, compare=False)


def psd_factor(cov: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """Lower-triangular ``L`` with ``L L^T = cov`` for a stack ``(n, d, d)``.

    Cholesky that tolerates singular matrices: pivots within
    ``tol * max(1, |cov_jj|)`` of zero are treated as zero and their column
    dropped.  Raises :class:`DiffusionNotPSD` for clearly indefinite input.
    """
    n, d, _ = cov.shape
    L = np.zeros_like(cov)
    for j in range(d):
        scale = np.maximum(1.0, np.abs(cov[:, j, j]))
        piv = cov[:, j, j] - np.sum(L[:, j, :j] ** 2, axis=1)
        if np.any(piv < -tol * scale):
            worst = int(np.argmin(piv / scale))
            raise DiffusionNotPSD(
                f"diffusion matrix not positive semi-definite (pivot {piv[worst]:.3g} in row {j + 1})"
            )
        ljj = np.sqrt(np.maximum(piv, 0.0))
        L[:, j, j] = ljj
        alive = ljj > np.sqrt(tol * scale)
        for i in range(j + 1, d):
            r = cov[:, i, j] - np.sum(L[:, i, :j] * L[:, j, :j], axis=1)
            if np.any(~alive & (np.abs(r) > np.sqrt(tol) * scale)):
                raise DiffusionNotPSD(f"diffusion matrix not positive semi-definite (column {j + 1})")
            L[:, i, j] = np.where(alive, r / np.where(alive, ljj, 1.0), 0.0)
    return L


def _workers(cfg: SimConfig) -> int:
    if cfg.workers is not None:
        return max(1, cfg.workers)
    env = os.environ.get("POLYMAG_THREADS")
    return max(1, int(env)) if env else 1


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _simulate_block(spec: ProcessSpec, s, t, x0, n, cfg: SimConfig, block: int) -> np.ndarray:
    rng = _block_rng(cfg.seed, block)
    d = spec.d
    sampler = spec.sampler
    project = cfg.scheme == "euler-projected"
    ss = spec.state_space
    dt = (t - s) / cfg.n_steps
    sq = np.sqrt(dt)
    X = np.tile(x0, (n, 1))
    diag_only = all(spec.diffusion[i][j].is_zero for i in range(d) for j in range(d) if i != j)
    for step in range(cfg.n_steps):
        tk = s + step * dt
        drift = np.column_stack([b.evaluate(tk, X) for b in spec.drift])
        if sampler is not None:
            drift = drift - sampler.mean_jump(tk, X)
        Z = rng.standard_normal((n, d))
        if diag_only:
            var = np.column_stack([spec.diffusion[i][i].evaluate(tk, X) for i in range(d)])
            scale = np.maximum(1.0, np.abs(var))
            if np.any(var < -PSD_TOL * scale):
                raise DiffusionNotPSD(
                    f"negative diffusion coefficient {var.min():.3g} at t={tk:.6g}; "
                    "use scheme='euler-projected' for bounded state spaces"
                )
            noise = np.sqrt(np.maximum(var, 0.0)) * Z
        else:
            cov = np.empty((n, d, d))
            for i in range(d):
                for j in range(d):
                    cov[:, i, j] = spec.diffusion[i][j].evaluate(tk, X)
            noise = np.einsum("nij,nj->ni", psd_factor(cov), Z)
        X = X + drift * dt + noise * sq
        if project:
            X = ss.project(X)
        if sampler is not None:
            counts = rng.poisson(sampler.intensity(tk, X) * dt)
            for j in range(int(counts.max(initial=0))):
                hit = counts > j
                X[hit] = X[hit] + sampler.draw(tk, X[hit], rng)
            if project:
                X = ss.project(X)
    return X


def simulate_paths(spec: ProcessSpec, s: float, t: float, x0, cfg: SimConfig = SimConfig()) -> np.ndarray:
    """Terminal states ``X_t`` of ``cfg.n_paths`` paths started at ``X_s = x0``.

    Returns an array of shape ``(n_paths, d)``.
    """
    s, t = check_time(spec, s), check_time(spec, t)
    if not s < t:
        raise ValueError(f"need s < t, got s={s}, t={t}")
    x0 = np.asarray(x0, dtype=float).reshape(spec.d)
    if spec.has_jumps and spec.sampler is None:
        raise MissingSampler(
            "spec declares jump moments but has no kernel sampler; Monte Carlo needs one"
        )
    sizes = [BLOCK_SIZE] * (cfg.n_paths // BLOCK_SIZE)
    if cfg.n_paths % BLOCK_SIZE:
        sizes.append(cfg.n_paths % BLOCK_SIZE)
    job = lambda b: _simulate_block(spec, s, t, x0, sizes[b], cfg, b)
    workers = _workers(cfg)
    if workers == 1 or len(sizes) == 1:
        blocks = [job(b) for b in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(job, range(len(sizes))))
    return np.concatenate(blocks, axis=0)


def _monomial(X: np.ndarray, k: MultiIndex) -> np.ndarray:
    out = np.ones(X.shape[0])
    for i, ki in enumerate(k):
        if ki:
            out = out * X[:, i] ** ki
    return out


def moment_statistics(X: np.ndarray, k: MultiIndex) -> tuple[float, float]:
    vals = _monomial(X, k)
    n = vals.size
    sd = float(np.std(vals, ddof=1)) if n > 1 else 0.0
    return float(np.mean(vals)), sd / np.sqrt(n)


def estimate_moments(spec: ProcessSpec, s, t, x0, kidxs, cfg: SimConfig = SimConfig()) -> list[MomentEstimate]:
    """Sample mean and standard error of ``X_t^k`` for each ``k``, from one set of paths."""
    start = time.perf_counter()
    kidxs = [as_multi_index(k, spec.d) for k in kidxs]
    X = simulate_paths(spec, s, t, x0, cfg)
    elapsed = time.perf_counter() - start
    return [MomentEstimate(*moment_statistics(X, k), cfg.n_paths, elapsed) for k in kidxs]


def estimate_moment(spec: ProcessSpec, s, t, x0, kidx, cfg: SimConfig = SimConfig()) -> MomentEstimate:
    return estimate_moments(spec, s, t, x0, [kidx], cfg)[0]


@dataclass(frozen=True)
class KernelMomentCheck:
    index: MultiIndex
    declared: float
    empirical: float
    stderr: float
    ok: bool


@dataclass(frozen=True)
class KernelReport:
    t: float
    x: tuple[float, ...]
    intensity: float
    checks: tuple[KernelMomentCheck, ...]

    @property
    def consistent(self) -> bool:
        return all(c.ok for c in self.checks)


def kernel_consistency_check(
    sampler: JumpKernelSampler | None,
    spec: ProcessSpec,
    t: float,
    x,
    n: int = 100_000,
    seed: int = 0,
    n_sigma: float = 4.0,
) -> KernelReport:
    """Compare ``intensity * E[xi^l]`` from ``n`` draws with the declared moments.

    The first moment is checked against ``sampler.mean_jump``; moments with
    ``2 <= |l| <= m`` against ``spec.jump_moments`` (absent entries are zero).
    """
    if n < 10_000:
        raise ValueError("kernel consistency needs at least 10^4 draws")
    x = np.asarray(x, dtype=float).reshape(1, spec.d)
    declared_map = spec.jump_moment_map
    indices: list[MultiIndex] = [k for k in spec.basis() if sum(k) >= 1]
    if sampler is None:
        checks = []
        for l in indices:
            dec = float(declared_map[l].evaluate(t, x)[0]) if l in declared_map else 0.0
            checks.append(KernelMomentCheck(l, dec, 0.0, 0.0, dec == 0.0))
        return KernelReport(t, tuple(x[0]), 0.0, tuple(checks))
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    lam = float(sampler.intensity(t, x)[0])
    xi = sampler.draw(t, np.repeat(x, n, axis=0), rng)
    mean_jump = sampler.mean_jump(t, x)[0]
    checks = []
    for l in indices:
        vals = lam * _monomial(xi, l)
        emp = float(np.mean(vals))
        se = float(np.std(vals, ddof=1) / np.sqrt(n))
        if sum(l) == 1:
            dec = float(mean_jump[l.index(1)])
        else:
            dec = float(declared_map[l].evaluate(t, x)[0]) if l in declared_map else 0.0
        ok = abs(emp - dec) <= n_sigma * se + 1e-12 * max(1.0, abs(dec))
        checks.append(KernelMomentCheck(l, dec, emp, se, ok))
    return KernelReport(t, tuple(x[0]), lam, tuple(checks))
