"""Samplable finite-activity jump kernels.

Moment computations only ever see a kernel through its moment polynomials
``x -> int xi^l K_t(x, d xi)``; the Monte Carlo simulator additionally needs
to draw jumps.  A kernel object provides both so the two views stay tied
together.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from .errors import SpecError
from .polyalg import MultiIndex
from .timefuncs import TimePoly


class JumpKernelSampler:
    """Interface for kernels usable by :mod:`polymag.mc`.

    Subclasses are frozen dataclasses registered under ``name`` so that specs
    referencing them can be serialized and compared.
    """

    name: ClassVar[str] = ""
    d: ClassVar[int] = 1

    def intensity(self, t: float, X: np.ndarray) -> np.ndarray:
        """Total mass ``K_t(x, R^d)`` for each row of ``X``."""
        raise NotImplementedError

    def draw(self, t: float, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One jump per row of ``X`` from the normalized kernel."""
        raise NotImplementedError

    def mean_jump(self, t: float, X: np.ndarray) -> np.ndarray:
        """``int xi K_t(x, d xi)``, shape ``(n, d)``; compensates the raw jumps."""
        raise NotImplementedError

    def moment_polys(self, m: int) -> dict[MultiIndex, TimePoly]:
        """Declared moment polynomials for ``2 <= |l| <= m``."""
        raise NotImplementedError

    def params(self) -> dict[str, float]:
        raise NotImplementedError


SAMPLERS: dict[str, type] = {}


def register(cls):
    SAMPLERS[cls.name] = cls
    return cls


def make_sampler(name: str, params: dict) -> JumpKernelSampler:
    try:
        cls = SAMPLERS[name]
    except KeyError:
        raise SpecError(f"unknown sampler {name!r}; known: {sorted(SAMPLERS)}") from None
    try:
        return cls(**{k: float(v) for k, v in params.items() if v is not None})
    except TypeError as exc:
        raise SpecError(f"bad parameters for sampler {name!r}: {exc}") from None


def _binomial_poly(shift: float, scale: float, l: int) -> TimePoly:
    """``(shift + scale*x)^l`` as a univariate TimePoly."""
    return (TimePoly.constant(1, shift) + TimePoly.variable(1, 0) * scale) ** l


@register
@dataclass(frozen=True)
class JacobiJumpKernel(JumpKernelSampler):
    """Jump kernel for the Jacobi process with jumps on [0, 1].

    Downward part: density ``-1/log(a/b) * xi^-1`` on ``[a x, b x]`` with
    ``-1 <= a < b < 0``.  Optional upward part (``alpha`` in (0, 1)): density
    ``1/log(1/alpha) * xi^-1`` on ``[alpha (1-x), 1-x]``.  Each part has unit
    mass, and jump sizes are log-uniform within their interval.
    """

    name: ClassVar[str] = "jacobi-jumps"

    a: float = -0.5
    b: float = -0.1
    alpha: float | None = None

    def __post_init__(self):
        if not -1.0 <= self.a < self.b < 0.0:
            raise SpecError(f"jacobi-jumps kernel needs -1 <= a < b < 0, got a={self.a}, b={self.b}")
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise SpecError(f"jacobi-jumps kernel needs alpha in (0, 1), got {self.alpha}")

    @property
    def _down_norm(self) -> float:
        return -1.0 / math.log(self.a / self.b)

    def intensity(self, t, X):
        rate = 1.0 if self.alpha is None else 2.0
        return np.full(np.shape(X)[0], rate)

    def draw(self, t, X, rng):
        x = np.asarray(X, dtype=float)[:, 0]
        u = rng.random(x.shape)
        # |xi| log-uniform between |b| x and |a| x
        down = self.b * x * (self.a / self.b) ** u
        if self.alpha is None:
            return down[:, None]
        up = (1.0 - x) * self.alpha ** rng.random(x.shape)
        pick_up = rng.random(x.shape) < 0.5
        return np.where(pick_up, up, down)[:, None]

    def mean_jump(self, t, X):
        x = np.asarray(X, dtype=float)[:, 0]
        out = x * (self.b - self.a) * self._down_norm
        if self.alpha is not None:
            out = out + (1.0 - x) * (1.0 - self.alpha) / math.log(1.0 / self.alpha)
        return out[:, None]

    def moment_polys(self, m):
        out = {}
        for l in range(2, m + 1):
            down = (self.b**l - self.a**l) / l * self._down_norm
            poly = TimePoly.from_dict(1, {(l,): down})
            if self.alpha is not None:
                up = (1.0 - self.alpha**l) / (l * math.log(1.0 / self.alpha))
                poly = poly + _binomial_poly(1.0, -1.0, l) * up
            out[(l,)] = poly
        return out

    def params(self):
        p = {"a": self.a, "b": self.b}
        if self.alpha is not None:
            p["alpha"] = self.alpha
        return p
