"""Composite Gauss-Legendre rules aligned with coefficient breakpoints.

Panels never straddle a breakpoint of the time coefficients, so for
piecewise-polynomial generators every panel integrates a polynomial and the
rule is exact once its order is high enough.  Nested (simplex) integrals use
rules whose upper limit varies with the outer node; their segments are
clipped to ``[a, u]`` so the node arrays stay rectangular.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import QuadratureError


@dataclass(frozen=True)
class QuadratureConfig:
    """``gl_order`` nodes per panel; panels are doubled until two successive
    estimates differ by less than ``rtol`` (relative), at most
    ``max_refinements`` times."""

    gl_order: int = 16
    rtol: float = 1e-10
    max_refinements: int = 8

    def __post_init__(self):
        if self.gl_order < 2:
            raise ValueError(f"gl_order must be >= 2, got {self.gl_order}")
        if not self.rtol > 0:
            raise ValueError(f"rtol must be positive, got {self.rtol}")


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _edges(a, b, breaks):
    """Segment edges ``[a, breaks..., b]`` clipped to ``[a, b]``; broadcasts over ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    inner = np.clip(np.asarray(breaks, dtype=float), a[..., None], b[..., None]) if len(breaks) else (
        np.zeros(b.shape + (0,))
    )
    return np.concatenate(
        [np.broadcast_to(a, b.shape)[..., None], inner, b[..., None]], axis=-1
    )


def panel_rule(a, b, breaks=(), panels: int = 1, order: int = 16):
    """Composite rule on ``[a, b]``; ``b`` may be an array of upper limits.

    Returns ``(nodes, weights)`` with shape ``b.shape + (n,)`` where
    ``n = (len(breaks) + 1) * panels * order``.  Segments that fall outside
    ``[a, b]`` get zero weight.
    """
    x, w = gauss_legendre(order)
    e = _edges(a, b, breaks)
    lo, hi = e[..., :-1], e[..., 1:]
    frac = np.arange(panels + 1) / panels
    p_edges = lo[..., None] + (hi - lo)[..., None] * frac
    p_lo, p_hi = p_edges[..., :-1], p_edges[..., 1:]
    h = p_hi - p_lo
    nodes = p_lo[..., None] + h[..., None] * x
    weights = h[..., None] * w
    shape = np.shape(b) + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def refine(
    estimate: Callable[[int], tuple[np.ndarray, ...]],
    config: QuadratureConfig,
    floors: tuple[float, ...] | None = None,
) -> tuple[tuple[np.ndarray, ...], int]:
    """Double the panel count until every component of ``estimate`` settles.

    ``estimate(panels)`` returns a tuple of arrays.  Component ``i`` is
    converged when the max-abs change is at most
    ``rtol * max(max|value|, floors[i])``.  Returns the finest values and the
    panel count used.
    """
    panels = 1
    prev = estimate(panels)
    if floors is None:
        floors = (0.0,) * len(prev)
    for _ in range(config.max_refinements):
        panels *= 2
        cur = estimate(panels)
        done = all(
            np.max(np.abs(c - p), initial=0.0) <= config.rtol * max(np.max(np.abs(c), initial=0.0), f)
            for c, p, f in zip(cur, prev, floors)
        )
        if done:
            return cur, panels
        prev = cur
    raise QuadratureError(
        f"quadrature did not reach rtol={config.rtol} after {config.max_refinements} panel doublings"
    )
