"""Parameter grid and width bookkeeping shared by all distribution families."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ParamGrid:
    """Uniform discretization ``theta_k = lo + (hi - lo) * k / m`` of ``[lo, hi]``.

    Indices may run past ``m``; there the node value clamps at ``sup_theta``,
    the least upper bound of the full parameter space (``+inf`` when the
    space is unbounded above).  Nodes are computed with a single
    multiply/divide per lookup, never by repeated addition, so node values
    do not accumulate error over large ``m``.
    """

    lo: float
    hi: float
    m: int
    sup_theta: float = math.inf

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError(f"grid needs hi > lo, got [{self.lo}, {self.hi}]")
        if self.m < 1:
            raise ValueError(f"grid count m must be >= 1, got {self.m}")
        if self.sup_theta < self.hi:
            raise ValueError(
                f"sup_theta ({self.sup_theta}) must not be below hi ({self.hi})"
            )

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / self.m

    def theta_at(self, k):
        """Node value for index ``k >= 0`` (scalar or array), clamped at sup_theta.

        ``theta_at(0) == lo`` and ``theta_at(m) == hi`` hold exactly.
        """
        karr = np.asarray(k, dtype=float)
        if np.any(karr < 0):
            raise ValueError("grid index must be >= 0")
        val = self.lo + (self.hi - self.lo) * karr / self.m
        # splice the exact endpoint so theta_at(m) == hi bit-for-bit
        val = np.where(karr == self.m, self.hi, np.minimum(val, self.sup_theta))
        if np.isscalar(k) or karr.ndim == 0:
            return float(val)
        return val

    def width_of(self, r: int) -> float:
        """Width ``(hi - lo) * r / m``; r must lie in {1, ..., m}."""
        if not 1 <= r <= self.m:
            raise ValueError(f"width index r must be in 1..{self.m}, got {r}")
        return (self.hi - self.lo) * r / self.m


@dataclass(frozen=True)
class WidthSpec:
    """Interval width expressed as a multiple ``r`` of the grid step."""

    r: int


def make_grid(lo: float, hi: float, m: int, sup_theta: float = math.inf) -> ParamGrid:
    """Build the parameter grid with nodes ``lo + (hi - lo) * k / m``."""
    return ParamGrid(float(lo), float(hi), int(m), float(sup_theta))


def theta_at(grid: ParamGrid, k):
    return grid.theta_at(k)


def width_of(grid: ParamGrid, spec) -> float:
    r = spec.r if isinstance(spec, WidthSpec) else int(spec)
    return grid.width_of(r)
