"""Breakpoint recursions for shortest non-decreasing fixed-width intervals.

Each breakpoint ``y_k`` is the smallest statistic value at which the
interval's lower endpoint may reach grid node ``k`` without breaking the
coverage requirement at adjacent nodes; pushing every breakpoint as far
right as coverage permits is what makes the resulting intervals shortest.
A breakpoint hitting ``+inf`` before ``k = m`` certifies that no
non-decreasing interval of this width and level exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .families import Family, Hypergeometric
from .grid import ParamGrid

# which term of the recursion produced y_k
BINDING_INIT = -1  # k = 0 (initial value, nothing computed)
BINDING_PREV = 0  # carried forward from y_{k-1}
BINDING_LOWER = 1  # quantile term at grid index k-1
BINDING_UPPER = 2  # quantile term at grid index k (continuous recursion only)

#: Slack under which a quantile argument just above 1 counts as exactly 1.
#: At such arguments the quantile is the (finite, for count statistics)
#: top of the support; treating them as > 1 would spuriously report
#: non-existence merely from rounding noise in gamma + F.
EXISTENCE_TOL = 1e-15


def existence_guard(beta: float):
    """Classify a quantile argument: (overflow?, value clamped to <= 1)."""
    if beta - EXISTENCE_TOL > 1.0:
        return True, math.inf
    return False, min(beta, 1.0)


@dataclass
class PushResult:
    """Breakpoint sequence ``y_{-r}, ..., y_m, y_{m+1}`` plus bookkeeping.

    ``breakpoints[i]`` stores the breakpoint of index ``k = i - r``; use
    :meth:`y_at` for index-based access.  ``binding[k]`` records which term
    of the recursion achieved the maximum at step k.
    """

    family: Family
    grid: ParamGrid
    r: int
    gamma: float
    breakpoints: np.ndarray = field(repr=False)
    exists: bool
    binding: np.ndarray = field(repr=False)

    def y_at(self, k: int) -> float:
        if not -self.r <= k <= self.grid.m + 1:
            raise IndexError(f"breakpoint index {k} outside -r..m+1")
        return float(self.breakpoints[k + self.r])

    def y_slice(self, k_lo: int, k_hi: int) -> np.ndarray:
        """Breakpoints for indices k_lo..k_hi inclusive."""
        return self.breakpoints[k_lo + self.r : k_hi + self.r + 1]


def _check_args(family, grid, r, gamma):
    if not isinstance(grid, ParamGrid):
        raise TypeError("grid must be a ParamGrid")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"confidence level must lie strictly in (0, 1), got {gamma}")
    if not 1 <= r <= grid.m:
        raise ValueError(f"width index r must be in 1..{grid.m}, got {r}")


def push_continuous(family: Family, grid: ParamGrid, r: int, gamma: float) -> PushResult:
    """Run the continuous-parameter recursion (normal mean, binomial).

    Processes indices in blocks of at most ``r``: every block entry only
    looks back ``r`` slots, so the two quantile terms of a whole block can
    be evaluated vectorized and the running maximum applied afterwards.
    """
    _check_args(family, grid, r, gamma)
    if family.discrete_param:
        raise TypeError("continuous recursion needs a continuous parameter family")
    m = grid.m
    inf_y = family.support[0]
    y = np.full(m + r + 2, inf_y)
    y[m + r + 1] = math.inf
    binding = np.full(m + 1, BINDING_PREV, dtype=np.int8)
    binding[0] = BINDING_INIT
    exists = True

    k = 1
    while k <= m:
        block = min(r, m - k + 1)
        ks = np.arange(k, k + block)
        y_ref = y[ks]  # slot of index k - r
        th_lo = grid.theta_at(ks - 1)
        th_hi = grid.theta_at(ks)
        beta_lo = gamma + family.cdf(th_lo, y_ref)
        beta_hi = gamma + family.cdf(th_hi, y_ref)
        # both quantile terms are evaluated even though stochastic ordering
        # makes the upper one decisive for existence
        over = (beta_lo - EXISTENCE_TOL > 1.0) | (beta_hi - EXISTENCE_TOL > 1.0)
        q_lo = family.quantile(th_lo, np.minimum(beta_lo, 1.0))
        q_hi = family.quantile(th_hi, np.minimum(beta_hi, 1.0))
        cand = np.maximum(q_lo, q_hi)
        cand[over] = math.inf
        vals = np.maximum(np.maximum.accumulate(cand), y[k - 1 + r])
        y[ks + r] = vals
        binding[ks] = np.where(
            vals == q_hi, BINDING_UPPER, np.where(vals == q_lo, BINDING_LOWER, BINDING_PREV)
        )
        if not math.isfinite(vals[-1]):
            # everything from the first infinite breakpoint on stays infinite
            first_bad = k + int(np.argmax(~np.isfinite(vals)))
            y[first_bad + r : m + r + 1] = math.inf
            binding[first_bad : m + 1] = BINDING_PREV
            exists = False
            break
        k += block

    return PushResult(family, grid, r, gamma, y, exists, binding)


def push_discrete(family: Family, grid: ParamGrid, r: int, gamma: float) -> PushResult:
    """Run the discrete-parameter recursion (hypergeometric).

    The grid must enumerate the parameter values themselves:
    ``lo = 0``, ``hi = m = N``.
    """
    _check_args(family, grid, r, gamma)
    if not family.discrete_param:
        raise TypeError("discrete recursion needs a discrete parameter family")
    if isinstance(family, Hypergeometric) and not (
        grid.lo == 0 and grid.hi == family.N and grid.m == family.N
    ):
        raise ValueError(
            f"hypergeometric grid must be (0, N, N) with N={family.N}, "
            f"got ({grid.lo}, {grid.hi}, {grid.m})"
        )
    m = grid.m
    inf_y = family.support[0]
    y = np.full(m + r + 2, inf_y)
    y[m + r + 1] = math.inf
    binding = np.full(m + 1, BINDING_PREV, dtype=np.int8)
    binding[0] = BINDING_INIT
    exists = True

    for k in range(1, m + 1):
        y_ref = y[k - 1]  # slot of index k - r - 1
        theta = grid.theta_at(k - 1)
        beta = gamma + family.cdf(theta, y_ref)
        over, beta_c = existence_guard(beta)
        if over:
            y[k + r : m + r + 1] = math.inf
            exists = False
            break
        q = family.quantile(theta, beta_c)
        prev = y[k - 1 + r]
        if q >= prev:
            y[k + r] = q
            binding[k] = BINDING_LOWER
        else:
            y[k + r] = prev
            binding[k] = BINDING_PREV

    return PushResult(family, grid, r, gamma, y, exists, binding)


def run_push(family: Family, grid: ParamGrid, r: int, gamma: float) -> PushResult:
    """Dispatch to the recursion matching the family's parameter type."""
    if family.discrete_param:
        return push_discrete(family, grid, r, gamma)
    return push_continuous(family, grid, r, gamma)


def grid_constraint_value(
    result: PushResult, k: int, side: int = BINDING_LOWER, y_k: float | None = None
) -> float:
    """Coverage mass the step-k constraint places between its breakpoints.

    For the continuous recursion this is ``F_j(y_k) - F_j(y_{k-r})`` with
    ``j = k-1`` (side=BINDING_LOWER) or ``j = k`` (side=BINDING_UPPER); for
    the discrete recursion it is ``F_{k-1}(y_k) - F_{k-1}(y_{k-r-1})``.
    Whenever a quantile term binds at k, the matching value equals gamma.
    ``y_k`` overrides the stored breakpoint (used to probe perturbations).
    """
    if not 1 <= k <= result.grid.m:
        raise IndexError(f"constraint index {k} outside 1..m")
    fam, grid = result.family, result.grid
    yk = result.y_at(k) if y_k is None else y_k
    if fam.discrete_param:
        theta = grid.theta_at(k - 1)
        y_ref = result.y_at(k - result.r - 1)
    else:
        j = k if side == BINDING_UPPER else k - 1
        theta = grid.theta_at(j)
        y_ref = result.y_at(k - result.r)
    return float(fam.cdf(theta, yk) - fam.cdf(theta, y_ref))
