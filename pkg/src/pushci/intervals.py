"""Interval functions built from breakpoints, and their transforms.

An :class:`IntervalFunction` is a monotone step map from the statistic to
grid-valued endpoint pairs.  Raw functions keep the unclamped right
endpoint (which runs past the parameter bound near the top of the grid) so
that the range constraint can detect and shift the overflowing segments;
the point query :func:`interval_at` instead reports endpoints clamped at
the top of the parameter space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .families import Family
from .grid import ParamGrid
from .push import PushResult, run_push

#: breakpoints closer than this are merged when boundary sets are combined
MERGE_TOL = 1e-12


@dataclass(frozen=True)
class IntervalFunction:
    """Step function y -> [lower, upper] on segments [boundaries[i], boundaries[i+1])."""

    boundaries: np.ndarray  # length S+1, strictly increasing, last entry +inf
    lower: np.ndarray  # length S
    upper: np.ndarray
    provenance: str
    nominal_width: float

    def __post_init__(self):
        b, lo, up = self.boundaries, self.lower, self.upper
        if len(b) != len(lo) + 1 or len(lo) != len(up):
            raise ValueError("boundary/value lengths are inconsistent")
        if not np.all(b[:-1] < b[1:]):
            raise ValueError("segment boundaries must be strictly increasing")
        if np.any(np.diff(lo) < 0) or np.any(np.diff(up) < 0):
            raise ValueError("interval endpoints must be non-decreasing")
        if np.any(lo > up):
            raise ValueError("lower endpoint exceeds upper endpoint")

    @property
    def segments(self) -> int:
        return len(self.lower)

    def _index(self, y):
        idx = np.searchsorted(self.boundaries, y, side="right") - 1
        return np.clip(idx, 0, self.segments - 1)

    def eval_lower(self, y):
        return self.lower[self._index(y)]

    def eval_upper(self, y):
        return self.upper[self._index(y)]

    def value_at(self, y) -> tuple[float, float]:
        i = int(self._index(float(y)))
        return float(self.lower[i]), float(self.upper[i])


def _theta_extended(grid: ParamGrid, k: np.ndarray) -> np.ndarray:
    """Grid node values without the sup-theta clamp (may exceed hi)."""
    karr = np.asarray(k, dtype=float)
    val = grid.lo + (grid.hi - grid.lo) * karr / grid.m
    return np.where(karr == grid.m, grid.hi, val)


def _compact(boundaries, lower, upper):
    """Drop boundaries between consecutive segments with identical values."""
    if len(lower) <= 1:
        return boundaries, lower, upper
    keep = np.ones(len(lower), dtype=bool)
    keep[1:] = (lower[1:] != lower[:-1]) | (upper[1:] != upper[:-1])
    idx = np.nonzero(keep)[0]
    return np.append(boundaries[idx], boundaries[-1]), lower[idx], upper[idx]


def build_interval_function(result: PushResult) -> IntervalFunction:
    """Materialize the raw step function [theta_k, theta_{k+r}) per breakpoint band.

    Zero-length bands (tied breakpoints) are dropped, keeping the larger
    index, which matches the evaluation rule "largest k with y_k <= y".
    """
    if not result.exists:
        raise ValueError("push interval does not exist at this width and level")
    grid, r = result.grid, result.r
    m = grid.m
    t = np.empty(m + 2)
    t[: m + 1] = result.y_slice(0, m)
    t[m + 1] = math.inf
    ks = np.arange(m + 1)
    lower = grid.theta_at(ks)
    upper = _theta_extended(grid, ks + r)
    keep = np.nonzero(t[:-1] < t[1:])[0]
    boundaries = np.append(t[keep], t[-1])
    return IntervalFunction(
        boundaries, lower[keep], upper[keep], "push-raw", grid.width_of(r)
    )


def interval_at(result: PushResult, y: float) -> tuple[float, float]:
    """Point query [theta_k, theta_{k+r}] with k the largest index with y_k <= y.

    The upper endpoint clamps at the top of the parameter space.
    """
    if not result.exists:
        raise ValueError("push interval does not exist at this width and level")
    inf_y, sup_y = result.family.support
    if not math.isfinite(y) or not inf_y <= y <= sup_y:
        raise ValueError(f"statistic value {y} lies outside the support")
    bnd = result.y_slice(0, result.grid.m + 1)
    k = int(np.searchsorted(bnd, y, side="right")) - 1
    k = max(k, 0)
    return (
        float(result.grid.theta_at(k)),
        float(result.grid.theta_at(k + result.r)),
    )


def constrain(f: IntervalFunction, lo: float, hi: float) -> IntervalFunction:
    """Shift overflowing segments back inside [lo, hi] keeping the nominal width.

    A segment with upper > hi becomes [hi - w, hi]; one with lower < lo
    becomes [lo, lo + w].  Every output interval contains the input
    interval's intersection with [lo, hi], so coverage inside the bounds
    never decreases.
    """
    w = f.nominal_width
    if w > hi - lo + 1e-12 * max(abs(hi - lo), 1.0):
        raise ValueError(f"nominal width {w} exceeds the range {hi - lo}")
    over = f.upper > hi
    under = ~over & (f.lower < lo)
    # hi - w equals the last unclamped lower endpoint as a real number but may
    # differ by an ulp as a float; snap to the neighbors so the output stays
    # monotone bit-for-bit (same for lo + w against the first unclamped upper)
    shift_lo = hi - w
    if over.any() and not over.all():
        shift_lo = max(shift_lo, float(np.max(f.lower[~over])))
    shift_hi = lo + w
    if under.any() and not under.all():
        shift_hi = min(shift_hi, float(np.min(f.upper[~under])))
    upper = np.where(over, hi, f.upper)
    lower = np.where(over, shift_lo, f.lower)
    lower = np.where(under, lo, lower)
    upper = np.where(under, shift_hi, upper)
    b, lv, uv = _compact(f.boundaries, lower, upper)
    return IntervalFunction(b, lv, uv, "constrained", w)


def symmetrize(f: IntervalFunction, family: Family) -> IntervalFunction:
    """Union with the mirror image under y -> n - y, theta -> c - theta.

    The output contains the input pointwise and satisfies the mirror
    identity exactly: the second half of the segment table is filled by
    reflecting the first half, so reflected endpoint pairs are equal
    bit-for-bit.
    """
    mirror = family.mirror
    if mirror is None:
        raise TypeError(f"{type(family).__name__} has no mirror map")
    n_stat, c = mirror
    inf_y, sup_y = family.support

    interior = f.boundaries[np.isfinite(f.boundaries)]
    interior = interior[(interior > inf_y) & (interior < sup_y)]
    merged = np.sort(np.concatenate([interior, n_stat - interior]))
    if len(merged):
        keep = np.ones(len(merged), dtype=bool)
        keep[1:] = np.diff(merged) > MERGE_TOL
        merged = merged[keep]
        merged = merged[
            (merged > inf_y + MERGE_TOL) & (merged < sup_y - MERGE_TOL)
        ]
    bounds = np.concatenate([[inf_y], merged, [sup_y]])
    count = len(bounds) - 1
    lower = np.empty(count)
    upper = np.empty(count)

    def canon(v: float) -> float:
        # snap to a value set closed under v -> c - v (within one ulp of v),
        # so reflecting an endpoint twice gives it back bit-for-bit
        return c - (c - v)

    for j in range((count + 1) // 2):
        ep = 0.5 * (bounds[j] + bounds[j + 1])
        rp = n_stat - ep
        l_here = canon(float(f.eval_lower(ep)))
        u_here = canon(float(f.eval_upper(ep)))
        l_refl = canon(float(f.eval_lower(rp)))
        u_refl = canon(float(f.eval_upper(rp)))
        lower[j] = min(l_here, c - u_refl)
        upper[j] = max(u_here, c - l_refl)
        jm = count - 1 - j
        if jm != j:
            lower[jm] = c - upper[j]
            upper[jm] = c - lower[j]
    # extend the last band past the top of the support so the function stays
    # total on the real line
    boundaries = np.concatenate([bounds, [math.inf]])
    lower = np.append(lower, lower[-1])
    upper = np.append(upper, upper[-1])
    b, lv, uv = _compact(boundaries, lower, upper)
    return IntervalFunction(b, lv, uv, "symmetric", f.nominal_width)


def achieved_width(f: IntervalFunction) -> float:
    """Largest interval length over all segments."""
    return float(np.max(f.upper - f.lower))


def min_width(family: Family, grid: ParamGrid, gamma: float) -> tuple[int, PushResult]:
    """Smallest width index r* whose push recursion completes, plus its result.

    Exponential-then-binary search over r; the bracket endpoints are actual
    recursion runs, so the returned r* satisfies exists(r*) and not
    exists(r* - 1) regardless of whether existence is monotone in r.  A
    linear rescan guards the (never observed) non-monotone case.
    """
    runs: dict[int, PushResult] = {}

    def probe(r: int) -> PushResult:
        if r not in runs:
            runs[r] = run_push(family, grid, r, gamma)
        return runs[r]

    m = grid.m
    r = 1
    last_fail = 0
    while not probe(r).exists:
        last_fail = r
        if r == m:
            raise RuntimeError(
                "push recursion failed even at the full range width; "
                "this cannot happen for gamma < 1"
            )
        r = min(2 * r, m)
    lo, hi = last_fail, r
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if probe(mid).exists:
            hi = mid
        else:
            lo = mid
    r_star = hi
    if not probe(r_star).exists or (r_star > 1 and probe(r_star - 1).exists):
        r_star = next(c for c in range(1, m + 1) if probe(c).exists)
    return r_star, probe(r_star)


@dataclass(frozen=True)
class CenterPoint:
    """Report the interval at the observed count itself (u = 0)."""


@dataclass(frozen=True)
class Sampled:
    """Report the interval at count + u with u drawn Uniform[-1/2, 1/2]."""

    seed: int


@dataclass(frozen=True)
class FullFunction:
    """Report every interval reachable over u in [-1/2, 1/2] with its weight."""


RandomizationPolicy = Union[CenterPoint, Sampled, FullFunction]


@dataclass(frozen=True)
class WeightedInterval:
    u_lo: float
    u_hi: float
    lower: float
    upper: float
    weight: float


def report_interval(result: PushResult, x, policy: RandomizationPolicy):
    """Turn an observed statistic into an interval under the given policy."""
    family = result.family
    if family.discrete_statistic:
        xv = float(x)
        n = family.n
        if xv != int(xv) or not 0 <= xv <= n:
            raise ValueError(f"observed count must be an integer in 0..{n}, got {x}")
    else:
        xv = float(x)
        if not math.isfinite(xv):
            raise ValueError(f"observed statistic must be finite, got {x}")
        if not isinstance(policy, CenterPoint):
            raise TypeError("a continuous statistic is reported without randomization")

    if isinstance(policy, CenterPoint):
        return interval_at(result, xv)
    if isinstance(policy, Sampled):
        u = float(np.random.default_rng(policy.seed).uniform(-0.5, 0.5))
        return interval_at(result, xv + u)
    if isinstance(policy, FullFunction):
        y_lo, y_hi = xv - 0.5, xv + 0.5
        bps = result.y_slice(0, result.grid.m)
        inner = np.unique(bps[(bps > y_lo) & (bps < y_hi)])
        edges = np.concatenate([[y_lo], inner, [y_hi]])
        pieces = []
        for a, b in zip(edges[:-1], edges[1:]):
            left, right = interval_at(result, float(a))
            pieces.append(
                WeightedInterval(a - xv, b - xv, left, right, float(b - a))
            )
        return pieces
    raise TypeError(f"unknown randomization policy: {policy!r}")


def fmt17(x: float) -> str:
    """Decimal string with 17 significant digits (round-trips a double)."""
    return f"{float(x):.17g}"


def segment_rows(f: IntervalFunction):
    """Rows (y_lo, y_hi, lower, upper) as 17-significant-digit strings."""
    for i in range(f.segments):
        yield (
            fmt17(f.boundaries[i]),
            fmt17(f.boundaries[i + 1]),
            fmt17(f.lower[i]),
            fmt17(f.upper[i]),
        )


def to_json_dict(result: PushResult, f: IntervalFunction | None = None) -> dict:
    grid = result.grid
    out = {
        "family": result.family.describe(),
        "grid": {
            "lo": fmt17(grid.lo),
            "hi": fmt17(grid.hi),
            "m": grid.m,
            "sup_theta": fmt17(grid.sup_theta),
        },
        "gamma": fmt17(result.gamma),
        "r": result.r,
        "width": fmt17(grid.width_of(result.r)),
        "exists": result.exists,
        "breakpoints": [fmt17(v) for v in result.breakpoints],
    }
    if f is not None:
        out["variant"] = f.provenance
        out["segments"] = [
            {"y_lo": a, "y_hi": b, "lower": lo, "upper": up}
            for a, b, lo, up in segment_rows(f)
        ]
    return out
