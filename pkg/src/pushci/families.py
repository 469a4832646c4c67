"""Distribution families exposing the smoothed-statistic cdf and quantile.

Discrete counts (binomial, hypergeometric) are smoothed with an independent
Uniform[-1/2, 1/2] so the cdf of ``Y = count + U`` is continuous and the
quantile is unique: the smoothed cdf is the piecewise-linear function that
bisects the steps of the base cdf.  Quantiles invert it in closed form once
the bracketing integer is found.  For the normal mean the statistic is
already continuous and no smoothing is applied.

All quantile functions are extended with ``quantile(beta) = +inf`` for
``beta > 1``; the breakpoint recursion relies on that extension to certify
non-existence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import betainc, gammaln, ndtr, ndtri, xlog1py, xlogy


def _scalarize(out, *inputs):
    if all(np.isscalar(v) or np.ndim(v) == 0 for v in inputs):
        return float(out)
    return out


def normal_cdf(z):
    """Standard normal cdf, |error| <= 1e-12 over the real line."""
    return _scalarize(ndtr(np.asarray(z, dtype=float)), z)


def normal_quantile(beta):
    """Standard normal quantile, |error| <= 1e-9 on [1e-10, 1 - 1e-10]."""
    return _scalarize(ndtri(np.asarray(beta, dtype=float)), beta)


class Family:
    """Common surface: per-parameter cdf/quantile of the smoothed statistic."""

    #: True when the parameter itself is a discrete count (hypergeometric).
    discrete_param = False
    #: True when the underlying statistic is an integer count smoothed by U.
    discrete_statistic = False

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    @property
    def mirror(self):
        """(statistic total, parameter total) for the reflection map, or None."""
        return None

    def cdf(self, theta, y):
        raise NotImplementedError

    def quantile(self, theta, beta):
        raise NotImplementedError

    def sample_statistic(self, theta, size, rng):
        """Draw `size` raw statistics (counts, or the observation itself)."""
        raise NotImplementedError

    def sample_smoothed(self, theta, size, rng):
        """Draw `size` smoothed statistics under the given parameter."""
        out = self.sample_statistic(theta, size, rng)
        if self.discrete_statistic:
            out = out + rng.uniform(-0.5, 0.5, size=size)
        return out

    def describe(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Binomial(Family):
    """Success count out of ``n`` trials; parameter is the success probability."""

    n: int

    discrete_statistic = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"binomial needs n >= 1, got {self.n}")

    @property
    def support(self):
        return (-0.5, self.n + 0.5)

    @property
    def mirror(self):
        return (self.n, 1.0)

    @property
    def label(self):
        return "binom"

    def describe(self):
        return {"family": "binom", "n": self.n}

    def _check_theta(self, p):
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("binomial success probability must lie in [0, 1]")

    def base_cdf(self, theta, s):
        """Base cdf G(s) of the unsmoothed count at integer s (vectorized)."""
        p, sv = np.broadcast_arrays(
            np.asarray(theta, dtype=float), np.asarray(s, dtype=float)
        )
        self._check_theta(p)
        out = np.zeros(sv.shape)
        out[sv >= self.n] = 1.0
        mid = (sv >= 0) & (sv < self.n)
        if mid.any():
            sm = sv[mid]
            # regularized incomplete beta identity for the binomial cdf
            out[mid] = betainc(self.n - sm, sm + 1, 1 - p[mid])
        return _scalarize(out, theta, s)

    def base_pmf(self, theta, s):
        p, sv = np.broadcast_arrays(
            np.asarray(theta, dtype=float), np.asarray(s, dtype=float)
        )
        self._check_theta(p)
        out = np.zeros(sv.shape)
        ok = (sv >= 0) & (sv <= self.n)
        if ok.any():
            sm, pm = sv[ok], p[ok]
            logg = (
                gammaln(self.n + 1)
                - gammaln(sm + 1)
                - gammaln(self.n - sm + 1)
                + xlogy(sm, pm)
                + xlog1py(self.n - sm, -pm)
            )
            out[ok] = np.exp(logg)
        return _scalarize(out, theta, s)

    def cdf(self, theta, y):
        p, yv = np.broadcast_arrays(
            np.asarray(theta, dtype=float), np.asarray(y, dtype=float)
        )
        self._check_theta(p)
        out = np.empty(yv.shape)
        lo = yv <= -0.5
        hi = yv >= self.n + 0.5
        out[lo] = 0.0
        out[hi] = 1.0
        mid = ~(lo | hi)
        if mid.any():
            ym, pm = yv[mid], p[mid]
            s = np.floor(ym + 0.5)  # round half up
            out[mid] = self.base_cdf(pm, s - 1) + self.base_pmf(pm, s) * (
                ym - s + 0.5
            )
        return _scalarize(out, theta, y)

    def quantile(self, theta, beta):
        p, bv = np.broadcast_arrays(
            np.asarray(theta, dtype=float), np.asarray(beta, dtype=float)
        )
        self._check_theta(p)
        out = np.empty(bv.shape)
        over = bv > 1.0
        zero = bv <= 0.0
        out[over] = math.inf
        out[zero] = -0.5
        gen = ~(over | zero)
        if gen.any():
            out[gen] = self._quantile_core(p[gen], bv[gen])
        return _scalarize(out, theta, beta)

    def _quantile_core(self, p, beta):
        """Generalized inverse min{y : F(y) >= beta} for beta in (0, 1]."""
        n = self.n
        # normal-approximation starting point; correctness comes from the
        # bracket search below, the guess only shortens it
        with np.errstate(invalid="ignore"):
            spread = ndtri(beta) * np.sqrt(n * p * (1 - p))
        guess = np.where(np.isfinite(spread), np.floor(n * p + spread), n)
        hi = np.clip(guess, 0.0, n)
        step = 1.0
        while True:
            low_mask = self.base_cdf(p, hi) < beta
            if not low_mask.any():
                break
            hi = np.where(low_mask, np.minimum(hi + step, n), hi)
            step *= 2
        lo = hi - 1.0
        step = 1.0
        while True:
            high_mask = (lo >= 0) & (self.base_cdf(p, lo) >= beta)
            if not high_mask.any():
                break
            lo = np.where(high_mask, lo - step, lo)
            step *= 2
        lo = np.maximum(lo, -1.0)
        while True:
            open_mask = hi - lo > 1
            if not open_mask.any():
                break
            mid = np.floor((lo + hi) / 2)
            ge = self.base_cdf(p, mid) >= beta
            hi = np.where(open_mask & ge, mid, hi)
            lo = np.where(open_mask & ~ge, mid, lo)
        s_star = hi
        g_prev = self.base_cdf(p, s_star - 1)
        dens = self.base_pmf(p, s_star)
        return s_star - 0.5 + (beta - g_prev) / dens

    def sample_statistic(self, theta, size, rng):
        return rng.binomial(self.n, theta, size=size)


@lru_cache(maxsize=4096)
def _hyper_row(n: int, pop: int, theta: int):
    """Support bounds, pmf row and cdf row of Hyper(theta, n, pop).

    The pmf is built by the ratio recurrence outward from the mode and
    normalized with a compensated sum, which keeps its relative error near
    support-size * eps independent of how large the population is (a
    log-gamma route would lose ~|log Gamma| * eps).  The cdf row is then
    assembled from whichever running sum comes from the lighter tail, so
    both tails keep near-machine absolute accuracy.
    """
    lo = max(0, n - (pop - theta))
    hi = min(n, theta)
    size = hi - lo + 1
    mode = min(max(int((n + 1) * (theta + 1) // (pop + 2)), lo), hi)
    u = np.empty(size)
    im = mode - lo
    u[im] = 1.0
    if im < size - 1:
        x = np.arange(mode, hi, dtype=float)
        up = ((theta - x) * (n - x)) / ((x + 1) * (pop - theta - n + x + 1))
        u[im + 1 :] = np.cumprod(up)
    if im > 0:
        x = np.arange(mode, lo, -1, dtype=float)
        down = (x * (pop - theta - n + x)) / ((theta - x + 1) * (n - x + 1))
        u[im - 1 :: -1] = np.cumprod(down)
    pmf = u / math.fsum(u)
    left = np.cumsum(pmf)
    tail = np.cumsum(pmf[::-1])[::-1]  # tail[i] = sum_{j >= i} pmf[j]
    upper_tail = np.concatenate([tail[1:], [0.0]])
    cdf = np.where(left <= 0.5, left, 1.0 - upper_tail)
    cdf = np.maximum.accumulate(np.clip(cdf, 0.0, 1.0))
    cdf[-1] = 1.0
    pmf.setflags(write=False)
    cdf.setflags(write=False)
    return lo, hi, pmf, cdf


@dataclass(frozen=True)
class Hypergeometric(Family):
    """Success count in a size-``n`` draw without replacement from ``N`` items.

    The parameter is the number of successes in the population, an integer
    in {0, ..., N}.
    """

    n: int
    N: int

    discrete_param = True
    discrete_statistic = True

    def __post_init__(self):
        if not 1 <= self.n <= self.N:
            raise ValueError(f"need 1 <= n <= N, got n={self.n}, N={self.N}")

    @property
    def support(self):
        return (-0.5, self.n + 0.5)

    @property
    def mirror(self):
        return (self.n, float(self.N))

    @property
    def label(self):
        return "hyper"

    def describe(self):
        return {"family": "hyper", "n": self.n, "N": self.N}

    def _theta_int(self, theta) -> int:
        t = float(theta)
        if t != int(t) or not 0 <= t <= self.N:
            raise ValueError(
                f"hypergeometric parameter must be an integer in 0..{self.N}, got {theta}"
            )
        return int(t)

    def _row(self, theta):
        return _hyper_row(self.n, self.N, self._theta_int(theta))

    def base_cdf(self, theta, s):
        lo, hi, _, cdf = self._row(theta)
        sv = np.asarray(s, dtype=float)
        idx = np.clip(np.floor(sv), lo, hi).astype(int) - lo
        out = np.where(sv < lo, 0.0, np.where(sv >= hi, 1.0, cdf[idx]))
        return _scalarize(out, s)

    def base_pmf(self, theta, s):
        lo, hi, pmf, _ = self._row(theta)
        sv = np.asarray(s, dtype=float)
        inside = (sv >= lo) & (sv <= hi) & (sv == np.floor(sv))
        idx = np.clip(sv, lo, hi).astype(int) - lo
        out = np.where(inside, pmf[idx], 0.0)
        return _scalarize(out, s)

    def cdf(self, theta, y):
        if np.ndim(theta) > 0:
            th, yv = np.broadcast_arrays(
                np.asarray(theta, dtype=float), np.asarray(y, dtype=float)
            )
            flat = [self.cdf(t, w) for t, w in zip(th.ravel(), yv.ravel())]
            return np.asarray(flat).reshape(th.shape)
        yv = np.asarray(y, dtype=float)
        out = np.empty(yv.shape)
        lo_mask = yv <= -0.5
        hi_mask = yv >= self.n + 0.5
        out[lo_mask] = 0.0
        out[hi_mask] = 1.0
        mid = ~(lo_mask | hi_mask)
        if mid.any():
            ym = yv[mid]
            s = np.floor(ym + 0.5)
            out[mid] = self.base_cdf(theta, s - 1) + self.base_pmf(theta, s) * (
                ym - s + 0.5
            )
        return _scalarize(out, y)

    def quantile(self, theta, beta):
        if np.ndim(theta) > 0:
            th, bv = np.broadcast_arrays(
                np.asarray(theta, dtype=float), np.asarray(beta, dtype=float)
            )
            flat = [self.quantile(t, b) for t, b in zip(th.ravel(), bv.ravel())]
            return np.asarray(flat).reshape(th.shape)
        lo, hi, pmf, cdf = self._row(theta)
        bv = np.asarray(beta, dtype=float)
        out = np.empty(bv.shape)
        over = bv > 1.0
        zero = bv <= 0.0
        out[over] = math.inf
        out[zero] = -0.5
        gen = ~(over | zero)
        if gen.any():
            bb = bv[gen]
            i = np.searchsorted(cdf, bb, side="left")
            s_star = lo + i
            g_prev = np.where(i > 0, cdf[np.maximum(i - 1, 0)], 0.0)
            out[gen] = s_star - 0.5 + (bb - g_prev) / pmf[i]
        return _scalarize(out, beta)

    def sample_statistic(self, theta, size, rng):
        t = self._theta_int(theta)
        return rng.hypergeometric(t, self.N - t, self.n, size=size)


@dataclass(frozen=True)
class NormalMean(Family):
    """Normal observation with known standard deviation; parameter is the mean."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def support(self):
        return (-math.inf, math.inf)

    @property
    def label(self):
        return "normal"

    def describe(self):
        return {"family": "normal", "sigma": self.sigma}

    def cdf(self, theta, y):
        th = np.asarray(theta, dtype=float)
        yv = np.asarray(y, dtype=float)
        with np.errstate(invalid="ignore"):
            out = ndtr((yv - th) / self.sigma)
        # y and theta both infinite never occurs in the recursion; define 0/1
        out = np.where(np.isnan(out), np.where(yv > th, 1.0, 0.0), out)
        return _scalarize(out, theta, y)

    def quantile(self, theta, beta):
        th, bv = np.broadcast_arrays(
            np.asarray(theta, dtype=float), np.asarray(beta, dtype=float)
        )
        out = np.empty(bv.shape)
        over = bv > 1.0
        zero = bv <= 0.0
        out[over] = math.inf
        out[zero] = -math.inf
        gen = ~(over | zero)
        if gen.any():
            out[gen] = th[gen] + self.sigma * ndtri(bv[gen])
        return _scalarize(out, theta, beta)

    def sample_statistic(self, theta, size, rng):
        return rng.normal(theta, self.sigma, size=size)


class DiscretePmfView:
    """Lazy view of the base (unsmoothed) pmf and cdf at one parameter value."""

    def __init__(self, family: Family, theta):
        if not family.discrete_statistic:
            raise TypeError("pmf view is only defined for count statistics")
        self.family = family
        self.theta = theta

    def pmf(self, s):
        return self.family.base_pmf(self.theta, s)

    def cdf(self, s):
        return self.family.base_cdf(self.theta, s)


def cdf(family: Family, grid, k, y):
    """Smoothed-statistic cdf at grid node ``k``."""
    return family.cdf(grid.theta_at(k), y)


def quantile(family: Family, grid, k, beta):
    """Smoothed-statistic quantile at grid node ``k`` (+inf for beta > 1)."""
    return family.quantile(grid.theta_at(k), beta)
