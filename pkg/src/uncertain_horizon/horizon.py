"""Episode-length distributions and their duality with discount curves."""
from __future__ import annotations

import logging

import numpy as np

from .discount import CurveError, DiscountCurve

log = logging.getLogger(__name__)

DEFAULT_MAX_SUPPORT = 10**6
MASS_TOL = 1e-12


class NotASurvivalFunction(CurveError):
    pass


class HorizonDistribution:
    """Distribution of the episode length ``H`` on ``{1, 2, ...}``.

    Stored through its survival function ``P(H >= h)``, tabulated at construction
    until the remaining mass drops below 1e-12 or ``max_support`` entries are
    reached.  Draws that land in the untabulated remainder return ``max_support``
    and are counted as capped.
    """

    def __init__(self, curve: DiscountCurve, max_support: int = DEFAULT_MAX_SUPPORT):
        if curve.values is not None and np.any(np.diff(curve.values) > 0):
            raise NotASurvivalFunction("discount curve is increasing somewhere")
        self.curve = curve
        self.max_support = int(max_support)
        n = _table_length(curve, self.max_support)
        surv = np.atleast_1d(curve.gamma(np.arange(1, n + 1))).astype(float)
        surv.setflags(write=False)
        self._surv = surv
        self.residual_mass = float(curve.gamma(n + 1))
        if self.residual_mass > MASS_TOL:
            log.info("horizon table capped at %d with residual mass %.3g", n, self.residual_mass)

    # ---------------------------------------------------------- constructors
    @classmethod
    def from_pmf(cls, pmf) -> "HorizonDistribution":
        """``pmf[i]`` is ``P(H = i + 1)``."""
        p = np.asarray(pmf, dtype=float)
        if p.ndim != 1 or p.size == 0 or np.any(p < 0):
            raise ValueError("pmf must be a non-empty vector of non-negative numbers")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"pmf sums to {p.sum()}, not 1")
        surv = np.cumsum(p[::-1])[::-1]
        surv = surv / surv[0]
        return cls(DiscountCurve.empirical(surv))

    @classmethod
    def point_mass(cls, length: int) -> "HorizonDistribution":
        return cls(DiscountCurve.point_mass(length))

    @classmethod
    def from_dict(cls, data: dict) -> "HorizonDistribution":
        data = {k: v for k, v in data.items() if k != "role"}
        return cls(DiscountCurve.from_dict(data))

    def to_dict(self) -> dict:
        return {**self.curve.to_dict(), "role": "horizon"}

    # ------------------------------------------------------------- queries
    @property
    def support_size(self) -> int:
        """Number of tabulated lengths."""
        return self._surv.size

    def survival(self, h: int) -> float:
        if h < 1:
            raise ValueError("h must be >= 1")
        if h <= self._surv.size:
            return float(self._surv[h - 1])
        return float(self.curve.gamma(h))

    def pmf(self, h: int) -> float:
        return self.survival(h) - self.survival(h + 1)

    def pmf_table(self) -> np.ndarray:
        """``P(H = h)`` for ``h = 1 .. support_size``."""
        nxt = np.append(self._surv[1:], self.residual_mass)
        return self._surv - nxt

    def survival_table(self) -> np.ndarray:
        return self._surv

    @property
    def mean_bound(self) -> float:
        return self.curve.total

    def mean(self) -> float:
        """``E[H]`` computed from the tabulated pmf."""
        h = np.arange(1, self._surv.size + 1)
        return float(np.dot(h, self.pmf_table()))

    # ------------------------------------------------------------ sampling
    def quantile(self, u: float) -> tuple[int, bool]:
        """Inverse CDF: smallest ``h`` with ``P(H <= h) >= u``; flags capped draws.

        ``P(H <= h) >= u`` is tested as ``P(H >= h + 1) <= 1 - u`` so that no pmf
        values are ever accumulated.
        """
        v = 1.0 - u
        # number of h in the table with survival(h) > v; survival(1) = 1 > v
        k = max(int(np.searchsorted(-self._surv, -v, side="left")), 1)
        if k < self._surv.size:
            return k, False
        if self.residual_mass <= v:
            return k, False
        return self.max_support, True

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` independent lengths; same inverse-CDF rule as ``quantile``."""
        v = 1.0 - rng.random(size)
        k = np.maximum(np.searchsorted(-self._surv, -v, side="left"), 1)
        capped = (k == self._surv.size) & (self.residual_mass > v)
        if np.any(capped):
            log.warning("%d episode lengths capped at %d", int(capped.sum()), self.max_support)
        return np.where(capped, self.max_support, k).astype(np.int64)

    def draw(self, rng: np.random.Generator) -> tuple[int, bool]:
        h, capped = self.quantile(rng.random())
        if capped:
            log.warning("episode length capped at %d", h)
        return h, capped


def _table_length(curve: DiscountCurve, cap: int) -> int:
    if curve.values is not None:
        return int(min(curve.values.size, cap))
    end = curve.support_end
    if end != float("inf"):
        return int(min(end, cap))
    # smallest n with gamma(n + 1) <= MASS_TOL, found by doubling then bisection
    hi = 1
    while hi < cap and curve.gamma(hi + 1) > MASS_TOL:
        hi *= 2
    if hi >= cap:
        return cap if curve.gamma(cap + 1) > MASS_TOL else _bisect(curve, hi // 2, cap)
    return _bisect(curve, max(hi // 2, 1), hi)


def _bisect(curve: DiscountCurve, lo: int, hi: int) -> int:
    # invariant: gamma(hi + 1) <= tol; returns smallest such n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if curve.gamma(mid + 1) > MASS_TOL:
            lo = mid
        else:
            hi = mid
    return hi if curve.gamma(lo + 1) > MASS_TOL else lo


def from_curve(curve: DiscountCurve, max_support: int = DEFAULT_MAX_SUPPORT) -> HorizonDistribution:
    return HorizonDistribution(curve, max_support)


def to_curve(dist: HorizonDistribution) -> DiscountCurve:
    return dist.curve


def sample_length(dist: HorizonDistribution, rng: np.random.Generator) -> int:
    return dist.draw(rng)[0]
