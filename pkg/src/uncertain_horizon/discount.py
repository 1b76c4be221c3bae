"""General discount curves, their tail sums and effective horizons.

A curve ``gamma(h)`` for ``h >= 1`` satisfies ``gamma(1) == 1`` and has a finite
total ``Gamma(1) = sum_h gamma(h)``.  When the curve is the survival function of an
episode-length distribution, ``gamma(h) = P(H >= h)`` and ``Gamma(1) = E[H]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import zeta

GEOMETRIC = "geometric"
POLYNOMIAL = "polynomial"
QUASI_HYPERBOLIC = "quasi_hyperbolic"
EMPIRICAL = "empirical"
CUSTOM = "custom"
KINDS = (GEOMETRIC, POLYNOMIAL, QUASI_HYPERBOLIC, EMPIRICAL, CUSTOM)

# numeric summation of callable curves
NEGLIGIBLE_TERM = 1e-15
NEGLIGIBLE_RUN = 10
MAX_NUMERIC_TERMS = 10**7


class CurveError(ValueError):
    pass


class SummabilityError(CurveError):
    pass


class DegenerateLayerError(CurveError):
    """Raised when a recursion would divide by a zero discount or tail sum."""


@dataclass(frozen=True, eq=False)
class DiscountCurve:
    """An immutable discount curve.

    Build instances with the classmethod constructors rather than directly.
    ``values`` holds an explicit finite support for empirical/custom curves and
    is ``None`` for the parametric families.
    """

    kind: str
    params: dict = field(default_factory=dict)
    values: np.ndarray | None = None
    approximate: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise CurveError(f"unknown curve kind {self.kind!r}")
        if self.values is not None:
            v = np.array(self.values, dtype=float)
            if v.ndim != 1 or v.size == 0:
                raise CurveError("curve values must be a non-empty 1-d sequence")
            if not np.all(np.isfinite(v)):
                raise SummabilityError("curve values must be finite")
            if np.any(v < 0) or np.any(v > 1):
                raise CurveError("curve values must lie in [0, 1]")
            if v[0] != 1.0:
                raise CurveError("gamma(1) must equal 1")
            # tails[i] = Gamma(i + 1); built backward so Gamma(h) - Gamma(h+1) == gamma(h)
            tails = np.concatenate([np.cumsum(v[::-1])[::-1], [0.0]])
            v.setflags(write=False)
            tails.setflags(write=False)
            object.__setattr__(self, "values", v)
            object.__setattr__(self, "_tails", tails)

    # ----------------------------------------------------------- constructors
    @classmethod
    def geometric(cls, gamma: float) -> "DiscountCurve":
        if not 0.0 <= gamma < 1.0:
            raise SummabilityError("geometric discount requires 0 <= gamma < 1")
        return cls(GEOMETRIC, {"gamma": float(gamma)})

    @classmethod
    def polynomial(cls, p: float, offset: int = 0) -> "DiscountCurve":
        """Survival of ``offset + H'`` where ``P(H' >= h) = h**-p``."""
        if p <= 1.0:
            raise SummabilityError("polynomial discount requires p > 1")
        if offset < 0 or int(offset) != offset:
            raise CurveError("offset must be a non-negative integer")
        return cls(POLYNOMIAL, {"p": float(p), "offset": int(offset)})

    @classmethod
    def quasi_hyperbolic(cls, beta: float, gamma: float) -> "DiscountCurve":
        if not 0.0 <= gamma < 1.0:
            raise SummabilityError("quasi-hyperbolic discount requires 0 <= gamma < 1")
        if not 0.0 <= beta <= 1.0:
            raise CurveError("quasi-hyperbolic beta must lie in [0, 1]")
        return cls(QUASI_HYPERBOLIC, {"beta": float(beta), "gamma": float(gamma)})

    @classmethod
    def empirical(cls, values) -> "DiscountCurve":
        c = cls(EMPIRICAL, {}, np.asarray(values, dtype=float))
        if np.any(np.diff(c.values) > 0):
            raise CurveError("empirical survival curve must be non-increasing")
        return c

    @classmethod
    def custom(cls, values) -> "DiscountCurve":
        return cls(CUSTOM, {}, np.asarray(values, dtype=float))

    @classmethod
    def from_function(cls, fn: Callable[[int], float], max_terms: int = MAX_NUMERIC_TERMS) -> "DiscountCurve":
        """Tabulate ``fn`` until it stays below 1e-15 for 10 consecutive indices.

        The result is flagged ``approximate``.  Raises ``SummabilityError`` when the
        terms never become negligible within ``max_terms``.
        """
        vals = []
        run = 0
        for h in range(1, max_terms + 1):
            g = float(fn(h))
            vals.append(g)
            run = run + 1 if g < NEGLIGIBLE_TERM else 0
            if run >= NEGLIGIBLE_RUN:
                break
        else:
            raise SummabilityError(f"curve terms not negligible after {max_terms} indices")
        vals = vals[: len(vals) - run] or vals[:1]
        return cls(CUSTOM, {}, np.asarray(vals), approximate=True)

    @classmethod
    def point_mass(cls, length: int) -> "DiscountCurve":
        """Survival curve of an episode length fixed at ``length``."""
        if length < 1:
            raise CurveError("length must be >= 1")
        return cls.empirical(np.ones(int(length)))

    # ------------------------------------------------------------ evaluation
    @property
    def support_end(self) -> float:
        """Largest ``h`` with ``gamma(h) > 0`` (``inf`` for unbounded support)."""
        if self.values is not None:
            nz = np.flatnonzero(self.values > 0)
            return int(nz[-1]) + 1
        if self.kind in (GEOMETRIC, QUASI_HYPERBOLIC):
            if self.params["gamma"] == 0.0:
                return 1
            if self.kind == QUASI_HYPERBOLIC and self.params["beta"] == 0.0:
                return 1
        return math.inf

    def gamma(self, h):
        """``gamma(h)``; accepts an int or an integer array (all entries >= 1)."""
        h_arr = np.asarray(h)
        if np.any(h_arr < 1):
            raise ValueError("discount index must be >= 1")
        k = self.kind
        if self.values is not None:
            n = self.values.size
            out = np.where(h_arr <= n, self.values[np.minimum(h_arr, n) - 1], 0.0)
        elif k == GEOMETRIC:
            out = np.power(self.params["gamma"], h_arr - 1.0)
        elif k == QUASI_HYPERBOLIC:
            b, g = self.params["beta"], self.params["gamma"]
            out = np.where(h_arr > 1, b * np.power(g, h_arr - 1.0), 1.0)
        else:
            p, off = self.params["p"], self.params["offset"]
            m = np.maximum(h_arr - off, 1).astype(float)
            out = np.power(m, -p)
        return float(out) if np.ndim(out) == 0 else out

    def tail_sum(self, h):
        """``Gamma(h) = sum_{j >= h} gamma(j)`` in closed form."""
        h_arr = np.asarray(h)
        if np.any(h_arr < 1):
            raise ValueError("tail-sum index must be >= 1")
        k = self.kind
        if self.values is not None:
            n = self.values.size
            out = np.where(h_arr <= n, self._tails[np.minimum(h_arr, n + 1) - 1], 0.0)
        elif k == GEOMETRIC:
            g = self.params["gamma"]
            out = np.power(g, h_arr - 1.0) / (1.0 - g)
        elif k == QUASI_HYPERBOLIC:
            b, g = self.params["beta"], self.params["gamma"]
            geo = b * np.power(g, h_arr - 1.0) / (1.0 - g)
            out = np.where(h_arr > 1, geo, 1.0 + b * g / (1.0 - g))
        else:
            p, off = self.params["p"], self.params["offset"]
            flat = np.maximum(off - h_arr + 1, 0).astype(float)
            out = flat + zeta(p, np.maximum(h_arr - off, 1).astype(float))
        return float(out) if np.ndim(out) == 0 else out

    @property
    def total(self) -> float:
        """``Gamma(1)``, the expected episode length for survival curves."""
        return self.tail_sum(1)

    # --------------------------------------------------------- serialization
    def to_dict(self) -> dict:
        if self.values is not None:
            return {"kind": self.kind, "values": self.values.tolist()}
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data: dict) -> "DiscountCurve":
        kind = data.get("kind")
        params = data.get("params", {})
        if kind == GEOMETRIC:
            return cls.geometric(**params)
        if kind == POLYNOMIAL:
            return cls.polynomial(**params)
        if kind == QUASI_HYPERBOLIC:
            return cls.quasi_hyperbolic(**params)
        if kind == EMPIRICAL:
            return cls.empirical(data["values"])
        if kind == CUSTOM:
            return cls.custom(data["values"])
        raise CurveError(f"unknown curve kind {kind!r}")

    def __repr__(self):
        if self.values is not None:
            return f"DiscountCurve({self.kind}, support={self.values.size})"
        return f"DiscountCurve({self.kind}, {self.params})"


@dataclass(frozen=True)
class EffectiveHorizon:
    n_delta: int
    delta: float


def tail_sum(curve: DiscountCurve, h: int) -> float:
    return curve.tail_sum(h)


def effective_horizon(curve: DiscountCurve, delta: float) -> EffectiveHorizon:
    """Smallest ``h`` with ``Gamma(h) <= delta``."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if curve.tail_sum(1) <= delta:
        return EffectiveHorizon(1, float(delta))
    # exponential then binary search; Gamma is non-increasing
    lo, hi = 1, 2
    while curve.tail_sum(hi) > delta:
        lo, hi = hi, hi * 2
        if hi > 2**60:
            raise SummabilityError("tail sum never falls below delta")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if curve.tail_sum(mid) > delta:
            lo = mid
        else:
            hi = mid
    return EffectiveHorizon(hi, float(delta))


def shifted_ratio(curve: DiscountCurve, h: int) -> float:
    """``gamma(h+1) / gamma(h)``: the backward-induction multiplier at layer ``h``."""
    g = curve.gamma(h)
    if g == 0.0:
        raise DegenerateLayerError(f"gamma({h}) = 0")
    return curve.gamma(h + 1) / g


def t_function(curve: DiscountCurve, beta: float, h: int) -> float:
    if h < 1:
        raise ValueError("h must be >= 1")
    if h == 1:
        return 1.0
    return float(t_values(curve, beta, h)[h - 1])


def t_values(curve: DiscountCurve, beta: float, h_max: int) -> np.ndarray:
    """``t(1), ..., t(h_max)`` as one array."""
    h = np.arange(1, h_max + 1)
    g = np.atleast_1d(curve.gamma(h))
    tails = np.atleast_1d(curve.tail_sum(h))
    if h_max >= 2 and np.any(tails[1:] == 0.0):
        bad = int(np.flatnonzero(tails[1:] == 0.0)[0]) + 2
        raise DegenerateLayerError(f"Gamma({bad}) = 0")
    factors = np.ones(h_max)
    factors[1:] = 1.0 + g[1:] / (np.power(h[1:], float(beta)) * tails[1:])
    out = g / g[0] * np.cumprod(factors)
    out[0] = 1.0
    return out


def recommended_params(curve: DiscountCurve, T: int) -> tuple[float, float]:
    """Return ``(beta, delta)`` from the regret-bound recipes for ``curve``'s family."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if curve.kind in (GEOMETRIC, QUASI_HYPERBOLIC):
        return 1.5, 1.0 / (T * (1.0 - curve.params["gamma"]))
    if curve.kind == POLYNOMIAL:
        p = curve.params["p"]
        e = 2.0 * p - 1.0
        return p - 1.0, T ** (-(p - 1.0) / e) * (p - 1.0) ** (-1.0 / e)
    return 1.5, 1.0 / T


@dataclass(frozen=True)
class BoundTerms:
    """Regret-bound terms with all hidden constants set to 1 (up to constants)."""

    bias_term: float
    estimation_term: float
    n_delta: int
    note: str = "up to constants: O~(.) factors set to 1"

    @property
    def total(self) -> float:
        return self.bias_term + self.estimation_term


def regret_bound_terms(curve: DiscountCurve, beta: float, delta: float, S: int, A: int, T: int) -> BoundTerms:
    """Evaluate both terms of the generic regret bound.

    ``bias_term = delta*T*t(N+1)/gamma(N+1)`` and
    ``estimation_term = max_{h<=N} t(h)*Gamma(h+1)/gamma(h) * sqrt(S*A*T*N)``.
    With a finite-support curve the effective horizon is capped at the last
    positive index; the truncation bias is then zero.
    """
    n = effective_horizon(curve, delta).n_delta
    n = int(min(n, curve.support_end))
    if T <= 0:
        return BoundTerms(0.0, 0.0, n)
    h = np.arange(1, n + 1)
    g = np.atleast_1d(curve.gamma(h))
    ratio = np.atleast_1d(curve.tail_sum(h + 1)) / g
    tv = t_values(curve, beta, n)
    estimation = float(np.max(tv * ratio)) * math.sqrt(S * A * T * n)
    g_next = curve.gamma(n + 1)
    if g_next == 0.0:
        bias = 0.0
    else:
        t_next = t_values(curve, beta, n + 1)[-1]
        bias = delta * T * t_next / g_next
    return BoundTerms(float(bias), estimation, n)
