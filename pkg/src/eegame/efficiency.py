"""Efficiency functions: packet success rate as a function of the SINR.

Two sigmoidal families are supported pointwise (``Outage`` and
``Empirical``) together with ``Shannon``, a marker for the log-rate
special case that downstream code handles in closed form.

All evaluators accept scalars or numpy arrays and return the same kind.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .solvers import bisect_many, maximize_many

# a/x beyond this makes exp(-a/x) underflow
_EXP_LIMIT = 700.0


class UnsupportedOperationError(TypeError):
    """The Shannon model has no pointwise efficiency function."""


@dataclass(frozen=True)
class CurvaturePeak:
    """Location and value of sup f'' on ``(0, x0]``.

    ``degenerate`` is set when f'' is never positive (``Empirical(M=1)``);
    the value is then 0 and there is no interior maximum.
    """

    x: float
    value: float
    degenerate: bool = False


def _ret(x, out):
    return float(out) if np.ndim(x) == 0 else out


class EfficiencyModel:
    kind = "abstract"

    def value(self, x):
        raise NotImplementedError

    def deriv1(self, x):
        raise NotImplementedError

    def deriv2(self, x):
        raise NotImplementedError

    def inflection(self) -> float:
        return inflection(self)

    def curvature_peak(self) -> CurvaturePeak:
        return curvature_peak(self)

    def max_f2(self) -> float:
        return curvature_peak(self).value

    def snr_limit(self) -> float:
        """Greatest zero of ``x f' - f`` (target SNR when energy is free)."""
        return snr_limit(self)


@dataclass(frozen=True)
class Outage(EfficiencyModel):
    """``f(x) = exp(-a / x)``, one minus an outage probability."""

    a: float = 0.9
    kind = "outage"

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"outage parameter a must be positive, got {self.a!r}")

    def _parts(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("efficiency functions are defined for x >= 0")
        # below a / 700 everything underflows to 0; never divide there
        live = x * _EXP_LIMIT >= self.a
        u = np.where(live, self.a / np.where(live, x, 1.0), np.inf)
        e = np.where(live, np.exp(-np.where(live, u, 0.0)), 0.0)
        return x, u, live, e

    def value(self, x):
        _, _, _, e = self._parts(x)
        return _ret(x, e)

    def deriv1(self, x):
        xa, u, live, e = self._parts(x)
        safe_x = np.where(live, xa, 1.0)
        return _ret(x, np.where(live, np.where(live, u, 0.0) / safe_x * e, 0.0))

    def deriv2(self, x):
        xa, u, live, e = self._parts(x)
        safe_x = np.where(live, xa, 1.0)
        # f'' = (u/x^2) e^{-u} (u - 2)
        ul = np.where(live, u, 0.0)
        return _ret(x, np.where(live, ul / (safe_x * safe_x) * e * (ul - 2.0), 0.0))


@dataclass(frozen=True)
class Empirical(EfficiencyModel):
    """``f(x) = (1 - exp(-x))**M``."""

    M: int = 2
    kind = "empirical"

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"empirical exponent M must be a positive integer, got {self.M!r}")

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ValueError("efficiency functions are defined for x >= 0")
        return x

    def value(self, x):
        xa = self._check(x)
        return _ret(x, (-np.expm1(-xa)) ** self.M)

    def deriv1(self, x):
        xa = self._check(x)
        e = np.exp(-xa)
        return _ret(x, self.M * e * (-np.expm1(-xa)) ** (self.M - 1))

    def deriv2(self, x):
        xa = self._check(x)
        e = np.exp(-xa)
        if self.M == 1:
            return _ret(x, -e)
        s = -np.expm1(-xa)
        return _ret(x, self.M * e * s ** (self.M - 2) * (self.M * e - 1.0))


@dataclass(frozen=True)
class Shannon(EfficiencyModel):
    """Log-rate special case; only closed forms are available."""

    kind = "shannon"

    def _unsupported(self, *_):
        raise UnsupportedOperationError("the Shannon model is handled in closed form only")

    value = deriv1 = deriv2 = _unsupported

    def inflection(self):
        self._unsupported()

    def curvature_peak(self):
        self._unsupported()

    def max_f2(self):
        self._unsupported()

    def snr_limit(self):
        self._unsupported()


def _check_pointwise(model):
    if isinstance(model, Shannon):
        raise UnsupportedOperationError("the Shannon model is handled in closed form only")


# Module-level spellings; results are cached per (hashable) model.


def eval_f(model, x):
    _check_pointwise(model)
    return model.value(x)


def deriv1(model, x):
    _check_pointwise(model)
    return model.deriv1(x)


def deriv2(model, x):
    _check_pointwise(model)
    return model.deriv2(x)


@functools.lru_cache(maxsize=None)
def inflection(model) -> float:
    """Unique sign change of f'' on (0, inf); 0.0 if f'' is never positive."""
    _check_pointwise(model)
    d2 = model.deriv2
    hi = 1.0
    while d2(hi) >= 0:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError(f"no inflection found for {model!r}")
    lo = hi / 2.0
    while d2(lo) <= 0:
        lo /= 2.0
        if lo < 1e-12:
            return 0.0
    # lo, hi may straddle more than one halving step; tighten hi first
    while d2(hi / 2.0) < 0 and hi / 2.0 > lo:
        hi /= 2.0
    x = bisect_many(lambda v: d2(v), np.array([lo]), np.array([hi]), rtol=1e-12, max_iter=500)
    return float(x[0])


@functools.lru_cache(maxsize=None)
def curvature_peak(model) -> CurvaturePeak:
    _check_pointwise(model)
    x0 = inflection(model)
    if x0 == 0.0:
        return CurvaturePeak(0.0, 0.0, degenerate=True)
    eps = 1e-9
    x, fx, _ = maximize_many(lambda v: model.deriv2(v), [eps], [x0], rtol=1e-12, grid_points=512)
    return CurvaturePeak(float(x[0]), float(fx[0]))


def max_f2(model) -> float:
    """sup of f'' over x > 0 (0 for the degenerate concave case)."""
    return curvature_peak(model).value


@functools.lru_cache(maxsize=None)
def snr_limit(model) -> float:
    _check_pointwise(model)
    from .solvers import zeros_many

    z = zeros_many(model, np.array([0.0]))
    return float(z.x2[0]) if z.has_zeros[0] else 0.0


def outage_peak(a: float) -> CurvaturePeak:
    """Closed-form sup f'' for ``Outage(a)``: attained at a/x = 3 + sqrt(3)."""
    u = 3.0 + math.sqrt(3.0)
    return CurvaturePeak(a / u, u**3 * (u - 2.0) * math.exp(-u) / a**2)


def model_from_dict(spec: dict) -> EfficiencyModel:
    """Build a model from ``{"kind": "outage", "a": 0.9}``-style mappings."""
    kind = str(spec.get("kind", "")).lower()
    if kind == "outage":
        return Outage(float(spec.get("a", 0.9)))
    if kind == "empirical":
        return Empirical(int(spec.get("M", 2)))
    if kind == "shannon":
        return Shannon()
    raise ValueError(f"unknown efficiency model kind {spec.get('kind')!r}")
