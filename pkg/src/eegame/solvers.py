"""One-dimensional numerical machinery.

Everything here works on numpy arrays so that a whole batch of channel
realizations can be solved in lockstep; the scalar entry points are thin
wrappers around the batched ones.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class BracketError(ValueError):
    """Raised when a root bracket shows no sign change."""


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances shared by the root finders and maximizers.

    ``rtol`` is relative to the magnitude of the iterate; bisection stops
    early once the bracket can no longer be split in floating point.
    """

    rtol: float = 1e-10
    max_iter: int = 200
    grid_points: int = 512
    expand_factor: float = 2.0
    expand_cap: float = 1e3
    eps: float = 1e-9


DEFAULT_SOLVER = SolverConfig()


def bisect_many(
    fn: Callable[[np.ndarray], np.ndarray],
    lo,
    hi,
    rtol: float = 1e-10,
    max_iter: int = 200,
    where=None,
) -> np.ndarray:
    """Vectorized bisection on a batch of brackets.

    ``fn`` maps an array of abscissae (same shape as ``lo``) to function
    values, row by row. Rows excluded by ``where`` are not checked and
    come back as ``nan``.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    if where is None:
        where = np.ones(lo.shape, dtype=bool)
    else:
        where = np.asarray(where, dtype=bool)
    if not where.any():
        return np.full(lo.shape, np.nan)

    f_lo = fn(lo)
    f_hi = fn(hi)
    bad = where & (f_lo * f_hi > 0)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise BracketError(
            f"no sign change on [{lo.flat[i]!r}, {hi.flat[i]!r}] "
            f"(f={f_lo.flat[i]!r}, {f_hi.flat[i]!r})"
        )
    s_lo = np.sign(f_lo)
    # exact hits at an endpoint
    hit_lo = where & (f_lo == 0)
    hit_hi = where & (f_hi == 0) & ~hit_lo
    hi[hit_lo] = lo[hit_lo]
    lo[hit_hi] = hi[hit_hi]
    done = ~where | hit_lo | hit_hi

    for _ in range(max_iter):
        width = hi - lo
        done |= width <= rtol * np.maximum(np.abs(lo), np.abs(hi))
        if done.all():
            break
        mid = 0.5 * (lo + hi)
        done |= (mid == lo) | (mid == hi)
        f_mid = fn(mid)
        same = np.sign(f_mid) == s_lo
        move_lo = ~done & same & (f_mid != 0)
        move_hi = ~done & ~same
        exact = ~done & (f_mid == 0)
        lo = np.where(move_lo | exact, mid, lo)
        hi = np.where(move_hi | exact, mid, hi)
        done |= exact

    out = 0.5 * (lo + hi)
    out[~where] = np.nan
    return out


def bisect(fn: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12) -> float:
    """Scalar bisection for a sign change of ``fn`` on ``[lo, hi]``."""
    if not lo < hi:
        raise ValueError("bisect needs lo < hi")

    def vec(x):
        return np.array([fn(float(v)) for v in x])

    return float(bisect_many(vec, np.array([lo]), np.array([hi]), rtol=tol, max_iter=2000)[0])


def golden_many(fn, a, b, rtol: float = 1e-10, max_iter: int = 200):
    """Batched golden-section maximization on ``[a, b]`` per row.

    ``fn`` receives an ``(n, 1)`` array and returns the same shape.
    Returns ``(x, fx)`` of the best point visited.
    """
    a = np.array(a, dtype=float, copy=True)
    b = np.array(b, dtype=float, copy=True)
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc = fn(c[:, None])[:, 0]
    fd = fn(d[:, None])[:, 0]
    for _ in range(max_iter):
        if np.all(b - a <= rtol * (1.0 + np.abs(a))):
            break
        left = fc >= fd
        # keep [a, d] where the left probe wins, [c, b] otherwise
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - GOLDEN * (b - a)
        new_d = a + GOLDEN * (b - a)
        probe = np.where(left, new_c, new_d)
        fp = fn(probe[:, None])[:, 0]
        c, d, fc, fd = (
            np.where(left, probe, d),
            np.where(left, c, probe),
            np.where(left, fp, fd),
            np.where(left, fc, fp),
        )
    take_c = fc >= fd
    return np.where(take_c, c, d), np.where(take_c, fc, fd)


def maximize_many(fn, lo, hi, rtol: float = 1e-10, grid_points: int = 512, max_iter: int = 200):
    """Grid scan followed by golden refinement of the best cell, per row.

    ``fn`` maps an ``(n, k)`` array to ``(n, k)`` values. The grid value
    is kept whenever the refinement does not beat it, so flat functions
    return the left-most grid maximizer.

    Returns ``(x, fx, index)`` where ``index`` is the winning grid index.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    frac = np.linspace(0.0, 1.0, grid_points)
    xs = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
    vals = fn(xs)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    idx = np.argmax(vals, axis=1)
    rows = np.arange(lo.size)
    x_best = xs[rows, idx]
    f_best = vals[rows, idx]
    a = xs[rows, np.maximum(idx - 1, 0)]
    b = xs[rows, np.minimum(idx + 1, grid_points - 1)]
    xg, fg = golden_many(fn, a, b, rtol=rtol, max_iter=max_iter)
    better = fg > f_best
    return np.where(better, xg, x_best), np.where(better, fg, f_best), idx


def maximize_scalar(fn: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10,
                    grid_points: int = 512) -> tuple[float, float]:
    """Maximize a scalar function on ``[lo, hi]`` (grid, then golden section)."""
    if not lo < hi:
        raise ValueError("maximize_scalar needs lo < hi")
    vfn = np.vectorize(fn, otypes=[float])
    x, fx, _ = maximize_many(vfn, [lo], [hi], rtol=tol, grid_points=grid_points)
    return float(x[0]), float(fx[0])


# --- the F-family of the optimality equation ------------------------------


def F_value(model, x, c):
    """``x f'(x) - f(x) - c x**2``."""
    x = np.asarray(x, dtype=float)
    return x * model.deriv1(x) - model.value(x) - c * x * x


@dataclass(frozen=True)
class ZeroBatch:
    x1: np.ndarray
    x2: np.ndarray
    has_zeros: np.ndarray
    bracket_lo: np.ndarray
    bracket_hi: np.ndarray


@dataclass(frozen=True)
class ZeroStructure:
    """Positive zeros ``x1 <= x2`` of F, or ``None`` when 0 is the only zero."""

    x1: float | None
    x2: float | None
    bracket_lo: float
    bracket_hi: float

    @property
    def has_zeros(self) -> bool:
        return self.x2 is not None


def zeros_many(model, c, cfg: SolverConfig = DEFAULT_SOLVER, lesser: bool = True) -> ZeroBatch:
    """Batched zero structure of F for an array of ``c >= 0``.

    ``c = 0`` is accepted here as the energy-free limit. With
    ``lesser=False`` only the greater zero is located (``x1`` is nan).
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    n = c.size
    nan = np.full(n, np.nan)
    peak = model.curvature_peak()
    if peak.degenerate:
        return ZeroBatch(nan.copy(), nan.copy(), np.zeros(n, dtype=bool), nan.copy(), nan.copy())
    x0 = model.inflection()
    xm = max(peak.x, cfg.eps)
    active = peak.value > 2.0 * c

    lo_edge = np.full(n, cfg.eps)
    # f'' = 2c on the rising branch (may be absent when f''(eps) >= 2c)
    g_eps = model.deriv2(lo_edge) - 2.0 * c
    need_lo = active & (g_eps < 0) & lesser
    x_lo = np.where(active, cfg.eps, np.nan)
    if need_lo.any():
        r = bisect_many(lambda x: model.deriv2(x) - 2.0 * c, lo_edge, np.full(n, xm),
                        cfg.rtol, cfg.max_iter, where=need_lo)
        x_lo = np.where(need_lo, r, x_lo)
    # x0 is only known to rtol; nudge past it so f'' is strictly negative there
    x_hi = bisect_many(lambda x: model.deriv2(x) - 2.0 * c, np.full(n, xm), np.full(n, x0 * (1 + 1e-6)),
                       cfg.rtol, cfg.max_iter, where=active)

    has = active.copy()
    has[active] = F_value(model, x_hi[active], c[active]) > 0

    # grow an upper bracket until F < 0
    cap = cfg.expand_cap * x0
    upper = np.where(has, x_hi, np.nan)
    pending = has.copy()
    while pending.any():
        upper = np.where(pending, np.minimum(upper * cfg.expand_factor, cap), upper)
        pending &= F_value(model, np.where(pending, upper, 1.0), c) >= 0
        stuck = pending & (upper >= cap)
        if stuck.any():
            warnings.warn("upper bracket hit the expansion cap; treating as no positive zero",
                          RuntimeWarning, stacklevel=2)
            has &= ~stuck
            pending &= ~stuck

    fn = lambda x: F_value(model, x, c)  # noqa: E731
    x2 = bisect_many(fn, np.where(has, x_hi, 1.0), np.where(has, upper, 2.0),
                     cfg.rtol, cfg.max_iter, where=has)
    f_lo = np.where(has, F_value(model, np.where(has & np.isfinite(x_lo), x_lo, 1.0), c), np.nan)
    need_x1 = has & (f_lo < 0) & lesser
    x1 = np.where(has & lesser, 0.0, np.nan)
    if need_x1.any():
        r = bisect_many(fn, np.where(need_x1, x_lo, 1.0), np.where(need_x1, x_hi, 2.0),
                        cfg.rtol, cfg.max_iter, where=need_x1)
        x1 = np.where(need_x1, r, x1)
    return ZeroBatch(x1, x2, has, x_lo, np.where(has, upper, x_hi))


def greatest_zero(model, c: float, cfg: SolverConfig = DEFAULT_SOLVER) -> ZeroStructure:
    """Zeros of ``x f'(x) - f(x) - c x**2`` beyond 0, for ``c > 0``."""
    if not c > 0:
        raise ValueError(f"greatest_zero needs c > 0, got {c!r}")
    z = zeros_many(model, np.array([c]), cfg)
    if not z.has_zeros[0]:
        lo = float(z.bracket_lo[0]) if np.isfinite(z.bracket_lo[0]) else 0.0
        hi = float(z.bracket_hi[0]) if np.isfinite(z.bracket_hi[0]) else 0.0
        return ZeroStructure(None, None, lo, hi)
    return ZeroStructure(float(z.x1[0]), float(z.x2[0]), float(z.bracket_lo[0]), float(z.bracket_hi[0]))
