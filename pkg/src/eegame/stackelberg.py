"""Non-orthogonal scenario: primary leader, secondary follower.

Per slot the leader commits to ``p1``; the follower observes it and
best-responds against the effective noise ``sigma2 + p1 g12``. The
leader's share of its Lagrangian,

    J(p1) = R1 f1(gamma1(p1, p2*(p1))) / p1 - lam1 T p1,

is maximized directly over ``ln p1`` (grid, then golden section). The
stationarity equation of J, written in the SINRs, is kept as an
independent residual check (:func:`leader_stationarity_residual`).
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import Estimate, MonteCarloConfig, joint_samples, mc_estimate
from .efficiency import Shannon, UnsupportedOperationError, snr_limit
from .single_user import (
    LinkParams,
    PolicyBatch,
    PolicySolution,
    best_response_many,
    expected_utility,
    free_slot_probability,
    transmit_threshold_c,
)
from .solvers import DEFAULT_SOLVER, SolverConfig, golden_many, zeros_many
from .channel import STREAM_G11, STREAM_G22

# leader search window around sigma2 * snr_limit / g11, in ln units
SEARCH_DECADES = 6.0
CAP_EXPANSIONS = 3
INFEASIBLE_EPS = 1e-12
NEAR_OPTIMAL_RTOL = 1e-6


class FollowerSilentError(ValueError):
    """The follower does not transmit, so its best response has no derivative."""


@dataclass(frozen=True)
class GainRealization:
    g11: float
    g12: float
    g21: float
    g22: float

    def __post_init__(self):
        if not (self.g11 > 0 and self.g22 > 0):
            raise ValueError("direct gains must be positive")
        if self.g12 < 0 or self.g21 < 0:
            raise ValueError("cross gains must be non-negative")

    @property
    def alpha(self) -> float:
        return self.g21 * self.g12 / (self.g11 * self.g22)


@dataclass(frozen=True)
class StackelbergOutcome:
    p1: float
    p2: float
    gamma1: float
    gamma2: float
    feasible: bool
    u1_contrib: float
    u2_contrib: float
    leader_objective: float = 0.0


@dataclass(frozen=True)
class OutcomeBatch:
    p1: np.ndarray
    p2: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    feasible: np.ndarray
    u1_contrib: np.ndarray
    u2_contrib: np.ndarray
    leader_objective: np.ndarray

    def at(self, i: int) -> StackelbergOutcome:
        return StackelbergOutcome(float(self.p1[i]), float(self.p2[i]), float(self.gamma1[i]),
                                  float(self.gamma2[i]), bool(self.feasible[i]), float(self.u1_contrib[i]),
                                  float(self.u2_contrib[i]), float(self.leader_objective[i]))


def sinrs_from_powers(real: GainRealization, sigma2: float, p1: float, p2: float) -> tuple[float, float]:
    return (p1 * real.g11 / (sigma2 + p2 * real.g21), p2 * real.g22 / (sigma2 + p1 * real.g12))


def powers_from_sinrs(real: GainRealization, sigma2: float, gamma1: float, gamma2: float):
    """Powers achieving the SINR pair, or ``None`` if ``1 - alpha g1 g2`` is not positive."""
    if gamma1 < 0 or gamma2 < 0:
        raise ValueError("SINRs must be non-negative")
    den = 1.0 - real.alpha * gamma1 * gamma2
    if den <= INFEASIBLE_EPS:
        return None
    p1 = sigma2 / real.g11 * (gamma1 + gamma1 * gamma2 * real.g21 / real.g22) / den
    p2 = sigma2 / real.g22 * (gamma2 + gamma1 * gamma2 * real.g12 / real.g11) / den
    return p1, p2


def _require_pointwise(*models):
    for m in models:
        if isinstance(m, Shannon):
            raise UnsupportedOperationError("the game needs pointwise efficiency functions")


# --- follower -------------------------------------------------------------


def follower_many(model2, params2: LinkParams, g12, g22, p1, cfg: SolverConfig = DEFAULT_SOLVER) -> PolicyBatch:
    noise = params2.sigma2 + np.asarray(p1, dtype=float) * np.asarray(g12, dtype=float)
    return best_response_many(model2, params2.R, params2.T, params2.lam, noise, g22, cfg)


def follower_best_response(model2, params2: LinkParams, real: GainRealization, p1: float,
                           cfg: SolverConfig = DEFAULT_SOLVER) -> PolicySolution:
    if p1 < 0:
        raise ValueError("leader power must be non-negative")
    return follower_many(model2, params2, real.g12, real.g22, np.array([float(p1)]), cfg).at(0)


def _follower_c(params2: LinkParams, real: GainRealization, p1: float) -> float:
    noise = params2.sigma2 + p1 * real.g12
    return params2.lam * params2.T * noise**2 / (params2.R * real.g22**2)


def follower_br_derivative(model2, params2: LinkParams, real: GainRealization, p1: float,
                           cfg: SolverConfig = DEFAULT_SOLVER) -> float:
    """d x2 / d p1 along the transmitting branch, from implicit differentiation."""
    br = follower_best_response(model2, params2, real, p1, cfg)
    if not br.transmitting:
        raise FollowerSilentError("follower is silent at this leader power")
    x2 = br.snr_target
    noise = params2.sigma2 + p1 * real.g12
    k = 2.0 * params2.lam * params2.T / (params2.R * real.g22**2)
    return k * noise * real.g12 * x2 / (model2.deriv2(x2) - k * noise**2)


def follower_residual(model2, params2: LinkParams, real: GainRealization, p1: float, x2: float) -> float:
    """Optimality-equation residual of the follower, scaled by max(1, c x^2)."""
    c = _follower_c(params2, real, p1)
    r = x2 * model2.deriv1(x2) - model2.value(x2) - c * x2 * x2
    return abs(r) / max(1.0, abs(c * x2 * x2))


class BestResponseTable:
    """Follower target SINR as a function of c alone, tabulated in ln c.

    Only used to rank the leader's coarse grid; refinement and all
    reported outcomes use the exact solver.
    """

    def __init__(self, model, cfg: SolverConfig = DEFAULT_SOLVER, points: int = 4096, span: float = 40.0):
        self.c_tx = transmit_threshold_c(model, cfg)
        if self.c_tx > 0:
            self.log_c = np.linspace(math.log(self.c_tx) - span, math.log(self.c_tx), points)
            z = zeros_many(model, np.exp(self.log_c), cfg, lesser=False)
            self.x2 = np.where(z.has_zeros, z.x2, 0.0)
        else:
            self.log_c = np.array([0.0])
            self.x2 = np.array([0.0])

    def __call__(self, c):
        c = np.asarray(c, dtype=float)
        tx = c < self.c_tx
        with np.errstate(divide="ignore"):
            lc = np.log(np.where(tx, c, 1.0))
        return np.where(tx, np.interp(lc, self.log_c, self.x2), 0.0)


@functools.lru_cache(maxsize=16)
def response_table(model, cfg: SolverConfig = DEFAULT_SOLVER) -> BestResponseTable:
    return BestResponseTable(model, cfg)


# --- leader ---------------------------------------------------------------


def _leader_eval(model1, model2, params1, params2, g, p1, follower_x2):
    """J, gamma1, x2, p2 for leader powers ``p1`` (broadcast against gains)."""
    g11, g12, g21, g22 = g
    s2 = params1.sigma2
    noise2 = s2 + p1 * g12
    c2 = params2.lam * params2.T * noise2**2 / (params2.R * g22**2)
    x2 = follower_x2(c2)
    p2 = noise2 * x2 / g22
    gamma1 = p1 * g11 / (s2 + p2 * g21)
    pos = p1 > 0
    safe_p1 = np.where(pos, p1, 1.0)
    j = np.where(pos, params1.R * model1.value(gamma1) / safe_p1 - params1.lam * params1.T * p1, 0.0)
    return j, gamma1, x2, p2


def _exact_follower(model2, cfg):
    def x2_of(c2):
        shape = np.shape(c2)
        z = zeros_many(model2, np.ravel(c2), cfg, lesser=False)
        x2 = np.where(z.has_zeros, z.x2, 1.0)
        tx = z.has_zeros & (model2.value(x2) / x2 - np.ravel(c2) * x2 > 0)
        return np.where(tx, x2, 0.0).reshape(shape)

    return x2_of


def leader_many(model1, model2, params1: LinkParams, params2: LinkParams, g11, g12, g21, g22,
                cfg: SolverConfig = DEFAULT_SOLVER) -> OutcomeBatch:
    """Stackelberg outcomes for a batch of gain realizations."""
    _require_pointwise(model1, model2)
    if params1.sigma2 != params2.sigma2 or params1.T != params2.T:
        raise ValueError("both links must share sigma2 and T")
    g11, g12, g21, g22 = (np.atleast_1d(np.asarray(v, dtype=float)).ravel() for v in (g11, g12, g21, g22))
    g11, g12, g21, g22 = np.broadcast_arrays(g11, g12, g21, g22)
    n = g11.size
    s2 = params1.sigma2
    table = response_table(model2, cfg)
    exact = _exact_follower(model2, cfg)
    col = tuple(v[:, None] for v in (g11, g12, g21, g22))

    x_inf = snr_limit(model1)
    center = np.log(s2 * max(x_inf, 1e-300) / g11)
    half = SEARCH_DECADES * math.log(10.0)
    t_lo, t_hi = center - half, center + half

    def coarse(rows, lo, hi):
        frac = np.linspace(0.0, 1.0, cfg.grid_points)
        ts = lo[:, None] + (hi - lo)[:, None] * frac[None, :]
        g = tuple(v[rows] for v in col)
        j, *_ = _leader_eval(model1, model2, params1, params2, g, np.exp(ts), table)
        idx = np.argmax(j, axis=1)
        _warn_if_ambiguous(j, idx)
        return ts, idx

    rows = np.arange(n)
    ts, idx = coarse(rows, t_lo, t_hi)
    a = ts[rows, np.maximum(idx - 1, 0)]
    b = ts[rows, np.minimum(idx + 1, cfg.grid_points - 1)]
    at_cap = idx == cfg.grid_points - 1
    for _ in range(CAP_EXPANSIONS):
        if not at_cap.any():
            break
        r = np.flatnonzero(at_cap)
        t_lo[r] = t_hi[r] - 2.0 * math.log(10.0)
        t_hi[r] = t_hi[r] + 3.0 * math.log(10.0)
        ts_r, idx_r = coarse(r, t_lo[r], t_hi[r])
        rr = np.arange(r.size)
        a[r] = ts_r[rr, np.maximum(idx_r - 1, 0)]
        b[r] = ts_r[rr, np.minimum(idx_r + 1, cfg.grid_points - 1)]
        at_cap[r] = idx_r == cfg.grid_points - 1
    if at_cap.any():
        warnings.warn(f"{int(at_cap.sum())} leader optima still at the power cap", RuntimeWarning, stacklevel=2)

    def j_exact(t):
        j, *_ = _leader_eval(model1, model2, params1, params2, col, np.exp(t), exact)
        return j

    t_best, j_best = golden_many(j_exact, a, b, rtol=cfg.rtol, max_iter=cfg.max_iter)
    p_best = np.exp(t_best)

    # follower-silent branch: smallest p1 that silences it, or the lone-link optimum beyond that
    cand = _silencing_candidate(model1, model2, params1, params2, g11, g12, g22, cfg)
    has_cand = np.isfinite(cand)
    if has_cand.any():
        pc = np.where(has_cand, cand, 1.0)
        jc, *_ = _leader_eval(model1, model2, params1, params2, col, pc[:, None], exact)
        jc = jc[:, 0]
        take = has_cand & (jc > j_best)
        p_best = np.where(take, pc, p_best)
        j_best = np.where(take, jc, j_best)

    tx = j_best > 0
    p1 = np.where(tx, p_best, 0.0)
    _, gamma1, x2, p2 = _leader_eval(model1, model2, params1, params2, col, p1[:, None], exact)
    gamma1, x2, p2 = gamma1[:, 0], x2[:, 0], p2[:, 0]
    gamma1 = np.where(tx, gamma1, 0.0)
    fol = p2 > 0
    u1 = np.where(tx, params1.R * model1.value(gamma1) / np.where(tx, p1, 1.0), 0.0)
    u2 = np.where(fol, params2.R * model2.value(x2) / np.where(fol, p2, 1.0), 0.0)
    alpha = g21 * g12 / (g11 * g22)
    feasible = 1.0 - alpha * gamma1 * x2 > 0
    return OutcomeBatch(p1, p2, gamma1, x2, feasible, u1, u2, np.where(tx, j_best, 0.0))


def _warn_if_ambiguous(j, idx, rtol=NEAR_OPTIMAL_RTOL):
    """Warn when a grid row has a second, separated local maximum as good as the best."""
    best = j[np.arange(j.shape[0]), idx]
    inner = (j[:, 1:-1] >= j[:, :-2]) & (j[:, 1:-1] > j[:, 2:])
    peaks = np.zeros_like(j, dtype=bool)
    peaks[:, 1:-1] = inner
    cols = np.arange(j.shape[1])[None, :]
    rival = peaks & (np.abs(cols - idx[:, None]) > 1) & (j >= (best - rtol * np.abs(best))[:, None])
    k = int(np.sum(np.any(rival, axis=1) & (best > 0)))
    if k:
        warnings.warn(f"{k} realizations have several near-optimal leader powers; keeping the best grid cell",
                      RuntimeWarning, stacklevel=3)


def _silencing_candidate(model1, model2, params1, params2, g11, g12, g22, cfg):
    """Leader power on the follower-silent branch, or nan if there is none."""
    table = response_table(model2, cfg)
    n = g11.size
    out = np.full(n, np.nan)
    if table.c_tx <= 0 or params2.lam <= 0:
        return out
    s2 = params1.sigma2
    noise_th = g22 * np.sqrt(table.c_tx * params2.R / (params2.lam * params2.T))
    with np.errstate(divide="ignore", invalid="ignore"):
        p_th = np.where(g12 > 0, (noise_th - s2) / g12, np.inf)
    p_th = np.where(noise_th <= s2, 0.0, p_th) * (1.0 + 1e-9)
    lone = best_response_many(model1, params1.R, params1.T, params1.lam, s2, g11, cfg)
    ok = np.isfinite(p_th) & lone.transmitting
    return np.where(ok, np.maximum(p_th, lone.power), out)


def leader_equilibrium(model1, model2, params1: LinkParams, params2: LinkParams, real: GainRealization,
                       cfg: SolverConfig = DEFAULT_SOLVER) -> StackelbergOutcome:
    return leader_many(model1, model2, params1, params2, real.g11, real.g12, real.g21, real.g22, cfg).at(0)


def leader_objective(model1, model2, params1: LinkParams, params2: LinkParams, real: GainRealization, p1,
                     cfg: SolverConfig = DEFAULT_SOLVER):
    """Exact J(p1) with the follower best-responding; vectorized over ``p1``."""
    p1 = np.atleast_1d(np.asarray(p1, dtype=float))
    g = (real.g11, real.g12, real.g21, real.g22)
    j, *_ = _leader_eval(model1, model2, params1, params2, g, p1, _exact_follower(model2, cfg))
    return j


def leader_stationarity_residual(model1, model2, params1: LinkParams, params2: LinkParams,
                                 real: GainRealization, x: float, x2: float) -> float:
    """Relative residual of the leader's optimal-SINR equation at ``(x, x2)``.

    The equation reads x f1'(x)[1 - alpha x2 x - G(x)] - f1(x) =
    k1 ((1 + (g21/g22) x2) / (1 - alpha x x2))^2 x^2, where G carries the
    follower's reaction through f2''(x2).
    """
    s4 = params1.sigma2**2
    alpha = real.alpha
    k1 = params1.lam * params1.T * s4 / (params1.R * real.g11**2)
    a12 = (1.0 + real.g12 / real.g11 * x) ** 2
    den = 1.0 - alpha * x2 * x
    if x2 > 0 and alpha > 0:
        scale2 = params2.R * real.g22**2 / (2.0 * params2.lam * params2.T * s4)
        big_g = alpha * x * a12 * x2 / (den**2 * scale2 * model2.deriv2(x2) - a12)
    else:
        big_g = 0.0
    xf = x * model1.deriv1(x)
    lhs = xf * (1.0 - alpha * x2 * x - big_g) - model1.value(x)
    rhs = k1 * ((1.0 + real.g21 / real.g22 * x2) / den) ** 2 * x * x
    return abs(lhs - rhs) / max(abs(xf), abs(model1.value(x)), abs(rhs))


def leader_sinr_identity(real: GainRealization, sigma2: float, p1: float, x2: float) -> float:
    """Leader SINR written through the follower's target: should equal gamma1."""
    d = sigma2 * (1.0 + real.g21 / real.g22 * x2) + p1 * real.g12 * real.g21 / real.g22 * x2
    return p1 * real.g11 / d


# --- expectations ---------------------------------------------------------


@dataclass(frozen=True)
class UtilityPair:
    leader: Estimate
    follower: Estimate


def equilibrium_expected_utilities(model1, model2, params1: LinkParams, params2: LinkParams, dists,
                                   mc: MonteCarloConfig, cfg: SolverConfig = DEFAULT_SOLVER) -> UtilityPair:
    """E[u1], E[u2] at the per-slot Stackelberg outcome over all four gains."""
    g11, g12, g21, g22 = joint_samples(dists, mc)
    out = leader_many(model1, model2, params1, params2, g11, g12, g21, g22, cfg)
    return UtilityPair(mc_estimate(out.u1_contrib), mc_estimate(out.u2_contrib))


@dataclass(frozen=True)
class OrthogonalUtilities:
    primary: Estimate
    secondary: Estimate
    free_slot: Estimate


def orthogonal_case_utilities(model1, model2, params1: LinkParams, params2: LinkParams, dists,
                              mc: MonteCarloConfig, cfg: SolverConfig = DEFAULT_SOLVER) -> OrthogonalUtilities:
    """Primary alone on its link; secondary only in the primary's free slots."""
    d11, _, _, d22 = dists
    u1 = expected_utility(model1, params1, d11, mc, cfg, stream=STREAM_G11)
    free = free_slot_probability(model1, params1, d11, mc, cfg, stream=STREAM_G11)
    u22 = expected_utility(model2, params2, d22, mc, cfg, stream=STREAM_G22)
    val = free.value * u22.value
    se = math.hypot(free.value * u22.stderr, u22.value * free.stderr)
    return OrthogonalUtilities(u1, Estimate(val, se), Estimate(free.value, free.stderr))


def leader_power_profile(model1, model2, params1: LinkParams, params2: LinkParams, g11_values, g22_values,
                         g12: float, g21: float, cfg: SolverConfig = DEFAULT_SOLVER) -> np.ndarray:
    """p1* on the ``(g11, g22)`` grid with cross gains held fixed.

    Returns an array indexed ``[i_g11, j_g22]``. Columns are solved as
    separate batches, so results do not depend on how columns are split
    across workers.
    """
    g11_values = np.asarray(g11_values, dtype=float)
    g22_values = np.asarray(g22_values, dtype=float)
    if np.any(g11_values <= 0) or np.any(g22_values <= 0):
        raise ValueError("grid gains must be positive")
    out = np.empty((g11_values.size, g22_values.size))
    for j, g22 in enumerate(g22_values):
        out[:, j] = profile_column(model1, model2, params1, params2, g11_values, float(g22), g12, g21, cfg)
    return out


def profile_column(model1, model2, params1, params2, g11_values, g22: float, g12: float, g21: float,
                   cfg: SolverConfig = DEFAULT_SOLVER) -> np.ndarray:
    g11_values = np.asarray(g11_values, dtype=float)
    n = g11_values.size
    res = leader_many(model1, model2, params1, params2, g11_values, np.full(n, g12), np.full(n, g21),
                      np.full(n, g22), cfg)
    return res.p1
