"""Orthogonal scenario: one link, long-term energy constraint.

Per realization, the transmitter picks the SNR maximizing its share of
the Lagrangian,

    V(x) = R g f(x) / (sigma2 x) - lam T (sigma2 / g) x,

which is either silence or the greatest zero of x f' - f = c x^2 with
c = lam T sigma2^2 / (R g^2). Expectations over fading are Monte Carlo
(or quadrature) through :mod:`eegame.channel`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import STREAM_G11, Estimate, MonteCarloConfig, expect_1d
from .efficiency import Shannon, UnsupportedOperationError, max_f2
from .solvers import DEFAULT_SOLVER, SolverConfig, bisect_many, zeros_many


class DegenerateModelWarning(RuntimeWarning):
    """Issued when a model has no interior maximum of f''."""


@dataclass(frozen=True)
class LinkParams:
    R: float = 1e4
    T: float = 1e-3
    sigma2: float = 1e-12
    lam: float = 1e10
    E_budget: float | None = None

    def __post_init__(self):
        for name in ("R", "T", "sigma2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.E_budget is not None and not self.E_budget > 0:
            raise ValueError("E_budget must be positive when given")

    def with_lam(self, lam: float) -> "LinkParams":
        return LinkParams(self.R, self.T, self.sigma2, lam, self.E_budget)


@dataclass(frozen=True)
class PolicySolution:
    snr_target: float
    power: float
    transmitting: bool
    objective_value: float


@dataclass(frozen=True)
class PolicyBatch:
    snr_target: np.ndarray
    power: np.ndarray
    transmitting: np.ndarray
    objective_value: np.ndarray

    def at(self, i: int) -> PolicySolution:
        return PolicySolution(float(self.snr_target[i]), float(self.power[i]),
                              bool(self.transmitting[i]), float(self.objective_value[i]))


def best_response_many(model, R, T, lam, noise, g, cfg: SolverConfig = DEFAULT_SOLVER) -> PolicyBatch:
    """Optimal target SINR and power against an effective noise level.

    ``noise`` is sigma2 for a lone link, or sigma2 plus received
    interference for the follower. Ties ``V(x2) = 0`` resolve to silence.
    """
    noise, g = np.broadcast_arrays(np.asarray(noise, dtype=float), np.asarray(g, dtype=float))
    noise = noise.ravel()
    g = g.ravel()
    if np.any(g <= 0):
        raise ValueError("channel gains must be positive")
    if isinstance(model, Shannon):
        return _shannon_many(lam, noise, g)
    c = lam * T * noise**2 / (R * g**2)
    z = zeros_many(model, c, cfg, lesser=False)
    x2 = np.where(z.has_zeros, z.x2, 1.0)
    # V in units of R g / noise
    gain = R * g / noise
    v = gain * (model.value(x2) / x2 - c * x2)
    tx = z.has_zeros & (v > 0)
    snr = np.where(tx, x2, 0.0)
    power = np.where(tx, noise / g * snr, 0.0)
    return PolicyBatch(snr, power, tx, np.where(tx, v, 0.0))


def _shannon_many(lam, noise, g) -> PolicyBatch:
    if not lam > 0:
        raise ValueError("the Shannon closed form needs lam > 0")
    snr = np.maximum(g / (lam * noise) - 1.0, 0.0)
    tx = snr > 0
    power = np.where(tx, noise / g * snr, 0.0)
    # objective ln(1 + snr) - lam * power
    obj = np.where(tx, np.log1p(snr) - lam * power, 0.0)
    return PolicyBatch(snr, power, tx, obj)


def policies(model, params: LinkParams, g, cfg: SolverConfig = DEFAULT_SOLVER) -> PolicyBatch:
    return best_response_many(model, params.R, params.T, params.lam, params.sigma2, g, cfg)


def optimal_snr(model, params: LinkParams, g: float, cfg: SolverConfig = DEFAULT_SOLVER) -> PolicySolution:
    if not g > 0:
        raise ValueError(f"gain must be positive, got {g!r}")
    return policies(model, params, np.array([g]), cfg).at(0)


def shannon_optimal_snr(params: LinkParams, g: float) -> PolicySolution:
    """Water-filling level: SNR = g / (lam sigma2) - 1, clamped at 0."""
    return _shannon_many(params.lam, np.array([params.sigma2]), np.array([float(g)])).at(0)


def utility_integrand(model, params: LinkParams, pol: PolicyBatch) -> np.ndarray:
    """Per-slot energy efficiency R f(snr) / p; 0 on silent slots.

    For the Shannon model this is the rate R ln(1 + snr).
    """
    if isinstance(model, Shannon):
        return params.R * np.log1p(pol.snr_target)
    tx = pol.transmitting
    p = np.where(tx, pol.power, 1.0)
    return np.where(tx, params.R * model.value(pol.snr_target) / p, 0.0)


def expected_energy(model, params: LinkParams, dist, mc: MonteCarloConfig,
                    cfg: SolverConfig = DEFAULT_SOLVER, stream: int = STREAM_G11) -> Estimate:
    """T * E[p*(g)] in joules."""
    est = expect_1d(lambda g: policies(model, params, g, cfg).power, dist, mc, stream)
    return Estimate(params.T * est.value, params.T * est.stderr)


def expected_utility(model, params: LinkParams, dist, mc: MonteCarloConfig,
                     cfg: SolverConfig = DEFAULT_SOLVER, stream: int = STREAM_G11) -> Estimate:
    """Long-term energy efficiency in bits/J (no energy penalty)."""
    return expect_1d(lambda g: utility_integrand(model, params, policies(model, params, g, cfg)),
                     dist, mc, stream)


def expected_lagrangian(model, params: LinkParams, dist, mc: MonteCarloConfig,
                        cfg: SolverConfig = DEFAULT_SOLVER, stream: int = STREAM_G11) -> Estimate:
    return expect_1d(lambda g: policies(model, params, g, cfg).objective_value, dist, mc, stream)


@dataclass(frozen=True)
class CalibrationResult:
    lam: float
    energy: float
    stderr: float
    saturated: str | None = None


def calibrate_lambda(model, params: LinkParams, dist, mc: MonteCarloConfig,
                     cfg: SolverConfig = DEFAULT_SOLVER, lam_min: float = 1.0, lam_max: float = 1e16,
                     stream: int = STREAM_G11) -> CalibrationResult:
    """Find lam such that the expected energy meets ``params.E_budget``.

    Bisection on ln(lam); the same draws are reused at each step so the
    estimated energy is exactly non-increasing in lam.
    """
    budget = params.E_budget
    if budget is None or not budget > 0:
        raise ValueError("calibration needs a positive E_budget")

    def energy(lam):
        return expected_energy(model, params.with_lam(lam), dist, mc, cfg, stream)

    e_min = energy(lam_min)
    if budget >= e_min.value:
        warnings.warn(f"energy budget {budget!r} J is never binding; returning lam_min", RuntimeWarning,
                      stacklevel=2)
        return CalibrationResult(lam_min, e_min.value, e_min.stderr, "lam_min")
    e_max = energy(lam_max)
    if budget <= e_max.value:
        warnings.warn(f"energy budget {budget!r} J is below what lam_max achieves; returning lam_max",
                      RuntimeWarning, stacklevel=2)
        return CalibrationResult(lam_max, e_max.value, e_max.stderr, "lam_max")

    lo, hi = math.log(lam_min), math.log(lam_max)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if energy(math.exp(mid)).value > budget:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-7:  # 1e-7 relative in lam
            break
    # take the side of the bracket closer to the budget
    e_lo, e_hi = energy(math.exp(lo)), energy(math.exp(hi))
    lam, est = (math.exp(lo), e_lo) if abs(e_lo.value - budget) <= abs(e_hi.value - budget) else (math.exp(hi), e_hi)
    return CalibrationResult(lam, est.value, est.stderr)


@dataclass(frozen=True)
class FreeSlotEstimate:
    value: float
    stderr: float
    closed_form: float | None = None


def free_slot_probability(model, params: LinkParams, dist, mc: MonteCarloConfig,
                          cfg: SolverConfig = DEFAULT_SOLVER, stream: int = STREAM_G11) -> FreeSlotEstimate:
    """Pr[the link stays silent], estimated; exact too for the Shannon model."""
    est = expect_1d(lambda g: (~policies(model, params, g, cfg).transmitting).astype(float), dist, mc, stream)
    closed = None
    if isinstance(model, Shannon):
        closed = shannon_free_slot_probability(params, dist)
    return FreeSlotEstimate(est.value, est.stderr, closed)


def shannon_free_slot_probability(params: LinkParams, dist) -> float:
    return float(-math.expm1(-params.lam * params.sigma2 / dist.mean))


def lower_bound_threshold(model, params: LinkParams) -> float:
    """Gain below which max f'' <= 2c, i.e. silence is certain."""
    m = max_f2(model)
    if m <= 0:
        return math.inf
    return params.sigma2 * math.sqrt(2.0 * params.lam * params.T / (params.R * m))


def free_slot_lower_bound(model, params: LinkParams, dist) -> float:
    """Closed-form lower bound Pr[max f'' <= 2 lam T sigma2^2 / (R g^2)].

    When f is concave (no positive f''), no gain ever yields a positive
    root, so the bound is 1 and a :class:`DegenerateModelWarning` is issued.
    """
    if isinstance(model, Shannon):
        raise UnsupportedOperationError("the lower bound needs a pointwise efficiency function")
    if max_f2(model) <= 0:
        warnings.warn(f"{model!r} has no interior maximum of f''; bound set to 1",
                      DegenerateModelWarning, stacklevel=2)
        return 1.0
    return float(dist.cdf(lower_bound_threshold(model, params)))


def transmit_threshold_c(model, cfg: SolverConfig = DEFAULT_SOLVER) -> float:
    """Largest c for which transmitting still beats silence.

    The optimal Lagrangian share decreases in c, so the transmit set is
    ``c < c_tx``. Returns 0 for models that never transmit.
    """
    m = max_f2(model)
    if m <= 0:
        return 0.0
    c_hi = m / 2.0

    def sign(c):
        z = zeros_many(model, c, cfg, lesser=False)
        x2 = np.where(z.has_zeros, z.x2, 1.0)
        tx = z.has_zeros & (model.value(x2) / x2 - c * x2 > 0)
        return np.where(tx, 1.0, -1.0)

    lo = c_hi * 1e-12
    if sign(np.array([lo]))[0] < 0:
        return 0.0
    return float(bisect_many(sign, np.array([lo]), np.array([c_hi]), rtol=1e-13, max_iter=300)[0])
