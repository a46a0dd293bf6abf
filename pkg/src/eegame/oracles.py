"""Brute-force reference computations and the oracle suite.

These deliberately avoid the equation-based solvers: maxima come from
dense grids refined with scipy's bounded Brent method and zeros from
sign scans refined with ``brentq``. The one shared piece is the exact
follower response inside the leader oracle, which is itself checked
against :func:`follower_bruteforce`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .efficiency import Empirical, Outage, outage_peak
from .single_user import LinkParams, optimal_snr
from .stackelberg import (
    GainRealization,
    follower_best_response,
    follower_br_derivative,
    follower_residual,
    leader_equilibrium,
    leader_objective,
    leader_stationarity_residual,
)
from .solvers import SolverConfig, greatest_zero, F_value


def central_difference(fn, x, h):
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


def _grid_then_brent(fn_vec, lo, hi, n, log=False):
    """Dense grid maximum of a vectorized ``fn``, refined by bounded Brent."""
    xs = np.geomspace(lo, hi, n) if log else np.linspace(lo, hi, n)
    vals = fn_vec(xs)
    i = int(np.nanargmax(vals))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, n - 1)]
    best_x, best_f = float(xs[i]), float(vals[i])
    if b > a:
        if log:
            res = optimize.minimize_scalar(lambda t: -float(fn_vec(np.array([math.exp(t)]))[0]),
                                           bounds=(math.log(a), math.log(b)), method="bounded",
                                           options={"xatol": 1e-13})
            x_r = math.exp(res.x)
        else:
            res = optimize.minimize_scalar(lambda v: -float(fn_vec(np.array([v]))[0]), bounds=(a, b),
                                           method="bounded", options={"xatol": 1e-13 * max(abs(b), 1.0)})
            x_r = float(res.x)
        if -res.fun > best_f:
            best_x, best_f = x_r, float(-res.fun)
    return best_x, best_f


def curvature_peak_grid(model, x0: float, n: int = 10**6):
    return _grid_then_brent(lambda x: model.deriv2(x), 1e-9, x0, n)


def inflection_scan(model, lo=1e-6, hi=50.0, n=10**6):
    xs = np.geomspace(lo, hi, n)
    s = np.sign(model.deriv2(xs))
    i = np.flatnonzero((s[:-1] > 0) & (s[1:] < 0))
    if i.size == 0:
        return None
    return optimize.brentq(lambda x: model.deriv2(x), xs[i[0]], xs[i[0] + 1], xtol=1e-15, rtol=1e-15)


def zeros_sign_scan(model, c: float, lo=1e-4, hi=1e3, n=10**6):
    xs = np.geomspace(lo, hi, n)
    fv = F_value(model, xs, c)
    idx = np.flatnonzero(np.sign(fv[:-1]) * np.sign(fv[1:]) < 0)
    return [optimize.brentq(lambda x: float(F_value(model, x, c)), xs[i], xs[i + 1], xtol=1e-15, rtol=1e-15)
            for i in idx]


def single_user_bruteforce(model, params: LinkParams, g: float, n: int = 10**6, x_max: float = 100.0):
    """(snr, V) maximizing the per-slot Lagrangian share; (0, 0) if silence wins."""
    scale = params.R * g / params.sigma2
    c = params.lam * params.T * params.sigma2**2 / (params.R * g * g)

    def v(x):
        return scale * (model.value(x) / x - c * x)

    x, fx = _grid_then_brent(v, x_max / n, x_max, n)
    return (x, fx) if fx > 0 else (0.0, 0.0)


def follower_bruteforce(model2, params2: LinkParams, real: GainRealization, p1: float, n: int = 10**6):
    """(x2, p2) maximizing R2 f(p2 g22 / N2) / p2 - lam2 T p2 over p2."""
    noise = params2.sigma2 + p1 * real.g12
    unit = noise / real.g22

    def obj(p2):
        return params2.R * model2.value(p2 * real.g22 / noise) / p2 - params2.lam * params2.T * p2

    p2, fx = _grid_then_brent(obj, unit * 1e-4, unit * 1e3, n, log=True)
    if fx <= 0:
        return 0.0, 0.0
    return p2 * real.g22 / noise, p2


def leader_bruteforce(model1, model2, params1, params2, real: GainRealization, n: int = 10**4,
                      cfg: SolverConfig = SolverConfig()):
    """(p1, J) from a log grid over the leader power with the follower re-solved exactly."""
    unit = params1.sigma2 * model1.snr_limit() / real.g11
    p1, fx = _grid_then_brent(lambda p: leader_objective(model1, model2, params1, params2, real, p, cfg),
                              unit * 1e-6, unit * 1e6, n, log=True)
    return (p1, fx) if fx > 0 else (0.0, 0.0)


def realization_sampler(rng, direct_mean=1e-10, cross_mean=1e-12):
    g = rng.exponential(size=4) * np.array([direct_mean, cross_mean, cross_mean, direct_mean])
    return GainRealization(*(float(v) for v in g))


# --- suite ----------------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    count: int
    max_dev: float
    tol: float
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.max_dev <= self.tol)


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def run_oracle_suite(seed: int = 0, tol_scale: float = 1.0, quick: bool = True) -> list[CheckResult]:
    """Compare every solver against its brute-force reference.

    ``tol_scale`` multiplies all tolerances; 0 forces failures.
    """
    rng = np.random.default_rng(seed)
    model = Outage(0.9)
    params = LinkParams()
    n_pairs = 20 if quick else 100
    results = []

    # derivatives against finite differences
    worst = 0.0
    count = 0
    for m in (Outage(0.9), Outage(2.0), Empirical(2), Empirical(5)):
        for x in np.geomspace(1e-3, 10, 64):
            fd1 = central_difference(m.value, x, 1e-6 * max(x, 1e-3))
            fd2 = central_difference(m.deriv1, x, 1e-6 * max(x, 1e-3))
            worst = max(worst, abs(m.deriv1(x) - fd1) / (1 + abs(m.deriv1(x))),
                        abs(m.deriv2(x) - fd2) / (1 + abs(m.deriv2(x))))
            count += 2
    results.append(CheckResult("efficiency.derivatives_vs_fd", count, worst, 1e-5 * tol_scale))

    # sup f'' against grid and the outage closed form
    devs = []
    for m in (Outage(0.9), Outage(2.0), Empirical(3), Empirical(6)):
        x0 = inflection_scan(m)
        devs.append(_rel(m.inflection(), x0))
        _, fmax = curvature_peak_grid(m, x0)
        devs.append(_rel(m.max_f2(), fmax))
        if isinstance(m, Outage):
            devs.append(_rel(m.max_f2(), outage_peak(m.a).value))
    results.append(CheckResult("efficiency.inflection_and_max_f2", len(devs), max(devs), 1e-8 * tol_scale))

    # greatest zero against sign scan
    devs = []
    for _ in range(n_pairs):
        m = Outage(float(rng.uniform(0.3, 3.0)))
        c = float(rng.uniform(0.01, 0.99)) * m.max_f2() / 2.0
        z = greatest_zero(m, c)
        scan = zeros_sign_scan(m, c)
        if z.has_zeros:
            if len(scan) != 2:
                devs.append(math.inf)
                continue
            devs.extend([_rel(z.x1, scan[0]), _rel(z.x2, scan[1])])
        else:
            devs.append(0.0 if not scan else math.inf)
    results.append(CheckResult("solvers.greatest_zero_vs_scan", len(devs), max(devs), 1e-6 * tol_scale))

    # single-user policy against grid maximization of V
    devs = []
    for _ in range(n_pairs):
        g = float(rng.exponential(1e-10))
        lam = float(10 ** rng.uniform(8, 12))
        p = params.with_lam(lam)
        sol = optimal_snr(model, p, g)
        x_ref, _ = single_user_bruteforce(model, p, g)
        if sol.transmitting != (x_ref > 0):
            devs.append(math.inf)
        elif sol.transmitting:
            devs.append(_rel(sol.snr_target, x_ref))
        else:
            devs.append(0.0)
    results.append(CheckResult("single_user.optimal_snr_vs_grid", len(devs), max(devs), 1e-4 * tol_scale))

    # follower best response against grid over p2
    devs = []
    for _ in range(n_pairs):
        real = realization_sampler(rng)
        p1 = float(10 ** rng.uniform(-4, -1))
        br = follower_best_response(model, params, real, p1)
        x_ref, _ = follower_bruteforce(model, params, real, p1, n=2 * 10**5 if quick else 10**6)
        if br.transmitting != (x_ref > 0):
            devs.append(math.inf)
        elif br.transmitting:
            devs.append(_rel(br.snr_target, x_ref))
        else:
            devs.append(0.0)
    results.append(CheckResult("stackelberg.follower_vs_grid", len(devs), max(devs), 1e-4 * tol_scale))

    # x2' against central differences
    devs = []
    tight = SolverConfig(rtol=1e-15, max_iter=400)
    tries = 0
    while len(devs) < n_pairs and tries < 20 * n_pairs:
        tries += 1
        real = realization_sampler(rng)
        p1 = float(10 ** rng.uniform(-3, -1))
        h = 1e-6 * p1
        brs = [follower_best_response(model, params, real, v, tight) for v in (p1 - h, p1, p1 + h)]
        if not all(b.transmitting for b in brs):
            continue
        d = follower_br_derivative(model, params, real, p1, tight)
        fd = (brs[2].snr_target - brs[0].snr_target) / (2 * h)
        devs.append(abs(d - fd) / (1 + abs(d)))
    results.append(CheckResult("stackelberg.x2_derivative_vs_fd", len(devs), max(devs, default=math.inf),
                               1e-4 * tol_scale))

    # leader equilibrium against a log grid, plus stationarity residuals
    devs = []
    resid = []
    for _ in range(max(5, n_pairs // 4)):
        real = realization_sampler(rng)
        out = leader_equilibrium(model, model, params, params, real)
        p_ref, j_ref = leader_bruteforce(model, model, params, params, real)
        if (out.p1 > 0) != (p_ref > 0):
            devs.append(math.inf)
        elif out.p1 > 0:
            devs.append(_rel(out.p1, p_ref))
        else:
            devs.append(0.0)
        if out.p1 > 0 and out.p2 > 0:
            resid.append(leader_stationarity_residual(model, model, params, params, real, out.gamma1, out.gamma2))
            resid.append(1e5 * follower_residual(model, params, real, out.p1, out.gamma2))
    results.append(CheckResult("stackelberg.leader_vs_grid", len(devs), max(devs), 1e-3 * tol_scale))
    results.append(CheckResult("stackelberg.stationarity_residuals", len(resid), max(resid, default=0.0),
                               1e-4 * tol_scale, ["follower residual scaled by 1e5 (tolerance 1e-9)"]))
    return results


def format_report(results: list[CheckResult]) -> str:
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status}  {r.name:40s} n={r.count:<5d} max_dev={r.max_dev:.3e} tol={r.tol:.1e}")
        lines.extend(f"      {note}" for note in r.notes)
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results) - n_fail}/{len(results)} checks passed")
    return "\n".join(lines)
