"""Recompute the reference numbers frozen in the test suite.

Every value here comes from a brute-force path (dense grids, sign scans,
scipy quadrature) rather than the equation-based solvers, so the tests
compare two independent computations.

    python3 scripts/derive_reference_values.py
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from eegame import Empirical, ExponentialGain, LinkParams, Outage
from eegame.oracles import (
    GainRealization,
    curvature_peak_grid,
    inflection_scan,
    leader_bruteforce,
    single_user_bruteforce,
    zeros_sign_scan,
)


def energy_by_quadrature(model, params: LinkParams, mean: float, n_grid: int = 20_000) -> float:
    """T E[p*(g)] with p* from grid maximization and scipy quadrature over g."""
    dist = ExponentialGain(mean)

    def silent(g):
        return single_user_bruteforce(model, params, g, n=n_grid)[0] == 0.0

    # silence threshold in g located by bisection on the brute-force decision
    lo, hi = 1e-3 * mean, 1e3 * mean
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if silent(mid):
            lo = mid
        else:
            hi = mid
        if hi / lo - 1 < 1e-12:
            break

    def integrand(g):
        x, _ = single_user_bruteforce(model, params, g, n=n_grid)
        return params.sigma2 / g * x * dist.pdf(g)

    val, _ = integrate.quad(integrand, hi, 60 * mean, epsabs=0, epsrel=1e-9, limit=400)
    return params.T * val, hi


def main():
    m = Outage(0.9)
    x0 = inflection_scan(m)
    xp, fp = curvature_peak_grid(m, x0)
    print(f"outage(0.9): inflection {x0!r}, curvature peak at {xp!r} value {fp!r}")
    for M in (2, 3, 5):
        e = Empirical(M)
        print(f"empirical({M}): inflection {inflection_scan(e)!r}")

    c = 0.25 * fp
    print(f"outage(0.9) zeros at c = max_f2/4 = {c!r}: {zeros_sign_scan(m, c)!r}")

    p = LinkParams(lam=1e10)
    x, v = single_user_bruteforce(m, p, 1e-10)
    print(f"single user g=1e-10 lam=1e10: snr {x!r}, V {v!r}")

    e, g_th = energy_by_quadrature(m, p, 1e-10)
    print(f"expected energy lam=1e10: {e!r} J (silence below g = {g_th!r})")

    real = GainRealization(1.3e-10, 0.8e-12, 1.6e-12, 0.7e-10)
    print(f"leader at {real}: {leader_bruteforce(m, m, p, p, real)!r}")


if __name__ == "__main__":
    np.set_printoptions(precision=17)
    main()
