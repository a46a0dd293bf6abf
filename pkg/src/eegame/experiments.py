"""Sweep and grid experiments behind the CLI verbs.

Each experiment returns a :class:`Table`; rows are computed point by
point (optionally in worker processes) and assembled in sweep order, so
the CSV text depends only on the configuration.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ScenarioConfig
from .efficiency import Shannon
from .solvers import bisect_many, golden_many
from .single_user import (
    calibrate_lambda,
    expected_energy,
    free_slot_lower_bound,
    free_slot_probability,
    shannon_free_slot_probability,
)
from .stackelberg import equilibrium_expected_utilities, orthogonal_case_utilities, profile_column


@dataclass
class Table:
    verb: str
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    summary: list[str] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def to_csv(table: Table, cfg: ScenarioConfig) -> str:
    lines = [f"# eegame {table.verb}", f"# seed={cfg.seed}"]
    lines += [f"# config {line}" for line in cfg.echo()]
    lines.append(",".join(table.columns))
    lines += [",".join(_fmt(v) for v in row) for row in table.rows]
    lines += [f"# {s}" for s in table.summary]
    return "\n".join(lines) + "\n"


def parallel_map(fn, items, workers: int = 1):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def lam_grid(cfg: ScenarioConfig) -> np.ndarray:
    return np.geomspace(cfg.lam_min, cfg.lam_max, cfg.points)


def _verdict(ok: bool) -> str:
    return "PASS" if ok else "FAIL"


# --- energy vs lambda ---


def _energy_point(args):
    cfg, lam = args
    est = expected_energy(cfg.model1, cfg.params1(lam), cfg.dists()[0], cfg.mc())
    return (lam, est.value, est.stderr)


def run_energy_sweep(cfg: ScenarioConfig, workers: int = 1) -> Table:
    rows = parallel_map(_energy_point, [(cfg, float(l)) for l in lam_grid(cfg)], workers)
    t = Table("energy-sweep", ["lambda", "energy_J", "stderr"], rows)
    e = t.column("energy_J")
    t.summary.append(f"energy non-increasing in lambda: {_verdict(bool(np.all(np.diff(e) <= 0)))}")
    t.summary.append(f"zero energy at largest lambda: {_verdict(bool(e[-1] == 0.0))}")
    return t


# --- free time-slot probability ---


def _free_slot_point(args):
    cfg, lam = args
    p = cfg.params1(lam)
    d11 = cfg.dists()[0]
    exact = free_slot_probability(cfg.model1, p, d11, cfg.mc())
    if isinstance(cfg.model1, Shannon):
        bound = shannon_free_slot_probability(p, d11)
    else:
        bound = free_slot_lower_bound(cfg.model1, p, d11)
    return (lam, exact.value, exact.stderr, bound)


def run_free_slot_sweep(cfg: ScenarioConfig, workers: int = 1) -> Table:
    rows = parallel_map(_free_slot_point, [(cfg, float(l)) for l in lam_grid(cfg)], workers)
    t = Table("free-slot", ["lambda", "p_exact", "p_exact_stderr", "p_lower_bound"], rows)
    ok = all(r[3] <= r[1] + 3 * r[2] for r in rows)
    t.summary.append(f"lower bound <= exact + 3 stderr on every row: {_verdict(ok)}")
    return t


# --- utilities: orthogonal vs Stackelberg ---


def _utility_point(args):
    cfg, lam = args
    p1, p2 = cfg.params1(lam), cfg.params2(lam)
    mc = cfg.mc(game=True)
    orth = orthogonal_case_utilities(cfg.model1, cfg.model2, p1, p2, cfg.dists(), mc)
    eq = equilibrium_expected_utilities(cfg.model1, cfg.model2, p1, p2, cfg.dists(), mc)
    return (lam, orth.primary.value, orth.primary.stderr, orth.secondary.value, orth.secondary.stderr,
            eq.leader.value, eq.leader.stderr, eq.follower.value, eq.follower.stderr)


UTILITY_COLUMNS = ["lambda", "u_orth_primary", "u_orth_primary_stderr", "u_orth_secondary",
                   "u_orth_secondary_stderr", "u_leader", "u_leader_stderr", "u_follower", "u_follower_stderr"]


def utility_ordering(t: Table) -> dict[str, bool]:
    """The three qualitative comparisons for the utility sweep."""
    c = {name: t.column(name) for name in UTILITY_COLUMNS}
    se1 = np.hypot(c["u_orth_primary_stderr"], c["u_leader_stderr"])
    se2 = np.hypot(c["u_follower_stderr"], c["u_orth_secondary_stderr"])
    tail = np.vstack([c[k] for k in ("u_orth_primary", "u_orth_secondary", "u_leader", "u_follower")])
    return {
        "orth_primary>=leader": bool(np.all(c["u_orth_primary"] >= c["u_leader"] - 3 * se1)),
        "follower>=orth_secondary": bool(np.all(c["u_follower"] >= c["u_orth_secondary"] - 3 * se2)),
        "zero tail": bool(np.all(tail[:, -1] == 0.0)),
    }


def run_utility_comparison(cfg: ScenarioConfig, workers: int = 1) -> Table:
    rows = parallel_map(_utility_point, [(cfg, float(l)) for l in lam_grid(cfg)], workers)
    t = Table("utilities", list(UTILITY_COLUMNS), rows)
    checks = utility_ordering(t)
    t.summary.append("ordering " + "; ".join(f"{k}: {_verdict(v)}" for k, v in checks.items()))
    return t


# --- leader power profile ---


def profile_axes(cfg: ScenarioConfig):
    n = cfg.profile_points
    return (np.geomspace(cfg.profile_g11_min, cfg.profile_g11_max, n),
            np.geomspace(cfg.profile_g22_min, cfg.profile_g22_max, n))


def _profile_column(args):
    cfg, g22 = args
    g11, _ = profile_axes(cfg)
    lam = cfg.profile_lam
    return profile_column(cfg.model1, cfg.model2, cfg.params1(lam), cfg.params2(lam), g11, g22, cfg.g12,
                          cfg.g21)


def run_power_profile(cfg: ScenarioConfig, workers: int = 1) -> Table:
    g11, g22 = profile_axes(cfg)
    cols = parallel_map(_profile_column, [(cfg, float(v)) for v in g22], workers)
    t = Table("power-profile", ["g11", "g22", "p1_star"])
    for j, col in enumerate(cols):
        for i, p in enumerate(col):
            t.rows.append((float(g11[i]), float(g22[j]), float(p)))
    grid = np.column_stack(cols)
    low = g11 <= g11[0] * 10.0
    t.summary.append(f"silent over the lowest g11 decade: {_verdict(bool(np.all(grid[low] == 0.0)))}")
    return t


def profile_matrix(t: Table, cfg: ScenarioConfig) -> np.ndarray:
    n = cfg.profile_points
    return t.column("p1_star").reshape(n, n).T  # [i_g11, j_g22]


# --- calibration ---


def run_calibration(cfg: ScenarioConfig, workers: int = 1) -> Table:
    if cfg.E_budget is None:
        from .config import ConfigError

        raise ConfigError("calibration needs an energy budget", "primary.E_budget")
    res = calibrate_lambda(cfg.model1, cfg.params1(), cfg.dists()[0], cfg.mc())
    t = Table("calibrate", ["E_budget_J", "lambda", "energy_J", "stderr", "saturated"],
              [(cfg.E_budget, res.lam, res.energy, res.stderr, res.saturated or "no")])
    tol = max(1e-3 * cfg.E_budget, 2 * res.stderr)
    ok = res.saturated is None and abs(res.energy - cfg.E_budget) <= tol
    t.summary.append(f"energy within max(1e-3 E, 2 stderr) of budget: {_verdict(ok)}")
    return t


EXPERIMENTS = {
    "energy-sweep": run_energy_sweep,
    "free-slot": run_free_slot_sweep,
    "utilities": run_utility_comparison,
    "power-profile": run_power_profile,
    "calibrate": run_calibration,
}


def peak_location(cfg: ScenarioConfig, g22: float, g11_grid) -> float:
    """g11 of the leader's power peak along one g22 row, refined below grid spacing.

    The peak usually sits right at the silence boundary, where p1* jumps
    from 0 to its largest value; that boundary is then bisected in
    log g11. An interior peak is refined with golden search instead.
    """
    lam = cfg.profile_lam
    p1, p2 = cfg.params1(lam), cfg.params2(lam)
    grid = np.asarray(g11_grid, dtype=float)

    def power(g):
        return profile_column(cfg.model1, cfg.model2, p1, p2, np.atleast_1d(g), g22, cfg.g12, cfg.g21)

    row = power(grid)
    if not np.any(row > 0):
        return math.nan
    i = int(np.argmax(row))
    first = int(np.flatnonzero(row > 0)[0])
    if i == first and i > 0:
        t = bisect_many(lambda t: np.where(power(np.exp(t)) > 0, 1.0, -1.0),
                        np.array([math.log(grid[i - 1])]), np.array([math.log(grid[i])]),
                        rtol=1e-13, max_iter=200)
        return float(math.exp(t[0]))
    lo = math.log(grid[max(i - 1, 0)])
    hi = math.log(grid[min(i + 1, grid.size - 1)])
    t, _ = golden_many(lambda t: power(np.exp(t[:, 0]))[:, None], np.array([lo]), np.array([hi]), rtol=1e-12)
    return float(math.exp(t[0]))
