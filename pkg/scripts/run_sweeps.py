"""Write the four sweep CSVs into a results directory.

    python3 scripts/run_sweeps.py [--config PATH] [--out-dir results] [--workers N]

Also prints the summary checks and the refined g11 location of the
leader's power peak for the smallest and largest g22 rows.
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from eegame.config import load_config
from eegame.experiments import EXPERIMENTS, peak_location, profile_axes, to_csv

SWEEPS = {
    "energy_sweep.csv": "energy-sweep",
    "free_slot.csv": "free-slot",
    "utilities.csv": "utilities",
    "power_profile.csv": "power-profile",
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config")
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = load_config(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, verb in SWEEPS.items():
        t0 = time.perf_counter()
        table = EXPERIMENTS[verb](cfg, workers=args.workers)
        (out / name).write_text(to_csv(table, cfg))
        print(f"{name}: {len(table.rows)} rows in {time.perf_counter() - t0:.1f} s")
        for line in table.summary:
            print(f"  {line}")

    g11, g22 = profile_axes(cfg)
    for v in (g22[0], g22[-1]):
        print(f"  power peak at g11 = {peak_location(cfg, float(v), g11):.6e} for g22 = {v:.1e}")


if __name__ == "__main__":
    main()
