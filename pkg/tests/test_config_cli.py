import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from eegame.cli import main
from eegame.config import ConfigError, ScenarioConfig, load_config, parse_config
from eegame.efficiency import Empirical, Outage, Shannon
from eegame.experiments import (
    lam_grid,
    peak_location,
    profile_axes,
    profile_matrix,
    run_energy_sweep,
    run_free_slot_sweep,
    run_power_profile,
    run_utility_comparison,
    to_csv,
    utility_ordering,
)

SMALL = """
seed = 3
[mc]
samples = 2000
game_samples = 1000
[sweep]
lam_min = 1e8
lam_max = 1e14
points = 5
[profile]
points = 6
"""


def test_defaults_are_reference_setting():
    cfg = ScenarioConfig()
    assert cfg.model1 == Outage(0.9) and cfg.T == 1e-3 and cfg.sigma2 == 1e-12
    assert (cfg.R1, cfg.R2) == (1e4, 1e4)
    assert (cfg.g11, cfg.g12, cfg.g21, cfg.g22) == (1e-10, 1e-12, 1e-12, 1e-10)
    assert cfg.profile_lam == 1e10
    assert load_config(None) == cfg


def test_parse_full_config():
    cfg = parse_config("""
seed = 9
out = "x.csv"
[link]
T = 2e-3
sigma2 = 1e-13
[primary]
R = 2e4
lam = 1e9
E_budget = 1e-6
model = { kind = "empirical", M = 3 }
[secondary]
model = { kind = "shannon" }
[gains]
g12 = 1e-15
""")
    assert cfg.seed == 9 and cfg.out == "x.csv" and cfg.T == 2e-3 and cfg.sigma2 == 1e-13
    assert cfg.R1 == 2e4 and cfg.lam1 == 1e9 and cfg.E_budget == 1e-6
    assert cfg.model1 == Empirical(3) and isinstance(cfg.model2, Shannon)
    assert cfg.g12 == 1e-15 and cfg.params1().E_budget == 1e-6


@pytest.mark.parametrize("text, fieldname, line", [
    ("[sweep]\nlam_min = 1e9\nlam_max = 1e8\n", "sweep.lam_min", 2),
    ("[sweep]\npoints = 1\n", "sweep.points", 2),
    ("[mc]\nsamples = 10\n", "mc.samples", 2),
    ("[sweep]\nfoo = 1\n", "sweep.foo", 2),
    ("seed = 1\n[mc]\nsamples = 1.5\n", "mc.samples", 3),
    ("[primary]\nmodel = { kind = \"outage\", a = -1 }\n", "primary.model", 2),
    ("[primary]\nmodel = \"outage\"\n", "primary.model", 2),
])
def test_config_errors_name_field_and_line(text, fieldname, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.field_name == fieldname and err.value.line == line
    assert fieldname in str(err.value) and f"line {line}" in str(err.value)


def test_invalid_toml():
    with pytest.raises(ConfigError, match="invalid TOML"):
        parse_config("[mc\n")


@given(st.floats(1e3, 1e12), st.floats(1.01, 1e4), st.integers(2, 100))
def test_sweep_grid(lo, ratio, n):
    cfg = ScenarioConfig(lam_min=lo, lam_max=lo * ratio, points=n)
    g = lam_grid(cfg)
    assert g.size == n and np.all(np.diff(g) > 0)
    assert g[0] == pytest.approx(lo) and g[-1] == pytest.approx(lo * ratio)


def test_csv_header_and_format():
    cfg = parse_config(SMALL)
    text = to_csv(run_energy_sweep(cfg), cfg)
    lines = text.splitlines()
    assert lines[0] == "# eegame energy-sweep" and lines[1] == "# seed=3"
    assert "# config samples=2000" in lines
    assert not any(line.startswith("# config out=") for line in lines)
    header = lines.index("lambda,energy_J,stderr")
    rows = [line for line in lines[header + 1:] if not line.startswith("#")]
    assert len(rows) == 5
    for row in rows:
        for cell in row.split(","):
            assert repr(float(cell)) == cell  # shortest round-trip decimal
    assert lines[-1].endswith("PASS")


def test_experiments_small(tmp_path):
    cfg = parse_config(SMALL)
    fs = run_free_slot_sweep(cfg)
    assert fs.columns == ["lambda", "p_exact", "p_exact_stderr", "p_lower_bound"]
    assert fs.rows[0][1] < 0.5 and fs.rows[-1][1] == 1.0
    ut = run_utility_comparison(cfg)
    checks = utility_ordering(ut)
    assert set(checks) == {"orth_primary>=leader", "follower>=orth_secondary", "zero tail"}
    assert checks["zero tail"]
    pp = run_power_profile(cfg)
    mat = profile_matrix(pp, cfg)
    g11, g22 = profile_axes(cfg)
    assert mat.shape == (6, 6) and np.all(mat[g11 <= 1e-11] == 0.0)


def test_peak_location_refines_boundary():
    cfg = ScenarioConfig()
    g11 = np.geomspace(1e-11, 1e-10, 12)
    x = peak_location(cfg, 1e-12, g11)
    # brute-force silence threshold of the lone primary (follower silent at tiny g22)
    assert x == pytest.approx(3.868182855080083e-11, rel=1e-9)


@pytest.mark.parametrize("verb", ["energy-sweep", "free-slot", "utilities", "power-profile"])
def test_cli_deterministic_across_workers(tmp_path, verb):
    conf = tmp_path / "c.toml"
    conf.write_text(SMALL)
    outs = []
    for w in (1, 3):
        out = tmp_path / f"{verb}-{w}.csv"
        assert main([verb, "--config", str(conf), "--workers", str(w), "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_cli_overrides(tmp_path, capsys):
    conf = tmp_path / "c.toml"
    conf.write_text(SMALL)
    assert main(["energy-sweep", "--config", str(conf), "--seed", "11", "--samples", "3000"]) == 0
    out = capsys.readouterr().out
    assert "# seed=11" in out and "# config samples=3000" in out


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[sweep]\nlam_min = 1e9\nlam_max = 1e8\n")
    assert main(["energy-sweep", "--config", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["energy-sweep", "--config", str(tmp_path / "missing.toml")]) == 2
    assert main(["calibrate"]) == 2  # no energy budget configured
    assert main(["nonsense"]) == 2
    assert main(["energy-sweep", "--seed", "-1"]) == 2


def test_cli_calibrate(tmp_path, capsys):
    conf = tmp_path / "c.toml"
    conf.write_text("[mc]\nsamples = 5000\n[primary]\nE_budget = 5e-6\n")
    assert main(["calibrate", "--config", str(conf)]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if not l.startswith("#")]
    assert lines[0] == "E_budget_J,lambda,energy_J,stderr,saturated"
    assert lines[1].endswith(",no")


def test_cli_oracle_suite(capsys):
    assert main(["oracle-suite"]) == 0
    report = capsys.readouterr().out
    assert "8/8 checks passed" in report and "n=" in report
    assert main(["oracle-suite", "--tolerance-scale", "0"]) == 1
