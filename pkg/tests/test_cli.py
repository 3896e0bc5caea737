import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest

from lipatov_chain import cli
from lipatov_chain.config import parse_config
from lipatov_chain.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _snapshot(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "timings.json"}


@pytest.mark.parametrize("sub,cfg", [("bethe", "bethe"), ("thermo", "thermo"), ("dis", "dis")])
def test_fast_subcommands_are_deterministic(tmp_path, sub, cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main([sub, "--config", str(CONFIGS / f"{cfg}.toml"), "--out", str(a)]) == 0
    assert cli.main([sub, "--config", str(CONFIGS / f"{cfg}.toml"), "--out", str(b)]) == 0
    assert _snapshot(a) == _snapshot(b)
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["subcommand"] == sub
    assert "wall_seconds" not in json.dumps(manifest)


def test_quench_subcommand_outputs(tmp_path):
    cfg = _write(tmp_path, "[quench]\nL = 8\nt_max = 6.0\ndt = 0.25\n")
    code, man = cli.run("quench", cfg, tmp_path / "out", fmt="csv")
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "out" / "quench_trace.csv")))
    assert list(rows[0]) == ["t", "S", "S_running_mean"]
    assert man["results"]["quench"]["norm_drift"] < 1e-9


def test_osee_subcommand_identity(tmp_path):
    cfg = _write(tmp_path, '[osee]\nL = 6\noperator = "identity"\nt_max = 1.0\n')
    code, man = cli.run("osee", cfg, tmp_path / "out", fmt="json")
    assert code == 0
    vals = json.loads((tmp_path / "out" / "osee_trace.json").read_text())
    assert all(r["osee"] == 0.0 for r in vals)


def test_central_charge_subcommand_small(tmp_path):
    cfg = _write(tmp_path, "[scaling]\nh = 0.5\nL_list = [16, 24, 32, 48]\n")
    code, man = cli.run("central-charge", cfg, tmp_path / "out")
    assert code == 0
    assert abs(man["results"]["central_charge"]["c"] - 1) < 0.1
    header = (tmp_path / "out" / "scaling_series.csv").read_text().splitlines()[0]
    assert header == "L,N,E,F,E_over_L"


def test_thermo_exterior_failure_exits_3(tmp_path):
    cfg = _write(tmp_path, '[thermo]\nh = 0.5\nsector = "exterior"\nresolution = 16\n')
    code, msg = cli.run("thermo", cfg, tmp_path / "out")
    assert code == 3 and "[thermo]" in msg


@pytest.mark.parametrize(
    "text,path",
    [
        ("[dis]\nm = -1.0\nx = 0.01\n", "dis.m"),
        ("[dis]\nm = 1.0\nx = 0.01\nbogus = 1\n", "dis.bogus"),
        ("[thermo]\nh = 2.0\n", "thermo.h"),
        ("[quench]\nL = 10\n", "quench.L"),
        ("[bethe]\nL = 6\nN = 2\nqn = [0.5]\n", "bethe.qn"),
        ("[scaling]\nh = 0.5\nL_list = [8, 16, 32]\n", "scaling.L_list"),
        ("[nonsense]\n", "nonsense"),
        ("[dis\n", "<file>"),
    ],
)
def test_config_errors_name_the_field(tmp_path, text, path):
    cfg = _write(tmp_path, text)
    code, msg = cli.run("dis", cfg, tmp_path / "out")
    assert code == 2
    assert f"config error at {path}" in msg
    assert not (tmp_path / "out").exists()


def test_missing_table_for_subcommand(tmp_path):
    code, msg = cli.run("quench", CONFIGS / "dis.toml", tmp_path / "out")
    assert code == 2 and "quench" in msg


def test_parse_config_defaults():
    cfg = parse_config({"thermo": {"h": 0.5}})
    assert cfg.thermo.resolution == 64 and cfg.thermo.sector == "interior"
    with pytest.raises(ConfigError):
        parse_config({"osee": {"L": 6, "site": 9}})


def test_console_entry_point(tmp_path):
    out = tmp_path / "o"
    r = subprocess.run(
        [sys.executable, "-m", "lipatov_chain.cli", "dis", "--config",
         str(CONFIGS / "dis.toml"), "--out", str(out), "--format", "csv"],
        capture_output=True, text=True,
    )
    assert r.returncode == 0, r.stderr
    assert (out / "entropy_vs_x.csv").exists() and not (out / "entropy_vs_x.json").exists()


def test_shipped_configs_parse():
    from lipatov_chain.config import load_config

    for p in sorted(CONFIGS.glob("*.toml")):
        load_config(p)
