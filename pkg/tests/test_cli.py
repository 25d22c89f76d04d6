import csv
import json
import math

import pytest
import yaml

from darkcat.cli import main
from darkcat.config import ConfigError, load_config, parse_config

STAB = {"experiment": "stab-gap", "params": {"Fg": [1, 2], "gamma": [0.02]}}
DARK = {"experiment": "dark-states", "params": {"Fg": [1, 2], "drives": [{"alpha": 0.3, "beta": 0.7}],
                                               "n_random": 3, "seed": 5}}


def _write(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return str(p)


def _run(tmp_path, data, cmd, out="out", extra=()):
    return main([cmd, "--config", _write(tmp_path, data), "--out", str(tmp_path / out), *extra])


def test_runs_and_writes_outputs(tmp_path):
    assert _run(tmp_path, STAB, "stab-gap") == 0
    rows = list(csv.reader(open(tmp_path / "out" / "stab-gap.csv")))
    assert len(rows) > 1
    summary = json.loads((tmp_path / "out" / "stab-gap.summary.json").read_text())
    assert summary["experiment"] == "stab-gap"
    assert "wall_clock_s" not in json.dumps(summary)


def test_outputs_byte_identical_across_runs(tmp_path):
    assert _run(tmp_path, DARK, "dark-states", "a") == 0
    assert _run(tmp_path, DARK, "dark-states", "b") == 0
    for f in ("dark-states.csv", "dark-states.summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_csv_independent_of_threads(tmp_path):
    assert _run(tmp_path, DARK, "dark-states", "one", ["--threads", "1"]) == 0
    assert _run(tmp_path, DARK, "dark-states", "two", ["--threads", "3"]) == 0
    f = "dark-states.csv"
    assert (tmp_path / "one" / f).read_bytes() == (tmp_path / "two" / f).read_bytes()


@pytest.mark.parametrize("data", [
    {**STAB, "bogus": 1},
    {"experiment": "stab-gap", "params": {"Fg": [2], "gama": [0.1]}},
    {"experiment": "stab-gap", "params": {"Fg": [2], "polarization_mode": "pi_only"}},
    {"experiment": "stab-gap", "params": {"Fg": [0.7]}},
    {"experiment": "stab-gap", "params": {"Fg": [2], "gamma": [-0.1]}},
    {"experiment": "stab-gap", "units": "hertz", "params": {"Fg": [2]}},
    {"experiment": "gate-bench", "params": {"kind": ["uy"]}},
    {"experiment": "cx-bench", "params": {"mode": "movie"}},
])
def test_config_errors_exit_2(tmp_path, data):
    assert _run(tmp_path, data, data["experiment"]) == 2


def test_wrong_experiment_and_bad_yaml_exit_2(tmp_path):
    assert _run(tmp_path, STAB, "dark-states") == 2
    p = tmp_path / "bad.yaml"
    p.write_text("params: [unclosed\n")
    assert main(["stab-gap", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert main(["stab-gap", "--config", str(tmp_path / "missing.yaml"), "--out", str(tmp_path / "o")]) == 2


def test_bad_thread_flag_exit_2(tmp_path):
    assert _run(tmp_path, STAB, "stab-gap", extra=["--threads", "0"]) == 2


def test_numerical_failure_exit_3(tmp_path):
    # strong drive breaks the dispersive estimate
    data = {"experiment": "cx-bench", "params": {"Fg": [2], "omega_r": 1.0, "delta_r": 0.5,
                                                 "T_factor": [1.0]}}
    assert _run(tmp_path, data, "cx-bench") == 3


def test_mhz_units_convert_to_reference_drive():
    cfg = parse_config({"experiment": "cx-bench", "units": "2pi_MHz",
                        "params": {"omega_r": 3.0, "delta_r": 6.0, "V": [300.0], "gamma_r": 0.003979}})
    p = cfg.params
    assert p.omega_r == 1.0 and p.delta_r == 2.0 and p.V == [100.0]
    assert p.gamma_r == pytest.approx(0.003979 / 3)


def test_mhz_times_scale_with_two_pi():
    cfg = parse_config({"experiment": "gate-bench", "units": "2pi_MHz",
                        "params": {"omega": 2.0, "T": [1.0]}})
    assert cfg.params.T == [pytest.approx(4 * math.pi)]


def test_shipped_configs_parse():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "configs"
    files = sorted(root.glob("*.yaml"))
    assert files
    for f in files:
        load_config(f)


def test_parse_rejects_non_mapping():
    with pytest.raises(ConfigError):
        parse_config([1, 2])
