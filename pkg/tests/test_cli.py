import json
from pathlib import Path

from click.testing import CliRunner

from hoversim.cli import main

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"


def short_copy(tmp_path, name="hover.json", duration=2.0, **extra):
    doc = json.loads((SCENARIO_DIR / name).read_text())
    doc["duration"] = duration
    doc.update(extra)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(doc))
    return path


def test_run_writes_outputs_and_is_deterministic(tmp_path):
    runner = CliRunner()
    scenario = short_copy(tmp_path)
    outs = []
    for sub in ("a", "b"):
        result = runner.invoke(
            main, ["run", str(scenario), "--out", str(tmp_path / sub)]
        )
        assert result.exit_code == 0, result.output
        outs.append((tmp_path / sub / "telemetry.csv").read_bytes())
        assert (tmp_path / sub / "summary.json").exists()
    assert outs[0] == outs[1]


def test_run_seed_override_changes_output(tmp_path):
    runner = CliRunner()
    scenario = short_copy(tmp_path)
    r1 = runner.invoke(main, ["run", str(scenario), "--out", str(tmp_path / "a"), "--seed", "1"])
    r2 = runner.invoke(main, ["run", str(scenario), "--out", str(tmp_path / "b"), "--seed", "2"])
    assert r1.exit_code == 0 and r2.exit_code == 0
    assert (tmp_path / "a" / "telemetry.csv").read_bytes() != (
        tmp_path / "b" / "telemetry.csv"
    ).read_bytes()


def test_unknown_key_rejected_with_machine_readable_error(tmp_path):
    runner = CliRunner()
    scenario = short_copy(tmp_path, flux_capacitor={"on": True})
    result = runner.invoke(main, ["run", str(scenario), "--out", str(tmp_path / "o")])
    assert result.exit_code != 0
    err = json.loads(result.stderr.strip().splitlines()[-1])
    assert "flux_capacitor" in err["error"]


def test_sweep_single_axis(tmp_path):
    runner = CliRunner()
    scenario = short_copy(tmp_path)
    result = runner.invoke(
        main,
        [
            "sweep", str(scenario),
            "--grid", "stabilizer.spring=0.02,50.0",
            "--out", str(tmp_path / "sw"),
        ],
    )
    assert result.exit_code == 0, result.output
    rows = (tmp_path / "sw" / "sweep.csv").read_text().strip().splitlines()
    assert len(rows) == 3  # header + 2 points
    assert "best stabilizer point" in result.output


def test_sweep_bad_grid_fails(tmp_path):
    runner = CliRunner()
    scenario = short_copy(tmp_path)
    result = runner.invoke(
        main, ["sweep", str(scenario), "--grid", "nonsense", "--out", str(tmp_path / "sw")]
    )
    assert result.exit_code != 0
    assert "error" in json.loads(result.stderr.strip().splitlines()[-1])
