# Copyright 2026 The vibromix Authors
# SPDX-License-Identifier: Apache-2.0
import json
import subprocess


def run(cli, *args):
    return subprocess.run([cli, *args], check=True, capture_output=True, text=True, timeout=60)


def test_synth_run_and_validate(cli, tmp_path):
    raw = tmp_path / "raw"
    out = tmp_path / "processed"
    run(cli, "synth", "--out", str(raw), "--seed", "2")
    run(cli, "run", "--in", str(raw), "--out", str(out))
    run(cli, "validate", "--in", str(raw), str(out))
    assert (out / "params.csv").exists() or any(out.iterdir())


def test_fidelity_report(cli, tmp_path):
    raw = tmp_path / "raw"
    out = tmp_path / "processed"
    run(cli, "synth", "--out", str(raw))
    run(cli, "run", "--in", str(raw), "--out", str(out))
    result = run(cli, "analyze", "fidelity", "--a", str(out), "--b", str(out), "--a-stream", "raw",
                 "--b-stream", "output", "--out", str(tmp_path))
    assert (tmp_path / "fidelity.csv").exists()
    assert result.stdout


def test_control_schema(cli):
    schema = json.loads(run(cli, "schema", "control").stdout)
    assert "set_gain" in json.dumps(schema)
