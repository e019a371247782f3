import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from gstar import cli

ROOT = Path(__file__).resolve().parent.parent
CONFIGS = ROOT / "configs"


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_eval_matches_golden(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.main(["eval", "--config", str(CONFIGS / "two_atom.json"), "--out", str(out)]) == 0
    head, got = _read_csv(out)
    ghead, want = _read_csv(CONFIGS / "two_atom.golden.csv")
    assert head == ghead
    # the golden file is the naive unpruned sum; pruning changes only the last digits
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_oracle_flag_reproduces_golden_bytes(tmp_path):
    out = tmp_path / "g.csv"
    assert cli.main(["eval", "--config", str(CONFIGS / "two_atom.json"), "--out", str(out), "--oracle"]) == 0
    assert out.read_bytes() == (CONFIGS / "two_atom.golden.csv").read_bytes()


def test_numpy_fallback_matches_golden(tmp_path):
    out = tmp_path / "g.csv"
    env = dict(os.environ, GSTAR_DISABLE_NUMBA="1")
    subprocess.run([sys.executable, "-m", "gstar.cli", "eval", "--config", str(CONFIGS / "two_atom.json"),
                    "--out", str(out)], env=env, check=True)
    _, got = _read_csv(out)
    _, want = _read_csv(CONFIGS / "two_atom.golden.csv")
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_malformed_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"measure": [1, 2,,]}')
    assert cli.main(["eval", "--config", str(bad), "--out", str(tmp_path / "o.csv")]) == 2
    assert "bad.json:1:" in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path):
    assert cli.main(["eval", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o.csv")]) == 2


def test_missing_field_exits_2(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"measure": {"n": 1, "atoms": [[0.0, 1.0]]}}))
    assert cli.main(["eval", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == 2
    assert "points" in capsys.readouterr().err


def test_bad_measure_exits_2(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"measure": {"n": 1, "atoms": [[0.0, -1.0]]}, "points": [[0.0]]}))
    assert cli.main(["eval", "--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == 2


def test_unwritable_output_exits_2(tmp_path):
    out = tmp_path / "missing_dir" / "o.csv"
    assert cli.main(["eval", "--config", str(CONFIGS / "two_atom.json"), "--out", str(out)]) == 2


def test_unknown_lemma_exits_2(tmp_path):
    args = ["verify-lemma", "--config", str(CONFIGS / "verify_U.json"), "--out", str(tmp_path / "o.json")]
    assert cli.main(args + ["--lemma", "Z"]) == 2


def test_failed_criterion_exits_3(tmp_path):
    cfg = json.loads((CONFIGS / "testing_condition.json").read_text())
    cfg["C0_bound"] = 1e-9
    path = tmp_path / "tc.json"
    path.write_text(json.dumps(cfg))
    assert cli.main(["testing-condition", "--config", str(path), "--out", str(tmp_path / "o.json")]) == 3


def test_measure_from_file(tmp_path):
    (tmp_path / "mu.json").write_text(json.dumps({"n": 1, "atoms": [[0.0, 1.0], [1.0, 0.5]]}))
    cfg = json.loads((CONFIGS / "two_atom.json").read_text())
    cfg["measure"] = {"file": "mu.json"}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "o.csv"
    assert cli.main(["eval", "--config", str(path), "--out", str(out), "--oracle"]) == 0
    assert out.read_bytes() == (CONFIGS / "two_atom.golden.csv").read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    cfg = str(CONFIGS / "grid_sample.json")
    a, b, c = (tmp_path / f"{k}.json" for k in "abc")
    cli.main(["grid-sample", "--config", cfg, "--out", str(a), "--seed", "11"])
    cli.main(["grid-sample", "--config", cfg, "--out", str(b), "--seed", "11"])
    cli.main(["grid-sample", "--config", cfg, "--out", str(c), "--seed", "12"])
    assert a.read_bytes() == b.read_bytes() != c.read_bytes()


def test_verify_lemma_writes_rollup(tmp_path):
    out = tmp_path / "t.json"
    cfg = json.loads((CONFIGS / "verify_T.json").read_text())
    cfg["samples"] = 20
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    cli.main(["verify-lemma", "--config", str(path), "--out", str(out)])
    head, *_ = (tmp_path / "t.csv").read_text().splitlines()
    assert head == "lemma,pass,C,calibration_max,test_max"
    assert json.loads(out.read_text())["lemma"] == "T"


@pytest.mark.parametrize("command", sorted(cli.COMMANDS))
def test_every_command_has_a_config(command):
    names = {p.stem for p in CONFIGS.glob("*.json")}
    expected = {"eval": "two_atom", "lusin": "lusin_random", "verify-lemma": "verify_U"}.get(
        command, command.replace("-", "_"))
    assert expected in names


def test_config_sidecar_records_defaults(tmp_path):
    cfg = json.loads((CONFIGS / "two_atom.json").read_text())
    cfg.pop("quadrature", None)
    cfg.pop("lambda", None)
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert cli.main(["eval", "--config", str(path), "--out", str(tmp_path / "g.csv"), "--threads", "1"]) == 0
    used = json.loads((tmp_path / "g.config.json").read_text())
    assert used["command"] == "eval" and used["lambda"] == 6.0
    assert set(used["quadrature"]) == {"t_min", "t_max", "nodes_per_decade", "prune_tol"}
    assert "threads" not in used and "_dir" not in used
