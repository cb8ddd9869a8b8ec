import json
import subprocess
import sys

import pytest

from nearmiss.cli import main
from nearmiss.config_io import config_from_dict, dump_config
from nearmiss.defaults import default_config
from tests.test_simulation import two_vehicle_config


def write_small_config(tmp_path):
    import dataclasses
    from nearmiss.scenario import FalsificationParams
    cfg = two_vehicle_config(max_nodes=3, dt_expand=0.5, time_budget=30.0)
    cfg = dataclasses.replace(cfg, falsification=FalsificationParams(
        max_evals=3, t0_samples=2))
    path = tmp_path / "scenario.json"
    dump_config(cfg, path)
    return path


def test_dump_default_config_roundtrips(capsys):
    assert main(["--dump-default-config"]) == 0
    out = capsys.readouterr().out
    assert config_from_dict(json.loads(out)) == default_config()


def test_run_rrt_writes_outputs(tmp_path, capsys):
    cfg_path = write_small_config(tmp_path)
    out = tmp_path / "results"
    code = main(["run", "--config", str(cfg_path), "--method", "rrt",
                 "--runs", "2", "--seed", "3", "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["method"] == "rrt"
    assert len(report["records"]) == 2
    assert (out / "run_0_trace.csv").exists()
    assert (out / "run_1_trace.csv").exists()
    assert (out / "box.svg").exists()
    assert (out / "traj_0.svg").exists()
    assert (out / "timing.json").exists()
    summary = json.loads(capsys.readouterr().out)
    assert summary["summary"]["count"] == 2


def test_run_falsification(tmp_path, capsys):
    cfg_path = write_small_config(tmp_path)
    out = tmp_path / "fals"
    code = main(["run", "--config", str(cfg_path), "--method", "falsification",
                 "--runs", "1", "--seed", "0", "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["records"][0]["evaluations"] == 3


def test_run_bad_config_exit_code_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nope": 1}))
    code = main(["run", "--config", str(bad), "--method", "rrt",
                 "--runs", "1", "--out", str(tmp_path / "x")])
    assert code == 2


def test_plot_from_report(tmp_path, capsys):
    cfg_path = write_small_config(tmp_path)
    out = tmp_path / "res"
    main(["run", "--config", str(cfg_path), "--method", "rrt", "--runs", "1",
          "--seed", "1", "--out", str(out)])
    (out / "box.svg").unlink()
    assert main(["plot", "--report", str(out / "report.json")]) == 0
    assert (out / "box.svg").exists()


def test_dump_tree_and_replay(tmp_path, capsys):
    cfg_path = write_small_config(tmp_path)
    out = tmp_path / "tree_run"
    code = main(["run", "--config", str(cfg_path), "--method", "rrt",
                 "--runs", "1", "--seed", "4", "--out", str(out),
                 "--dump-tree"])
    assert code == 0
    tree_json = out / "run_0_tree.json"
    tree_csv = out / "run_0_tree.csv"
    assert tree_json.exists() and tree_csv.exists()
    header = tree_csv.read_text().splitlines()[0]
    assert header == "id,parent,sim_time,cost"

    doc = json.loads(tree_json.read_text())
    node_id = doc["best_id"]
    trace_csv = tmp_path / "replayed.csv"
    code = main(["replay", "--tree", str(tree_json), "--node", str(node_id),
                 "--out", str(trace_csv)])
    assert code == 0
    if node_id != 0:
        assert trace_csv.read_text().startswith("time,")


def test_replay_reproduces_stored_cost(tmp_path, capsys):
    cfg_path = write_small_config(tmp_path)
    out = tmp_path / "res2"
    main(["run", "--config", str(cfg_path), "--method", "rrt", "--runs", "1",
          "--seed", "7", "--out", str(out), "--dump-tree"])
    doc = json.loads((out / "run_0_tree.json").read_text())
    # replay every non-root node and compare the trace cost to the stored one
    from nearmiss.cost import cost
    from nearmiss.rrt import replay
    from nearmiss.treeio import load_tree_json, rehydrate_states
    tree, cfg = load_tree_json(out / "run_0_tree.json")
    rehydrate_states(tree, cfg)
    for entry in doc["nodes"]:
        if entry["parent"] is None:
            continue
        trace = replay(tree, entry["id"], cfg)
        assert trace.final_state == tree.node(entry["id"]).state


def test_console_script_installed():
    proc = subprocess.run([sys.executable, "-m", "nearmiss.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "nearmiss" in proc.stdout
