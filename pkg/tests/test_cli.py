from __future__ import annotations

import json

from contextstream import io
from contextstream.cli import main

from conftest import FIXTURES, GOLDEN

ETG = str(FIXTURES / "travel_etg.json")
EG_PATH = str(FIXTURES / "travel_eg.json")
STREAM = str(FIXTURES / "travel_stream.jsonl")
SCENARIO = str(FIXTURES / "travel_scenario.json")
CONFIG = str(FIXTURES / "config.json")


def test_compile_reproduces_golden(tmp_path):
    out = tmp_path / "h.json"
    assert main(["compile", ETG, EG_PATH, "--out", str(out)]) == 0
    assert out.read_text() == (GOLDEN / "travel_hierarchy.json").read_text()


def test_compile_writes_dot(tmp_path):
    out = tmp_path / "h.json"
    dot = tmp_path / "h.dot"
    assert main(["compile", ETG, EG_PATH, "--out", str(out), "--dot", str(dot)]) == 0
    text = dot.read_text()
    h = io.load_hierarchy(out)
    # every node rendered exactly once, with the legend colors
    for nid in h.nodes:
        assert text.count(f'"{nid}" [label=') == 1
    assert 'fillcolor=indianred1' in text       # actions
    assert 'fillcolor=palegreen' in text        # functions
    assert 'fillcolor=orange' in text           # entities
    assert 'fillcolor=lightskyblue' in text     # etypes
    assert text.count('"entity:sitting" [label="Sitting", fillcolor=indianred1]') == 1


def test_compile_nonconforming_eg_exits_2(tmp_path, travel_eg):
    bad = io.eg_to_dict(travel_eg)
    bad["triples"].append({"property": "FriendOf", "subject": "seat_1", "object": "haonan"})
    bad_path = tmp_path / "bad_eg.json"
    bad_path.write_text(json.dumps(bad))
    out = tmp_path / "h.json"
    assert main(["compile", ETG, str(bad_path), "--out", str(out)]) == 2
    assert not out.exists()


def test_compile_missing_file_exits_1(tmp_path):
    assert main(["compile", ETG, str(tmp_path / "nope.json"), "--out", str(tmp_path / "h.json")]) == 1


def test_compile_collapse_override_reifies_part_of(tmp_path):
    out = tmp_path / "h.json"
    assert main([
        "compile", ETG, EG_PATH, "--out", str(out), "--collapse", "isA,has",
    ]) == 0
    h = io.load_hierarchy(out)
    assert "prop:partOf" in h.nodes
    assert "pinst:partOf/roads_2/trentino" in h.nodes
    assert ("entity:roads_2", "entity:trentino") not in h.edges


def test_compile_q_override_drops_function_nodes(tmp_path):
    out = tmp_path / "h.json"
    q = "near,use,interact,in,do,happenIn,during,participate,FriendOf,RestToolOf"
    assert main(["compile", ETG, EG_PATH, "--out", str(out), "--q", q]) == 0
    h = io.load_hierarchy(out)
    assert "prop:FriendOf" not in h.nodes
    assert "pinst:RestToolOf/xiaoyue/seat_1" not in h.nodes


def test_validate_clean_fixtures_exit_0(capsys):
    assert main(["validate", ETG, EG_PATH, STREAM, SCENARIO, CONFIG,
                 str(GOLDEN / "travel_hierarchy.json")]) == 0
    assert "valid" in capsys.readouterr().out


def test_validate_defect_exits_2(tmp_path, travel_hierarchy, capsys):
    doc = io.hierarchy_to_dict(travel_hierarchy)
    doc["edges"].append(["entity:haonan", "etype:person"])  # implied by a path
    bad = tmp_path / "h.json"
    bad.write_text(json.dumps(doc))
    assert main(["validate", str(bad)]) == 2
    assert "redundant-edge" in capsys.readouterr().err


def test_validate_missing_file_exits_1():
    assert main(["validate", "/definitely/not/here.json"]) == 1


def test_validate_corrupt_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "broken.json"
    bad.write_text("{не json")
    assert main(["validate", str(bad)]) == 2


def test_simulate_writes_log_and_metrics(tmp_path):
    log = tmp_path / "run.jsonl"
    metrics = tmp_path / "metrics.json"
    assert main([
        "--config", CONFIG,
        "simulate", "--scenario", SCENARIO, "--etg", ETG, "--eg", EG_PATH,
        "--out-log", str(log), "--out-metrics", str(metrics),
    ]) == 0
    header, preds, truths, events = io.load_runlog(log)
    assert len(events) == 11
    assert all(e["queried"] for e in events)
    m = io.load_metrics(metrics)
    assert m["n_windows"] == 11
    assert m["n_queries"] == 11


def test_simulate_never_strategy_logs_zero_queries(tmp_path):
    log = tmp_path / "run.jsonl"
    assert main([
        "--config", CONFIG,
        "simulate", "--scenario", SCENARIO, "--etg", ETG, "--eg", EG_PATH,
        "--strategy", "never", "--out-log", str(log),
    ]) == 0
    _, _, _, events = io.load_runlog(log)
    assert events and not any(e["queried"] for e in events)


def test_simulate_same_command_twice_identical_logs(tmp_path):
    logs = []
    for name in ("a.jsonl", "b.jsonl"):
        path = tmp_path / name
        assert main([
            "--config", CONFIG,
            "simulate", "--scenario", SCENARIO, "--etg", ETG, "--eg", EG_PATH,
            "--out-log", str(path),
        ]) == 0
        logs.append(path.read_text())
    assert logs[0] == logs[1]


def test_simulate_golden_metrics(tmp_path, bless):
    from conftest import golden_check

    metrics = tmp_path / "metrics.json"
    assert main([
        "--config", CONFIG, "--seed", "7",
        "simulate", "--scenario", SCENARIO, "--etg", ETG, "--eg", EG_PATH,
        "--out-metrics", str(metrics),
    ]) == 0
    golden_check(GOLDEN / "travel_metrics_seed7.json", metrics.read_text(), bless)


def test_evaluate_from_log_matches_simulate(tmp_path):
    log = tmp_path / "run.jsonl"
    metrics_a = tmp_path / "a.json"
    metrics_b = tmp_path / "b.json"
    assert main([
        "--config", CONFIG,
        "simulate", "--scenario", SCENARIO, "--etg", ETG, "--eg", EG_PATH,
        "--out-log", str(log), "--out-metrics", str(metrics_a),
    ]) == 0
    assert main(["evaluate", "--log", str(log), "--out", str(metrics_b)]) == 0
    a = io.load_metrics(metrics_a)
    b = io.load_metrics(metrics_b)
    for key in ("hierarchical_precision", "hierarchical_recall", "hierarchical_f1",
                "exact_match", "hamming_accuracy", "per_node", "n_windows"):
        assert a[key] == b[key]


def test_snapshot_command_writes_snapshots(tmp_path, capsys):
    out_dir = tmp_path / "snaps"
    assert main([
        "snapshot", "--etg", ETG, "--eg", EG_PATH, "--stream", STREAM,
        "--out-dir", str(out_dir), "--pattern",
    ]) == 0
    outputs = sorted(p.name for p in out_dir.iterdir())
    assert outputs == ["snapshot_000.json", "snapshot_001.json"]
    assert "window pattern: 1EML" in capsys.readouterr().out
    etg = io.load_etg(ETG)
    snap = io.load_eg(out_dir / "snapshot_000.json", etg)
    assert snap.at is not None
    assert any(t.property == "in" for t in snap.triples)


def test_export_dot_standalone(tmp_path):
    h_path = tmp_path / "h.json"
    assert main(["compile", ETG, EG_PATH, "--out", str(h_path)]) == 0
    dot_path = tmp_path / "h.dot"
    assert main(["export-dot", str(h_path), "--etg", ETG, "--eg", EG_PATH,
                 "--out", str(dot_path)]) == 0
    assert dot_path.read_text().startswith("digraph hierarchy {")


def test_usage_error_exits_1(capsys):
    assert main(["compile"]) == 1
    assert main(["no-such-command"]) == 1
