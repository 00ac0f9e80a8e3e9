import json

import pytest

from topicflow.cli import main
from topicflow.config import RunConfig, save_config
from topicflow.synth import (GenerativeSpec, PlantedTopic, save_spec,
                             uniform_support_phi)


@pytest.fixture(scope="module")
def run_setup(tmp_path_factory):
    """A small synthetic config plus its completed run directory."""
    tmp = tmp_path_factory.mktemp("cli")
    v = 20
    planted = [
        PlantedTopic(id=0, phi_true=uniform_support_phi(range(10), v),
                     lifespan=(0, 1)),
        PlantedTopic(id=1, phi_true=uniform_support_phi(range(5), v),
                     lifespan=(2, 2), relation="split_from", parents=(0,)),
        PlantedTopic(id=2, phi_true=uniform_support_phi(range(5, 10), v),
                     lifespan=(2, 2), relation="split_from", parents=(0,)),
        PlantedTopic(id=3, phi_true=uniform_support_phi(range(10, 20), v),
                     lifespan=(0, 2)),
    ]
    spec = GenerativeSpec(vocab_size=v, epochs=3, docs_per_epoch=60,
                          tokens_per_doc=40, planted=planted,
                          mixing_concentration=0.3, seed=8)
    spec_path = tmp / "spec.json"
    save_spec(spec, spec_path)
    config = RunConfig(synth_spec=str(spec_path), energy_fraction=1.0,
                       window_years=1, lag_years=1, burn_in=60, sweeps=30,
                       resample_every=5, k_init=4, min_mass=30,
                       master_seed=5, out_dir=str(tmp / "run"))
    config_path = tmp / "config.json"
    save_config(config, config_path)
    assert main(["graph", "--config", str(config_path)]) == 0
    return tmp, config_path, tmp / "run"


def test_ingest_fit_graph_sequence(run_setup, capsys):
    tmp, config_path, run_dir = run_setup
    assert main(["ingest", "--config", str(config_path)]) == 0
    assert main(["fit", "--config", str(config_path)]) == 0
    capsys.readouterr()


def test_topics_listing(run_setup, capsys):
    _, _, run_dir = run_setup
    assert main(["topics", "--out", str(run_dir), "--epoch", "0"]) == 0
    out = capsys.readouterr().out
    assert "epoch 0" in out and "mass=" in out


def test_events_filter(run_setup, capsys):
    _, _, run_dir = run_setup
    assert main(["events", "--out", str(run_dir), "--kind", "split"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[0] == "kind,epoch,topic_id,related"
    assert all(line.startswith("split,") for line in out[1:])
    assert len(out) > 1


def test_find_topic_prints_argmax(run_setup, capsys):
    _, _, run_dir = run_setup
    assert main(["find-topic", "--out", str(run_dir), "--terms", "waa,wab",
                 "--epoch", "0"]) == 0
    out = capsys.readouterr().out
    assert "best match: topic 0:" in out


def test_trace_writes_subgraph(run_setup, capsys):
    _, _, run_dir = run_setup
    assert main(["trace", "--out", str(run_dir), "--node", "2:0",
                 "--direction", "backward", "--depth", "2"]) == 0
    out = capsys.readouterr().out
    assert "sub-graph:" in out
    traces = list((run_dir / "graph").glob("trace_2_0_backward2.*"))
    assert len(traces) == 2  # json + dot


def test_trace_export_path_override(run_setup, tmp_path, capsys):
    _, _, run_dir = run_setup
    target = tmp_path / "lineage" / "sub.json"
    assert main(["trace", "--out", str(run_dir), "--node", "2:0",
                 "--direction", "backward", "--depth", "1",
                 "--export", str(target)]) == 0
    capsys.readouterr()
    assert target.exists()
    assert target.with_suffix(".dot").exists()
    payload = json.loads(target.read_text())
    assert any(n["epoch"] == 2 and n["topic_id"] == 0
               for n in payload["nodes"])


def test_trace_depth_zero_single_node(run_setup, capsys):
    _, _, run_dir = run_setup
    assert main(["trace", "--out", str(run_dir), "--node", "1:0",
                 "--direction", "backward", "--depth", "0"]) == 0
    assert "sub-graph: 1 nodes, 0 edges" in capsys.readouterr().out


def test_report_summarizes(run_setup, capsys):
    _, _, run_dir = run_setup
    assert main(["report", "--out", str(run_dir)]) == 0
    out = capsys.readouterr().out
    assert "stage corpus" in out and "events:" in out


def test_synth_command(run_setup, tmp_path, capsys):
    tmp, _, _ = run_setup
    out_dir = tmp_path / "synth_out"
    assert main(["synth", "--spec", str(tmp / "spec.json"),
                 "--out", str(out_dir)]) == 0
    assert (out_dir / "archive.jsonl").exists()
    assert (out_dir / "ground_truth.json").exists()
    capsys.readouterr()


def test_exit_code_validation_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"archive": "x", "lag_years": 99}))
    assert main(["ingest", "--config", str(bad)]) == 1
    assert main(["nonsense-command"]) == 1
    assert main(["trace", "--out", "somewhere", "--node", "zz"]) == 1
    capsys.readouterr()


def test_exit_code_runtime_errors(run_setup, tmp_path, capsys):
    _, _, run_dir = run_setup
    empty = tmp_path / "empty_run"
    empty.mkdir()
    assert main(["events", "--out", str(empty)]) == 2
    assert main(["report", "--out", str(empty)]) == 2
    assert main(["find-topic", "--out", str(run_dir), "--terms", "zzz",
                 "--epoch", "0"]) == 2
    assert main(["trace", "--out", str(run_dir), "--node", "9:9"]) == 2
    capsys.readouterr()


def test_exit_code_io_errors(tmp_path, capsys):
    missing = tmp_path / "missing_config.json"
    assert main(["ingest", "--config", str(missing)]) == 3
    capsys.readouterr()


def test_seed_override_changes_fit(run_setup, tmp_path, capsys):
    tmp, config_path, _ = run_setup
    out_a = tmp_path / "ovA"
    out_b = tmp_path / "ovB"
    assert main(["graph", "--config", str(config_path), "--out", str(out_a),
                 "--seed", "123"]) == 0
    assert main(["graph", "--config", str(config_path), "--out", str(out_b),
                 "--seed", "123"]) == 0
    capsys.readouterr()
    a = (out_a / "epochs" / "epoch_000.topics.json").read_bytes()
    b = (out_b / "epochs" / "epoch_000.topics.json").read_bytes()
    assert a == b
