import json
import math

import pytest

from planground.errors import BackendError, ConfigError
from planground.evaluation import load_items_jsonl
from planground.exploration import CollectionStrategy
from planground.experiment import (
    BackendSettings,
    Cassette,
    ExperimentConfig,
    canonical_request_key,
    load_config,
    load_instructions,
    run_experiment,
)
from planground.scene import RoomType


def stub_config(tmp_path, **kw):
    defaults = dict(
        master_seed=7,
        out_dir=str(tmp_path / "run"),
        generate_count=4,
        strategy=CollectionStrategy(criterion="center", unit_angle=2 * math.pi / 3),
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


def test_request_key_is_order_independent():
    a = canonical_request_key({"model": "m", "prompt": "p", "max_tokens": 1})
    b = canonical_request_key({"max_tokens": 1, "prompt": "p", "model": "m"})
    assert a == b
    assert a != canonical_request_key({"model": "m", "prompt": "q", "max_tokens": 1})


def test_cassette_round_trip(tmp_path):
    path = tmp_path / "tape.json"
    tape = Cassette(path)
    req = {"model": "m", "prompt": "p", "max_tokens": 4}
    tape.store(req, "Step 1. Grasp the mug")
    tape.save()
    loaded = Cassette.load(path)
    assert loaded.lookup(req) == "Step 1. Grasp the mug"
    assert loaded.lookup({"model": "m", "prompt": "other", "max_tokens": 4}) is None


def test_cassette_replay_miss_is_fatal(tmp_path):
    path = tmp_path / "tape.json"
    Cassette(path).save()
    send = Cassette.load(path).replay_send()
    with pytest.raises(BackendError):
        send({"model": "m", "prompt": "p", "max_tokens": 4})


def test_cassette_recording_wraps_inner(tmp_path):
    path = tmp_path / "tape.json"
    tape = Cassette(path)
    calls = []

    def inner(req):
        calls.append(req)
        return "Step 1. Look around"

    send = tape.recording_send(inner)
    req = {"model": "m", "prompt": "p", "max_tokens": 4}
    assert send(req) == "Step 1. Look around"
    assert send(req) == "Step 1. Look around"
    assert len(calls) == 1  # second hit came from the tape
    assert Cassette.load(path).lookup(req) == "Step 1. Look around"


def test_backend_settings_validation():
    with pytest.raises(ConfigError):
        BackendSettings(mode="telepathy").validate()
    with pytest.raises(ConfigError):
        BackendSettings(mode="replay").validate()
    BackendSettings(mode="stub").validate()
    assert BackendSettings().identifier() == "stub:stub@stub://local"


def test_backend_env_overrides_http_url(monkeypatch):
    monkeypatch.setenv("PLAN_BACKEND_URL", "http://live.test")
    monkeypatch.setenv("PLAN_BACKEND_KEY", "k")
    settings = BackendSettings(mode="http", url="http://file.test")
    cfg = settings.to_backend_config()
    assert cfg.url == "http://live.test"
    assert cfg.api_key == "k"
    # stub mode ignores the env url
    assert BackendSettings(mode="stub").to_backend_config().url == "stub://local"


def test_load_instructions_bundled():
    table = load_instructions()
    assert set(table) == set(RoomType)
    assert all(table[room] for room in table)


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        stub_config(tmp_path, rules_mode="Casual").validate()
    with pytest.raises(ConfigError):
        stub_config(tmp_path, evaluation_mode="Vibes").validate()
    with pytest.raises(ConfigError):
        stub_config(tmp_path, scene_dir=str(tmp_path / "missing")).validate()
    with pytest.raises(ConfigError):
        stub_config(
            tmp_path,
            backend=BackendSettings(mode="replay", cassette=str(tmp_path / "no.json")),
        ).validate()
    stub_config(tmp_path).validate()


def test_config_hash_ignores_out_dir(tmp_path):
    a = stub_config(tmp_path, out_dir=str(tmp_path / "one"))
    b = stub_config(tmp_path, out_dir=str(tmp_path / "two"))
    assert a.config_hash() == b.config_hash()
    c = stub_config(tmp_path, master_seed=8)
    assert c.config_hash() != a.config_hash()


def test_load_config_yaml(tmp_path):
    (tmp_path / "exp.yaml").write_text(
        """
master_seed: 3
out_dir: artifacts
scenes:
  generate: 2
strategy:
  criterion: traversal
  unit_angle_deg: 90
camera:
  fov_deg: 90
  range: 2.0
detector:
  true_positive_rate: 1.0
  false_positive_rate: 0.0
backend:
  mode: stub
items_per_scene: 2
"""
    )
    config = load_config(tmp_path / "exp.yaml")
    assert config.master_seed == 3
    assert config.out_dir == str(tmp_path / "artifacts")
    assert config.strategy.criterion == "traversal"
    assert config.strategy.views_per_location == 4
    assert config.camera.fov == pytest.approx(math.pi / 2)
    assert config.items_per_scene == 2


def test_load_config_rejects_bad_documents(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("- just\n- a list\n")
    with pytest.raises(ConfigError):
        load_config(path)
    path.write_text("out_dir: x\n")
    with pytest.raises(ConfigError, match="master_seed"):
        load_config(path)


def test_run_experiment_stub_end_to_end(tmp_path):
    config = stub_config(tmp_path, items_per_scene=2)
    report = run_experiment(config)

    out = tmp_path / "run"
    assert (out / "report.json").exists()
    assert json.loads((out / "report.json").read_text()) == report.data

    data = report.data
    assert data["item_count"] == 8
    assert data["errors"] == []
    assert len(data["scenes"]) == 4
    assert {s["room_type"] for s in data["scenes"]} == {r.value for r in RoomType}
    assert data["table_source"] == "auto"
    assert data["success_table"] is not None
    assert set(data["failure_breakdown"]) == {
        "Success", "Counterfactual", "Hallucination",
    }

    # artifacts land in the run directory
    scene_files = sorted((out / "scenes").glob("*.json"))
    assert len(scene_files) == 4
    detections = (out / "detections.jsonl").read_text().splitlines()
    assert detections
    assert all(json.loads(line)["scene_id"] for line in detections)
    items = load_items_jsonl(out / "items.jsonl")
    assert [i.item_id for i in items] == [i.item_id for i in report.items]


def test_run_experiment_human_votes_mode(tmp_path):
    config = stub_config(tmp_path, evaluation_mode="HumanVotes")
    report = run_experiment(config)
    assert report.data["table_source"] == "votes"
    assert report.data["success_table"] is None  # nobody voted yet
    assert (tmp_path / "run" / "votes.jsonl").exists()


def test_run_experiment_scene_dir_reuse(tmp_path):
    first = stub_config(tmp_path)
    run_experiment(first)
    reused = stub_config(
        tmp_path,
        out_dir=str(tmp_path / "second"),
        scene_dir=str(tmp_path / "run" / "scenes"),
    )
    report = run_experiment(reused)
    assert len(report.data["scenes"]) == 4
    assert report.data["config"]["scene_source"] == str(tmp_path / "run" / "scenes")


def test_run_experiment_is_reproducible(tmp_path):
    config_a = stub_config(tmp_path, out_dir=str(tmp_path / "a"))
    config_b = stub_config(tmp_path, out_dir=str(tmp_path / "b"))
    run_experiment(config_a)
    run_experiment(config_b)
    path_a = tmp_path / "a" / "report.json"
    path_b = tmp_path / "b" / "report.json"
    assert path_a.read_bytes() == path_b.read_bytes()
    assert (tmp_path / "a" / "items.jsonl").read_bytes() == (
        tmp_path / "b" / "items.jsonl"
    ).read_bytes()
