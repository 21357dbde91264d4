"""Tests for the demonstration-editor HTTP service."""

import json
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from trajtransfer.config import RunConfig
from trajtransfer.dataset import export_dataset
from trajtransfer.net import MultimodalNet, NetConfig, save_model
from trajtransfer.features import FeatureConfig, Featurizer, build_vocabulary
from trajtransfer.service import create_app
from trajtransfer.synth import SyntheticSpec, generate_synthetic
from trajtransfer.trajectory import Trajectory, interpolate, trajectory_from_dict

SPEC = SyntheticSpec(
    n_tasks=6, demos_per_task=3, tasks_per_manual=1, points_per_part=70, rng_seed=9
)


@pytest.fixture()
def dataset_dir(tmp_path):
    ds = generate_synthetic(SPEC)
    root = tmp_path / "ds"
    export_dataset(ds, root)
    return root


@pytest.fixture()
def client(dataset_dir):
    return TestClient(create_app(dataset_dir))


def sample_waypoints(client, task_id="task-000"):
    detail = client.get(f"/tasks/{task_id}").json()
    seed = detail["seed_trajectory"]
    assert seed is not None
    return seed["waypoints"]


class TestBasics:
    def test_health(self, client):
        body = client.get("/health").json()
        assert body["status"] == "ok"
        assert body["tasks"] == 6
        assert body["demos"] == 18
        assert body["model_loaded"] is False

    def test_list_tasks(self, client):
        tasks = client.get("/tasks").json()
        assert len(tasks) == 6
        assert {t["task_id"] for t in tasks} == {f"task-{i:03d}" for i in range(6)}
        assert all(t["demo_count"] == 3 for t in tasks)

    def test_task_detail(self, client):
        detail = client.get("/tasks/task-001").json()
        assert detail["task_id"] == "task-001"
        assert detail["instruction"]
        assert len(detail["points"]) == 70
        assert len(detail["points"][0]) == 6
        assert detail["highlight"] == list(range(70))
        assert detail["seed_trajectory"] is not None

    def test_unknown_task_404(self, client):
        assert client.get("/tasks/ghost").status_code == 404

    def test_seed_comes_from_other_task(self, client):
        detail = client.get("/tasks/task-002").json()
        seed_id = detail["seed_trajectory"]["id"]
        assert not seed_id.startswith("task-002")

    def test_openapi_served(self, client):
        schema = client.get("/openapi.json").json()
        paths = set(schema["paths"])
        assert {"/health", "/tasks", "/interpolate"} <= paths


class TestSeedFoldRule:
    def test_seed_never_crosses_folds(self, dataset_dir):
        metadata_path = dataset_dir / "metadata.json"
        metadata = json.loads(metadata_path.read_text())
        folds = {f"task-{i:03d}": i % 2 for i in range(6)}
        metadata["folds"] = folds
        metadata_path.write_text(json.dumps(metadata))
        client = TestClient(create_app(dataset_dir))
        for i in range(6):
            task_id = f"task-{i:03d}"
            seed = client.get(f"/tasks/{task_id}").json()["seed_trajectory"]
            assert seed is not None
            seed_task = "-".join(seed["id"].split("-")[:2])
            assert folds[seed_task] == folds[task_id]
            assert seed_task != task_id


class TestInterpolation:
    def test_matches_library_exactly(self, client):
        waypoints = sample_waypoints(client)
        response = client.post(
            "/interpolate", json={"waypoints": waypoints, "samples_per_segment": 2}
        ).json()
        traj = trajectory_from_dict({"id": "preview", "waypoints": waypoints})
        expected = interpolate(traj, 2)
        got = trajectory_from_dict({"id": "preview", "waypoints": response["waypoints"]})
        assert np.array_equal(got.translations(), expected.translations())
        assert np.array_equal(got.rotations(), expected.rotations())
        assert response["authored_indices"] == [i * 3 for i in range(len(waypoints))]

    def test_default_sample_density_from_config(self, dataset_dir):
        cfg = RunConfig().override("features", samples_per_segment=4)
        client = TestClient(create_app(dataset_dir, config=cfg))
        waypoints = sample_waypoints(client)
        response = client.post("/interpolate", json={"waypoints": waypoints}).json()
        assert response["samples_per_segment"] == 4
        assert len(response["waypoints"]) == len(waypoints) + (len(waypoints) - 1) * 4

    def test_rejects_single_waypoint(self, client):
        waypoints = sample_waypoints(client)[:1]
        response = client.post("/interpolate", json={"waypoints": waypoints})
        assert response.status_code == 422


class TestSubmission:
    def test_submit_increments_and_persists(self, dataset_dir):
        client = TestClient(create_app(dataset_dir))
        waypoints = sample_waypoints(client)
        before = client.get("/tasks/task-000").json()["demo_count"]
        response = client.post("/tasks/task-000/demos", json={"waypoints": waypoints})
        assert response.status_code == 201, response.text
        body = response.json()
        assert body["demo_count"] == before + 1
        assert body["trajectory"]["waypoints"] == waypoints

        listed = client.get("/tasks/task-000/demos").json()["demos"]
        assert any(d["id"] == body["id"] for d in listed)

        # A fresh service over the same directory still sees the demo.
        reopened = TestClient(create_app(dataset_dir))
        again = reopened.get("/tasks/task-000").json()["demo_count"]
        assert again == before + 1

    def test_corrupt_quaternion_rejected_with_field_path(self, dataset_dir):
        client = TestClient(create_app(dataset_dir))
        waypoints = sample_waypoints(client)
        waypoints[1] = dict(waypoints[1], r=[0.0, 0.0, 0.0, 0.5])
        before = client.get("/tasks/task-000").json()["demo_count"]
        response = client.post("/tasks/task-000/demos", json={"waypoints": waypoints})
        assert response.status_code == 422
        detail = response.json()["detail"]
        locs = [entry["loc"] for entry in detail]
        assert any("waypoints" in loc and 1 in loc for loc in locs)
        assert client.get("/tasks/task-000").json()["demo_count"] == before

    def test_submit_unknown_task(self, client):
        waypoints = sample_waypoints(client)
        assert client.post("/tasks/ghost/demos", json={"waypoints": waypoints}).status_code == 404


class TestScoring:
    def test_unavailable_without_model(self, client):
        response = client.get("/tasks/task-000/score")
        assert response.status_code == 503

    def test_ranks_with_model(self, dataset_dir, tmp_path):
        ds_tasks = TestClient(create_app(dataset_dir)).get("/tasks").json()
        instructions = [t["instruction"] for t in ds_tasks]
        vocab = build_vocabulary(instructions)
        feature_config = FeatureConfig(target_len=6)
        featurizer = Featurizer(vocab, feature_config)
        config = NetConfig(
            h1_pc=4, h1_lang=3, h1_traj=4, h2_pt=3, h2_lt=3, h3=3, dropout_rate=0.0
        )
        net = MultimodalNet.initialize(config, featurizer.input_dims, np.random.default_rng(0))
        model_path = tmp_path / "model.npz"
        save_model(model_path, net, featurizer)
        featurizer.vocab.save(f"{model_path}.vocab.txt")

        client = TestClient(create_app(dataset_dir, model_path=model_path))
        assert client.get("/health").json()["model_loaded"] is True
        body = client.get("/tasks/task-000/score", params={"top": 5}).json()
        ranking = body["ranking"]
        assert len(ranking) == 5
        probs = [r["probability"] for r in ranking]
        assert probs == sorted(probs, reverse=True)
