"""JSON-over-HTTP service backing the demonstration editor.

Serves tasks with their point-clouds (part-frame, downsampled),
instructions, and a seed trajectory to start editing from; interpolates
waypoint lists so the editor never re-implements the smoothing math;
accepts validated demonstration submissions, which are persisted into
the dataset directory; and, when a model checkpoint is loaded, ranks the
demonstration library for a task.

Submissions are serialized through a single lock. Everything the editor
sees (cloud, trajectories) is expressed in the task's part frame.
"""

from __future__ import annotations

import json
import math
import threading
from pathlib import Path
from typing import Literal

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field, field_validator

from .config import RunConfig
from .dataset import Dataset, downsample_points, import_dataset
from .features import Featurizer, Vocabulary
from .net import load_model
from .trajectory import (
    GripperState,
    Trajectory,
    TrajectorySource,
    Waypoint,
    interpolate,
    trajectory_to_dict,
    waypoint_to_dict,
)

SEED_SOURCE_NOTE = "seed trajectories come from other tasks, never across fold boundaries"


class WaypointModel(BaseModel):
    g: Literal["open", "closed", "holding"]
    t: list[float] = Field(min_length=3, max_length=3)
    r: list[float] = Field(min_length=4, max_length=4)

    @field_validator("t")
    @classmethod
    def _finite_translation(cls, v):
        if not all(math.isfinite(x) for x in v):
            raise ValueError("translation components must be finite")
        return v

    @field_validator("r")
    @classmethod
    def _unit_rotation(cls, v):
        if not all(math.isfinite(x) for x in v):
            raise ValueError("rotation components must be finite")
        norm = math.sqrt(sum(x * x for x in v))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"rotation must be a unit quaternion, got norm {norm:.9f}")
        return v

    def to_waypoint(self) -> Waypoint:
        return Waypoint(gripper=GripperState(self.g), translation=self.t, rotation=self.r)


class InterpolateRequest(BaseModel):
    waypoints: list[WaypointModel] = Field(min_length=2)
    samples_per_segment: int | None = Field(default=None, ge=1, le=50)


class SubmitRequest(BaseModel):
    waypoints: list[WaypointModel] = Field(min_length=1)


def _task_summary(task) -> dict:
    return {
        "task_id": task.task_id,
        "object_id": task.object_id,
        "manual_id": task.manual_id,
        "instruction": task.instruction,
        "demo_count": len(task.demos),
    }


def create_app(
    dataset_path,
    model_path=None,
    config: RunConfig | None = None,
    point_limit: int = 50_000,
) -> FastAPI:
    """Build the service over a dataset directory.

    The directory is loaded once; accepted submissions are appended both
    in memory and on disk, so a restarted service sees them again.
    """
    if config is None:
        config = RunConfig()
    root = Path(dataset_path)
    dataset: Dataset = import_dataset(root)
    write_lock = threading.Lock()

    net = None
    featurizer = None
    if model_path is not None:
        net, header = load_model(model_path)
        vocab_path = Path(f"{model_path}.vocab.txt")
        if not vocab_path.exists():
            raise FileNotFoundError(f"vocabulary file {vocab_path} not found next to model")
        vocab = Vocabulary.load(vocab_path)
        featurizer = Featurizer(vocab, header["feature_config"])

    app = FastAPI(title="trajtransfer service", version="0.1.0")

    def get_task(task_id: str):
        try:
            return dataset.task_by_id(task_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown task {task_id!r}")

    def seed_trajectory(task) -> Trajectory | None:
        """A demo from another task to start editing from.

        When fold metadata is present the seed is restricted to tasks of
        the same fold, so held-out folds never leak into submissions made
        for training folds. Tasks from other objects are preferred.
        """
        folds = dataset.metadata.get("folds")
        candidates = []
        for other in dataset.tasks:
            if other.task_id == task.task_id or not other.demos:
                continue
            if folds is not None:
                if folds.get(other.task_id) != folds.get(task.task_id):
                    continue
            candidates.append(other)
        if not candidates:
            return None
        candidates.sort(key=lambda t: (t.object_id == task.object_id, t.task_id))
        return candidates[0].demos[0]

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "tasks": len(dataset.tasks),
            "demos": sum(len(t.demos) for t in dataset.tasks),
            "model_loaded": net is not None,
        }

    @app.get("/tasks")
    def list_tasks():
        return [_task_summary(t) for t in dataset.tasks]

    @app.get("/tasks/{task_id}")
    def get_task_detail(task_id: str):
        task = get_task(task_id)
        from .partframe import points_to_frame

        points = task.part.points.copy()
        points[:, :3] = points_to_frame(task.part.positions, task.frame)
        points = downsample_points(points, point_limit)
        seed = seed_trajectory(task)
        return {
            **_task_summary(task),
            "part_id": task.part.part_id,
            "points": points.tolist(),
            "highlight": list(range(points.shape[0])),
            "seed_trajectory": trajectory_to_dict(seed) if seed is not None else None,
            "frame": task.frame.to_dict(),
        }

    @app.get("/tasks/{task_id}/demos")
    def list_demos(task_id: str):
        task = get_task(task_id)
        return {"task_id": task_id, "demos": [trajectory_to_dict(d) for d in task.demos]}

    @app.post("/interpolate")
    def interpolate_waypoints(request: InterpolateRequest):
        samples = request.samples_per_segment
        if samples is None:
            samples = config.features.samples_per_segment
        traj = Trajectory(
            tuple(w.to_waypoint() for w in request.waypoints), id="preview"
        )
        smooth = interpolate(traj, samples)
        authored = [i * (samples + 1) for i in range(len(traj))]
        return {
            "waypoints": [waypoint_to_dict(w) for w in smooth.waypoints],
            "authored_indices": authored,
            "samples_per_segment": samples,
        }

    @app.post("/tasks/{task_id}/demos", status_code=201)
    def submit_demo(task_id: str, request: SubmitRequest):
        task = get_task(task_id)
        waypoints = tuple(w.to_waypoint() for w in request.waypoints)
        with write_lock:
            existing = [
                int(t.rsplit("-", 1)[1])
                for t in dataset.trajectories
                if t.startswith("crowd-") and t.rsplit("-", 1)[1].isdigit()
            ]
            demo_id = f"crowd-{(max(existing) + 1 if existing else 1):05d}"
            traj = Trajectory(waypoints, id=demo_id, source=TrajectorySource.CROWD)
            updated = dataset.add_demo(task_id, traj)
            demo_file = root / "objects" / task.object_id / "demos" / f"{demo_id}.json"
            demo_file.parent.mkdir(parents=True, exist_ok=True)
            payload = {"task": task_id, "frame": "part"}
            payload.update(trajectory_to_dict(traj))
            demo_file.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")
            # Keep the stored counts honest so the directory re-imports.
            metadata_file = root / "metadata.json"
            if metadata_file.exists():
                metadata = json.loads(metadata_file.read_text())
                metadata["counts"] = dataset.counts()
                metadata_file.write_text(json.dumps(metadata, indent=1, sort_keys=True) + "\n")
        return {
            "id": demo_id,
            "task": task_id,
            "demo_count": len(updated.demos),
            "trajectory": trajectory_to_dict(traj),
        }

    @app.get("/tasks/{task_id}/score")
    def score_task(task_id: str, top: int = 10):
        if net is None or featurizer is None:
            raise HTTPException(status_code=503, detail="no model loaded; scoring unavailable")
        task = get_task(task_id)
        from .net import infer

        candidates = dataset.crowd_pool()
        ranked = infer(net, featurizer, task.part, task.frame, task.instruction, candidates)
        return {
            "task_id": task_id,
            "ranking": [
                {"traj_id": traj.id, "probability": score.probability}
                for traj, score in ranked[: max(top, 1)]
            ],
        }

    return app
