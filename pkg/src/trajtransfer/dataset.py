"""Dataset model and on-disk layout.

A dataset directory holds one folder per object::

    <root>/
      metadata.json
      objects/<object_id>/
        part_<part_id>.json     point list plus the part frame
        manual.json             manuals with their instructions
        demos/<traj_id>.json    one trajectory per file, bound to a task

Demo files carry a ``frame`` marker: ``"part"`` trajectories are stored
in part-frame coordinates as-is, ``"world"`` trajectories are converted
on load. Export always writes part-frame coordinates, so an
export/import round trip is exact. Every task must resolve to a part and
at least one demonstration; violations name the offending file.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DatasetFormatError,
    EmptyDatasetError,
    ReferentialIntegrityError,
)
from .features import Vocabulary
from .labels import TaskInstance
from .partframe import PartFrame, PointCloudPart, to_part_frame
from .trajectory import (
    Trajectory,
    TrajectorySource,
    trajectory_from_dict,
    trajectory_to_dict,
)

__all__ = ["Dataset", "import_dataset", "export_dataset", "dataset_hash"]


@dataclass
class Dataset:
    """Tasks plus the shared trajectory pool keyed by id.

    ``vocab`` is attached once a vocabulary has been built over the
    dataset's instructions; freshly imported datasets carry none.
    """

    tasks: list[TaskInstance]
    trajectories: dict[str, Trajectory]
    metadata: dict = field(default_factory=dict)
    vocab: "Vocabulary | None" = None

    def task_by_id(self, task_id: str) -> TaskInstance:
        for task in self.tasks:
            if task.task_id == task_id:
                return task
        raise KeyError(f"unknown task {task_id!r}")

    def crowd_pool(self, tasks: Sequence[TaskInstance] | None = None) -> list[Trajectory]:
        """All demonstrations of the given tasks (default: all tasks), in
        stable task order. Expert demonstrations are excluded."""
        chosen = self.tasks if tasks is None else tasks
        out: list[Trajectory] = []
        for task in chosen:
            out.extend(task.demos)
        return out

    def counts(self) -> dict:
        return {
            "objects": len({t.object_id for t in self.tasks}),
            "parts": len({(t.object_id, t.part.part_id) for t in self.tasks}),
            "manuals": len({t.manual_id for t in self.tasks}),
            "instructions": len(self.tasks),
            "demos": sum(len(t.demos) for t in self.tasks),
        }

    def add_demo(self, task_id: str, traj: Trajectory) -> TaskInstance:
        """Append a part-frame demonstration to a task, returning the
        updated task. The trajectory id must be unused."""
        if traj.id in self.trajectories:
            raise ValueError(f"trajectory id {traj.id!r} already exists")
        for i, task in enumerate(self.tasks):
            if task.task_id == task_id:
                updated = replace(task, demos=task.demos + (traj,))
                self.tasks[i] = updated
                self.trajectories[traj.id] = traj
                return updated
        raise KeyError(f"unknown task {task_id!r}")


def _canonical(dataset: Dataset) -> dict:
    tasks = []
    for task in sorted(dataset.tasks, key=lambda t: t.task_id):
        tasks.append(
            {
                "task_id": task.task_id,
                "object_id": task.object_id,
                "manual_id": task.manual_id,
                "instruction": task.instruction,
                "part_id": task.part.part_id,
                "points": task.part.points.tolist(),
                "frame": task.frame.to_dict(),
                "demos": [trajectory_to_dict(d) for d in task.demos],
                "expert": trajectory_to_dict(task.expert_demo) if task.expert_demo else None,
            }
        )
    return {"tasks": tasks}


def dataset_hash(dataset: Dataset) -> str:
    """Content hash over tasks and trajectories; volatile metadata such as
    creation time is excluded."""
    payload = json.dumps(_canonical(dataset), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise DatasetFormatError("file is missing", location=str(path)) from None
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"invalid JSON: {exc}", location=str(path)) from exc


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")


def _parse_part(path: Path) -> tuple[PointCloudPart, PartFrame]:
    data = _read_json(path)
    for key in ("part_id", "points", "frame"):
        if key not in data:
            raise DatasetFormatError(f"missing key {key!r}", location=str(path))
    try:
        part = PointCloudPart(points=data["points"], part_id=str(data["part_id"]))
    except ValueError as exc:
        raise DatasetFormatError(str(exc), location=f"{path}: points") from exc
    try:
        frame = PartFrame.from_dict(data["frame"])
    except (KeyError, ValueError) as exc:
        raise DatasetFormatError(str(exc), location=f"{path}: frame") from exc
    return part, frame


def import_dataset(path) -> Dataset:
    """Load and validate a dataset directory.

    World-frame demos are converted to their task's part frame. Errors
    carry the offending file and field.
    """
    root = Path(path)
    objects_dir = root / "objects"
    if not objects_dir.is_dir() or not any(p.is_dir() for p in objects_dir.iterdir()):
        raise EmptyDatasetError("no objects found", location=str(objects_dir))

    metadata = _read_json(root / "metadata.json") if (root / "metadata.json").exists() else {}

    tasks: list[TaskInstance] = []
    trajectories: dict[str, Trajectory] = {}
    for obj_dir in sorted(p for p in objects_dir.iterdir() if p.is_dir()):
        object_id = obj_dir.name
        parts: dict[str, tuple[PointCloudPart, PartFrame]] = {}
        for part_file in sorted(obj_dir.glob("part_*.json")):
            part, frame = _parse_part(part_file)
            if part.part_id in parts:
                raise ReferentialIntegrityError(
                    f"duplicate part id {part.part_id!r}", location=str(part_file)
                )
            parts[part.part_id] = (part, frame)
        if not parts:
            raise DatasetFormatError("object has no part files", location=str(obj_dir))

        manual_file = obj_dir / "manual.json"
        manual_data = _read_json(manual_file)
        manuals = manual_data.get("manuals")
        if not isinstance(manuals, list) or not manuals:
            raise DatasetFormatError("manuals must be a non-empty array", location=str(manual_file))

        instructions_flat: list[tuple[str, str, str, str]] = []
        for manual in manuals:
            manual_id = manual.get("manual_id")
            instructions = manual.get("instructions")
            if not manual_id or not isinstance(instructions, list) or not instructions:
                raise DatasetFormatError(
                    "manual needs manual_id and a non-empty instructions array",
                    location=str(manual_file),
                )
            for entry in instructions:
                task_id = entry.get("task_id")
                part_id = entry.get("part_id")
                text = entry.get("text")
                if not task_id or not part_id or not isinstance(text, str) or not text:
                    raise DatasetFormatError(
                        "instruction needs task_id, part_id, and text",
                        location=str(manual_file),
                    )
                if part_id not in parts:
                    raise ReferentialIntegrityError(
                        f"instruction {task_id!r} references unknown part {part_id!r}",
                        location=str(manual_file),
                    )
                instructions_flat.append((str(manual_id), str(task_id), str(part_id), text))
        known_tasks = {task_id for _, task_id, _, _ in instructions_flat}

        # Demo files are grouped by task before tasks are assembled; a
        # binding outside this object's instructions is an error.
        demos_by_task: dict[str, list[tuple[Trajectory, str, Path]]] = {}
        demo_dir = obj_dir / "demos"
        if demo_dir.is_dir():
            for demo_file in sorted(demo_dir.glob("*.json")):
                data = _read_json(demo_file)
                task_ref = data.get("task")
                if not task_ref:
                    raise DatasetFormatError("missing task binding", location=str(demo_file))
                if str(task_ref) not in known_tasks:
                    raise ReferentialIntegrityError(
                        f"demo references unknown task {task_ref!r}", location=str(demo_file)
                    )
                frame_kind = data.get("frame", "part")
                if frame_kind not in ("part", "world"):
                    raise DatasetFormatError(
                        f"frame must be 'part' or 'world', got {frame_kind!r}",
                        location=str(demo_file),
                    )
                traj = trajectory_from_dict(data, where=str(demo_file))
                if not traj.id:
                    raise DatasetFormatError("trajectory id is empty", location=str(demo_file))
                if traj.id in trajectories or any(
                    traj.id == t.id for group in demos_by_task.values() for t, _, _ in group
                ):
                    raise ReferentialIntegrityError(
                        f"duplicate trajectory id {traj.id!r}", location=str(demo_file)
                    )
                demos_by_task.setdefault(str(task_ref), []).append((traj, frame_kind, demo_file))

        for manual_id, task_id, part_id, text in instructions_flat:
            part, frame = parts[part_id]
            bound = demos_by_task.pop(task_id, [])
            demos: list[Trajectory] = []
            expert: Trajectory | None = None
            for traj, frame_kind, demo_file in bound:
                if frame_kind == "world":
                    traj = to_part_frame(traj, frame)
                if traj.source is TrajectorySource.EXPERT:
                    if expert is not None:
                        raise ReferentialIntegrityError(
                            f"task {task_id!r} has more than one expert demo",
                            location=str(demo_file),
                        )
                    expert = traj
                else:
                    demos.append(traj)
            if not demos:
                raise ReferentialIntegrityError(
                    f"task {task_id!r} has no demonstrations", location=str(obj_dir)
                )
            task = TaskInstance(
                task_id=task_id,
                part=part,
                frame=frame,
                instruction=text,
                manual_id=manual_id,
                demos=tuple(demos),
                expert_demo=expert,
                object_id=object_id,
            )
            tasks.append(task)
            for demo in demos:
                trajectories[demo.id] = demo
            if expert is not None:
                trajectories[expert.id] = expert

    if not tasks:
        raise EmptyDatasetError("no tasks found", location=str(root))

    stored_counts = metadata.get("counts", {})
    dataset = Dataset(tasks=tasks, trajectories=trajectories, metadata=metadata)
    actual = dataset.counts()
    for key, value in stored_counts.items():
        if key in actual and actual[key] != value:
            raise DatasetFormatError(
                f"metadata counts[{key!r}] = {value} but dataset has {actual[key]}",
                location=str(root / "metadata.json"),
            )
    return dataset


def export_dataset(dataset: Dataset, path) -> None:
    """Write the dataset directory; demos are stored in part-frame form."""
    root = Path(path)
    (root / "objects").mkdir(parents=True, exist_ok=True)
    metadata = dict(dataset.metadata)
    metadata["counts"] = dataset.counts()
    metadata.setdefault("name", "dataset")
    metadata.setdefault("version", 1)
    metadata.setdefault("created", "")
    _write_json(root / "metadata.json", metadata)

    by_object: dict[str, list[TaskInstance]] = {}
    for task in dataset.tasks:
        by_object.setdefault(task.object_id or "object-000", []).append(task)

    for object_id, obj_tasks in by_object.items():
        obj_dir = root / "objects" / object_id
        (obj_dir / "demos").mkdir(parents=True, exist_ok=True)
        manuals: dict[str, list[dict]] = {}
        written_parts: set[str] = set()
        for task in obj_tasks:
            if task.part.part_id not in written_parts:
                written_parts.add(task.part.part_id)
                _write_json(
                    obj_dir / f"part_{task.part.part_id}.json",
                    {
                        "part_id": task.part.part_id,
                        "points": task.part.points.tolist(),
                        "frame": task.frame.to_dict(),
                    },
                )
            manuals.setdefault(task.manual_id, []).append(
                {"task_id": task.task_id, "part_id": task.part.part_id, "text": task.instruction}
            )
            all_demos: Iterable[Trajectory] = task.demos
            if task.expert_demo is not None:
                all_demos = list(task.demos) + [task.expert_demo]
            for demo in all_demos:
                payload = {"task": task.task_id, "frame": "part"}
                payload.update(trajectory_to_dict(demo))
                _write_json(obj_dir / "demos" / f"{demo.id}.json", payload)
        _write_json(
            obj_dir / "manual.json",
            {
                "manuals": [
                    {"manual_id": mid, "instructions": entries}
                    for mid, entries in sorted(manuals.items())
                ]
            },
        )


def downsample_points(points: np.ndarray, limit: int = 50_000) -> np.ndarray:
    """Evenly strided subsample used when serving clouds to the viewer."""
    n = points.shape[0]
    if n <= limit:
        return points
    idx = np.linspace(0, n - 1, limit).astype(int)
    return points[idx]
