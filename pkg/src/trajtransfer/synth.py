"""Synthetic dataset generator.

Builds desk-scale datasets with known structure: each task is a
parametric part cloud from a small family (knob, handle, lever, button)
placed at a random pose, an instruction from the family's templates, and
a cluster of demonstrations around a ground-truth trajectory plus a
configurable fraction of far-off outliers. The ground truth doubles as
the expert demonstration, so evaluation metrics have an exact target.
Everything is deterministic for a given seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import quat
from .labels import TaskInstance
from .partframe import PartFrame, compute_part_frame, to_part_frame, PointCloudPart
from .trajectory import GripperState, Trajectory, TrajectorySource, Waypoint

__all__ = ["SyntheticSpec", "FAMILIES", "generate_synthetic"]


@dataclass(frozen=True)
class SyntheticSpec:
    n_tasks: int = 40
    demos_per_task: int = 8
    outlier_fraction: float = 0.2
    noise_translation: float = 0.003
    noise_rotation: float = 0.04
    outlier_offset: float = 0.18
    tasks_per_manual: int = 2
    points_per_part: int = 320
    families: tuple[str, ...] = ("knob", "handle", "lever", "button")
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_tasks < 1 or self.demos_per_task < 1:
            raise ValueError("n_tasks and demos_per_task must be >= 1")
        if not 0.0 <= self.outlier_fraction <= 1.0:
            raise ValueError("outlier_fraction must be in [0, 1]")
        if self.noise_translation < 0 or self.noise_rotation < 0:
            raise ValueError("noise levels must be >= 0")
        if self.tasks_per_manual < 1:
            raise ValueError("tasks_per_manual must be >= 1")
        unknown = set(self.families) - set(FAMILIES)
        if unknown:
            raise ValueError(f"unknown part families: {sorted(unknown)}")


def _rot_z(angle: float) -> np.ndarray:
    return quat.from_axis_angle([0.0, 0.0, 1.0], angle)


def _rot_x(angle: float) -> np.ndarray:
    return quat.from_axis_angle([1.0, 0.0, 0.0], angle)


def _wp(g: GripperState, t, q) -> Waypoint:
    return Waypoint(gripper=g, translation=np.asarray(t, dtype=float), rotation=q)


_ID = quat.IDENTITY
_O, _C, _H = GripperState.OPEN, GripperState.CLOSED, GripperState.HOLDING

# Ground-truth motion patterns per family, in the part's local frame.
# Each family approaches from a different direction and moves in a
# different plane so the distance metric separates them cleanly.
_PATTERNS = {
    "knob": [
        (_O, (0.0, 0.0, 0.11), _ID),
        (_O, (0.0, 0.0, 0.035), _ID),
        (_C, (0.0, 0.0, 0.012), _ID),
        (_C, (0.0, 0.0, 0.012), _rot_z(-1.1)),
        (_C, (0.0, 0.0, 0.012), _rot_z(-2.1)),
        (_O, (0.0, 0.0, 0.07), _rot_z(-2.1)),
    ],
    "handle": [
        (_O, (0.0, -0.10, -0.02), _ID),
        (_O, (0.0, -0.02, -0.01), _ID),
        (_C, (0.0, 0.0, 0.0), _ID),
        (_C, (0.0, 0.005, -0.10), _ID),
        (_O, (0.0, -0.05, -0.11), _ID),
    ],
    "lever": [
        (_O, (0.0, -0.09, 0.06), _ID),
        (_C, (0.0, -0.005, 0.02), _ID),
        (_C, (0.0, 0.045, 0.015), _rot_x(0.4)),
        (_C, (0.0, 0.09, 0.005), _rot_x(0.8)),
        (_O, (0.0, 0.09, 0.07), _rot_x(0.8)),
    ],
    "button": [
        (_O, (-0.10, 0.0, 0.015), _ID),
        (_H, (-0.025, 0.0, 0.005), _ID),
        (_H, (-0.006, 0.0, 0.0), _ID),
        (_O, (-0.08, 0.0, 0.01), _ID),
    ],
}

_TEMPLATES = {
    "knob": (
        "turn the knob clockwise",
        "rotate the knob to the right",
        "twist the dial clockwise",
    ),
    "handle": (
        "pull the handle down",
        "pull down on the handle",
        "grab the handle and pull it down",
    ),
    "lever": (
        "push the lever forward",
        "press the lever away from you",
        "push the small lever forward",
    ),
    "button": (
        "press the button",
        "push the round button",
        "press the power switch",
    ),
}

# Horizontal half-extents (x, y) and vertical half-extent used for the box
# cloud of each family; x > y keeps the principal axis unambiguous.
_EXTENTS = {
    "knob": (0.035, 0.018, 0.010),
    "handle": (0.060, 0.012, 0.012),
    "lever": (0.045, 0.010, 0.020),
    "button": (0.022, 0.011, 0.006),
}

_COLORS = {
    "knob": (205, 70, 60),
    "handle": (70, 200, 80),
    "lever": (70, 90, 210),
    "button": (210, 200, 70),
}

FAMILIES = tuple(_PATTERNS)


def _make_cloud(family: str, n_points: int, rng: np.random.Generator) -> np.ndarray:
    """Anisotropic box cloud with a dense blob at +x to pin the axis sign."""
    ex, ey, ez = _EXTENTS[family]
    n_blob = max(n_points // 5, 8)
    n_box = max(n_points - n_blob, 8)
    box = rng.uniform(-1.0, 1.0, size=(n_box, 3)) * np.array([ex, ey, ez])
    blob = rng.normal(0.0, 0.25, size=(n_blob, 3)) * np.array([ex, ey, ez]) + np.array(
        [0.8 * ex, 0.0, 0.0]
    )
    pts = np.vstack([box, blob]) + rng.normal(0.0, 0.0012, size=(n_box + n_blob, 3))
    color = np.array(_COLORS[family], dtype=float)
    colors = np.clip(color + rng.normal(0.0, 12.0, size=(pts.shape[0], 3)), 0, 255)
    return np.hstack([pts, colors])


def _pose(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Random yaw about gravity plus a translation: (R, t, q)."""
    yaw = rng.uniform(0.0, 2.0 * np.pi)
    q = _rot_z(yaw)
    return quat.to_matrix(q), rng.uniform([-0.5, -0.5, 0.0], [0.5, 0.5, 0.8]), q


def _local_to_world(wps: Sequence[Waypoint], rot: np.ndarray, t: np.ndarray, q_pose) -> list[Waypoint]:
    return [
        Waypoint(
            gripper=w.gripper,
            translation=rot @ w.translation + t,
            rotation=quat.normalize(quat.multiply(q_pose, w.rotation)),
        )
        for w in wps
    ]


def _perturbed(wps: Sequence[Waypoint], spec: SyntheticSpec, rng: np.random.Generator) -> list[Waypoint]:
    offset = rng.normal(0.0, spec.noise_translation, size=3)
    out = []
    for w in wps:
        jitter = rng.normal(0.0, spec.noise_translation * 0.5, size=3)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        wobble = quat.from_axis_angle(axis, rng.normal(0.0, spec.noise_rotation))
        out.append(
            Waypoint(
                gripper=w.gripper,
                translation=w.translation + offset + jitter,
                rotation=quat.normalize(quat.multiply(wobble, w.rotation)),
            )
        )
    return out


def _outlier(family: str, spec: SyntheticSpec, rng: np.random.Generator) -> list[Waypoint]:
    """A demonstration that has nothing to do with the task: another
    family's motion, shifted well away from the part and re-oriented."""
    others = [f for f in FAMILIES if f != family]
    pattern = _PATTERNS[others[rng.integers(len(others))]]
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    shift = direction * spec.outlier_offset * rng.uniform(0.9, 1.4)
    spin = _rot_z(rng.uniform(1.2, np.pi))
    rot = quat.to_matrix(spin)
    return [
        Waypoint(
            gripper=g,
            translation=rot @ np.asarray(t) + shift,
            rotation=quat.normalize(quat.multiply(spin, q)),
        )
        for g, t, q in pattern
    ]


def _scaled_pattern(family: str, rng: np.random.Generator) -> list[Waypoint]:
    """The family pattern with a mild per-task size variation."""
    scale = rng.uniform(0.92, 1.08)
    return [_wp(g, np.asarray(t) * scale, q) for g, t, q in _PATTERNS[family]]


def generate_synthetic(spec: SyntheticSpec):
    """Build a synthetic :class:`~trajtransfer.dataset.Dataset`."""
    from .dataset import Dataset  # local import keeps module layering simple

    rng = np.random.default_rng(spec.rng_seed)
    tasks: list[TaskInstance] = []
    trajectories: dict[str, Trajectory] = {}

    n_outliers = int(round(spec.demos_per_task * spec.outlier_fraction))
    n_outliers = min(n_outliers, spec.demos_per_task - 1) if spec.demos_per_task > 1 else 0

    for index in range(spec.n_tasks):
        family = spec.families[index % len(spec.families)]
        manual_idx = index // spec.tasks_per_manual
        task_id = f"task-{index:03d}"
        manual_id = f"manual-{manual_idx:03d}"
        object_id = f"object-{manual_idx:03d}"

        cloud_local = _make_cloud(family, spec.points_per_part, rng)
        rot, offset, q_pose = _pose(rng)
        world_points = np.hstack([cloud_local[:, :3] @ rot.T + offset, cloud_local[:, 3:]])
        part = PointCloudPart(points=world_points, part_id=f"{task_id}-part")
        frame = compute_part_frame(part)

        template = _TEMPLATES[family][int(rng.integers(len(_TEMPLATES[family])))]
        gt_local = _scaled_pattern(family, rng)

        demos: list[Trajectory] = []
        for k in range(spec.demos_per_task):
            if k < spec.demos_per_task - n_outliers:
                wps_local = _perturbed(gt_local, spec, rng)
            else:
                wps_local = _outlier(family, spec, rng)
            world = _local_to_world(wps_local, rot, offset, q_pose)
            traj = Trajectory(
                tuple(world), id=f"{task_id}-demo-{k:02d}", source=TrajectorySource.SYNTHETIC
            )
            demos.append(to_part_frame(traj, frame))

        expert_world = Trajectory(
            tuple(_local_to_world(gt_local, rot, offset, q_pose)),
            id=f"{task_id}-expert",
            source=TrajectorySource.EXPERT,
        )
        expert = to_part_frame(expert_world, frame)

        task = TaskInstance(
            task_id=task_id,
            part=part,
            frame=frame,
            instruction=template,
            manual_id=manual_id,
            demos=tuple(demos),
            expert_demo=expert,
            object_id=object_id,
        )
        tasks.append(task)
        for demo in demos:
            trajectories[demo.id] = demo
        trajectories[expert.id] = expert

    metadata = {
        "name": f"synthetic-{spec.rng_seed}",
        "version": 1,
        "created": "",
        "counts": {
            "objects": len({t.object_id for t in tasks}),
            "parts": len(tasks),
            "manuals": len({t.manual_id for t in tasks}),
            "instructions": len(tasks),
            "demos": sum(len(t.demos) for t in tasks),
        },
    }
    return Dataset(tasks=tasks, trajectories=trajectories, metadata=metadata)
