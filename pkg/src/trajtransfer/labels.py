"""Noise handling for crowd-sourced demonstrations.

Crowd demonstrations for the same task vary widely in quality. The demo
with the smallest average DTW distance to all demos of its task is taken
as the task's best candidate; assuming at least half the submissions are
reasonable, an outlier cannot win that vote. Binary training examples
are then generated by thresholding distances from the best candidate to
the full training pool: close trajectories become positives, far ones
negatives, and the band in between is left unlabeled.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dtw import DtwParams, PairwiseDistanceCache
from .errors import InvalidThresholdsError
from .partframe import PartFrame, PointCloudPart
from .trajectory import Trajectory

__all__ = [
    "TaskInstance",
    "LabeledExample",
    "NoiseThresholds",
    "select_best_demo",
    "generate_examples",
    "write_examples",
]


@dataclass(frozen=True)
class TaskInstance:
    """One (part, instruction) pair with its crowd demonstrations.

    Demonstrations are stored in part-frame coordinates. The optional
    expert demonstration is held out for evaluation and never enters the
    candidate pool.
    """

    task_id: str
    part: PointCloudPart
    frame: PartFrame
    instruction: str
    manual_id: str
    demos: tuple[Trajectory, ...]
    expert_demo: Trajectory | None = None
    object_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "demos", tuple(self.demos))
        if len(self.demos) < 1:
            raise ValueError(f"task {self.task_id!r} needs at least one demonstration")


@dataclass(frozen=True)
class LabeledExample:
    """A (task, trajectory) pair labeled as a good (1) or bad (0) match."""

    task_ref: str
    traj_ref: str
    label: int
    delta: float = 0.0

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass(frozen=True)
class NoiseThresholds:
    """Distance cutoffs for generating positives (< t_g) and negatives (> t_w)."""

    t_g: float = 7.0
    t_w: float = 15.0

    def __post_init__(self):
        if not (np.isfinite(self.t_g) and self.t_g > 0.0):
            raise InvalidThresholdsError(f"t_g must be finite and > 0, got {self.t_g}")
        if not (self.t_w > self.t_g):
            raise InvalidThresholdsError(f"t_w ({self.t_w}) must exceed t_g ({self.t_g})")


def select_best_demo(
    task: TaskInstance,
    params: DtwParams | None = None,
    cache: PairwiseDistanceCache | None = None,
) -> Trajectory:
    """The demo with the smallest average distance to all of the task's demos.

    The average runs over every demo including the candidate itself (a
    self-distance of zero), so a lone demo trivially wins. Exact ties are
    broken toward the lowest trajectory id.
    """
    if cache is None:
        cache = PairwiseDistanceCache(params)
    best = None
    best_key = None
    for demo in task.demos:
        avg = cache.average(demo, task.demos)
        key = (avg, demo.id)
        if best_key is None or key < best_key:
            best, best_key = demo, key
    return best


def generate_examples(
    tasks: Sequence[TaskInstance],
    pool: Sequence[Trajectory],
    thresholds: NoiseThresholds,
    params: DtwParams | None = None,
    *,
    negative_ratio: float = 4.0,
    seed: int = 0,
    cache: PairwiseDistanceCache | None = None,
) -> list[LabeledExample]:
    """Binary training examples for every task against the shared pool.

    Per task: the best candidate is a positive with delta 0, every pool
    trajectory closer than ``t_g`` to it is a positive, and every pool
    trajectory farther than ``t_w`` is a negative. Distances inside
    [t_g, t_w] produce nothing. Examples are deduplicated by
    (task, trajectory). Negatives are subsampled to at most
    ``negative_ratio`` times the task's positive count, drawn with the
    seeded generator so output is reproducible.
    """
    if not (np.isfinite(negative_ratio) and negative_ratio >= 0.0):
        raise InvalidThresholdsError(f"negative_ratio must be >= 0, got {negative_ratio}")
    thresholds = NoiseThresholds(thresholds.t_g, thresholds.t_w)
    if cache is None:
        cache = PairwiseDistanceCache(params)
    rng = np.random.default_rng(seed)
    out: list[LabeledExample] = []
    for task in tasks:
        best = select_best_demo(task, cache=cache)
        seen = {best.id}
        positives = [LabeledExample(task.task_id, best.id, 1, 0.0)]
        negatives: list[LabeledExample] = []
        for other in pool:
            if other.id in seen:
                continue
            seen.add(other.id)
            delta = cache.distance(best, other)
            if delta < thresholds.t_g:
                positives.append(LabeledExample(task.task_id, other.id, 1, delta))
            elif delta > thresholds.t_w:
                negatives.append(LabeledExample(task.task_id, other.id, 0, delta))
        limit = int(np.floor(negative_ratio * len(positives)))
        if len(negatives) > limit:
            picked = rng.choice(len(negatives), size=limit, replace=False)
            negatives = [negatives[i] for i in sorted(picked)]
        out.extend(positives)
        out.extend(negatives)
    return out


def write_examples(examples: Sequence[LabeledExample], path) -> None:
    """Audit file: one JSON object per line."""
    with open(path, "w") as fh:
        for ex in examples:
            fh.write(
                json.dumps(
                    {"task": ex.task_ref, "traj": ex.traj_ref, "label": ex.label, "delta": ex.delta}
                )
                + "\n"
            )
