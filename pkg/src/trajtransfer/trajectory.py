"""Waypoint and trajectory data model.

A trajectory is an ordered sequence of waypoints, each holding a gripper
state, a 3-D translation in meters, and a unit-quaternion rotation.
This module provides the canonical JSON form used on disk, smooth
interpolation (linear translation, Slerp rotation), and length
normalization that preserves the sequence of gripper-state runs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

from . import quat
from .errors import DatasetFormatError, GripperSequenceError, TrajectoryTooShortError
from .quat import slerp

__all__ = [
    "GripperState",
    "TrajectorySource",
    "Waypoint",
    "Trajectory",
    "slerp",
    "interpolate",
    "normalize_length",
    "gripper_runs",
    "trajectory_to_dict",
    "trajectory_from_dict",
]


class GripperState(str, Enum):
    OPEN = "open"
    CLOSED = "closed"
    HOLDING = "holding"

    @property
    def ordinal(self) -> float:
        """Scalar encoding used by the trajectory feature vector."""
        return _GRIPPER_ORDINAL[self]


_GRIPPER_ORDINAL = {
    GripperState.OPEN: 0.0,
    GripperState.HOLDING: 0.5,
    GripperState.CLOSED: 1.0,
}


class TrajectorySource(str, Enum):
    CROWD = "crowd"
    EXPERT = "expert"
    SYNTHETIC = "synthetic"


def _frozen_array(values, shape, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite components: {arr.tolist()}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Waypoint:
    """One trajectory sample: gripper state, translation, rotation.

    The rotation is validated on construction and re-normalized so its
    norm is exactly 1 to machine precision. Arrays are read-only.
    """

    gripper: GripperState
    translation: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gripper", GripperState(self.gripper))
        object.__setattr__(
            self, "translation", _frozen_array(self.translation, (3,), "translation")
        )
        rot = quat.check_unit(self.rotation, "waypoint rotation")
        rot.setflags(write=False)
        object.__setattr__(self, "rotation", rot)

    def replace(self, **changes) -> "Waypoint":
        fields = {"gripper": self.gripper, "translation": self.translation, "rotation": self.rotation}
        fields.update(changes)
        return Waypoint(**fields)


@dataclass(frozen=True)
class Trajectory:
    """An ordered, non-empty sequence of waypoints with an identity."""

    waypoints: tuple[Waypoint, ...]
    id: str = ""
    source: TrajectorySource = TrajectorySource.CROWD

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        object.__setattr__(self, "source", TrajectorySource(self.source))
        if len(self.waypoints) < 1:
            raise TrajectoryTooShortError("a trajectory needs at least one waypoint")

    def __len__(self) -> int:
        return len(self.waypoints)

    def __iter__(self) -> Iterator[Waypoint]:
        return iter(self.waypoints)

    def translations(self) -> np.ndarray:
        """Stacked waypoint translations, shape (m, 3)."""
        return np.array([w.translation for w in self.waypoints])

    def rotations(self) -> np.ndarray:
        """Stacked waypoint rotations, shape (m, 4)."""
        return np.array([w.rotation for w in self.waypoints])

    def gripper_ordinals(self) -> np.ndarray:
        return np.array([w.gripper.ordinal for w in self.waypoints])

    def with_waypoints(self, waypoints: Sequence[Waypoint], id: str | None = None) -> "Trajectory":
        return Trajectory(tuple(waypoints), id=self.id if id is None else id, source=self.source)


def gripper_runs(traj: Trajectory) -> list[tuple[GripperState, int]]:
    """Consecutive same-gripper runs as (state, waypoint count) pairs."""
    runs: list[tuple[GripperState, int]] = []
    for wp in traj.waypoints:
        if runs and runs[-1][0] is wp.gripper:
            runs[-1] = (wp.gripper, runs[-1][1] + 1)
        else:
            runs.append((wp.gripper, 1))
    return runs


def _lerp(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    # (1-t)*a + t*b hits both endpoints exactly.
    return (1.0 - t) * a + t * b


def interpolate(traj: Trajectory, samples_per_segment: int) -> Trajectory:
    """Insert evenly spaced intermediate waypoints into every segment.

    Translation is interpolated linearly and rotation with Slerp.
    Intermediates inherit the gripper state of the segment's starting
    waypoint, so gripper transitions stay at authored waypoints. The
    output contains the original waypoints in order; a trajectory of m
    waypoints becomes m + (m - 1) * samples_per_segment.

    Raises:
        TrajectoryTooShortError: if the trajectory has fewer than 2 waypoints.
    """
    if samples_per_segment < 1:
        raise ValueError(f"samples_per_segment must be >= 1, got {samples_per_segment}")
    if len(traj) < 2:
        raise TrajectoryTooShortError("interpolation needs at least 2 waypoints")
    out: list[Waypoint] = []
    wps = traj.waypoints
    for a, b in zip(wps[:-1], wps[1:]):
        out.append(a)
        for k in range(1, samples_per_segment + 1):
            t = k / (samples_per_segment + 1)
            out.append(
                Waypoint(
                    gripper=a.gripper,
                    translation=_lerp(a.translation, b.translation, t),
                    rotation=slerp(a.rotation, b.rotation, t),
                )
            )
    out.append(wps[-1])
    return traj.with_waypoints(out)


def apportion(run_lengths: Sequence[int], target: int) -> list[int]:
    """Split ``target`` slots across runs proportionally to their lengths.

    Largest-remainder rounding over exact integer quotas, then a minimum
    of one slot per run is restored by taking slots from the largest
    allocations. Deterministic: ties go to the earlier run.
    """
    if target < len(run_lengths):
        raise GripperSequenceError(
            f"target length {target} is below the {len(run_lengths)} gripper runs"
        )
    total = sum(run_lengths)
    base = [target * m // total for m in run_lengths]
    remainders = [(target * m) % total for m in run_lengths]
    leftover = target - sum(base)
    order = sorted(range(len(run_lengths)), key=lambda i: (-remainders[i], i))
    for i in order[:leftover]:
        base[i] += 1
    for i in range(len(base)):
        while base[i] == 0:
            donor = max(
                (j for j in range(len(base)) if base[j] > 1),
                key=lambda j: (base[j], -j),
            )
            base[donor] -= 1
            base[i] += 1
    return base


def _resample_run(wps: Sequence[Waypoint], count: int) -> list[Waypoint]:
    """Resample one gripper run to ``count`` waypoints.

    Waypoints are placed at uniform arc-length along the run's translation
    polyline; rotation is Slerped within the containing segment. Runs with
    zero translation extent fall back to uniform index parameterization.
    """
    if count == len(wps):
        return list(wps)
    if len(wps) == 1:
        return [wps[0]] * count
    if count == 1:
        return [wps[0]]
    seg = np.array([np.linalg.norm(b.translation - a.translation) for a, b in zip(wps[:-1], wps[1:])])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(cum[-1])
    out: list[Waypoint] = []
    for i in range(count):
        u = i / (count - 1)
        if total > 0.0:
            s = u * total
            j = int(np.searchsorted(cum, s, side="right")) - 1
            j = min(max(j, 0), len(wps) - 2)
            t = (s - cum[j]) / seg[j] if seg[j] > 0.0 else 0.0
        else:
            x = u * (len(wps) - 1)
            j = min(int(np.floor(x)), len(wps) - 2)
            t = x - j
        t = min(max(t, 0.0), 1.0)
        a, b = wps[j], wps[j + 1]
        out.append(
            Waypoint(
                gripper=a.gripper,
                translation=_lerp(a.translation, b.translation, t),
                rotation=slerp(a.rotation, b.rotation, t),
            )
        )
    return out


def normalize_length(traj: Trajectory, target_len: int) -> Trajectory:
    """Resample a trajectory to exactly ``target_len`` waypoints.

    The ordered sequence of gripper-state runs is preserved: each run is
    allotted a share of the target proportional to its waypoint count
    (largest-remainder rounding, at least one waypoint per run) and is
    resampled at uniform arc length within that share. A run whose
    allotment equals its current length is kept verbatim, which makes the
    operation exactly idempotent.

    Raises:
        GripperSequenceError: if target_len is below the number of runs.
    """
    if target_len < 1:
        raise ValueError(f"target_len must be >= 1, got {target_len}")
    runs = gripper_runs(traj)
    counts = apportion([n for _, n in runs], target_len)
    out: list[Waypoint] = []
    start = 0
    for (_, n), count in zip(runs, counts):
        out.extend(_resample_run(traj.waypoints[start : start + n], count))
        start += n
    return traj.with_waypoints(out)


def waypoint_to_dict(wp: Waypoint) -> dict:
    return {
        "g": wp.gripper.value,
        "t": [float(v) for v in wp.translation],
        "r": [float(v) for v in wp.rotation],
    }


def trajectory_to_dict(traj: Trajectory) -> dict:
    """Canonical JSON form: {"id", "source", "waypoints": [{"g","t","r"}]}."""
    return {
        "id": traj.id,
        "source": traj.source.value,
        "waypoints": [waypoint_to_dict(w) for w in traj.waypoints],
    }


def _parse_waypoint(entry, where: str) -> Waypoint:
    if not isinstance(entry, dict):
        raise DatasetFormatError("waypoint must be an object", location=where)
    try:
        g = GripperState(entry["g"])
    except (KeyError, ValueError) as exc:
        raise DatasetFormatError(f"bad gripper state: {exc}", location=f"{where}.g") from exc
    t = entry.get("t")
    if not isinstance(t, (list, tuple)) or len(t) != 3:
        raise DatasetFormatError("t must be a 3-element array", location=f"{where}.t")
    r = entry.get("r")
    if not isinstance(r, (list, tuple)) or len(r) != 4:
        raise DatasetFormatError("r must be a 4-element array", location=f"{where}.r")
    try:
        return Waypoint(gripper=g, translation=t, rotation=r)
    except Exception as exc:
        raise DatasetFormatError(str(exc), location=where) from exc


def trajectory_from_dict(data: dict, where: str = "trajectory") -> Trajectory:
    """Parse the canonical JSON form, reporting the offending field on error."""
    if not isinstance(data, dict):
        raise DatasetFormatError("trajectory must be an object", location=where)
    wps = data.get("waypoints")
    if not isinstance(wps, list) or not wps:
        raise DatasetFormatError("waypoints must be a non-empty array", location=f"{where}.waypoints")
    waypoints = [_parse_waypoint(w, f"{where}.waypoints[{i}]") for i, w in enumerate(wps)]
    try:
        source = TrajectorySource(data.get("source", "crowd"))
    except ValueError as exc:
        raise DatasetFormatError(str(exc), location=f"{where}.source") from exc
    return Trajectory(tuple(waypoints), id=str(data.get("id", "")), source=source)
