"""Gravity-aligned, principal-axis part coordinate frames.

Trajectories expressed in a part's frame transfer between differently
posed or shaped parts without modification: the frame's z axis points
opposite gravity and its x axis follows the part's principal direction
in the horizontal plane, so a motion like "pull down" keeps the same
numbers no matter where the part sits in the world.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import quat
from .errors import AmbiguousFrameWarning
from .trajectory import Trajectory, Waypoint

__all__ = [
    "PointCloudPart",
    "PartFrame",
    "compute_part_frame",
    "to_part_frame",
    "from_part_frame",
    "points_to_frame",
    "points_from_frame",
]

# Relative eigenvalue gap below which the horizontal projection is treated
# as rotationally symmetric and the axis falls back to world +x.
EIGEN_TIE_TOLERANCE = 1e-9

# Third-moment magnitude below which the skew-based sign rule is abandoned.
MOMENT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PointCloudPart:
    """Segmented colored points of one object part.

    ``points`` is an (n, 6) array of x, y, z in meters and r, g, b in
    [0, 255]. At least three points are required.
    """

    points: np.ndarray
    part_id: str = ""

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 6:
            raise ValueError(f"points must have shape (n, 6), got {pts.shape}")
        if pts.shape[0] < 3:
            raise ValueError(f"a part needs at least 3 points, got {pts.shape[0]}")
        if not np.all(np.isfinite(pts[:, :3])):
            raise ValueError("point positions must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def positions(self) -> np.ndarray:
        return self.points[:, :3]

    @property
    def colors(self) -> np.ndarray:
        return self.points[:, 3:]


@dataclass(frozen=True)
class PartFrame:
    """Origin plus orthonormal right-handed basis (columns x, y, z)."""

    origin: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        origin = np.array(self.origin, dtype=float)
        rot = np.array(self.rotation, dtype=float)
        if origin.shape != (3,):
            raise ValueError(f"origin must have shape (3,), got {origin.shape}")
        if rot.shape != (3, 3):
            raise ValueError(f"rotation must have shape (3, 3), got {rot.shape}")
        if not (np.all(np.isfinite(origin)) and np.all(np.isfinite(rot))):
            raise ValueError("frame components must be finite")
        if np.max(np.abs(rot.T @ rot - np.eye(3))) > 1e-9:
            raise ValueError("rotation basis is not orthonormal within 1e-9")
        if np.linalg.det(rot) < 0.0:
            raise ValueError("rotation basis must be right-handed (det +1)")
        origin.setflags(write=False)
        rot.setflags(write=False)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "rotation", rot)

    @property
    def x_axis(self) -> np.ndarray:
        return self.rotation[:, 0]

    @property
    def y_axis(self) -> np.ndarray:
        return self.rotation[:, 1]

    @property
    def z_axis(self) -> np.ndarray:
        return self.rotation[:, 2]

    def quaternion(self) -> np.ndarray:
        return quat.from_matrix(self.rotation)

    def to_dict(self) -> dict:
        return {
            "origin": [float(v) for v in self.origin],
            "basis": [[float(v) for v in row] for row in self.rotation],
        }

    @staticmethod
    def from_dict(data: dict) -> "PartFrame":
        return PartFrame(origin=data["origin"], rotation=data["basis"])

    @staticmethod
    def identity() -> "PartFrame":
        return PartFrame(origin=np.zeros(3), rotation=np.eye(3))


def _plane_basis(z_axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal basis (u, v) of the plane normal to z."""
    ref = np.array([1.0, 0.0, 0.0])
    u = ref - np.dot(ref, z_axis) * z_axis
    if np.linalg.norm(u) < 1e-9:
        ref = np.array([0.0, 1.0, 0.0])
        u = ref - np.dot(ref, z_axis) * z_axis
    u = u / np.linalg.norm(u)
    v = np.cross(z_axis, u)
    return u, v


def compute_part_frame(part: PointCloudPart, gravity=(0.0, 0.0, -1.0)) -> PartFrame:
    """Fit the part frame: origin at the centroid, z opposite gravity, x
    along the principal direction of the points projected onto the
    horizontal plane.

    The x sign is canonicalized so the third central moment of the
    projected points along x is non-negative; when the projection has no
    usable skew the sign closest to world +x is taken. If the projected
    covariance has no dominant direction (top eigenvalues within
    ``EIGEN_TIE_TOLERANCE`` relative), an ``AmbiguousFrameWarning`` is
    emitted and x falls back to the world +x direction projected into the
    plane.
    """
    g = np.asarray(gravity, dtype=float)
    norm = np.linalg.norm(g)
    if norm == 0.0 or not np.all(np.isfinite(g)):
        raise ValueError("gravity must be a finite non-zero vector")
    z_axis = -g / norm

    positions = part.positions
    origin = positions.mean(axis=0)
    centered = positions - origin

    u, v = _plane_basis(z_axis)
    projected = np.column_stack([centered @ u, centered @ v])
    cov = projected.T @ projected / projected.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    leading = eigvals[1]
    gap = leading - eigvals[0]

    if leading <= 0.0 or gap <= EIGEN_TIE_TOLERANCE * leading:
        warnings.warn(
            f"part {part.part_id!r}: horizontal projection is rotationally "
            "symmetric; using world +x for the part axis",
            AmbiguousFrameWarning,
            stacklevel=2,
        )
        direction = np.array([1.0, 0.0])  # world +x expressed in (u, v)
        direction = direction / np.linalg.norm(direction)
    else:
        direction = eigvecs[:, 1]

    skew = float(np.mean((projected @ direction) ** 3))
    if skew < -MOMENT_TOLERANCE:
        direction = -direction
    elif abs(skew) <= MOMENT_TOLERANCE:
        x_candidate = direction[0] * u + direction[1] * v
        if np.dot(x_candidate, np.array([1.0, 0.0, 0.0])) < 0.0:
            direction = -direction

    x_axis = direction[0] * u + direction[1] * v
    x_axis = x_axis / np.linalg.norm(x_axis)
    y_axis = np.cross(z_axis, x_axis)
    rotation = np.column_stack([x_axis, y_axis, z_axis])
    return PartFrame(origin=origin, rotation=rotation)


def points_to_frame(points: np.ndarray, frame: PartFrame) -> np.ndarray:
    """World positions (n, 3) expressed in the part frame."""
    return (np.asarray(points, dtype=float) - frame.origin) @ frame.rotation


def points_from_frame(points: np.ndarray, frame: PartFrame) -> np.ndarray:
    return np.asarray(points, dtype=float) @ frame.rotation.T + frame.origin


def to_part_frame(traj: Trajectory, frame: PartFrame) -> Trajectory:
    """Re-express a world-frame trajectory in the part frame."""
    rot_t = frame.rotation.T
    q_inv = quat.conjugate(frame.quaternion())
    out = [
        Waypoint(
            gripper=wp.gripper,
            translation=rot_t @ (wp.translation - frame.origin),
            rotation=quat.normalize(quat.multiply(q_inv, wp.rotation)),
        )
        for wp in traj.waypoints
    ]
    return traj.with_waypoints(out)


def from_part_frame(traj: Trajectory, frame: PartFrame) -> Trajectory:
    """Inverse of :func:`to_part_frame`."""
    q_frame = frame.quaternion()
    out = [
        Waypoint(
            gripper=wp.gripper,
            translation=frame.rotation @ wp.translation + frame.origin,
            rotation=quat.normalize(quat.multiply(q_frame, wp.rotation)),
        )
        for wp in traj.waypoints
    ]
    return traj.with_waypoints(out)
