"""Unit-quaternion helpers.

Quaternions are numpy arrays ``(x, y, z, w)`` with the scalar part last.
All functions expect unit quaternions and return unit quaternions; inputs
whose norm deviates from 1 by more than ``UNIT_TOLERANCE`` are rejected.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidQuaternionError

UNIT_TOLERANCE = 1e-6

IDENTITY = np.array([0.0, 0.0, 0.0, 1.0])


def check_unit(q, context: str = "quaternion") -> np.ndarray:
    """Validate that ``q`` is a unit quaternion and return it re-normalized."""
    q = np.asarray(q, dtype=float)
    if q.shape != (4,):
        raise InvalidQuaternionError(f"{context}: expected 4 components, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise InvalidQuaternionError(f"{context}: non-finite components {q.tolist()}")
    norm = float(np.linalg.norm(q))
    if abs(norm - 1.0) > UNIT_TOLERANCE:
        raise InvalidQuaternionError(f"{context}: norm {norm:.9f} deviates from 1 by more than {UNIT_TOLERANCE}")
    return q / norm


def normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q)


def conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.array([-q[0], -q[1], -q[2], q[3]])


def multiply(q1, q2) -> np.ndarray:
    """Hamilton product ``q1 * q2``."""
    x1, y1, z1, w1 = q1
    x2, y2, z2, w2 = q2
    return np.array(
        [
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        ]
    )


def angle_between(q1, q2) -> float:
    """Geodesic angle in radians between two rotations, in [0, pi].

    Uses the absolute dot product so that q and -q describe the same
    rotation.
    """
    d = abs(float(np.dot(q1, q2)))
    return 2.0 * float(np.arccos(min(d, 1.0)))


def from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    s = np.sin(half)
    return np.array([axis[0] * s, axis[1] * s, axis[2] * s, np.cos(half)])


def to_matrix(q) -> np.ndarray:
    """Rotation matrix for a unit quaternion."""
    x, y, z, w = q
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return np.array(
        [
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ]
    )


def from_matrix(rot) -> np.ndarray:
    """Unit quaternion for a rotation matrix (Shepperd's method)."""
    m = np.asarray(rot, dtype=float)
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    if trace > 0.0:
        s = np.sqrt(trace + 1.0) * 2.0
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        w = (m[2, 1] - m[1, 2]) / s
        x = 0.25 * s
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        y = 0.25 * s
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
        z = 0.25 * s
    return normalize(np.array([x, y, z, w]))


def slerp(q0, q1, t: float) -> np.ndarray:
    """Spherical linear interpolation between two unit quaternions.

    Follows the shorter great-circle arc (q1 is negated when the dot
    product is negative) at constant angular velocity. Falls back to
    normalized linear interpolation when the rotations are nearly
    identical.

    Raises:
        InvalidQuaternionError: if either input is not unit-norm within
            ``UNIT_TOLERANCE``.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"interpolation parameter must be in [0, 1], got {t}")
    q0 = check_unit(q0, "slerp q0")
    q1 = check_unit(q1, "slerp q1")
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    if dot > 1.0 - 1e-7:
        # Nearly parallel: lerp is numerically safer than dividing by sin.
        return normalize((1.0 - t) * q0 + t * q1)
    theta = np.arccos(min(dot, 1.0))
    sin_theta = np.sin(theta)
    out = (np.sin((1.0 - t) * theta) * q0 + np.sin(t * theta) * q1) / sin_theta
    return normalize(out)
