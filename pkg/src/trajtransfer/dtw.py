"""Dynamic-time-warping distance for manipulation trajectories.

Two trajectories of arbitrary lengths are warped onto each other under
weak ordering (matched indices never cross) and every waypoint
contributes to the cumulative cost. The per-pair cost combines scaled
translation and rotation differences, a multiplicative gripper-mismatch
penalty, and proximity weights that emphasize waypoints close to the
part. The final distance is the cumulative cost of the optimal warp
divided by the number of matched pairs on it.

Waypoints are expected in part-frame coordinates so that the proximity
weight ``exp(-gamma * ||t||)`` measures distance to the part.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyPoolError, InvalidQuaternionError, TrajectoryTooShortError
from .quat import UNIT_TOLERANCE
from .trajectory import Trajectory, Waypoint

__all__ = [
    "DtwParams",
    "DtwResult",
    "waypoint_cost",
    "cost_matrix",
    "dtw_mt",
    "average_distance",
    "PairwiseDistanceCache",
]


@dataclass(frozen=True)
class DtwParams:
    """Scales and weights of the waypoint cost.

    alpha_t: translation scale in meters.
    alpha_r: rotation scale in radians.
    beta: gripper-mismatch weight.
    gamma: proximity-weight decay in 1/meters.
    gripper_penalty_on_match: by default the gripper term penalizes
        waypoint pairs whose states differ; set True to penalize pairs
        whose states are equal instead.
    """

    alpha_t: float = 0.005
    alpha_r: float = 0.5
    beta: float = 1.0
    gamma: float = 1.0
    gripper_penalty_on_match: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.alpha_t) and self.alpha_t > 0.0):
            raise ValueError(f"alpha_t must be finite and > 0, got {self.alpha_t}")
        if not (np.isfinite(self.alpha_r) and self.alpha_r > 0.0):
            raise ValueError(f"alpha_r must be finite and > 0, got {self.alpha_r}")
        if not (np.isfinite(self.beta) and self.beta >= 0.0):
            raise ValueError(f"beta must be finite and >= 0, got {self.beta}")
        if not (np.isfinite(self.gamma) and self.gamma >= 0.0):
            raise ValueError(f"gamma must be finite and >= 0, got {self.gamma}")


@dataclass(frozen=True)
class DtwResult:
    """Distance plus the warp path that produced it.

    ``path`` holds 0-based (i, j) index pairs from (0, 0) to
    (m_a - 1, m_b - 1); consecutive pairs increment i, j, or both.
    ``distance`` is ``cumulative`` (the summed cost along the optimal
    path) divided by ``path_len``.
    """

    distance: float
    path: tuple[tuple[int, int], ...]
    path_len: int
    cumulative: float


def _check_rotations(rotations: np.ndarray, label: str):
    norms = np.linalg.norm(rotations, axis=1)
    bad = np.abs(norms - 1.0) > UNIT_TOLERANCE
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise InvalidQuaternionError(
            f"{label} waypoint {idx}: rotation norm {norms[idx]:.9f} is not unit"
        )


def cost_matrix(a: Trajectory, b: Trajectory, params: DtwParams) -> np.ndarray:
    """All pairwise waypoint costs, shape (m_a, m_b).

    The rotation term is the geodesic angle between the two rotations
    (equivalently 2*arccos(|<q_a, q_b>|)), computed through atan2 of the
    chord norms, which is exact for identical quaternions and stable for
    nearly parallel ones where arccos loses precision.
    """
    ta, tb = a.translations(), b.translations()
    ra, rb = a.rotations(), b.rotations()
    _check_rotations(ra, "first trajectory")
    _check_rotations(rb, "second trajectory")

    diff = ta[:, None, :] - tb[None, :, :]
    d_t = np.sqrt(np.sum(diff * diff, axis=2))

    # Double-cover safe: flip the second quaternion where the dot is
    # negative. Only the sign comes from the matmul, so the chord norms
    # below are bitwise reproducible regardless of the matrix shape.
    sign = np.where(ra @ rb.T < 0.0, -1.0, 1.0)
    rb_signed = sign[:, :, None] * rb[None, :, :]
    q_diff = ra[:, None, :] - rb_signed
    q_sum = ra[:, None, :] + rb_signed
    d_r = 4.0 * np.arctan2(
        np.sqrt(np.sum(q_diff * q_diff, axis=2)),
        np.sqrt(np.sum(q_sum * q_sum, axis=2)),
    )

    ga = a.gripper_ordinals()[:, None]
    gb = b.gripper_ordinals()[None, :]
    same = ga == gb
    d_g = same.astype(float) if params.gripper_penalty_on_match else (~same).astype(float)

    w_a = np.exp(-params.gamma * np.linalg.norm(ta, axis=1))[:, None]
    w_b = np.exp(-params.gamma * np.linalg.norm(tb, axis=1))[None, :]
    return w_a * w_b * (d_t / params.alpha_t + d_r / params.alpha_r) * (1.0 + params.beta * d_g)


def waypoint_cost(a: Waypoint, b: Waypoint, params: DtwParams) -> float:
    """Cost of matching two waypoints; zero for identical waypoints."""
    one = Trajectory((a,), id="_a")
    other = Trajectory((b,), id="_b")
    return float(cost_matrix(one, other, params)[0, 0])


def dtw_mt(a: Trajectory, b: Trajectory, params: DtwParams | None = None) -> DtwResult:
    """Warp ``a`` onto ``b`` and return the normalized distance.

    The cumulative-cost table is filled by dynamic programming with the
    first row and column forced to cumulative sums (the endpoints are
    always matched), then the optimal path is recovered by backtracking,
    preferring diagonal moves on ties. The distance is the cumulative
    cost at the far corner divided by the path length.
    """
    if params is None:
        params = DtwParams()
    if len(a.waypoints) < 1 or len(b.waypoints) < 1:
        raise TrajectoryTooShortError("dtw needs at least one waypoint per trajectory")
    cost = cost_matrix(a, b, params)
    m_a, m_b = cost.shape

    table = np.empty_like(cost)
    table[0, 0] = cost[0, 0]
    for i in range(1, m_a):
        table[i, 0] = cost[i, 0] + table[i - 1, 0]
    for j in range(1, m_b):
        table[0, j] = cost[0, j] + table[0, j - 1]
    for i in range(1, m_a):
        for j in range(1, m_b):
            table[i, j] = cost[i, j] + min(table[i - 1, j - 1], table[i - 1, j], table[i, j - 1])

    path = _backtrack(table)
    assert path[0] == (0, 0) and path[-1] == (m_a - 1, m_b - 1)
    assert all(
        (b[0] - a[0], b[1] - a[1]) in ((1, 0), (0, 1), (1, 1))
        for a, b in zip(path, path[1:])
    ), "backtracked path violates weak ordering"
    cumulative = float(table[m_a - 1, m_b - 1])
    return DtwResult(
        distance=cumulative / len(path),
        path=tuple(path),
        path_len=len(path),
        cumulative=cumulative,
    )


def _backtrack(table: np.ndarray) -> list[tuple[int, int]]:
    i, j = table.shape[0] - 1, table.shape[1] - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            best = min(table[i - 1, j - 1], table[i - 1, j], table[i, j - 1])
            # Preference on ties: diagonal, then advancing the first index.
            if table[i - 1, j - 1] == best:
                i, j = i - 1, j - 1
            elif table[i - 1, j] == best:
                i -= 1
            else:
                j -= 1
        path.append((i, j))
    path.reverse()
    return path


def average_distance(
    traj: Trajectory, pool: Sequence[Trajectory], params: DtwParams | None = None
) -> float:
    """Mean DTW distance from ``traj`` to every trajectory in ``pool``."""
    if len(pool) == 0:
        raise EmptyPoolError("average_distance needs a non-empty pool")
    return float(np.mean([dtw_mt(traj, other, params).distance for other in pool]))


class PairwiseDistanceCache:
    """Memoized DTW distances keyed by trajectory id.

    Ids must be unique across the pool being compared. The cache is keyed
    symmetrically, so (a, b) and (b, a) share one entry. Reads and writes
    are cheap dictionary operations; concurrent readers are safe once the
    cache is warm.
    """

    def __init__(self, params: DtwParams | None = None):
        self.params = params if params is not None else DtwParams()
        self._distances: dict[tuple[str, str], float] = {}

    def distance(self, a: Trajectory, b: Trajectory) -> float:
        key = (a.id, b.id) if a.id <= b.id else (b.id, a.id)
        found = self._distances.get(key)
        if found is None:
            found = dtw_mt(a, b, self.params).distance
            self._distances[key] = found
        return found

    def average(self, traj: Trajectory, pool: Sequence[Trajectory]) -> float:
        if len(pool) == 0:
            raise EmptyPoolError("average needs a non-empty pool")
        return float(np.mean([self.distance(traj, other) for other in pool]))

    def __len__(self) -> int:
        return len(self._distances)
