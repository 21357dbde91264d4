"""Fixed-length feature vectors for point-clouds, language, and trajectories.

Point-clouds become two 10x10x10 binary occupancy grids (1 cm and 2.5 cm
cells) centered on the part centroid in the part frame. Instructions
become bag-of-words counts over a frozen, stop-word-free vocabulary.
Trajectories are re-expressed in the part frame, smoothed, resampled to a
fixed length, and flattened to 8 scalars per waypoint.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyVocabularyError
from .partframe import PartFrame, PointCloudPart, points_to_frame, to_part_frame
from .trajectory import Trajectory, interpolate, normalize_length

__all__ = [
    "GRID_SIZE",
    "OccupancyGrid",
    "Vocabulary",
    "BagOfWords",
    "FeatureVector",
    "FeatureConfig",
    "Featurizer",
    "voxelize",
    "tokenize",
    "default_stop_words",
    "build_vocabulary",
    "embed_language",
    "embed_trajectory",
]

GRID_SIZE = 10
FINE_CELL = 0.01
COARSE_CELL = 0.025

_TOKEN_SPLIT = re.compile(r"[^a-z0-9]+")


@dataclass(frozen=True)
class OccupancyGrid:
    """10x10x10 binary occupancy, centered at the part-frame origin."""

    cells: np.ndarray
    cell_size: float
    origin: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells)
        if cells.shape != (GRID_SIZE, GRID_SIZE, GRID_SIZE):
            raise ValueError(f"cells must be {GRID_SIZE}^3, got {cells.shape}")
        cells = (cells != 0).astype(np.uint8)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        if self.cell_size <= 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        origin = np.array(self.origin, dtype=float)
        origin.setflags(write=False)
        object.__setattr__(self, "origin", origin)

    def flatten(self) -> np.ndarray:
        return self.cells.reshape(-1).astype(np.float64)

    def occupied_count(self) -> int:
        return int(self.cells.sum())


def voxelize(part: PointCloudPart, frame: PartFrame, cell_size: float) -> OccupancyGrid:
    """Mark each grid cell that contains at least one part point.

    Points are transformed to the part frame; cell index i covers
    [(i - 5) * s, (i - 4) * s) per axis, so a point exactly at the part
    centroid lands in cell (5, 5, 5). Points outside the 10-cell extent
    are ignored.
    """
    local = points_to_frame(part.positions, frame)
    idx = np.floor(local / cell_size).astype(int) + GRID_SIZE // 2
    inside = np.all((idx >= 0) & (idx < GRID_SIZE), axis=1)
    cells = np.zeros((GRID_SIZE, GRID_SIZE, GRID_SIZE), dtype=np.uint8)
    picked = idx[inside]
    if picked.size:
        cells[picked[:, 0], picked[:, 1], picked[:, 2]] = 1
    return OccupancyGrid(cells=cells, cell_size=cell_size, origin=np.zeros(3))


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters."""
    return [tok for tok in _TOKEN_SPLIT.split(text.lower()) if tok]


def default_stop_words() -> frozenset[str]:
    data = resources.files("trajtransfer").joinpath("data/stopwords.txt").read_text()
    return frozenset(line.strip() for line in data.splitlines() if line.strip())


@dataclass(frozen=True)
class Vocabulary:
    """Frozen sorted token list; the id is a hash of the contents."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "_index", {tok: i for i, tok in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    def index(self, token: str) -> int | None:
        return self._index.get(token)

    @property
    def vocab_id(self) -> str:
        digest = hashlib.sha256("\n".join(self.tokens).encode()).hexdigest()
        return digest[:16]

    def save(self, path) -> None:
        Path(path).write_text("".join(tok + "\n" for tok in self.tokens))

    @staticmethod
    def load(path) -> "Vocabulary":
        lines = [line.strip() for line in Path(path).read_text().splitlines()]
        return Vocabulary(tuple(tok for tok in lines if tok))


@dataclass(frozen=True)
class BagOfWords:
    counts: np.ndarray
    vocab_id: str

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.float64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)


def build_vocabulary(corpus: Iterable[str], stop_words: frozenset[str] | None = None) -> Vocabulary:
    """Sorted unique tokens of the corpus minus stop words.

    Raises EmptyVocabularyError when no usable token remains (empty corpus
    or everything filtered out).
    """
    if stop_words is None:
        stop_words = default_stop_words()
    seen: set[str] = set()
    for text in corpus:
        seen.update(tokenize(text))
    seen -= stop_words
    if not seen:
        raise EmptyVocabularyError("corpus yields no tokens outside the stop-word list")
    return Vocabulary(tuple(sorted(seen)))


def embed_language(instruction: str, vocab: Vocabulary) -> BagOfWords:
    """Token counts over the frozen vocabulary; unknown tokens are dropped."""
    counts = np.zeros(len(vocab), dtype=np.float64)
    for tok in tokenize(instruction):
        idx = vocab.index(tok)
        if idx is not None:
            counts[idx] += 1.0
    return BagOfWords(counts=counts, vocab_id=vocab.vocab_id)


def embed_trajectory(
    traj: Trajectory,
    frame: PartFrame,
    target_len: int,
    samples_per_segment: int = 3,
) -> np.ndarray:
    """Fixed-length trajectory vector: target_len x 8 scalars.

    The trajectory is moved to the part frame, smoothed with interpolated
    intermediates (skipped for single-waypoint trajectories, which have no
    segments), resampled to ``target_len`` waypoints preserving the
    gripper-run sequence, and flattened to
    (gripper ordinal, tx, ty, tz, rx, ry, rz, rw) per waypoint.
    """
    local = to_part_frame(traj, frame)
    if len(local) >= 2:
        local = interpolate(local, samples_per_segment)
    local = normalize_length(local, target_len)
    rows = np.column_stack(
        [local.gripper_ordinals()[:, None], local.translations(), local.rotations()]
    )
    return rows.reshape(-1)


@dataclass(frozen=True)
class FeatureVector:
    """The three fixed-length modality blocks fed to the network."""

    pc: np.ndarray
    lang: np.ndarray
    traj: np.ndarray

    def __post_init__(self):
        for name in ("pc", "lang", "traj"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1:
                raise ValueError(f"{name} block must be a flat vector")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} block has non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dims(self) -> tuple[int, int, int]:
        return (self.pc.shape[0], self.lang.shape[0], self.traj.shape[0])

    def concatenated(self) -> np.ndarray:
        return np.concatenate([self.pc, self.lang, self.traj])


@dataclass(frozen=True)
class FeatureConfig:
    target_len: int = 15
    samples_per_segment: int = 3
    fine_cell: float = FINE_CELL
    coarse_cell: float = COARSE_CELL

    def __post_init__(self):
        if self.target_len < 1:
            raise ValueError("target_len must be >= 1")
        if self.samples_per_segment < 1:
            raise ValueError("samples_per_segment must be >= 1")
        if not (0 < self.fine_cell and 0 < self.coarse_cell):
            raise ValueError("cell sizes must be positive")


class Featurizer:
    """Builds feature vectors for one frozen vocabulary and configuration.

    All methods are pure; the vocabulary never grows after construction.
    """

    def __init__(self, vocab: Vocabulary, config: FeatureConfig | None = None):
        self.vocab = vocab
        self.config = config if config is not None else FeatureConfig()

    @property
    def input_dims(self) -> tuple[int, int, int]:
        pc = 2 * GRID_SIZE**3
        return (pc, len(self.vocab), self.config.target_len * 8)

    def part_features(self, part: PointCloudPart, frame: PartFrame) -> np.ndarray:
        fine = voxelize(part, frame, self.config.fine_cell)
        coarse = voxelize(part, frame, self.config.coarse_cell)
        return np.concatenate([fine.flatten(), coarse.flatten()])

    def language_features(self, instruction: str) -> np.ndarray:
        return embed_language(instruction, self.vocab).counts

    def trajectory_features(self, traj: Trajectory, frame: PartFrame | None = None) -> np.ndarray:
        """Vector for ``traj``; pass ``frame=None`` when it is already in
        part-frame coordinates."""
        if frame is None:
            frame = PartFrame.identity()
        return embed_trajectory(
            traj, frame, self.config.target_len, self.config.samples_per_segment
        )

    def features(
        self,
        part: PointCloudPart,
        frame: PartFrame,
        instruction: str,
        traj: Trajectory,
        traj_frame: PartFrame | None = None,
    ) -> FeatureVector:
        """Full three-modality vector for one (part, instruction, trajectory).

        ``traj_frame`` re-expresses a world-frame trajectory; leave it None
        for trajectories already in the part frame.
        """
        return FeatureVector(
            pc=self.part_features(part, frame),
            lang=self.language_features(instruction),
            traj=self.trajectory_features(traj, traj_frame),
        )
