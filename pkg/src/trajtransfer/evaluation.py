"""Cross-validation harness, metrics, and baselines.

Folds are assigned at manual granularity so instructions of one manual
never straddle folds. For every held-out task the model under test picks
one trajectory from the training folds' demonstration pool; the pick is
scored with the trajectory distance against the task's expert
demonstration. Reported are the mean distance per instruction, the mean
per manual (instructions averaged within a manual first), and the
percentage of instructions below a distance threshold.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dtw import DtwParams, PairwiseDistanceCache
from .errors import TooFewManualsError
from .features import FeatureConfig, Featurizer, build_vocabulary, voxelize
from .labels import TaskInstance, select_best_demo
from .trajectory import Trajectory

__all__ = [
    "FoldSplit",
    "ModelResult",
    "EvalReport",
    "RankingFunction",
    "make_folds",
    "evaluate",
    "baseline_chance",
    "baseline_task_similarity",
]

log = logging.getLogger(__name__)

RankingFunction = Callable[[TaskInstance, Sequence[Trajectory]], Trajectory]


@dataclass(frozen=True)
class FoldSplit:
    """Task-to-fold assignment; all tasks of a manual share a fold."""

    assignments: dict[str, int]
    n_folds: int = 5

    def fold_of(self, task: TaskInstance) -> int:
        return self.assignments[task.task_id]

    def train_tasks(self, tasks: Sequence[TaskInstance], fold: int) -> list[TaskInstance]:
        return [t for t in tasks if self.assignments[t.task_id] != fold]

    def test_tasks(self, tasks: Sequence[TaskInstance], fold: int) -> list[TaskInstance]:
        return [t for t in tasks if self.assignments[t.task_id] == fold]


def make_folds(tasks: Sequence[TaskInstance], seed: int, n_folds: int = 5) -> FoldSplit:
    """Random manual-level partition, deterministic for a given seed."""
    manuals = sorted({t.manual_id for t in tasks})
    if len(manuals) < n_folds:
        raise TooFewManualsError(f"need at least {n_folds} manuals, got {len(manuals)}")
    rng = np.random.default_rng(seed)
    order = [manuals[i] for i in rng.permutation(len(manuals))]
    fold_of_manual = {manual: i % n_folds for i, manual in enumerate(order)}
    return FoldSplit(
        assignments={t.task_id: fold_of_manual[t.manual_id] for t in tasks}, n_folds=n_folds
    )


@dataclass
class ModelResult:
    """One table row: distance statistics and accuracy for a model."""

    model: str
    per_manual_mean: float
    per_manual_std: float
    per_instruction_mean: float
    per_instruction_std: float
    accuracy: float
    n_instructions: int
    n_manuals: int
    n_skipped: int
    scores: dict[str, float] = field(default_factory=dict)

    def row_dict(self) -> dict:
        return {
            "model": self.model,
            "per_manual_mean": self.per_manual_mean,
            "per_manual_std": self.per_manual_std,
            "per_instruction_mean": self.per_instruction_mean,
            "per_instruction_std": self.per_instruction_std,
            "accuracy": self.accuracy,
            "n_instructions": self.n_instructions,
            "n_manuals": self.n_manuals,
            "n_skipped": self.n_skipped,
        }


@dataclass
class EvalReport:
    rows: list[ModelResult]
    threshold: float
    n_folds: int
    seed: int

    def to_dict(self, include_scores: bool = False) -> dict:
        rows = []
        for row in self.rows:
            data = row.row_dict()
            if include_scores:
                data["scores"] = dict(sorted(row.scores.items()))
            rows.append(data)
        return {
            "threshold": self.threshold,
            "n_folds": self.n_folds,
            "seed": self.seed,
            "rows": rows,
        }

    def to_csv(self) -> str:
        header = (
            "model,per_manual_mean,per_manual_std,per_instruction_mean,"
            "per_instruction_std,accuracy,n_instructions,n_manuals,n_skipped"
        )
        lines = [header]
        for r in self.rows:
            lines.append(
                f"{r.model},{r.per_manual_mean:.6f},{r.per_manual_std:.6f},"
                f"{r.per_instruction_mean:.6f},{r.per_instruction_std:.6f},"
                f"{r.accuracy:.4f},{r.n_instructions},{r.n_manuals},{r.n_skipped}"
            )
        return "\n".join(lines) + "\n"

    def render_text(self) -> str:
        width = max([len(r.model) for r in self.rows] + [len("model")])
        lines = [
            f"{'model':<{width}}  {'manual DTW':>16}  {'instruction DTW':>16}  {'accuracy %':>10}",
        ]
        for r in self.rows:
            manual = f"{r.per_manual_mean:.2f} ({r.per_manual_std:.2f})"
            instr = f"{r.per_instruction_mean:.2f} ({r.per_instruction_std:.2f})"
            lines.append(f"{r.model:<{width}}  {manual:>16}  {instr:>16}  {r.accuracy:>10.1f}")
        return "\n".join(lines) + "\n"


def evaluate(
    model: RankingFunction,
    tasks: Sequence[TaskInstance],
    split: FoldSplit,
    params: DtwParams | None = None,
    threshold: float = 10.0,
    model_name: str = "model",
    cache: PairwiseDistanceCache | None = None,
) -> ModelResult:
    """Score a ranking function across all folds.

    For every test task the candidate pool is every demonstration of the
    training folds; the model's top pick is scored against the task's
    expert demonstration. Tasks without an expert demo are skipped with a
    warning and counted.
    """
    if cache is None:
        cache = PairwiseDistanceCache(params)
    scores: dict[str, float] = {}
    manual_of: dict[str, str] = {}
    skipped = 0
    for fold in range(split.n_folds):
        train = split.train_tasks(tasks, fold)
        pool = [demo for task in train for demo in task.demos]
        for task in split.test_tasks(tasks, fold):
            if task.expert_demo is None:
                log.warning("task %s has no expert demo; skipping", task.task_id)
                skipped += 1
                continue
            picked = model(task, pool)
            scores[task.task_id] = cache.distance(picked, task.expert_demo)
            manual_of[task.task_id] = task.manual_id

    values = np.array(list(scores.values())) if scores else np.array([0.0])
    manual_means: dict[str, list[float]] = {}
    for task_id, score in scores.items():
        manual_means.setdefault(manual_of[task_id], []).append(score)
    per_manual = (
        np.array([np.mean(v) for v in manual_means.values()]) if manual_means else np.array([0.0])
    )
    accuracy = 100.0 * float(np.mean(values < threshold)) if scores else 0.0
    return ModelResult(
        model=model_name,
        per_manual_mean=float(np.mean(per_manual)),
        per_manual_std=float(np.std(per_manual)),
        per_instruction_mean=float(np.mean(values)),
        per_instruction_std=float(np.std(values)),
        accuracy=accuracy,
        n_instructions=len(scores),
        n_manuals=len(manual_means),
        n_skipped=skipped,
        scores=scores,
    )


def baseline_chance(
    tasks: Sequence[TaskInstance], split: FoldSplit, seed: int
) -> RankingFunction:
    """Uniform random pick from the candidate pool, seeded."""
    rng = np.random.default_rng(seed)

    def rank(task: TaskInstance, candidates: Sequence[Trajectory]) -> Trajectory:
        return candidates[int(rng.integers(len(candidates)))]

    return rank


def _grid_jaccard(a: np.ndarray, b: np.ndarray) -> float:
    union = float(np.sum((a + b) > 0))
    if union == 0.0:
        return 0.0
    return float(np.sum((a * b) > 0)) / union


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b)) / (na * nb)


def baseline_task_similarity(
    tasks: Sequence[TaskInstance],
    split: FoldSplit,
    weighting: str = "weighted",
    params: DtwParams | None = None,
    feature_config: FeatureConfig | None = None,
    seed: int = 0,
    w_pc: float = 0.5,
    w_lang: float = 0.5,
    cache: PairwiseDistanceCache | None = None,
) -> RankingFunction:
    """Transfer from the most similar training task.

    Similarity combines occupancy-grid overlap (Jaccard on the fine grid)
    with bag-of-words cosine over a vocabulary built from the training
    folds. ``weighting="random"`` then takes any demo of the chosen task;
    ``"weighted"`` takes its lowest-average-distance demo.
    """
    if weighting not in ("random", "weighted"):
        raise ValueError(f"weighting must be 'random' or 'weighted', got {weighting!r}")
    if feature_config is None:
        feature_config = FeatureConfig()
    if cache is None:
        cache = PairwiseDistanceCache(params)
    rng = np.random.default_rng(seed)

    grids = {
        t.task_id: voxelize(t.part, t.frame, feature_config.fine_cell).flatten() for t in tasks
    }
    by_fold: dict[int, tuple[Featurizer, dict[str, np.ndarray]]] = {}
    for fold in range(split.n_folds):
        train = split.train_tasks(tasks, fold)
        vocab = build_vocabulary([t.instruction for t in train])
        featurizer = Featurizer(vocab, feature_config)
        bows = {t.task_id: featurizer.language_features(t.instruction) for t in tasks}
        by_fold[fold] = (featurizer, bows)
    tasks_by_id = {t.task_id: t for t in tasks}
    best_demo: dict[str, Trajectory] = {}

    def rank(task: TaskInstance, candidates: Sequence[Trajectory]) -> Trajectory:
        fold = split.fold_of(task)
        _, bows = by_fold[fold]
        train = split.train_tasks(tasks, fold)
        best_task = max(
            train,
            key=lambda t: (
                w_pc * _grid_jaccard(grids[task.task_id], grids[t.task_id])
                + w_lang * _cosine(bows[task.task_id], bows[t.task_id]),
                t.task_id,
            ),
        )
        source = tasks_by_id[best_task.task_id]
        if weighting == "random":
            return source.demos[int(rng.integers(len(source.demos)))]
        if source.task_id not in best_demo:
            best_demo[source.task_id] = select_best_demo(source, cache=cache)
        return best_demo[source.task_id]

    return rank
