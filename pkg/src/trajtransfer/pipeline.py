"""Training orchestration: from tasks to trained ranking models.

Featurization is cached aggressively: occupancy grids depend only on the
part, trajectory vectors only on the trajectory, and bag-of-words vectors
on the fold's vocabulary, so repeated fold training stays cheap. All
randomness is seeded; training the same data twice yields bit-identical
models.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dtw import DtwParams, PairwiseDistanceCache
from .evaluation import FoldSplit, RankingFunction
from .features import (
    FeatureConfig,
    FeatureVector,
    Featurizer,
    build_vocabulary,
    embed_trajectory,
    voxelize,
)
from .labels import LabeledExample, NoiseThresholds, TaskInstance, generate_examples
from .net import MultimodalNet, NetConfig, finetune, pretrain
from .partframe import PartFrame
from .trajectory import Trajectory

__all__ = ["FeatureCache", "TrainedModel", "trusted_examples", "train_model", "make_model_ranker"]

log = logging.getLogger(__name__)


class FeatureCache:
    """Memoized per-part and per-trajectory feature vectors.

    Both depend only on the feature configuration, not on any fold's
    vocabulary, so one cache can serve every fold of an evaluation."""

    def __init__(self, config: FeatureConfig):
        self.config = config
        self._pc: dict[str, np.ndarray] = {}
        self._traj: dict[str, np.ndarray] = {}
        self._identity = PartFrame.identity()

    def part_features(self, task: TaskInstance) -> np.ndarray:
        found = self._pc.get(task.task_id)
        if found is None:
            fine = voxelize(task.part, task.frame, self.config.fine_cell)
            coarse = voxelize(task.part, task.frame, self.config.coarse_cell)
            found = np.concatenate([fine.flatten(), coarse.flatten()])
            self._pc[task.task_id] = found
        return found

    def trajectory_features(self, traj: Trajectory) -> np.ndarray:
        found = self._traj.get(traj.id)
        if found is None:
            found = embed_trajectory(
                traj, self._identity, self.config.target_len, self.config.samples_per_segment
            )
            self._traj[traj.id] = found
        return found


@dataclass
class TrainedModel:
    net: MultimodalNet
    featurizer: Featurizer


def trusted_examples(
    tasks: Sequence[TaskInstance],
    pool: Sequence[Trajectory],
    *,
    negative_ratio: float = 4.0,
    seed: int = 0,
) -> list[LabeledExample]:
    """Labels without noise handling: every crowd demo of a task is taken
    at face value as a positive; negatives are sampled uniformly from the
    rest of the pool."""
    rng = np.random.default_rng(seed)
    out: list[LabeledExample] = []
    for task in tasks:
        own = {d.id for d in task.demos}
        positives = [LabeledExample(task.task_id, d.id, 1, 0.0) for d in task.demos]
        others = [t for t in pool if t.id not in own]
        limit = min(int(np.floor(negative_ratio * len(positives))), len(others))
        picked = rng.choice(len(others), size=limit, replace=False) if limit else []
        out.extend(positives)
        out.extend(LabeledExample(task.task_id, others[i].id, 0, 0.0) for i in sorted(picked))
    return out


def _assemble(
    examples: Sequence[LabeledExample],
    tasks_by_id: dict[str, TaskInstance],
    pool_by_id: dict[str, Trajectory],
    featurizer: Featurizer,
    cache: FeatureCache,
) -> list[tuple[FeatureVector, int]]:
    lang: dict[str, np.ndarray] = {}
    out = []
    for ex in examples:
        task = tasks_by_id[ex.task_ref]
        if task.task_id not in lang:
            lang[task.task_id] = featurizer.language_features(task.instruction)
        fv = FeatureVector(
            pc=cache.part_features(task),
            lang=lang[task.task_id],
            traj=cache.trajectory_features(pool_by_id[ex.traj_ref]),
        )
        out.append((fv, ex.label))
    return out


def train_model(
    train_tasks: Sequence[TaskInstance],
    net_config: NetConfig,
    dtw_params: DtwParams | None = None,
    thresholds: NoiseThresholds | None = None,
    feature_config: FeatureConfig | None = None,
    *,
    noise_handling: bool = True,
    negative_ratio: float = 4.0,
    labels_seed: int = 0,
    distance_cache: PairwiseDistanceCache | None = None,
    feature_cache: FeatureCache | None = None,
) -> TrainedModel:
    """Label, featurize, pretrain, and fine-tune on the given tasks."""
    if thresholds is None:
        thresholds = NoiseThresholds()
    if feature_config is None:
        feature_config = FeatureConfig()
    if distance_cache is None:
        distance_cache = PairwiseDistanceCache(dtw_params)
    if feature_cache is None:
        feature_cache = FeatureCache(feature_config)

    vocab = build_vocabulary([t.instruction for t in train_tasks])
    featurizer = Featurizer(vocab, feature_config)

    pool = [demo for task in train_tasks for demo in task.demos]
    pool_by_id = {t.id: t for t in pool}
    tasks_by_id = {t.task_id: t for t in train_tasks}

    if noise_handling:
        examples = generate_examples(
            train_tasks,
            pool,
            thresholds,
            negative_ratio=negative_ratio,
            seed=labels_seed,
            cache=distance_cache,
        )
    else:
        examples = trusted_examples(
            train_tasks, pool, negative_ratio=negative_ratio, seed=labels_seed
        )
    labeled = _assemble(examples, tasks_by_id, pool_by_id, featurizer, feature_cache)
    log.info(
        "training on %d examples (%d positive)",
        len(labeled),
        sum(lbl for _, lbl in labeled),
    )

    net = pretrain([fv for fv, _ in labeled], net_config)
    net = finetune(net, labeled, net_config)
    return TrainedModel(net=net, featurizer=featurizer)


def make_model_ranker(
    tasks: Sequence[TaskInstance],
    split: FoldSplit,
    net_config: NetConfig,
    dtw_params: DtwParams | None = None,
    thresholds: NoiseThresholds | None = None,
    feature_config: FeatureConfig | None = None,
    *,
    noise_handling: bool = True,
    negative_ratio: float = 4.0,
    labels_seed: int = 0,
    distance_cache: PairwiseDistanceCache | None = None,
    feature_cache: FeatureCache | None = None,
) -> RankingFunction:
    """Train one model per fold and dispatch each task to its fold's model."""
    if feature_config is None:
        feature_config = FeatureConfig()
    if feature_cache is None:
        feature_cache = FeatureCache(feature_config)
    models: dict[int, TrainedModel] = {}
    for fold in range(split.n_folds):
        train = split.train_tasks(tasks, fold)
        log.info("training fold %d on %d tasks", fold, len(train))
        models[fold] = train_model(
            train,
            net_config,
            dtw_params,
            thresholds,
            feature_config,
            noise_handling=noise_handling,
            negative_ratio=negative_ratio,
            labels_seed=labels_seed,
            distance_cache=distance_cache,
            feature_cache=feature_cache,
        )

    def rank(task: TaskInstance, candidates: Sequence[Trajectory]) -> Trajectory:
        model = models[split.fold_of(task)]
        inputs = {
            "pc": np.tile(feature_cache.part_features(task), (len(candidates), 1)),
            "lang": np.tile(
                model.featurizer.language_features(task.instruction), (len(candidates), 1)
            ),
            "traj": np.array([feature_cache.trajectory_features(c) for c in candidates]),
        }
        probs = model.net.probabilities(inputs)
        best = min(range(len(candidates)), key=lambda i: (-probs[i], candidates[i].id))
        return candidates[best]

    return rank
