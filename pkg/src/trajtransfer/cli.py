"""Command-line interface.

Subcommands cover the whole workflow: synthesize or import a dataset,
inspect distances, featurize, train, rank candidates, run the
cross-validated evaluation table, and serve the demonstration editor
API. Every command that uses randomness takes explicit seeds through the
config file or flags, and exits non-zero on validation failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .config import RunConfig
from .dataset import dataset_hash, export_dataset, import_dataset
from .dtw import DtwParams, PairwiseDistanceCache, dtw_mt
from .errors import EngineError
from .evaluation import baseline_chance, baseline_task_similarity, evaluate, make_folds
from .features import Featurizer, Vocabulary, build_vocabulary
from .labels import generate_examples, write_examples
from .net import load_model, save_model
from .pipeline import FeatureCache, make_model_ranker, train_model
from .synth import generate_synthetic
from .trajectory import trajectory_from_dict

MODEL_ROWS = ("chance", "similarity+random", "similarity+weighted", "full", "no-noise-handling", "single-trunk")


def _load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    return RunConfig.load(path)


def _fail(exc: Exception) -> None:
    raise click.ClickException(str(exc))


@click.group()
def main():
    """Manipulation trajectory transfer tools."""


@main.command()
@click.argument("traj_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("traj_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha-t", type=float, default=None, help="Translation scale in meters.")
@click.option("--alpha-r", type=float, default=None, help="Rotation scale in radians.")
@click.option("--beta", type=float, default=None, help="Gripper-mismatch weight.")
@click.option("--gamma", type=float, default=None, help="Proximity-weight decay, 1/m.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--json", "as_json", is_flag=True, help="Emit distance, path, and path length as JSON.")
def distance(traj_a, traj_b, alpha_t, alpha_r, beta, gamma, config_path, as_json):
    """Distance between two trajectory JSON files (part-frame coordinates)."""
    try:
        cfg = _load_config(config_path).override(
            "dtw", alpha_t=alpha_t, alpha_r=alpha_r, beta=beta, gamma=gamma
        )
        a = trajectory_from_dict(json.loads(Path(traj_a).read_text()), where=traj_a)
        b = trajectory_from_dict(json.loads(Path(traj_b).read_text()), where=traj_b)
        result = dtw_mt(a, b, cfg.dtw)
    except (EngineError, json.JSONDecodeError) as exc:
        _fail(exc)
    if as_json:
        click.echo(
            json.dumps(
                {
                    "distance": result.distance,
                    "path": [list(p) for p in result.path],
                    "path_len": result.path_len,
                }
            )
        )
    else:
        click.echo(repr(result.distance))


@main.command()
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=None)
@click.option("--n-tasks", type=int, default=None)
@click.option("--demos-per-task", type=int, default=None)
@click.option("--outlier-fraction", type=float, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def synth(out, seed, n_tasks, demos_per_task, outlier_fraction, config_path):
    """Generate a synthetic dataset directory."""
    try:
        cfg = _load_config(config_path).override(
            "synth",
            rng_seed=seed,
            n_tasks=n_tasks,
            demos_per_task=demos_per_task,
            outlier_fraction=outlier_fraction,
        )
        dataset = generate_synthetic(cfg.synth)
        export_dataset(dataset, out)
    except EngineError as exc:
        _fail(exc)
    click.echo(f"wrote {dataset.counts()['instructions']} tasks to {out}")
    click.echo(f"dataset hash: {dataset_hash(dataset)}")


@main.command(name="import")
@click.argument("src", type=click.Path(exists=True, file_okay=False))
def import_cmd(src):
    """Validate a dataset directory and print its counts."""
    try:
        dataset = import_dataset(src)
    except EngineError as exc:
        _fail(exc)
    for key, value in sorted(dataset.counts().items()):
        click.echo(f"{key}: {value}")
    click.echo(f"hash: {dataset_hash(dataset)}")


@main.command()
@click.argument("src", type=click.Path(exists=True, file_okay=False))
@click.argument("dst", type=click.Path(file_okay=False))
def export(src, dst):
    """Re-export a dataset in canonical form (part-frame demos)."""
    try:
        dataset = import_dataset(src)
        export_dataset(dataset, dst)
    except EngineError as exc:
        _fail(exc)
    click.echo(f"exported to {dst}")


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--vocab-out", type=click.Path(dir_okay=False), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def featurize(dataset_path, out, vocab_out, config_path):
    """Write feature arrays and the vocabulary for a dataset."""
    try:
        cfg = _load_config(config_path)
        data = import_dataset(dataset_path)
        vocab = build_vocabulary([t.instruction for t in data.tasks])
        data.vocab = vocab
        featurizer = Featurizer(vocab, cfg.features)
        cache = FeatureCache(cfg.features)
        task_ids = [t.task_id for t in data.tasks]
        demo_ids = [d.id for t in data.tasks for d in t.demos]
        pc = np.array([cache.part_features(t) for t in data.tasks])
        lang = np.array([featurizer.language_features(t.instruction) for t in data.tasks])
        traj = np.array(
            [cache.trajectory_features(d) for t in data.tasks for d in t.demos]
        )
        with open(out, "wb") as fh:
            np.savez(
                fh,
                task_ids=np.array(task_ids),
                demo_ids=np.array(demo_ids),
                pc=pc,
                lang=lang,
                traj=traj,
                vocab_id=np.array(vocab.vocab_id),
            )
        if vocab_out is None:
            vocab_out = f"{out}.vocab.txt"
        vocab.save(vocab_out)
    except EngineError as exc:
        _fail(exc)
    click.echo(f"features for {len(task_ids)} tasks / {len(demo_ids)} demos -> {out}")
    click.echo(f"vocabulary ({len(vocab)} tokens, id {vocab.vocab_id}) -> {vocab_out}")


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--no-noise-handling", is_flag=True, help="Trust every crowd demo as a positive.")
@click.option("--single-trunk", is_flag=True, help="Concatenate modalities instead of block wiring.")
@click.option("--examples-out", type=click.Path(dir_okay=False), default=None, help="Audit file of labeled examples.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def train(dataset_path, out, no_noise_handling, single_trunk, examples_out, config_path):
    """Train on all tasks of a dataset and write a model checkpoint."""
    try:
        cfg = _load_config(config_path)
        if single_trunk:
            cfg = cfg.override("net", multimodal=False)
        data = import_dataset(dataset_path)
        cache = PairwiseDistanceCache(cfg.dtw)
        if examples_out is not None:
            pool = data.crowd_pool()
            examples = generate_examples(
                data.tasks,
                pool,
                cfg.labels.thresholds(),
                negative_ratio=cfg.labels.negative_ratio,
                seed=cfg.labels.seed,
                cache=cache,
            )
            write_examples(examples, examples_out)
        trained = train_model(
            data.tasks,
            cfg.net,
            cfg.dtw,
            cfg.labels.thresholds(),
            cfg.features,
            noise_handling=not no_noise_handling,
            negative_ratio=cfg.labels.negative_ratio,
            labels_seed=cfg.labels.seed,
            distance_cache=cache,
        )
        save_model(out, trained.net, trained.featurizer)
        vocab_path = f"{out}.vocab.txt"
        trained.featurizer.vocab.save(vocab_path)
    except EngineError as exc:
        _fail(exc)
    click.echo(f"model -> {out}")
    click.echo(f"vocabulary -> {vocab_path}")


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--vocab", "vocab_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--task", "task_id", required=True)
@click.option("--top", type=int, default=5)
def infer(dataset_path, model_path, vocab_path, task_id, top):
    """Rank the dataset's demonstrations for one task."""
    from .net import infer as run_inference

    try:
        net, header = load_model(model_path)
        if vocab_path is None:
            vocab_path = f"{model_path}.vocab.txt"
        vocab = Vocabulary.load(vocab_path)
        if vocab.vocab_id != header["vocab_id"]:
            raise EngineError(
                f"vocabulary {vocab_path} (id {vocab.vocab_id}) does not match "
                f"checkpoint vocab id {header['vocab_id']}"
            )
        featurizer = Featurizer(vocab, header["feature_config"])
        data = import_dataset(dataset_path)
        task = data.task_by_id(task_id)
        candidates = data.crowd_pool()
        ranked = run_inference(net, featurizer, task.part, task.frame, task.instruction, candidates)
    except (EngineError, KeyError) as exc:
        _fail(exc)
    for traj, score in ranked[:top]:
        click.echo(f"{score.probability:.4f}  {traj.id}")


@main.command(name="eval")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--models", default=",".join(MODEL_ROWS), show_default=True, help="Comma-separated rows to compute.")
@click.option("--out-json", type=click.Path(dir_okay=False), default=None)
@click.option("--out-csv", type=click.Path(dir_okay=False), default=None)
@click.option("--seed", type=int, default=None, help="Fold seed override.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def eval_cmd(dataset_path, models, out_json, out_csv, seed, config_path):
    """Cross-validated comparison table over baselines and the model."""
    from .evaluation import EvalReport

    try:
        cfg = _load_config(config_path).override("eval", seed=seed)
        data = import_dataset(dataset_path)
        split = make_folds(data.tasks, cfg.eval.seed, cfg.eval.n_folds)
        cache = PairwiseDistanceCache(cfg.dtw)
        feature_cache = FeatureCache(cfg.features)
        wanted = [m.strip() for m in models.split(",") if m.strip()]
        unknown = set(wanted) - set(MODEL_ROWS)
        if unknown:
            raise EngineError(f"unknown model rows: {sorted(unknown)}; expected {MODEL_ROWS}")

        rows = []
        for name in wanted:
            if name == "chance":
                fn = baseline_chance(data.tasks, split, cfg.eval.seed)
            elif name == "similarity+random":
                fn = baseline_task_similarity(
                    data.tasks, split, "random", cfg.dtw, cfg.features, cfg.eval.seed, cache=cache
                )
            elif name == "similarity+weighted":
                fn = baseline_task_similarity(
                    data.tasks, split, "weighted", cfg.dtw, cfg.features, cfg.eval.seed, cache=cache
                )
            else:
                net_cfg = cfg.net if name != "single-trunk" else cfg.override("net", multimodal=False).net
                fn = make_model_ranker(
                    data.tasks,
                    split,
                    net_cfg,
                    cfg.dtw,
                    cfg.labels.thresholds(),
                    cfg.features,
                    noise_handling=(name != "no-noise-handling"),
                    negative_ratio=cfg.labels.negative_ratio,
                    labels_seed=cfg.labels.seed,
                    distance_cache=cache,
                    feature_cache=feature_cache,
                )
            rows.append(
                evaluate(
                    fn,
                    data.tasks,
                    split,
                    cfg.dtw,
                    cfg.eval.threshold,
                    model_name=name,
                    cache=cache,
                )
            )
        report = EvalReport(rows=rows, threshold=cfg.eval.threshold, n_folds=cfg.eval.n_folds, seed=cfg.eval.seed)
        if out_json:
            Path(out_json).write_text(
                json.dumps(report.to_dict(include_scores=True), indent=2, sort_keys=True) + "\n"
            )
        if out_csv:
            Path(out_csv).write_text(report.to_csv())
    except EngineError as exc:
        _fail(exc)
    click.echo(report.render_text(), nl=False)


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8321, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def serve(dataset_path, model_path, host, port, config_path):
    """Serve the demonstration-editor API over HTTP."""
    import uvicorn

    from .service import create_app

    try:
        cfg = _load_config(config_path)
        app = create_app(dataset_path, model_path=model_path, config=cfg)
    except EngineError as exc:
        _fail(exc)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    sys.exit(main())
