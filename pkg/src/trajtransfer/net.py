"""Three-modality ranking network.

The network scores how well a candidate trajectory matches a
(point-cloud, instruction) pair. Its first hidden level learns separate
features per modality; the second level combines two modalities at a
time, one block for point-cloud with trajectory and one for language
with trajectory; the third level joins both combinations, and a logistic
unit on top emits the match probability. All hidden units are rectified
linear. A configuration flag collapses the block wiring into a single
concatenated trunk of the same total widths, used as an ablation
baseline.

Weights are pretrained layer by layer as denoising autoencoders with
tied weights: the block input is corrupted by an element-wise binomial
mask, encoded, decoded with the transposed weights, and trained to
reconstruct the clean input under an L1 activation sparsity penalty and
a max-norm bound on each unit's incoming weight vector. Fine-tuning
minimizes the negative log-likelihood of the binary labels with
mini-batch SGD and dropout on every hidden layer.

Everything is plain numpy and deterministic given the configuration
seed. A frozen net is read-only, so scoring may run concurrently.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    CheckpointError,
    DegenerateLabelsWarning,
    DivergenceError,
    EmptyPoolError,
    ShapeMismatchError,
)
from .features import FeatureVector, Featurizer
from .partframe import PartFrame, PointCloudPart
from .trajectory import Trajectory

__all__ = [
    "NetConfig",
    "Score",
    "MultimodalNet",
    "forward",
    "pretrain",
    "finetune",
    "infer",
    "nll_loss_and_grads",
    "dae_loss_and_grads",
    "save_model",
    "load_model",
]

INPUT_NAMES = ("pc", "lang", "traj")

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class NetConfig:
    """Layer widths and training hyper-parameters.

    ``corruption_p`` is the probability that an input component is
    dropped (set to zero) when corrupting autoencoder inputs. When
    ``multimodal`` is False the three per-modality blocks of each level
    are merged into one trunk block of the same total width.
    """

    h1_pc: int = 250
    h1_lang: int = 150
    h1_traj: int = 100
    h2_pt: int = 200
    h2_lt: int = 200
    h3: int = 150
    multimodal: bool = True
    corruption_p: float = 0.3
    sparsity_lambda: float = 1e-4
    maxnorm_c: float = 3.0
    dropout_rate: float = 0.5
    learning_rate: float = 0.01
    lr_decay: float = 1.0
    batch_size: int = 32
    epochs_pretrain: int = 15
    epochs_finetune: int = 30
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("h1_pc", "h1_lang", "h1_traj", "h2_pt", "h2_lt", "h3"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.corruption_p < 1.0:
            raise ValueError("corruption_p must be in [0, 1)")
        if self.sparsity_lambda < 0.0:
            raise ValueError("sparsity_lambda must be >= 0")
        if self.maxnorm_c <= 0.0:
            raise ValueError("maxnorm_c must be > 0")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be > 0")
        if self.lr_decay < 0.0:
            raise ValueError("lr_decay must be >= 0")
        if self.batch_size < 1 or self.epochs_pretrain < 1 or self.epochs_finetune < 1:
            raise ValueError("batch_size and epoch counts must be >= 1")

    def wiring(self) -> tuple[tuple[tuple[str, tuple[str, ...], int], ...], ...]:
        """Levels of (block name, input names, width)."""
        if self.multimodal:
            return (
                (
                    ("h1_pc", ("pc",), self.h1_pc),
                    ("h1_lang", ("lang",), self.h1_lang),
                    ("h1_traj", ("traj",), self.h1_traj),
                ),
                (
                    ("h2_pt", ("h1_pc", "h1_traj"), self.h2_pt),
                    ("h2_lt", ("h1_lang", "h1_traj"), self.h2_lt),
                ),
                (("h3", ("h2_pt", "h2_lt"), self.h3),),
            )
        return (
            (("h1", ("pc", "lang", "traj"), self.h1_pc + self.h1_lang + self.h1_traj),),
            (("h2", ("h1",), self.h2_pt + self.h2_lt),),
            (("h3", ("h2",), self.h3),),
        )


@dataclass(frozen=True)
class Score:
    """Match probability, clamped to the open interval (0, 1)."""

    probability: float

    def __post_init__(self):
        p = min(max(float(self.probability), 1e-12), 1.0 - 1e-12)
        object.__setattr__(self, "probability", p)


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _project_rows(w: np.ndarray, c: float) -> None:
    """Scale rows of ``w`` in place so each has L2 norm at most ``c``."""
    norms = np.linalg.norm(w, axis=1, keepdims=True)
    scale = np.where(norms > c, c / np.maximum(norms, 1e-300), 1.0)
    w *= scale


class MultimodalNet:
    """Weights and wiring of the ranking network.

    ``blocks`` maps block name to (W, b) with W of shape (width, fan_in);
    row i of W is unit i's incoming weight vector, kept within the
    max-norm bound. ``out_w``/``out_b`` form the logistic output on the
    last hidden level.
    """

    def __init__(
        self,
        config: NetConfig,
        input_dims: tuple[int, int, int],
        blocks: dict[str, tuple[np.ndarray, np.ndarray]],
        out_w: np.ndarray,
        out_b: float,
    ):
        self.config = config
        self.input_dims = tuple(int(d) for d in input_dims)
        self.blocks = blocks
        self.out_w = out_w
        self.out_b = float(out_b)
        self.pretrain_history: dict[str, list[float]] = {}
        self.finetune_history: list[float] = []

    @staticmethod
    def initialize(
        config: NetConfig, input_dims: tuple[int, int, int], rng: np.random.Generator
    ) -> "MultimodalNet":
        dims = dict(zip(INPUT_NAMES, input_dims))
        blocks: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        for level in config.wiring():
            for name, inputs, width in level:
                fan_in = sum(dims[i] for i in inputs)
                bound = np.sqrt(6.0 / (fan_in + width))
                w = rng.uniform(-bound, bound, size=(width, fan_in))
                _project_rows(w, config.maxnorm_c)
                blocks[name] = (w, np.zeros(width))
                dims[name] = width
        h_top = dims["h3"]
        bound = np.sqrt(6.0 / (h_top + 1))
        out_w = rng.uniform(-bound, bound, size=h_top)
        _project_rows(out_w.reshape(1, -1), config.maxnorm_c)
        return MultimodalNet(config, tuple(input_dims), blocks, out_w, 0.0)

    def _check_dims(self, inputs: dict[str, np.ndarray]) -> None:
        for name, expected in zip(INPUT_NAMES, self.input_dims):
            got = inputs[name].shape[-1]
            if got != expected:
                raise ShapeMismatchError(
                    f"{name} block has dimension {got}, model expects {expected}"
                )

    def activations(self, inputs: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        """Hidden activations for a batch; keys are block names."""
        self._check_dims(inputs)
        acts = {name: np.atleast_2d(np.asarray(inputs[name], dtype=np.float64)) for name in INPUT_NAMES}
        for level in self.config.wiring():
            for name, in_names, _ in level:
                w, b = self.blocks[name]
                x = np.concatenate([acts[i] for i in in_names], axis=1)
                acts[name] = _relu(x @ w.T + b)
        return acts

    def probabilities(self, inputs: dict[str, np.ndarray]) -> np.ndarray:
        acts = self.activations(inputs)
        return _sigmoid(acts["h3"] @ self.out_w + self.out_b)

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        """Ordered, mutable views of every trainable array."""
        out: list[tuple[str, np.ndarray]] = []
        for level in self.config.wiring():
            for name, _, _ in level:
                w, b = self.blocks[name]
                out.append((f"W:{name}", w))
                out.append((f"b:{name}", b))
        out.append(("W:out", self.out_w))
        return out

    def copy(self) -> "MultimodalNet":
        blocks = {name: (w.copy(), b.copy()) for name, (w, b) in self.blocks.items()}
        dup = MultimodalNet(self.config, self.input_dims, blocks, self.out_w.copy(), self.out_b)
        dup.pretrain_history = {k: list(v) for k, v in self.pretrain_history.items()}
        dup.finetune_history = list(self.finetune_history)
        return dup

    def max_row_norm(self) -> float:
        norms = [float(np.max(np.linalg.norm(w, axis=1))) for w, _ in self.blocks.values()]
        norms.append(float(np.linalg.norm(self.out_w)))
        return max(norms)


def forward(net: MultimodalNet, features: FeatureVector) -> Score:
    """Score one feature vector."""
    inputs = {"pc": features.pc, "lang": features.lang, "traj": features.traj}
    return Score(float(net.probabilities(inputs)[0]))


def dae_loss_and_grads(
    w: np.ndarray,
    b_enc: np.ndarray,
    b_dec: np.ndarray,
    x: np.ndarray,
    x_tilde: np.ndarray,
    lam: float,
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Denoising-autoencoder objective and gradients for one batch.

    Encodes the corrupted batch with the transposed tied weights, decodes
    back, and measures squared reconstruction error of the clean input
    plus ``lam`` times the L1 norm of the code, averaged over the batch.
    """
    batch = x.shape[0]
    z_enc = x_tilde @ w.T + b_enc
    h = _relu(z_enc)
    z_dec = h @ w + b_dec
    x_hat = _relu(z_dec)

    err = x_hat - x
    loss = float(np.sum(err * err) / batch + lam * np.sum(np.abs(h)) / batch)

    d_xhat = 2.0 * err / batch
    d_zdec = d_xhat * (z_dec > 0)
    dw_dec = h.T @ d_zdec
    db_dec = d_zdec.sum(axis=0)

    dh = d_zdec @ w.T + (lam / batch) * (h > 0)
    d_zenc = dh * (z_enc > 0)
    dw_enc = d_zenc.T @ x_tilde
    db_enc = d_zenc.sum(axis=0)

    return loss, dw_enc + dw_dec, db_enc, db_dec


def _stack_inputs(data: Sequence[FeatureVector]) -> dict[str, np.ndarray]:
    return {
        "pc": np.array([fv.pc for fv in data]),
        "lang": np.array([fv.lang for fv in data]),
        "traj": np.array([fv.traj for fv in data]),
    }


def _pretrain_block(
    name: str,
    x: np.ndarray,
    width: int,
    config: NetConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    n, fan_in = x.shape
    bound = np.sqrt(6.0 / (fan_in + width))
    w = rng.uniform(-bound, bound, size=(width, fan_in))
    _project_rows(w, config.maxnorm_c)
    b_enc = np.zeros(width)
    b_dec = np.zeros(fan_in)

    def clean_loss() -> float:
        z_enc = x @ w.T + b_enc
        h = _relu(z_enc)
        x_hat = _relu(h @ w + b_dec)
        err = x_hat - x
        return float(np.sum(err * err) / n + config.sparsity_lambda * np.sum(np.abs(h)) / n)

    history = [clean_loss()]
    for epoch in range(config.epochs_pretrain):
        lr = config.learning_rate / (1.0 + config.lr_decay * epoch)
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = x[order[start : start + config.batch_size]]
            if config.corruption_p > 0.0:
                mask = rng.random(batch.shape) >= config.corruption_p
                corrupted = batch * mask
            else:
                corrupted = batch
            loss, dw, db_enc, db_dec = dae_loss_and_grads(
                w, b_enc, b_dec, batch, corrupted, config.sparsity_lambda
            )
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"autoencoder loss diverged in block {name}", epoch=epoch, block=name
                )
            w -= lr * dw
            b_enc -= lr * db_enc
            b_dec -= lr * db_dec
            _project_rows(w, config.maxnorm_c)
            if not np.all(np.isfinite(w)):
                raise DivergenceError(
                    f"autoencoder weights diverged in block {name}", epoch=epoch, block=name
                )
            assert float(np.max(np.linalg.norm(w, axis=1))) <= config.maxnorm_c * (1 + 1e-12) + 1e-9
        history.append(clean_loss())
    return w, b_enc, history


def pretrain(
    data: Sequence[FeatureVector], config: NetConfig, rng: np.random.Generator | None = None
) -> MultimodalNet:
    """Layer-wise autoencoder pretraining over unlabeled feature vectors.

    Blocks are trained bottom-up; each level's training input is the
    uncorrupted encoding of the level below. The logistic output layer is
    randomly initialized and left for fine-tuning. Per-block clean-loss
    curves (initial value plus one entry per epoch) are recorded on the
    returned net's ``pretrain_history``.
    """
    if len(data) == 0:
        raise EmptyPoolError("pretraining needs at least one feature vector")
    if rng is None:
        rng = np.random.default_rng(config.rng_seed)
    acts = _stack_inputs(data)
    dims = tuple(acts[name].shape[1] for name in INPUT_NAMES)

    blocks: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    history: dict[str, list[float]] = {}
    for level in config.wiring():
        for name, in_names, width in level:
            x = np.concatenate([acts[i] for i in in_names], axis=1)
            w, b_enc, curve = _pretrain_block(name, x, width, config, rng)
            blocks[name] = (w, b_enc)
            history[name] = curve
        for name, in_names, _ in level:
            w, b_enc = blocks[name]
            x = np.concatenate([acts[i] for i in in_names], axis=1)
            acts[name] = _relu(x @ w.T + b_enc)

    h_top = blocks["h3"][0].shape[0]
    bound = np.sqrt(6.0 / (h_top + 1))
    out_w = rng.uniform(-bound, bound, size=h_top)
    _project_rows(out_w.reshape(1, -1), config.maxnorm_c)

    net = MultimodalNet(config, dims, blocks, out_w, 0.0)
    net.pretrain_history = history
    return net


def nll_loss_and_grads(
    net: MultimodalNet,
    inputs: dict[str, np.ndarray],
    y: np.ndarray,
    dropout_masks: dict[str, np.ndarray] | None = None,
) -> tuple[float, dict[str, np.ndarray], float]:
    """Summed negative log-likelihood and gradients for a batch.

    ``dropout_masks`` maps hidden block names to already-scaled masks
    (zero with the dropout probability, 1/keep otherwise) applied to that
    block's output; pass None to disable dropout, as at evaluation time.
    Returns (loss, per-parameter gradients keyed like ``parameters()``,
    gradient of the output bias).
    """
    net._check_dims(inputs)
    wiring = net.config.wiring()
    acts: dict[str, np.ndarray] = {
        name: np.atleast_2d(np.asarray(inputs[name], dtype=np.float64)) for name in INPUT_NAMES
    }
    pre: dict[str, np.ndarray] = {}
    dropped: dict[str, np.ndarray] = dict(acts)
    for level in wiring:
        for name, in_names, _ in level:
            w, b = net.blocks[name]
            x = np.concatenate([dropped[i] for i in in_names], axis=1)
            z = x @ w.T + b
            h = _relu(z)
            pre[name] = z
            acts[name] = h
            if dropout_masks is not None and name in dropout_masks:
                dropped[name] = h * dropout_masks[name]
            else:
                dropped[name] = h

    z_out = dropped["h3"] @ net.out_w + net.out_b
    y = np.asarray(y, dtype=np.float64)
    # Stable log(1 + exp(-|z|)) formulation of -[y log p + (1-y) log(1-p)].
    loss = float(np.sum(np.maximum(z_out, 0.0) - z_out * y + np.log1p(np.exp(-np.abs(z_out)))))

    p = _sigmoid(z_out)
    dz_out = p - y
    grads: dict[str, np.ndarray] = {}
    grads["W:out"] = dropped["h3"].T @ dz_out
    d_out_b = float(dz_out.sum())

    d_dropped: dict[str, np.ndarray] = {"h3": np.outer(dz_out, net.out_w)}
    for level in reversed(wiring):
        for name, in_names, _ in level:
            w, _ = net.blocks[name]
            dh = d_dropped.pop(name)
            if dropout_masks is not None and name in dropout_masks:
                dh = dh * dropout_masks[name]
            dz = dh * (pre[name] > 0)
            x = np.concatenate([dropped[i] for i in in_names], axis=1)
            grads[f"W:{name}"] = dz.T @ x
            grads[f"b:{name}"] = dz.sum(axis=0)
            dx = dz @ w
            offset = 0
            for in_name in in_names:
                width = dropped[in_name].shape[1]
                piece = dx[:, offset : offset + width]
                if in_name in d_dropped:
                    d_dropped[in_name] = d_dropped[in_name] + piece
                else:
                    d_dropped[in_name] = piece
                offset += width
    return loss, grads, d_out_b


def finetune(
    net: MultimodalNet,
    examples: Sequence[tuple[FeatureVector, int]],
    config: NetConfig | None = None,
) -> MultimodalNet:
    """Mini-batch SGD on the negative log-likelihood of binary labels.

    Dropout masks are drawn for every hidden block each batch and scaled
    by 1/keep during training, so evaluation runs mask-free with the
    weights as they are. Weight rows are projected back inside the
    max-norm bound after every update. Deterministic given the
    configuration seed; the input net is not modified.
    """
    if config is None:
        config = net.config
    if len(examples) == 0:
        raise EmptyPoolError("finetuning needs at least one labeled example")
    labels = np.array([int(label) for _, label in examples], dtype=np.float64)
    if len(set(labels.tolist())) < 2:
        warnings.warn(
            "fine-tuning data contains a single class; training proceeds",
            DegenerateLabelsWarning,
            stacklevel=2,
        )
    inputs = _stack_inputs([fv for fv, _ in examples])

    out = net.copy()
    rng = np.random.default_rng(config.rng_seed + 1)
    n = len(examples)
    # The wiring is fixed by the net being tuned; ``config`` only supplies
    # training hyper-parameters.
    wiring = net.config.wiring()
    hidden = [name for level in wiring for name, _, _ in level]
    keep = 1.0 - config.dropout_rate

    for epoch in range(config.epochs_finetune):
        lr = config.learning_rate / (1.0 + config.lr_decay * epoch)
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = {name: inputs[name][idx] for name in INPUT_NAMES}
            y = labels[idx]
            masks = None
            if config.dropout_rate > 0.0:
                masks = {
                    name: (rng.random((len(idx), out.blocks[name][0].shape[0])) >= config.dropout_rate)
                    / keep
                    for name in hidden
                }
            loss, grads, d_out_b = nll_loss_and_grads(out, batch, y, masks)
            if not np.isfinite(loss):
                raise DivergenceError("fine-tuning loss diverged", epoch=epoch)
            epoch_loss += loss
            scale = lr / len(idx)
            for name in hidden:
                w, b = out.blocks[name]
                w -= scale * grads[f"W:{name}"]
                b -= scale * grads[f"b:{name}"]
                _project_rows(w, config.maxnorm_c)
            out.out_w -= scale * grads["W:out"]
            _project_rows(out.out_w.reshape(1, -1), config.maxnorm_c)
            out.out_b -= scale * d_out_b
            if not all(
                np.all(np.isfinite(w)) and np.all(np.isfinite(b))
                for w, b in out.blocks.values()
            ):
                raise DivergenceError("fine-tuning weights diverged", epoch=epoch)
            assert out.max_row_norm() <= config.maxnorm_c * (1 + 1e-12) + 1e-9
        out.finetune_history.append(epoch_loss / n)
    return out


def infer(
    net: MultimodalNet,
    featurizer: Featurizer,
    part: PointCloudPart,
    frame: PartFrame,
    instruction: str,
    candidates: Sequence[Trajectory],
) -> list[tuple[Trajectory, Score]]:
    """Rank candidate trajectories for a (part, instruction) pair.

    Candidates must be in part-frame coordinates. Returns all candidates
    in descending probability order, ties broken by trajectory id.
    """
    if len(candidates) == 0:
        raise EmptyPoolError("inference needs a non-empty candidate pool")
    pc = featurizer.part_features(part, frame)
    lang = featurizer.language_features(instruction)
    traj = np.array([featurizer.trajectory_features(c) for c in candidates])
    inputs = {
        "pc": np.tile(pc, (len(candidates), 1)),
        "lang": np.tile(lang, (len(candidates), 1)),
        "traj": traj,
    }
    probs = net.probabilities(inputs)
    order = sorted(range(len(candidates)), key=lambda i: (-probs[i], candidates[i].id))
    return [(candidates[i], Score(float(probs[i]))) for i in order]


def save_model(path, net: MultimodalNet, featurizer: Featurizer) -> None:
    """Write a checkpoint: config, featurization settings, vocabulary id,
    weights, and a content hash over the weight bytes."""
    arrays: dict[str, np.ndarray] = {}
    for name, (w, b) in net.blocks.items():
        arrays[f"W__{name}"] = w
        arrays[f"b__{name}"] = b
    arrays["out_w"] = net.out_w
    arrays["out_b"] = np.array([net.out_b])
    digest = hashlib.sha256()
    for key in sorted(arrays):
        digest.update(key.encode())
        digest.update(np.ascontiguousarray(arrays[key]).tobytes())
    header = {
        "format_version": CHECKPOINT_VERSION,
        "config": asdict(net.config),
        "input_dims": list(net.input_dims),
        "vocab_id": featurizer.vocab.vocab_id,
        "features": asdict(featurizer.config),
        "content_hash": digest.hexdigest(),
    }
    with open(path, "wb") as fh:
        np.savez(fh, header=np.array(json.dumps(header)), **arrays)


def load_model(path) -> tuple[MultimodalNet, dict]:
    """Load a checkpoint; returns the net and its header metadata.

    Rejects unknown versions, corrupted weight bytes, and weight shapes
    inconsistent with the stored configuration and input dimensions.
    """
    from .features import FeatureConfig  # deferred: avoids cycle at import time

    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format_version") != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {header.get('format_version')}")
        config = NetConfig(**header["config"])
        input_dims = tuple(header["input_dims"])
        arrays = {key: data[key] for key in data.files if key != "header"}

    digest = hashlib.sha256()
    for key in sorted(arrays):
        digest.update(key.encode())
        digest.update(np.ascontiguousarray(arrays[key]).tobytes())
    if digest.hexdigest() != header["content_hash"]:
        raise CheckpointError("checkpoint content hash mismatch")

    dims = dict(zip(INPUT_NAMES, input_dims))
    blocks: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for level in config.wiring():
        for name, inputs, width in level:
            fan_in = sum(dims[i] for i in inputs)
            w = arrays[f"W__{name}"]
            b = arrays[f"b__{name}"]
            if w.shape != (width, fan_in) or b.shape != (width,):
                raise CheckpointError(
                    f"block {name}: stored shape {w.shape} does not match "
                    f"configured ({width}, {fan_in})"
                )
            blocks[name] = (w, b)
            dims[name] = width
    out_w = arrays["out_w"]
    if out_w.shape != (dims["h3"],):
        raise CheckpointError("output weights do not match the top hidden width")
    net = MultimodalNet(config, input_dims, blocks, out_w, float(arrays["out_b"][0]))
    header["feature_config"] = FeatureConfig(**header["features"])
    return net, header
