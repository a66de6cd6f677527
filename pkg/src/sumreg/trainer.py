"""Desk-scale synthetic twin-view training.

A Gaussian-cluster task stands in for image augmentation: each sample is a
class center plus latent noise, linearly embedded into input space, and the
two views are independently corrupted copies (additive noise + coordinate
masking) of the same underlying input. Training is plain SGD with momentum
on one of the four composite losses; per-epoch metrics, probe accuracy and
wall-clock go into a TrainLog that exports to CSV plus a JSON manifest.
"""

from __future__ import annotations

import csv
import json
import subprocess
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ConfigError, DataError, TrainingError
from .losses import ORIGINAL, PROPOSED, bt_style_loss, normalized_bt_metric, normalized_vic_metric, vic_style_loss
from .mlp import Mlp, MlpSpec, SgdMomentum
from .regularizers import PermutationStream, RegConfig

LOSS_VARIANTS = ("bt-proposed", "bt-original", "vic-proposed", "vic-original")


@dataclass(frozen=True)
class SyntheticTaskSpec:
    """Gaussian-cluster twin-view task parameters."""

    classes: int = 8
    latent_dim: int = 8
    input_dim: int = 32
    noise_sigma: float = 0.3
    samples_per_class: int = 256
    aug_noise_sigma: float = 0.5
    aug_mask_prob: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.classes < 2:
            raise ConfigError("need at least 2 classes")
        if self.latent_dim < 1 or self.input_dim < 1 or self.samples_per_class < 1:
            raise ConfigError("dimensions and sample counts must be positive")
        if self.noise_sigma < 0 or self.aug_noise_sigma < 0:
            raise ConfigError("noise scales must be >= 0")
        if not 0.0 <= self.aug_mask_prob < 1.0:
            raise ConfigError("aug_mask_prob must be in [0, 1)")

    @property
    def total_samples(self) -> int:
        return self.classes * self.samples_per_class


def _task_params(spec: SyntheticTaskSpec):
    """Class centers and the latent->input embedding, fixed by the seed."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    centers = rng.standard_normal((spec.classes, spec.latent_dim))
    gauss = rng.standard_normal((spec.input_dim, spec.latent_dim))
    q, _ = np.linalg.qr(gauss)
    return centers, q  # q: input_dim x latent_dim, orthonormal columns


def _augment(u: np.ndarray, spec: SyntheticTaskSpec, rng: np.random.Generator) -> np.ndarray:
    view = u + spec.aug_noise_sigma * rng.standard_normal(u.shape)
    if spec.aug_mask_prob > 0.0:
        view = view * (rng.random(u.shape) >= spec.aug_mask_prob)
    return view


def generate_twin_batch(spec: SyntheticTaskSpec, n: int, rng: np.random.Generator | None = None):
    """Draw n samples and return (viewA, viewB, labels).

    Classes are uniform; both views share the underlying input and differ
    only in their independently drawn corruptions. With rng=None the batch
    is a pure function of the task seed.
    """
    if n < 2:
        raise ConfigError("batch size must be >= 2")
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed, spawn_key=(1,))))
    centers, q = _task_params(spec)
    labels = rng.integers(0, spec.classes, size=n)
    z = centers[labels] + spec.noise_sigma * rng.standard_normal((n, spec.latent_dim))
    u = z @ q.T
    view_a = _augment(u, spec, rng)
    view_b = _augment(u, spec, rng)
    return view_a, view_b, labels


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    total: float
    invariance: float
    variance: float
    regularizer: float
    bt_metric: float
    vic_metric: float
    mean_feature_std: float
    probe_accuracy: float
    seconds: float


CSV_HEADER = (
    "epoch,total,invariance,variance,regularizer,bt_metric,vic_metric,"
    "mean_feature_std,probe_accuracy,seconds"
)


@dataclass
class TrainLog:
    records: list[EpochRecord]

    def final(self) -> EpochRecord:
        return self.records[-1]

    def to_csv(self, path) -> None:
        """One row per epoch; columns as in CSV_HEADER, NaN for absent terms."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER.split(","))
            for r in self.records:
                writer.writerow(
                    [
                        r.epoch,
                        repr(r.total),
                        repr(r.invariance),
                        repr(r.variance),
                        repr(r.regularizer),
                        repr(r.bt_metric),
                        repr(r.vic_metric),
                        repr(r.mean_feature_std),
                        repr(r.probe_accuracy),
                        repr(r.seconds),
                    ]
                )


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
            check=False,
        )
        return out.stdout.strip() or "unknown"
    except OSError:
        return "unknown"


def run_manifest(
    task: SyntheticTaskSpec,
    net: MlpSpec,
    cfg: RegConfig,
    loss_variant: str,
    epochs: int,
    lr: float,
    batch_size: int,
) -> dict:
    """Everything needed to rerun: all specs, seeds and the build id."""
    return {
        "task": asdict(task),
        "mlp": asdict(net),
        "reg": asdict(cfg),
        "loss_variant": loss_variant,
        "epochs": epochs,
        "lr": lr,
        "batch_size": batch_size,
        "git_describe": _git_describe(),
    }


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def linear_probe(
    features: np.ndarray,
    labels: np.ndarray,
    heldout_fraction: float = 0.25,
    seed: int = 0,
    l2: float = 1e-6,
    max_iters: int = 500,
    tol: float = 1e-6,
) -> float:
    """Held-out top-1 accuracy of multinomial logistic regression.

    Plain gradient descent (step 1/L from the softmax curvature bound) on
    standardized features; converges since the objective is convex.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    n = x.shape[0]
    if not 0.0 < heldout_fraction < 1.0:
        raise ConfigError("heldout_fraction must be in (0, 1)")
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(n)
    n_held = max(1, int(round(n * heldout_fraction)))
    held, train = order[:n_held], order[n_held:]
    if len(train) < 1:
        raise DataError("train split is empty")
    class_ids = np.unique(y)
    if class_ids.size < 2:
        raise DataError("need at least 2 classes")
    for split_name, idx in (("train", train), ("heldout", held)):
        present = np.unique(y[idx])
        if present.size < class_ids.size:
            raise DataError(f"class missing from {split_name} split")
    remap = {c: i for i, c in enumerate(class_ids)}
    yi = np.array([remap[c] for c in y])

    mean = x[train].mean(axis=0)
    std = np.maximum(x[train].std(axis=0), 1e-8)
    xs = (x - mean) / std
    xs = np.hstack([xs, np.ones((n, 1))])
    xt, yt = xs[train], yi[train]
    n_cls = class_ids.size
    onehot = np.eye(n_cls)[yt]

    # softmax Hessian is bounded by 0.5 * X^T X / n + l2 I
    lip = 0.5 * np.linalg.norm(xt, 2) ** 2 / len(train) + l2
    step = 1.0 / lip
    w = np.zeros((xs.shape[1], n_cls))
    for _ in range(max_iters):
        logits = xt @ w
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        grad = xt.T @ (p - onehot) / len(train) + l2 * w
        if np.max(np.abs(grad)) < tol:
            break
        w -= step * grad
    pred = np.argmax(xs[held] @ w, axis=1)
    return float(np.mean(pred == yi[held]))


def _loss_fn(loss_variant: str):
    if loss_variant not in LOSS_VARIANTS:
        raise ConfigError(f"unknown loss variant {loss_variant!r}")
    family, kind = loss_variant.split("-")
    fn = bt_style_loss if family == "bt" else vic_style_loss
    return fn, (PROPOSED if kind == "proposed" else ORIGINAL)


def train(
    task: SyntheticTaskSpec,
    net: MlpSpec,
    cfg: RegConfig = RegConfig(),
    loss_variant: str = "bt-proposed",
    epochs: int = 20,
    lr: float = 0.05,
    batch_size: int = 128,
    momentum: float = 0.9,
    weight_decay: float = 1e-3,
    eval_size: int = 512,
    probe_size: int = 2048,
    heldout_fraction: float = 0.25,
) -> TrainLog:
    """Mini-batch SGD on the selected loss; one TrainLog record per epoch.

    A fresh permutation is drawn every iteration when cfg.permute is on.
    The logged loss breakdown, metrics and probe run on fixed evaluation
    data (permutation off there, so logging never advances the training
    stream). Raises TrainingError on a non-finite loss.
    """
    if task.input_dim != net.backbone[0]:
        raise ConfigError("net input width must match task input_dim")
    fn, variant = _loss_fn(loss_variant)
    model = Mlp(net)
    opt = SgdMomentum(model, lr=lr, momentum=momentum, weight_decay=weight_decay)
    perm_stream = PermutationStream(cfg.seed)
    eval_cfg = replace(cfg, permute=False)

    batch_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(task.seed, spawn_key=(2,))))
    eval_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(task.seed, spawn_key=(3,))))
    eval_a, eval_b, _ = generate_twin_batch(task, min(eval_size, task.total_samples), rng=eval_rng)
    probe_x, _, probe_labels = generate_twin_batch(
        task, min(probe_size, task.total_samples), rng=eval_rng
    )

    iters = max(1, task.total_samples // batch_size)
    records = []
    for epoch in range(epochs):
        t0 = time.perf_counter()
        for _ in range(iters):
            va, vb, _ = generate_twin_batch(task, batch_size, rng=batch_rng)
            emb_a, cache_a = model.forward(va)
            emb_b, cache_b = model.forward(vb)
            lb = fn(emb_a, emb_b, cfg, variant, perm_stream)
            if not np.isfinite(lb.total):
                raise TrainingError(f"non-finite loss at epoch {epoch}", epoch=epoch)
            gw_a, gb_a = model.backward(cache_a, lb.grads.wrt_a)
            gw_b, gb_b = model.backward(cache_b, lb.grads.wrt_b)
            opt.step(
                [ga + gb for ga, gb in zip(gw_a, gw_b)],
                [ga + gb for ga, gb in zip(gb_a, gb_b)],
            )

        emb_a = model.embeddings(eval_a)
        emb_b = model.embeddings(eval_b)
        lb = fn(emb_a, emb_b, eval_cfg, variant)
        stacked = np.concatenate([emb_a, emb_b], axis=0)
        mean_std = float(np.mean(stacked.std(axis=0, ddof=1)))
        reps = model.representations(probe_x)
        acc = linear_probe(reps, probe_labels, heldout_fraction, seed=task.seed)
        records.append(
            EpochRecord(
                epoch=epoch,
                total=lb.total,
                invariance=lb.invariance,
                variance=float("nan") if lb.variance is None else lb.variance,
                regularizer=lb.regularizer,
                bt_metric=normalized_bt_metric(emb_a, emb_b),
                vic_metric=normalized_vic_metric(emb_a, emb_b),
                mean_feature_std=mean_std,
                probe_accuracy=acc,
                seconds=time.perf_counter() - t0,
            )
        )
    return TrainLog(records)
