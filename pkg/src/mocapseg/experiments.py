"""Datasets, label-noise protocols, cross-validation, metrics, experiment runs.

Noise protocols (matching the robustness study this package implements):
  - random_pct: exactly round(pct * M) frame positions per sequence, chosen
    uniformly without replacement, each set to a class drawn uniformly over
    ALL classes (so it may reproduce the original label).
  - boundary_window: every frame within n of a segment boundary gets a
    uniformly random class; windows truncate at sequence edges and union
    when they overlap (window width 2n + 1).
  - boundary_mask: the same windows are excluded from the loss instead;
    labels stay untouched.

Noise randomness derives from (noise seed, item index), so reordering a
dataset never changes how a given sequence is corrupted. Evaluation always
runs against the clean labels; corrupted copies exist only for training.
"""

from __future__ import annotations

import csv
import io
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .dtfcn import (
    Model,
    NetConfig,
    TrainConfig,
    build_model,
    fold_seed,
    save_checkpoint,
    train,
)
from .errors import DataError
from .io_utils import atomic_write_bytes
from .labels import LabelTrack
from .nn.loss import masked_cross_entropy
from .nn.rng import RngStream

NOISE_MODES = ("random_pct", "boundary_window", "boundary_mask")


@dataclass(frozen=True)
class Dataset:
    """Motion images with ground-truth label tracks."""

    items: tuple
    class_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        heights = set()
        for image, track, name in self.items:
            heights.add(image.height)
            if image.width != len(track):
                raise DataError(f"item {name!r}: image width {image.width} != labels {len(track)}")
            if track.class_count != len(self.class_names):
                raise DataError(f"item {name!r}: class_count != len(class_names)")
        if len(heights) > 1:
            raise DataError(f"items disagree on image height: {sorted(heights)}")

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class NoiseSpec:
    """Label corruption request; mode None means no corruption."""

    mode: str | None = None
    pct: float = 0.0
    n: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.mode is not None and self.mode not in NOISE_MODES:
            raise DataError(f"unknown noise mode {self.mode!r}; expected one of {NOISE_MODES}")
        if not 0.0 <= self.pct <= 1.0:
            raise DataError("pct must be in [0, 1]")
        if self.n < 0:
            raise DataError("n must be >= 0")


def inject_random_noise(track: LabelTrack, pct: float, seed: int) -> LabelTrack:
    """Set exactly round(pct*M) uniformly chosen frames to uniform classes."""
    if not 0.0 <= pct <= 1.0:
        raise DataError("pct must be in [0, 1]")
    m = len(track)
    count = int(np.floor(pct * m + 0.5))  # round-half-up
    rng = RngStream(seed)
    positions = rng.choice_without_replacement(m, count)
    classes = track.classes.copy()
    classes[positions] = rng.integers(track.class_count, size=count)
    return LabelTrack(classes=classes, class_count=track.class_count, loss_mask=track.loss_mask)


def find_boundaries(labels) -> np.ndarray:
    """Indices t >= 1 where the class changes; frame 0 is never a boundary."""
    classes = labels.classes if isinstance(labels, LabelTrack) else np.asarray(labels)
    if classes.size < 2:
        return np.array([], dtype=np.int64)
    return np.nonzero(classes[1:] != classes[:-1])[0] + 1


def _boundary_window_union(classes: np.ndarray, n: int) -> np.ndarray:
    """Boolean array marking frames within n of any boundary (truncated)."""
    inside = np.zeros(len(classes), dtype=bool)
    for b in find_boundaries(classes):
        inside[max(0, b - n) : min(len(classes), b + n + 1)] = True
    return inside


def inject_boundary_noise(track: LabelTrack, n: int, seed: int) -> LabelTrack:
    """Randomize every frame within n of a boundary (window width 2n + 1)."""
    if n < 0:
        raise DataError("n must be >= 0")
    inside = _boundary_window_union(track.classes, n)
    positions = np.nonzero(inside)[0]
    rng = RngStream(seed)
    classes = track.classes.copy()
    classes[positions] = rng.integers(track.class_count, size=len(positions))
    return LabelTrack(classes=classes, class_count=track.class_count, loss_mask=track.loss_mask)


def boundary_mask(track: LabelTrack, n: int) -> np.ndarray:
    """Loss mask that excludes boundary windows: False there, True elsewhere."""
    if n < 0:
        raise DataError("n must be >= 0")
    return ~_boundary_window_union(track.classes, n)


def apply_noise(dataset: Dataset, spec: NoiseSpec | None) -> Dataset:
    """Corrupted copy of the dataset per the spec; originals are untouched."""
    if spec is None or spec.mode is None:
        return dataset
    base = RngStream(spec.seed)
    new_items = []
    for index, (image, track, name) in enumerate(dataset.items):
        item_seed = int(base.derive(index).seed)
        if spec.mode == "random_pct":
            new_track = inject_random_noise(track, spec.pct, item_seed)
        elif spec.mode == "boundary_window":
            new_track = inject_boundary_noise(track, spec.n, item_seed)
        else:  # boundary_mask: labels untouched, loss restricted
            new_track = track.with_mask(boundary_mask(track, spec.n))
        new_items.append((image, new_track, name))
    return Dataset(items=tuple(new_items), class_names=dataset.class_names)


def kfold_plan(item_count: int, folds: int = 7) -> list[tuple[np.ndarray, np.ndarray]]:
    """Non-randomized contiguous-block folds: (train indices, test indices).

    Test blocks have ceil(item_count / folds) items, the last possibly fewer;
    when that block size makes some trailing blocks empty, only the non-empty
    blocks are returned.
    """
    if folds < 2 or folds > item_count:
        raise DataError(f"folds must satisfy 2 <= folds <= {item_count}, got {folds}")
    size = -(-item_count // folds)  # ceil
    everything = np.arange(item_count)
    plan = []
    for start in range(0, item_count, size):
        test = everything[start : start + size]
        train_idx = np.concatenate([everything[:start], everything[start + size :]])
        plan.append((train_idx, test))
    return plan


def per_frame_accuracy(pred: LabelTrack, truth: LabelTrack) -> float:
    """Fraction of frames whose predicted class matches the ground truth."""
    if len(pred) != len(truth):
        raise DataError(f"track lengths differ: {len(pred)} vs {len(truth)}")
    if len(truth) == 0:
        return 0.0
    return float((pred.classes == truth.classes).mean())


def confusion(pred: LabelTrack, truth: LabelTrack) -> np.ndarray:
    """C x C counts; confusion[i, j] = frames of true class i predicted j."""
    if len(pred) != len(truth):
        raise DataError(f"track lengths differ: {len(pred)} vs {len(truth)}")
    c = truth.class_count
    out = np.zeros((c, c), dtype=np.int64)
    np.add.at(out, (truth.classes, pred.classes), 1)
    return out


@dataclass
class MetricsReport:
    """Aggregated results of one experiment run."""

    per_frame_accuracy: float
    confusion: np.ndarray
    folds: list[dict] = field(default_factory=list)
    wall_clock_seconds: float = 0.0

    @classmethod
    def from_confusion(cls, conf: np.ndarray, folds: list[dict], wall: float) -> "MetricsReport":
        total = int(conf.sum())
        acc = float(np.trace(conf) / total) if total else 0.0
        return cls(per_frame_accuracy=acc, confusion=conf, folds=folds, wall_clock_seconds=wall)


def metrics_csv_bytes(rows) -> bytes:
    """CSV with columns fold, epoch, split, loss, accuracy (floats via repr)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["fold", "epoch", "split", "loss", "accuracy"])
    for fold, epoch, split, loss, accuracy in rows:
        writer.writerow([fold, epoch, split, repr(float(loss)), repr(float(accuracy))])
    return buf.getvalue().encode("utf-8")


def confusion_csv_bytes(conf: np.ndarray, class_names) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["truth\\pred", *class_names])
    for i, name in enumerate(class_names):
        writer.writerow([name, *(int(v) for v in conf[i])])
    return buf.getvalue().encode("utf-8")


def evaluate_model(model: Model, items) -> tuple[np.ndarray, float, float]:
    """Inference-mode scoring over (image, track, name) items.

    Returns (pooled confusion, pooled accuracy, frame-weighted mean loss).
    Evaluation ignores loss masks: every frame of the clean truth counts.
    """
    c = model.config.classes
    conf = np.zeros((c, c), dtype=np.int64)
    loss_sum = 0.0
    frames = 0
    for image, track, _ in items:
        probs = model.forward(image, training=False)
        pred = LabelTrack(classes=np.argmax(probs, axis=0), class_count=c)
        conf += confusion(pred, track)
        loss, _ = masked_cross_entropy(probs, track.classes, None)
        loss_sum += loss * len(track)
        frames += len(track)
    accuracy = float(np.trace(conf) / frames) if frames else 0.0
    mean_loss = loss_sum / frames if frames else 0.0
    return conf, accuracy, mean_loss


def load_manifest_dataset(manifest_path, height: int, space: str = "local") -> Dataset:
    """Build a Dataset from a manifest JSON listing BVH + label path pairs.

    Manifest shape: {"items": [{"bvh": path, "labels": path}, ...]} with
    paths resolved relative to the manifest's directory. All items must
    agree on class_names.
    """
    import json

    from .bvh import parse_bvh
    from .kinematics import to_cartesian
    from .labels import load_label_json
    from .motion_image import motion_image_from_cartesian

    base = os.path.dirname(os.path.abspath(os.fspath(manifest_path)))
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read manifest {manifest_path}: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("items"), list) or not doc["items"]:
        raise DataError("manifest must contain a non-empty 'items' list")

    items = []
    class_names: list[str] | None = None
    for entry in doc["items"]:
        if not isinstance(entry, dict) or "bvh" not in entry or "labels" not in entry:
            raise DataError("manifest items need 'bvh' and 'labels' paths")
        bvh_path = os.path.join(base, entry["bvh"])
        label_path = os.path.join(base, entry["labels"])
        try:
            with open(bvh_path, "r", encoding="utf-8") as fh:
                skeleton, sequence = parse_bvh(fh.read())
        except OSError as exc:
            raise DataError(f"cannot read BVH {bvh_path}: {exc}") from exc
        track, names = load_label_json(label_path)
        if class_names is None:
            class_names = names
        elif names != class_names:
            raise DataError(f"{label_path}: class_names disagree with earlier items")
        if len(track) != sequence.frame_count:
            raise DataError(
                f"{label_path}: {len(track)} labeled frames for {sequence.frame_count} motion frames"
            )
        cart = to_cartesian(skeleton, sequence, space)
        image = motion_image_from_cartesian(cart, height)
        name = os.path.splitext(os.path.basename(entry["bvh"]))[0]
        items.append((image, track, name))
    return Dataset(items=tuple(items), class_names=tuple(class_names))


def run_experiment(
    dataset: Dataset,
    net_config: NetConfig,
    train_config: TrainConfig,
    noise_spec: NoiseSpec | None = None,
    folds: int = 7,
    outdir=None,
) -> MetricsReport:
    """Cross-validated train/eval with optional training-label corruption.

    Noise touches TRAINING folds only; every test fold is scored against the
    original clean labels. With outdir set, writes per-fold checkpoints
    (fold0.ckpt, ...), metrics.csv, and confusion.csv into it.

    Returns the aggregate MetricsReport; trained fold models are in
    report.folds[k]["model"].
    """
    started = time.monotonic()
    noisy = apply_noise(dataset, noise_spec)
    plan = kfold_plan(len(dataset), folds)

    csv_rows = []
    fold_records = []
    total_conf = np.zeros((len(dataset.class_names),) * 2, dtype=np.int64)
    for fold_index, (train_idx, test_idx) in enumerate(plan):
        seed = fold_seed(train_config.seed, fold_index)
        model = build_model(net_config, seed=seed)
        fold_config = replace(train_config, seed=seed)
        train_items = [noisy.items[i] for i in train_idx]
        model, history = train(model, train_items, fold_config)

        for row in history:
            csv_rows.append((fold_index, row["epoch"], "train", row["loss"], row["accuracy"]))
        test_items = [dataset.items[i] for i in test_idx]
        conf, acc, test_loss = evaluate_model(model, test_items)
        total_conf += conf
        last_epoch = max(train_config.epochs - 1, 0)
        csv_rows.append((fold_index, last_epoch, "test", test_loss, acc))
        fold_records.append(
            {
                "fold": fold_index,
                "seed": seed,
                "test_accuracy": acc,
                "train_indices": train_idx.tolist(),
                "test_indices": test_idx.tolist(),
                "model": model,
                "history": history,
            }
        )
        if outdir is not None:
            save_checkpoint(
                os.path.join(outdir, f"fold{fold_index}.ckpt"),
                model,
                extra={
                    "class_names": list(dataset.class_names),
                    "fold": fold_index,
                    "seed": seed,
                },
            )

    wall = time.monotonic() - started
    if outdir is not None:
        atomic_write_bytes(os.path.join(outdir, "metrics.csv"), metrics_csv_bytes(csv_rows))
        atomic_write_bytes(
            os.path.join(outdir, "confusion.csv"),
            confusion_csv_bytes(total_conf, dataset.class_names),
        )
    return MetricsReport.from_confusion(total_conf, fold_records, wall)
