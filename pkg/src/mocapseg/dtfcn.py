"""The dilated temporal fully-convolutional network (DT-FCN).

Architecture: a full-height temporal 2-D convolution over the motion image,
then dilated acausal 1-D convolutions with dilation w^(l-1) at layer l, each
followed by ReLU; the last ReLU is normalized by its global maximum
(NormReLU), then dropout, a width-1 "convolutionized dense" classifier, and
a per-frame softmax. Zero padding keeps every hidden layer at the input's
temporal length, so one model handles any sequence width.

Checkpoints use a flat binary container (magic, JSON header, raw
little-endian float64 blocks) chosen so that identical parameters always
produce identical bytes.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, fields

import numpy as np

from .errors import DataError, NumericError
from .io_utils import atomic_write_bytes
from .labels import LabelTrack
from .motion_image import MotionImage, render_label_strip
from .nn.layers import DilatedConv1d, Dropout, NormReLU, ReLU, TemporalConv2d
from .nn.loss import masked_cross_entropy
from .nn.ops import softmax_per_frame
from .nn.optim import Adam
from .nn.rng import RngStream

CANONICAL_CHANNELS = (64, 64, 128, 256, 512)
DESK_CHANNELS = (8, 8, 16, 32, 64)

_CHECKPOINT_MAGIC = b"MSEGCKP1"
# Fixed derive keys for the independent random streams of a training run.
_KEY_INIT = 1
_KEY_DROPOUT = 2


@dataclass(frozen=True)
class NetConfig:
    """Architecture hyperparameters.

    The canonical model is width 1, 3, or 5 with conv_channels
    (64, 64, 128, 256, 512) and a dense 512->classes head; shorter channel
    lists build reduced desk-scale stacks with the same layout (one temporal
    2-D layer, then dilated 1-D layers).
    """

    width: int = 3
    height: int = 224
    input_channels: int = 3
    conv_channels: tuple[int, ...] = CANONICAL_CHANNELS
    classes: int = 10
    dropout: float = 0.5
    norm_relu_eps: float = 1e-5

    def __post_init__(self):
        object.__setattr__(self, "conv_channels", tuple(int(c) for c in self.conv_channels))
        if self.width < 1 or self.width % 2 == 0:
            raise DataError(f"kernel width must be odd and positive, got {self.width}")
        if not self.conv_channels:
            raise DataError("conv_channels must not be empty")
        if self.height < 1 or self.classes < 1:
            raise DataError("height and classes must be positive")
        if self.input_channels != 3:
            raise DataError("motion images have 3 input channels")
        if not 0.0 <= self.dropout < 1.0:
            raise DataError("dropout must be in [0, 1)")

    def dilations(self) -> list[int]:
        """Dilation w^(l-1) for conv layer l = 1..len(conv_channels)."""
        return [self.width ** l for l in range(len(self.conv_channels))]

    def to_json_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "input_channels": self.input_channels,
            "conv_channels": list(self.conv_channels),
            "classes": self.classes,
            "dropout": self.dropout,
            "norm_relu_eps": self.norm_relu_eps,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "NetConfig":
        allowed = {f.name for f in fields(cls)}
        unknown = set(doc) - allowed
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


def receptive_field(config: NetConfig) -> list[int]:
    """Frames seen by one output frame after each conv layer: 1 + sum (w-1)*d."""
    out, rfs = [], 1
    for d in config.dilations():
        rfs += (config.width - 1) * d
        out.append(rfs)
    return out


def padding_schedule(config: NetConfig) -> list[int]:
    """Total zero padding d*(w-1) per conv layer (d*(w-1)/2 each side).

    At width 1 this is zero for every layer: no padding is what preserves
    the temporal length, although published tables sometimes list 1 there.
    """
    return [d * (config.width - 1) for d in config.dilations()]


def parameter_count(model_or_config) -> int:
    model = model_or_config if isinstance(model_or_config, Model) else build_model(model_or_config, seed=0)
    return sum(p.value.size for _, p in model.parameters())


class Model:
    """Layer stack with shared forward/backward plumbing."""

    def __init__(self, config: NetConfig, conv_layers, dense):
        self.config = config
        self.conv_layers = conv_layers  # list of (conv, relu) pairs; last relu is NormReLU
        self.norm_relu = NormReLU(config.norm_relu_eps)
        self.dropout = Dropout(config.dropout)
        self.dense = dense

    def layers(self):
        out = []
        for conv, act in self.conv_layers:
            out.append(conv)
            out.append(act)
        out.extend([self.norm_relu, self.dropout, self.dense])
        return out

    def parameters(self) -> list[tuple[str, object]]:
        named = []
        for i, (conv, _) in enumerate(self.conv_layers):
            for pname, p in conv.parameters():
                named.append((f"conv{i + 1}.{pname}", p))
        for pname, p in self.dense.parameters():
            named.append((f"dense.{pname}", p))
        return named

    def zero_grad(self) -> None:
        for _, p in self.parameters():
            p.grad[...] = 0.0

    def forward(self, image, training: bool = False, rng: RngStream | None = None) -> np.ndarray:
        """(C, M) per-frame class probabilities."""
        x = image.pixels if isinstance(image, MotionImage) else np.asarray(image, dtype=np.float64)
        if x.ndim != 3 or x.shape[2] != 3:
            raise DataError("model input must have shape (H, M, 3)")
        if x.shape[0] != self.config.height:
            raise DataError(
                f"input height {x.shape[0]} does not match configured height {self.config.height}"
            )
        for conv, act in self.conv_layers:
            x = act.forward(conv.forward(x))
        x = self.norm_relu.forward(x)
        x = self.dropout.forward(x, training=training, rng=rng)
        logits = self.dense.forward(x)
        self._logits = logits
        return softmax_per_frame(logits)

    def backward(self, dlogits: np.ndarray) -> None:
        """Accumulate parameter gradients from d loss / d logits."""
        g = self.dense.backward(dlogits)
        g = self.dropout.backward(g)
        g = self.norm_relu.backward(g)
        for conv, act in reversed(self.conv_layers):
            g = act.backward(g)
            g = conv.backward(g)


def build_model(config: NetConfig, seed: int) -> Model:
    """Assemble the stack with He-uniform init from per-layer derived streams."""
    root = RngStream(seed).derive(_KEY_INIT)
    conv_layers = []
    in_channels = config.input_channels
    dilations = config.dilations()
    for l, (filters, dilation) in enumerate(zip(config.conv_channels, dilations)):
        layer_rng = root.derive(l)
        if l == 0:
            conv = TemporalConv2d(config.height, config.width, filters, in_channels, rng=layer_rng)
        else:
            conv = DilatedConv1d(prev_filters, filters, config.width, dilation, rng=layer_rng)
        # ReLU after every conv; the model applies NormReLU after the last one.
        is_last = l == len(config.conv_channels) - 1
        conv_layers.append((conv, ReLU() if not is_last else _Identity()))
        prev_filters = filters
    dense = DilatedConv1d(prev_filters, config.classes, width=1, dilation=1, rng=root.derive(99))
    return Model(config, conv_layers, dense)


class _Identity:
    """Placeholder activation slot for the layer whose ReLU lives inside NormReLU."""

    def forward(self, x, training=False, rng=None):
        return x

    def backward(self, grad_out):
        return grad_out


def predict_labels(model: Model, image) -> LabelTrack:
    """Argmax class per frame; ties resolve to the lowest class index."""
    probs = model.forward(image, training=False)
    return LabelTrack(classes=np.argmax(probs, axis=0), class_count=model.config.classes)


def upsample_output_for_viz(probs: np.ndarray, height: int, class_names=None) -> np.ndarray:
    """Nearest-neighbor replication of the per-frame argmax color strip."""
    classes = np.argmax(probs, axis=0)
    track = LabelTrack(classes=classes, class_count=probs.shape[0])
    return render_label_strip(track, height, class_names)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    alpha: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def to_json_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _dataset_items(dataset):
    items = dataset.items if hasattr(dataset, "items") else dataset
    out = []
    for item in items:
        image, track = item[0], item[1]
        name = item[2] if len(item) > 2 else f"item{len(out)}"
        out.append((image, track, name))
    return out


def train(model: Model, dataset, train_config: TrainConfig) -> tuple[Model, list[dict]]:
    """Per-sequence Adam training, deterministic for a given seed.

    One gradient step per motion image (batch = one sequence), sequences
    visited in dataset order every epoch. History rows carry the epoch's
    mean training loss and its per-frame accuracy measured from the same
    training-mode forward passes the loss used.

    Loss masks come from each LabelTrack: masked frames contribute zero loss
    and zero gradient, so their label values cannot influence the run.
    """
    items = _dataset_items(dataset)
    for image, track, name in items:
        width = image.pixels.shape[1] if isinstance(image, MotionImage) else image.shape[1]
        if width != len(track):
            raise DataError(f"sequence {name!r}: image width {width} != label length {len(track)}")

    optimizer = Adam(
        [p for _, p in model.parameters()],
        alpha=train_config.alpha,
        beta1=train_config.beta1,
        beta2=train_config.beta2,
        eps=train_config.eps,
    )
    dropout_rng = RngStream(train_config.seed).derive(_KEY_DROPOUT)

    history: list[dict] = []
    for epoch in range(train_config.epochs):
        total_loss = 0.0
        hit = 0
        total = 0
        for image, track, name in items:
            probs = model.forward(image, training=True, rng=dropout_rng)
            loss, dlogits = masked_cross_entropy(probs, track.classes, track.loss_mask)
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}, sequence {name!r}")
            model.zero_grad()
            model.backward(dlogits)
            optimizer.step()
            total_loss += loss
            hit += int((np.argmax(probs, axis=0) == track.classes).sum())
            total += len(track)
        history.append(
            {
                "epoch": epoch,
                "loss": total_loss / len(items),
                "accuracy": hit / total if total else 0.0,
            }
        )
    return model, history


def save_checkpoint(path, model: Model, extra: dict | None = None) -> None:
    """Write the deterministic binary checkpoint container."""
    arrays = []
    blobs = []
    offset = 0
    for name, p in model.parameters():
        data = np.ascontiguousarray(p.value, dtype="<f8").tobytes()
        arrays.append(
            {"name": name, "shape": list(p.value.shape), "dtype": "<f8", "offset": offset, "nbytes": len(data)}
        )
        blobs.append(data)
        offset += len(data)
    header = {
        "format_version": 1,
        "config": model.config.to_json_dict(),
        "extra": extra or {},
        "arrays": arrays,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    payload = _CHECKPOINT_MAGIC + struct.pack("<I", len(header_bytes)) + header_bytes + b"".join(blobs)
    atomic_write_bytes(path, payload)


def load_checkpoint(path) -> tuple[Model, dict]:
    """Rebuild a model (and the saved extras) from a checkpoint file."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != _CHECKPOINT_MAGIC:
        raise DataError(f"{path}: not a checkpoint file")
    if len(raw) < 12:
        raise DataError(f"{path}: truncated checkpoint")
    (header_len,) = struct.unpack("<I", raw[8:12])
    try:
        header = json.loads(raw[12 : 12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: corrupt checkpoint header") from exc
    body = raw[12 + header_len :]

    config = NetConfig.from_json_dict(header["config"])
    model = build_model(config, seed=0)
    named = dict(model.parameters())
    seen = set()
    for spec in header["arrays"]:
        name = spec["name"]
        if name not in named:
            raise DataError(f"{path}: unexpected array {name!r}")
        start, nbytes = spec["offset"], spec["nbytes"]
        if start < 0 or nbytes < 0 or start + nbytes > len(body):
            raise DataError(f"{path}: truncated checkpoint body at array {name!r}")
        try:
            arr = np.frombuffer(body[start : start + nbytes], dtype=spec["dtype"]).reshape(spec["shape"])
        except (ValueError, TypeError) as exc:
            raise DataError(f"{path}: corrupt array {name!r}: {exc}") from exc
        arr = arr.astype(np.float64)
        if arr.shape != named[name].value.shape:
            raise NumericError(f"{path}: array {name!r} has wrong shape")
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"{path}: array {name!r} contains non-finite values")
        named[name].value[...] = arr
        seen.add(name)
    missing = set(named) - seen
    if missing:
        raise DataError(f"{path}: checkpoint missing arrays {sorted(missing)}")
    return model, header.get("extra", {})


def fold_seed(base_seed: int, fold_index: int) -> int:
    """Stable per-fold seed derivation shared by experiments and the CLI."""
    return int(RngStream(base_seed).derive(7, fold_index).seed)
