"""Estimator-style wrappers so the toolkit composes with scikit-learn idioms.

``MotionImageEncoder`` turns parsed (Skeleton, MotionSequence) pairs into
motion images; ``DTFCNSegmenter`` trains one network on labeled images and
predicts per-frame classes. Both follow the usual conventions: constructor
arguments are stored untouched under the same names, ``fit`` returns self,
and fitted state lives in trailing-underscore attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .dtfcn import Model, NetConfig, TrainConfig, build_model, train
from .errors import DataError
from .kinematics import to_cartesian
from .labels import LabelTrack
from .motion_image import MotionImage, motion_image_from_cartesian


def _as_image(x) -> MotionImage:
    if isinstance(x, MotionImage):
        return x
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DataError("each X item must be a MotionImage or an (H, M, 3) array")
    return MotionImage(pixels=arr, source_height=arr.shape[0])


def _as_track(y, classes: int, width: int) -> LabelTrack:
    if isinstance(y, LabelTrack):
        track = y
    else:
        track = LabelTrack(classes=np.asarray(y, dtype=np.int64), class_count=classes)
    if track.class_count != classes:
        raise DataError(f"label track has {track.class_count} classes, expected {classes}")
    if len(track) != width:
        raise DataError(f"label length {len(track)} != image width {width}")
    return track


class MotionImageEncoder(TransformerMixin, BaseEstimator):
    """Transform (Skeleton, MotionSequence) pairs into motion images."""

    def __init__(self, space: str = "local", height: int = 224):
        self.space = space
        self.height = height

    def fit(self, X, y=None):
        if self.space not in ("local", "global"):
            raise DataError(f"space must be 'local' or 'global', got {self.space!r}")
        if self.height < 1:
            raise DataError("height must be >= 1")
        self.n_features_in_ = 2  # (skeleton, sequence) pairs
        return self

    def transform(self, X) -> list[MotionImage]:
        check_is_fitted(self)
        out = []
        for pair in X:
            try:
                skeleton, sequence = pair
            except (TypeError, ValueError):
                raise DataError("X items must be (Skeleton, MotionSequence) pairs") from None
            cart = to_cartesian(skeleton, sequence, self.space)
            out.append(motion_image_from_cartesian(cart, self.height))
        return out


class DTFCNSegmenter(BaseEstimator):
    """Per-frame motion segmenter around one DT-FCN model.

    X is a list of motion images (MotionImage or (H, M, 3) arrays sharing
    the configured height); y is a matching list of per-frame label arrays
    or LabelTracks. Sequences keep their own lengths; there is no padding.
    """

    def __init__(
        self,
        width: int = 3,
        height: int = 224,
        conv_channels: tuple = (64, 64, 128, 256, 512),
        classes: int = 10,
        dropout: float = 0.5,
        norm_relu_eps: float = 1e-5,
        epochs: int = 100,
        learning_rate: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        adam_eps: float = 1e-8,
        seed: int = 0,
    ):
        self.width = width
        self.height = height
        self.conv_channels = conv_channels
        self.classes = classes
        self.dropout = dropout
        self.norm_relu_eps = norm_relu_eps
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.adam_eps = adam_eps
        self.seed = seed

    def _net_config(self) -> NetConfig:
        return NetConfig(
            width=self.width,
            height=self.height,
            conv_channels=tuple(self.conv_channels),
            classes=self.classes,
            dropout=self.dropout,
            norm_relu_eps=self.norm_relu_eps,
        )

    def fit(self, X, y, sample_masks=None):
        """Train on labeled images; masks (per-frame booleans) are optional."""
        config = self._net_config()
        images = [_as_image(x) for x in X]
        if len(images) != len(y):
            raise DataError(f"{len(images)} images but {len(y)} label tracks")
        for img in images:
            if img.height != self.height:
                raise DataError(f"image height {img.height} != configured height {self.height}")
        items = []
        for i, (img, labels) in enumerate(zip(images, y)):
            track = _as_track(labels, self.classes, img.width)
            if sample_masks is not None and sample_masks[i] is not None:
                track = track.with_mask(np.asarray(sample_masks[i], dtype=bool))
            items.append((img, track, f"item{i}"))

        model = build_model(config, seed=self.seed)
        train_config = TrainConfig(
            epochs=self.epochs,
            alpha=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.adam_eps,
            seed=self.seed,
        )
        model, history = train(model, items, train_config)
        self.model_: Model = model
        self.history_ = history
        self.classes_ = np.arange(self.classes)
        return self

    def predict_proba(self, X) -> list[np.ndarray]:
        """(classes, M) probability matrix per sequence."""
        check_is_fitted(self, "model_")
        return [self.model_.forward(_as_image(x), training=False) for x in X]

    def predict(self, X) -> list[np.ndarray]:
        """Per-frame class indices per sequence."""
        return [np.argmax(p, axis=0) for p in self.predict_proba(X)]

    def score(self, X, y) -> float:
        """Pooled per-frame accuracy over all sequences."""
        preds = self.predict(X)
        hit = 0
        total = 0
        for pred, labels in zip(preds, y):
            truth = labels.classes if isinstance(labels, LabelTrack) else np.asarray(labels)
            if len(truth) != len(pred):
                raise DataError("label length mismatch in score")
            hit += int((pred == truth).sum())
            total += len(truth)
        return hit / total if total else 0.0
