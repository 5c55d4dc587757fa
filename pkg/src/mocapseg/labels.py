"""Per-frame label tracks, the canonical class table, and label-file IO.

Label files are JSON documents:

    {"class_names": ["standing", ...],
     "segments": [{"label": "standing", "start": 0, "end": 40}, ...]}

with start inclusive, end exclusive, and segments covering [0, M) in order
without gaps or overlaps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError

# Canonical 10-class motion-primitive set with display colors (RGB in [0, 1]).
CLASS_NAMES = (
    "standing",
    "beginRightStep",
    "beginLeftStep",
    "rightStep",
    "leftStep",
    "endRightStep",
    "endLeftStep",
    "turnRight",
    "reach",
    "retrieve",
)

CLASS_COLORS = {
    "standing": (0.0, 0.0, 0.0),
    "beginRightStep": (1.0, 0.0, 0.0),
    "beginLeftStep": (0.0, 1.0, 0.0),
    "rightStep": (0.0, 0.0, 1.0),
    "leftStep": (1.0, 1.0, 0.0),
    "endRightStep": (1.0, 0.0, 1.0),
    "endLeftStep": (0.0, 1.0, 1.0),
    "turnRight": (0.72, 0.29, 0.94),
    "reach": (1.0, 0.66, 0.07),
    "retrieve": (0.39, 0.25, 0.15),
}

# Classes outside the canonical table render mid-gray rather than failing.
_FALLBACK_COLOR = (0.5, 0.5, 0.5)


def color_table(class_names) -> np.ndarray:
    """(C, 3) float colors for the given class names."""
    return np.array([CLASS_COLORS.get(name, _FALLBACK_COLOR) for name in class_names])


@dataclass(frozen=True)
class LabelTrack:
    """Per-frame class indices, with an optional loss mask.

    ``loss_mask`` semantics: True = frame contributes to the loss, False =
    excluded. None means all frames count.
    """

    classes: np.ndarray
    class_count: int
    loss_mask: np.ndarray | None = None

    def __post_init__(self):
        classes = np.ascontiguousarray(self.classes, dtype=np.int64)
        classes.flags.writeable = False
        object.__setattr__(self, "classes", classes)
        if classes.ndim != 1:
            raise DataError("classes must be a 1-D index array")
        if self.class_count < 1:
            raise DataError("class_count must be positive")
        if classes.size and (classes.min() < 0 or classes.max() >= self.class_count):
            raise DataError("label index out of range for class_count")
        if self.loss_mask is not None:
            mask = np.ascontiguousarray(self.loss_mask, dtype=bool)
            mask.flags.writeable = False
            object.__setattr__(self, "loss_mask", mask)
            if mask.shape != classes.shape:
                raise DataError("loss_mask length must match classes length")

    def __len__(self) -> int:
        return int(self.classes.size)

    def with_mask(self, mask: np.ndarray | None) -> "LabelTrack":
        return LabelTrack(self.classes, self.class_count, mask)


def segments_from_classes(classes: np.ndarray) -> list[tuple[int, int, int]]:
    """Run-length encode a class array into (class_id, start, end) triples."""
    out = []
    m = len(classes)
    start = 0
    for t in range(1, m + 1):
        if t == m or classes[t] != classes[t - 1]:
            out.append((int(classes[start]), start, t))
            start = t
    return out


def track_to_json_dict(track: LabelTrack, class_names) -> dict:
    if len(class_names) != track.class_count:
        raise DataError("class_names length must equal class_count")
    segments = [
        {"label": class_names[cid], "start": start, "end": end}
        for cid, start, end in segments_from_classes(track.classes)
    ]
    return {"class_names": list(class_names), "segments": segments}


def track_from_json_dict(doc: dict) -> tuple[LabelTrack, list[str]]:
    if not isinstance(doc, dict) or "class_names" not in doc or "segments" not in doc:
        raise DataError("label document needs 'class_names' and 'segments'")
    class_names = doc["class_names"]
    if not isinstance(class_names, list) or not all(isinstance(n, str) for n in class_names):
        raise DataError("class_names must be a list of strings")
    index = {name: i for i, name in enumerate(class_names)}
    if len(index) != len(class_names):
        raise DataError("class_names contains duplicates")

    cursor = 0
    runs: list[tuple[int, int]] = []
    for seg in doc["segments"]:
        if not isinstance(seg, dict) or not {"label", "start", "end"} <= set(seg):
            raise DataError("segment needs 'label', 'start', 'end'")
        label, start, end = seg["label"], seg["start"], seg["end"]
        if label not in index:
            raise DataError(f"segment label {label!r} not in class_names")
        if not (isinstance(start, int) and isinstance(end, int)) or not 0 <= start < end:
            raise DataError(f"bad segment range [{start}, {end})")
        if start != cursor:
            raise DataError(f"segments must cover frames without gaps or overlaps at {start}")
        runs.append((index[label], end - start))
        cursor = end
    if cursor == 0:
        raise DataError("label document has no segments")

    classes = np.concatenate([np.full(n, cid, dtype=np.int64) for cid, n in runs])
    return LabelTrack(classes=classes, class_count=len(class_names)), list(class_names)


def save_label_json(path, track: LabelTrack, class_names) -> None:
    from .io_utils import atomic_write_text

    doc = track_to_json_dict(track, class_names)
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def load_label_json(path) -> tuple[LabelTrack, list[str]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON in label file {path}: {exc}") from exc
    return track_from_json_dict(doc)
