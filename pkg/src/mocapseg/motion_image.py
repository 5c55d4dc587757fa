"""Motion images: normalized RGB encodings of Cartesian joint trajectories.

A sequence of N joints over M frames becomes an N x M x 3 tensor (rows =
joints, columns = frames, channels = XYZ), normalized per channel to
[0, 255] over the whole sequence, then resampled vertically to a standard
height with bicubic interpolation. Values stay floating point end to end;
quantization happens only when exporting PNG.

The resampler convention is pinned for reproducibility: cubic convolution
kernel with a = -0.5, half-pixel-center sample alignment, edge replication
at the borders, and a final clamp to [0, 255].
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .errors import DataError
from .io_utils import atomic_write_bytes
from .kinematics import CartesianSequence
from .labels import LabelTrack, color_table

DEFAULT_HEIGHT = 224


@dataclass(frozen=True)
class MotionImage:
    """H x M x 3 real-valued image, values in [0, 255].

    ``source_height`` records the joint count of the originating sequence
    (equal to the pixel height when that is unknown, e.g. after PNG import).
    """

    pixels: np.ndarray
    source_height: int

    def __post_init__(self):
        pixels = np.ascontiguousarray(self.pixels, dtype=np.float64)
        if pixels.ndim != 3 or pixels.shape[2] != 3:
            raise DataError("pixels must have shape (height, width, 3)")
        if pixels.size and (pixels.min() < 0.0 or pixels.max() > 255.0):
            raise DataError("pixel values must lie in [0, 255]")
        pixels.flags.writeable = False
        object.__setattr__(self, "pixels", pixels)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def channel_extrema(seq: CartesianSequence) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel (min, max) over all joints and frames."""
    v = seq.positions
    return v.min(axis=(0, 1)), v.max(axis=(0, 1))


def normalize_to_rgb(seq: CartesianSequence) -> np.ndarray:
    """Map positions to [0, 255] per XYZ channel; degenerate channels map to 0."""
    v = seq.positions
    lo, hi = channel_extrema(seq)
    out = np.zeros_like(v)
    for c in range(3):
        span = hi[c] - lo[c]
        if span > 0:
            out[:, :, c] = 255.0 * (v[:, :, c] - lo[c]) / span
    return out


def cubic_kernel(t: np.ndarray, a: float = -0.5) -> np.ndarray:
    """Cubic convolution kernel (Catmull-Rom family for a = -0.5)."""
    t = np.abs(np.asarray(t, dtype=np.float64))
    near = (a + 2.0) * t**3 - (a + 3.0) * t**2 + 1.0
    far = a * t**3 - 5.0 * a * t**2 + 8.0 * a * t - 4.0 * a
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def resample_matrix(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) weight matrix for the pinned bicubic convention.

    Half-pixel centers: output sample y reads source position
    (y + 0.5) * n_in / n_out - 0.5; the four surrounding taps are clamped to
    the valid index range (edge replication). Identity when n_in == n_out.
    """
    if n_out < 1:
        raise DataError("output height must be >= 1")
    w = np.zeros((n_out, n_in))
    scale = n_in / n_out
    for y in range(n_out):
        src = (y + 0.5) * scale - 0.5
        base = int(np.floor(src))
        for k in range(base - 1, base + 3):
            idx = min(max(k, 0), n_in - 1)
            w[y, idx] += cubic_kernel(src - k)
    return w


def resample_vertical(image: np.ndarray, height: int) -> np.ndarray:
    """Linear (unclamped) vertical resample of an (N, M, C) array to height rows."""
    image = np.asarray(image, dtype=np.float64)
    w = resample_matrix(image.shape[0], height)
    return np.einsum("hn,nmc->hmc", w, image)


def resize_vertical_bicubic(image: np.ndarray, height: int = DEFAULT_HEIGHT) -> MotionImage:
    """Resample rows to the target height and clamp to [0, 255]."""
    source_height = int(np.asarray(image).shape[0])
    resized = np.clip(resample_vertical(image, height), 0.0, 255.0)
    return MotionImage(pixels=resized, source_height=source_height)


def motion_image_from_cartesian(seq: CartesianSequence, height: int = DEFAULT_HEIGHT) -> MotionImage:
    """Normalize and resize in one step."""
    return resize_vertical_bicubic(normalize_to_rgb(seq), height)


def quantize_pixels(pixels: np.ndarray) -> np.ndarray:
    """Round-half-up to bytes: 127.5 stores as 128."""
    return np.clip(np.floor(np.asarray(pixels, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def encode_png(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(quantize_pixels(pixels), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def export_png(img: MotionImage | np.ndarray, path) -> None:
    """Write an 8-bit RGB PNG (atomic replace)."""
    pixels = img.pixels if isinstance(img, MotionImage) else np.asarray(img)
    atomic_write_bytes(path, encode_png(pixels))


def import_png(path) -> MotionImage:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return MotionImage(pixels=arr, source_height=arr.shape[0])


def render_label_strip(track: LabelTrack, height: int, class_names=None) -> np.ndarray:
    """(height, M, 3) color strip, one column per frame, values in [0, 255].

    ``class_names`` defaults to the canonical table; names outside it render
    mid-gray. An index outside the track's class range is impossible by the
    LabelTrack invariant, but class_names shorter than class_count is an error.
    """
    from .labels import CLASS_NAMES

    if class_names is None:
        class_names = CLASS_NAMES
    if len(class_names) < track.class_count:
        raise DataError("class_names shorter than the track's class_count")
    colors = color_table(class_names) * 255.0
    strip = colors[track.classes]  # (M, 3)
    return np.repeat(strip[np.newaxis, :, :], height, axis=0)
