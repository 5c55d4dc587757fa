"""Independent scalar-loop reference implementations used as test oracles.

Everything here is written the slow, obvious way on purpose: plain Python
loops, homogeneous 4x4 matrices, no shared code with the package. Any
agreement with the fast implementations is therefore meaningful.
"""

import numpy as np


def rotation_matrix(axis: str, degrees: float) -> np.ndarray:
    r = np.radians(degrees)
    c, s = np.cos(r), np.sin(r)
    if axis == "X":
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=np.float64)
    if axis == "Y":
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=np.float64)
    if axis == "Z":
        return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=np.float64)
    raise ValueError(axis)


def naive_fk_frame(skeleton, sequence, frame: int, zero_root: bool) -> np.ndarray:
    """Joint positions for one frame via explicit 4x4 matrix composition."""
    row = sequence.channel_values[frame]
    slices = skeleton.channel_slices()
    globals_ = []
    positions = np.zeros((skeleton.joint_count, 3))
    for j, joint in enumerate(skeleton.joints):
        vals = row[slices[j]]
        t = np.array(joint.offset, dtype=np.float64)
        rot = np.eye(3)
        for k, ch in enumerate(joint.channels):
            v = float(vals[k])
            if ch.endswith("position"):
                t["XYZ".index(ch[0])] += v
            else:
                # declared order composes left to right: first channel outermost
                rot = rot @ rotation_matrix(ch[0], v)
        local = np.eye(4)
        local[:3, :3] = rot
        local[:3, 3] = t
        if j == 0 and zero_root:
            local = np.eye(4)
        if joint.parent_index is None:
            world = local
        else:
            world = globals_[joint.parent_index] @ local
        globals_.append(world)
        positions[j] = world[:3, 3]
    return positions


def naive_dilated_conv1d(x, kernels, bias, dilation):
    """Zero-padded 'same' 1-D convolution, one multiply at a time."""
    channels, m = x.shape
    filters, _, width = kernels.shape
    half = width // 2
    out = np.zeros((filters, m))
    for f in range(filters):
        for t in range(m):
            acc = float(bias[f])
            for c in range(channels):
                for k in range(width):
                    src = t + (k - half) * dilation
                    if 0 <= src < m:
                        acc += kernels[f, c, k] * x[c, src]
            out[f, t] = acc
    return out


def naive_temporal_conv2d(x, kernels, bias):
    """Full-height 2-D convolution collapsing rows and color channels."""
    height, m, chans = x.shape
    filters, _, width, _ = kernels.shape
    half = width // 2
    out = np.zeros((filters, m))
    for f in range(filters):
        for t in range(m):
            acc = float(bias[f])
            for h in range(height):
                for k in range(width):
                    src = t + k - half
                    if 0 <= src < m:
                        for c in range(chans):
                            acc += kernels[f, h, k, c] * x[h, src, c]
            out[f, t] = acc
    return out


def naive_normalize(positions):
    """Per-XYZ-channel affine map of an (N, M, 3) array onto [0, 255]."""
    n, m, _ = positions.shape
    out = np.zeros((n, m, 3))
    for c in range(3):
        lo = min(positions[i, t, c] for i in range(n) for t in range(m))
        hi = max(positions[i, t, c] for i in range(n) for t in range(m))
        if hi > lo:
            for i in range(n):
                for t in range(m):
                    out[i, t, c] = 255.0 * (positions[i, t, c] - lo) / (hi - lo)
    return out


def naive_confusion(pred, truth, class_count):
    out = np.zeros((class_count, class_count), dtype=np.int64)
    for p, t in zip(pred, truth):
        out[int(t), int(p)] += 1
    return out
