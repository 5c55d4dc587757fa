"""Dense-tensor forward/backward kernels.

Shape conventions:
  - 1-D sequence features: (channels, frames), written (C, M).
  - Motion-image input: (height, frames, 3), written (H, M, 3).
  - Conv kernels: (filters, in_channels, width) for 1-D,
    (filters, height, width, 3) for the temporal 2-D layer.

Convolutions use the cross-correlation orientation (no kernel flip) and
acausal symmetric taps: a width-w, dilation-d filter reads time offsets
{-d*(w//2), ..., 0, ..., +d*(w//2)} with zero padding of d*(w//2) frames on
each side, so the temporal length M is always preserved.

Every forward here has a matching backward returning exact analytic
gradients; convolution backwards are expressed as per-tap matrix products
against the same padded buffers the forward used.
"""

from __future__ import annotations

import numpy as np


def _check_width_dilation(width: int, dilation: int) -> None:
    if width < 1 or width % 2 == 0:
        raise ValueError(f"kernel width must be odd and positive, got {width}")
    if dilation < 1:
        raise ValueError(f"dilation must be >= 1, got {dilation}")


def _pad_time(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return x
    c, m = x.shape
    out = np.zeros((c, m + 2 * pad), dtype=x.dtype)
    out[:, pad : pad + m] = x
    return out


def dilated_conv1d(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray, dilation: int = 1) -> np.ndarray:
    """Acausal dilated 1-D convolution: (C, M) -> (F, M)."""
    f, c_k, width = kernels.shape
    _check_width_dilation(width, dilation)
    c, m = x.shape
    if c != c_k:
        raise ValueError(f"input has {c} channels, kernels expect {c_k}")
    pad = dilation * (width // 2)
    xp = _pad_time(x, pad)
    out = np.repeat(bias[:, np.newaxis], m, axis=1) if m else np.zeros((f, 0))
    for i in range(width):
        out = out + kernels[:, :, i] @ xp[:, i * dilation : i * dilation + m]
    return out

def dilated_conv1d_backward(
    x: np.ndarray, kernels: np.ndarray, dilation: int, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dx, dkernels, dbias) for dilated_conv1d."""
    f, c_k, width = kernels.shape
    c, m = x.shape
    pad = dilation * (width // 2)
    xp = _pad_time(x, pad)

    dxp = np.zeros_like(xp)
    dk = np.empty_like(kernels)
    for i in range(width):
        lo = i * dilation
        dxp[:, lo : lo + m] += kernels[:, :, i].T @ grad_out
        dk[:, :, i] = grad_out @ xp[:, lo : lo + m].T
    dx = dxp[:, pad : pad + m] if pad else dxp
    dbias = grad_out.sum(axis=1)
    return dx, dk, dbias


def _flatten_2d(x: np.ndarray) -> np.ndarray:
    # (H, M, 3) -> (H*3, M); row index h*3 + channel
    h, m, c = x.shape
    return x.transpose(0, 2, 1).reshape(h * c, m)


def _flatten_2d_kernels(kernels: np.ndarray) -> np.ndarray:
    # (F, H, w, 3) -> (F, H*3, w)
    f, h, w, c = kernels.shape
    return kernels.transpose(0, 1, 3, 2).reshape(f, h * c, w)


def temporal_conv2d(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Full-height temporal convolution: (H, M, 3) -> (F, M).

    The filter height equals the input height, so the window slides only
    along time; each output frame fully contracts height and XYZ channels.
    """
    if x.ndim != 3 or kernels.ndim != 4:
        raise ValueError("expected input (H, M, 3) and kernels (F, H, w, 3)")
    if x.shape[0] != kernels.shape[1] or x.shape[2] != kernels.shape[3]:
        raise ValueError(
            f"kernel height/channels {kernels.shape[1:]} do not match input {x.shape}"
        )
    return dilated_conv1d(_flatten_2d(x), _flatten_2d_kernels(kernels), bias, dilation=1)

def temporal_conv2d_backward(
    x: np.ndarray, kernels: np.ndarray, grad_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (dx, dkernels, dbias) for temporal_conv2d."""
    f, h, w, c = kernels.shape
    m = x.shape[1]
    dx_flat, dk_flat, dbias = dilated_conv1d_backward(
        _flatten_2d(x), _flatten_2d_kernels(kernels), 1, grad_out
    )
    dx = dx_flat.reshape(h, c, m).transpose(0, 2, 1)
    dk = dk_flat.reshape(f, h, c, w).transpose(0, 1, 3, 2)
    return dx, dk, dbias


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def relu_backward(x: np.ndarray, grad_out: np.ndarray) -> np.ndarray:
    return np.where(x > 0.0, grad_out, 0.0)


def norm_relu(x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """ReLU divided by (its global maximum + eps); outputs in [0, 1)."""
    r = relu(x)
    return r / (r.max() + eps)


def norm_relu_backward(x: np.ndarray, eps: float, grad_out: np.ndarray) -> np.ndarray:
    """Backward through y = relu(x) / (max(relu(x)) + eps).

    The maximum's subgradient is attributed to the first flat-index argmax,
    matching numpy's argmax tie rule.
    """
    r = relu(x)
    denom = r.max() + eps
    dr = grad_out / denom
    # d/dr_j of 1/(m+eps) term: -(sum_i g_i r_i) / (m+eps)^2 at j = argmax
    flat = dr.reshape(-1)
    j = int(np.argmax(r))
    flat = flat.copy()
    flat[j] -= float((grad_out * r).sum()) / (denom * denom)
    dr = flat.reshape(x.shape)
    return relu_backward(x, dr)


def softmax_per_frame(logits: np.ndarray) -> np.ndarray:
    """Column-wise softmax of (C, M) logits with max-subtraction stability."""
    z = logits - logits.max(axis=0, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=0, keepdims=True)


def dropout(
    x: np.ndarray, p: float, rng=None, training: bool = False
) -> tuple[np.ndarray, np.ndarray | None]:
    """Inverted dropout. Returns (output, mask); mask is None when inactive.

    Training mode zeroes each unit with probability p and scales survivors by
    1/(1-p), so inference (identity) needs no rescaling.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x, None
    if rng is None:
        raise ValueError("training-mode dropout needs an RngStream")
    keep = rng.uniform(x.shape) >= p
    mask = keep.astype(np.float64) / (1.0 - p)
    return x * mask, mask


def dropout_backward(mask: np.ndarray | None, grad_out: np.ndarray) -> np.ndarray:
    return grad_out if mask is None else grad_out * mask
