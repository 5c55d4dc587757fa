"""Stateful layers: parameters, cached activations, accumulate-on-backward.

Each layer's ``forward`` caches what its ``backward`` needs; ``backward``
takes the upstream gradient, adds parameter gradients into ``Parameter.grad``
(callers zero them between steps), and returns the gradient with respect to
the layer input. One layer instance serves one model; the caches make
concurrent forward passes on a shared instance unsafe by design.
"""

from __future__ import annotations

import numpy as np

from . import ops
from .rng import RngStream


class Parameter:
    """A learnable array and its gradient accumulator."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    @property
    def shape(self):
        return self.value.shape


def he_uniform(shape, fan_in: int, rng: RngStream) -> np.ndarray:
    """ReLU-appropriate init: uniform in [-sqrt(6/fan_in), +sqrt(6/fan_in)]."""
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(shape, -limit, limit)


class Layer:
    def parameters(self) -> list[tuple[str, Parameter]]:
        return []

    def forward(self, x, training: bool = False, rng: RngStream | None = None):
        raise NotImplementedError

    def backward(self, grad_out):
        raise NotImplementedError


class TemporalConv2d(Layer):
    """Full-height temporal convolution over an (H, M, 3) motion image."""

    def __init__(self, height: int, width: int, filters: int, in_channels: int = 3, *, rng: RngStream):
        ops._check_width_dilation(width, 1)
        fan_in = height * width * in_channels
        self.kernels = Parameter(he_uniform((filters, height, width, in_channels), fan_in, rng))
        self.bias = Parameter(np.zeros(filters))
        self._x: np.ndarray | None = None

    def parameters(self):
        return [("kernels", self.kernels), ("bias", self.bias)]

    def forward(self, x, training=False, rng=None):
        self._x = x
        return ops.temporal_conv2d(x, self.kernels.value, self.bias.value)

    def backward(self, grad_out):
        dx, dk, db = ops.temporal_conv2d_backward(self._x, self.kernels.value, grad_out)
        self.kernels.grad += dk
        self.bias.grad += db
        return dx


class DilatedConv1d(Layer):
    """Acausal dilated convolution over (C, M) features."""

    def __init__(self, in_channels: int, filters: int, width: int, dilation: int, *, rng: RngStream):
        ops._check_width_dilation(width, dilation)
        self.dilation = dilation
        fan_in = in_channels * width
        self.kernels = Parameter(he_uniform((filters, in_channels, width), fan_in, rng))
        self.bias = Parameter(np.zeros(filters))
        self._x: np.ndarray | None = None

    def parameters(self):
        return [("kernels", self.kernels), ("bias", self.bias)]

    def forward(self, x, training=False, rng=None):
        self._x = x
        return ops.dilated_conv1d(x, self.kernels.value, self.bias.value, self.dilation)

    def backward(self, grad_out):
        dx, dk, db = ops.dilated_conv1d_backward(self._x, self.kernels.value, self.dilation, grad_out)
        self.kernels.grad += dk
        self.bias.grad += db
        return dx


class ReLU(Layer):
    def __init__(self):
        self._x = None

    def forward(self, x, training=False, rng=None):
        self._x = x
        return ops.relu(x)

    def backward(self, grad_out):
        return ops.relu_backward(self._x, grad_out)


class NormReLU(Layer):
    """ReLU followed by division by (global max + eps)."""

    def __init__(self, eps: float = 1e-5):
        self.eps = eps
        self._x = None

    def forward(self, x, training=False, rng=None):
        self._x = x
        return ops.norm_relu(x, self.eps)

    def backward(self, grad_out):
        return ops.norm_relu_backward(self._x, self.eps, grad_out)


class Dropout(Layer):
    """Inverted dropout; identity outside training."""

    def __init__(self, p: float):
        if not 0.0 <= p < 1.0:
            raise ValueError(f"dropout probability must be in [0, 1), got {p}")
        self.p = p
        self._mask = None

    def forward(self, x, training=False, rng=None):
        out, self._mask = ops.dropout(x, self.p, rng, training)
        return out

    def backward(self, grad_out):
        return ops.dropout_backward(self._mask, grad_out)
