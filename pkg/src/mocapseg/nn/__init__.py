"""From-scratch neural-network engine: ops, layers, loss, Adam, RNG, gradient checks."""

from .gradcheck import GradCheckReport, check_parameters, gradient_check_model
from .layers import Dropout, DilatedConv1d, Layer, NormReLU, Parameter, ReLU, TemporalConv2d, he_uniform
from .loss import masked_cross_entropy
from .ops import (
    dilated_conv1d,
    dilated_conv1d_backward,
    dropout,
    dropout_backward,
    norm_relu,
    norm_relu_backward,
    relu,
    relu_backward,
    softmax_per_frame,
    temporal_conv2d,
    temporal_conv2d_backward,
)
from .optim import Adam, AdamState, adam_step
from .rng import RngStream

__all__ = [
    "Adam",
    "AdamState",
    "DilatedConv1d",
    "Dropout",
    "GradCheckReport",
    "Layer",
    "NormReLU",
    "Parameter",
    "ReLU",
    "RngStream",
    "TemporalConv2d",
    "adam_step",
    "check_parameters",
    "dilated_conv1d",
    "dilated_conv1d_backward",
    "dropout",
    "dropout_backward",
    "gradient_check_model",
    "he_uniform",
    "masked_cross_entropy",
    "norm_relu",
    "norm_relu_backward",
    "relu",
    "relu_backward",
    "softmax_per_frame",
    "temporal_conv2d",
    "temporal_conv2d_backward",
]
